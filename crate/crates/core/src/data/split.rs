use std::collections::HashSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Disjoint train/test partition of pair identifiers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetSplit {
    pub train: Vec<String>,
    pub test: Vec<String>,
    pub seed: Option<u64>,
}

/// Shuffles `ids` with `seed` and takes the first `n_train` for training.
pub fn split_dataset(ids: &[String], n_train: usize, seed: u64) -> Result<DatasetSplit> {
    if n_train >= ids.len() {
        return Err(Error::input(format!(
            "n_train ({n_train}) must be smaller than the number of pairs ({})",
            ids.len()
        )));
    }
    let mut seen = HashSet::new();
    if let Some(dup) = ids.iter().find(|id| !seen.insert(id.as_str())) {
        return Err(Error::input(format!("duplicate pair identifier `{dup}`")));
    }
    let mut shuffled = ids.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = shuffled.split_off(n_train);
    Ok(DatasetSplit {
        train: shuffled,
        test,
        seed: Some(seed),
    })
}

impl DatasetSplit {
    /// Manifest text: an optional `# seed=<n>` line, then `[train]` and
    /// `[test]` sections with one identifier per line.
    pub fn to_manifest(&self) -> String {
        let mut out = String::new();
        if let Some(seed) = self.seed {
            out.push_str(&format!("# seed={seed}\n"));
        }
        out.push_str("[train]\n");
        for id in &self.train {
            out.push_str(id);
            out.push('\n');
        }
        out.push_str("[test]\n");
        for id in &self.test {
            out.push_str(id);
            out.push('\n');
        }
        out
    }

    pub fn parse_manifest(text: &str) -> Result<Self> {
        enum Section {
            None,
            Train,
            Test,
        }
        let mut section = Section::None;
        let mut split = DatasetSplit {
            train: Vec::new(),
            test: Vec::new(),
            seed: None,
        };
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(seed) = comment.trim().strip_prefix("seed=") {
                    split.seed = Some(seed.trim().parse().map_err(|e| {
                        Error::format(format!("manifest line {}", i + 1), format!("bad seed: {e}"))
                    })?);
                }
                continue;
            }
            match line {
                "[train]" => section = Section::Train,
                "[test]" => section = Section::Test,
                id => match section {
                    Section::Train => split.train.push(id.to_string()),
                    Section::Test => split.test.push(id.to_string()),
                    Section::None => {
                        return Err(Error::format(
                            format!("manifest line {}", i + 1),
                            "identifier before any [train]/[test] section",
                        ))
                    }
                },
            }
        }
        let mut seen = HashSet::new();
        if let Some(dup) = split
            .train
            .iter()
            .chain(&split.test)
            .find(|id| !seen.insert(id.as_str()))
        {
            return Err(Error::format("manifest", format!("identifier `{dup}` listed twice")));
        }
        Ok(split)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_manifest()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_manifest(&text)
    }
}
