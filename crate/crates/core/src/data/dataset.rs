use std::path::{Path, PathBuf};

use crate::data::{load_hsi, save_hsi, DatasetSplit, Pair, RgbImage};
use crate::error::{Error, Result};

pub const MANIFEST_NAME: &str = "split.txt";

pub fn hsi_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}_hsi.hsc"))
}

pub fn rgb_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}_rgb.hsc"))
}

/// A directory of pairs plus its split manifest.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub split: DatasetSplit,
    pub train: Vec<Pair>,
    pub test: Vec<Pair>,
}

impl Dataset {
    pub fn bands(&self) -> Option<usize> {
        self.train
            .first()
            .or_else(|| self.test.first())
            .map(|p| p.hsi.bands())
    }
}

/// Writes `<id>_hsi.hsc`, `<id>_rgb.hsc` for every pair and `split.txt`.
pub fn write_dataset(dir: &Path, pairs: &[Pair], split: &DatasetSplit) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for pair in pairs {
        save_hsi(&pair.hsi, &hsi_path(dir, &pair.id))?;
        save_hsi(&pair.rgb.to_spectral(), &rgb_path(dir, &pair.id))?;
    }
    split.save(&dir.join(MANIFEST_NAME))
}

pub fn load_pair(dir: &Path, id: &str) -> Result<Pair> {
    let hsi = load_hsi(&hsi_path(dir, id))?;
    let rgb = RgbImage::from_spectral(load_hsi(&rgb_path(dir, id))?)
        .map_err(|e| Error::format(format!("{id} rgb"), e.to_string()))?;
    Pair::new(id, rgb, hsi)
}

pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    if !dir.is_dir() {
        return Err(Error::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "data directory not found"),
        ));
    }
    let split = DatasetSplit::load(&dir.join(MANIFEST_NAME))?;
    let train = split
        .train
        .iter()
        .map(|id| load_pair(dir, id))
        .collect::<Result<Vec<_>>>()?;
    let test = split
        .test
        .iter()
        .map(|id| load_pair(dir, id))
        .collect::<Result<Vec<_>>>()?;
    let mut bands = train.iter().chain(&test).map(|p| p.hsi.bands());
    if let Some(first) = bands.next() {
        if bands.any(|b| b != first) {
            return Err(Error::input("pairs in the dataset have different band counts"));
        }
    }
    Ok(Dataset { split, train, test })
}
