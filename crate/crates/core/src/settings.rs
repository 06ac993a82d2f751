//! Flat `key=value` configuration shared by config files, `--set` flags and
//! checkpoint snapshots.
//!
//! Resolution order is built-in defaults, then the selected preset, then
//! entries in the order given. Setting `n` without `kernels` picks the
//! default kernel list for that `n`.

use std::fmt::Display;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::network::{default_kernels, NetworkConfig};
use crate::training::TrainConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// Full-size reference settings.
    Paper,
    /// Small, CPU-friendly settings for synthetic experiments.
    Desk,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Preset::Paper),
            "desk" => Ok(Preset::Desk),
            other => Err(Error::config(format!("unknown preset `{other}` (paper|desk)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    pub network: NetworkConfig,
    pub train: TrainConfig,
}

impl Default for Settings {
    fn default() -> Self {
        Self::preset(Preset::Paper)
    }
}

impl Settings {
    pub fn preset(preset: Preset) -> Self {
        match preset {
            Preset::Paper => Self {
                network: NetworkConfig::default(),
                train: TrainConfig::default(),
            },
            Preset::Desk => Self {
                network: NetworkConfig {
                    p: 2,
                    n: 2,
                    m: 2,
                    channels: 16,
                    kernels: default_kernels(2),
                    ..NetworkConfig::default()
                },
                train: TrainConfig {
                    initial_lr: 1e-3,
                    halve_every: 3,
                    batch_size: 4,
                    epochs: 10,
                    patch_size: 32,
                    patches_per_image: 4,
                    ..TrainConfig::default()
                },
            },
        }
    }

    /// Resolves a list of `(key, value)` entries. A `preset` entry anywhere in
    /// the list (last one wins) selects the base before other keys apply.
    pub fn from_entries(entries: &[(String, String)]) -> Result<Self> {
        let preset = entries
            .iter()
            .rev()
            .find(|(k, _)| k == "preset")
            .map(|(_, v)| v.parse::<Preset>())
            .transpose()?
            .unwrap_or(Preset::Paper);
        let mut settings = Self::preset(preset);
        let mut kernels_given = false;
        for (key, value) in entries {
            if key == "preset" {
                continue;
            }
            kernels_given |= key == "kernels";
            settings.apply(key, value)?;
        }
        if !kernels_given && settings.network.kernels.len() != settings.network.n {
            settings.network.kernels = default_kernels(settings.network.n);
        }
        Ok(settings)
    }

    /// Sets a single field.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let net = &mut self.network;
        let tr = &mut self.train;
        match key {
            "p" => net.p = parse(key, value)?,
            "n" => net.n = parse(key, value)?,
            "m" => net.m = parse(key, value)?,
            "c" | "channels" => net.channels = parse(key, value)?,
            "bands" => net.bands = parse(key, value)?,
            "kernels" => net.kernels = parse_list(key, value)?,
            "fusion_enabled" => net.fusion_enabled = parse(key, value)?,
            "mix_enabled" => net.mix_enabled = parse(key, value)?,
            "channel_order" => {
                let v: Vec<usize> = parse_list(key, value)?;
                net.channel_order = v
                    .try_into()
                    .map_err(|_| Error::config("channel_order needs exactly three entries"))?;
            }
            "initial_lr" | "lr" => tr.initial_lr = parse(key, value)?,
            "halve_every" => tr.halve_every = parse(key, value)?,
            "weight_decay" => tr.weight_decay = parse(key, value)?,
            "batch_size" => tr.batch_size = parse(key, value)?,
            "epochs" => tr.epochs = parse(key, value)?,
            "patch_size" => tr.patch_size = parse(key, value)?,
            "patches_per_image" => tr.patches_per_image = parse(key, value)?,
            "seed" => tr.seed = parse(key, value)?,
            "beta1" => tr.beta1 = parse(key, value)?,
            "beta2" => tr.beta2 = parse(key, value)?,
            "epsilon" => tr.epsilon = parse(key, value)?,
            other => return Err(Error::config(format!("unknown setting `{other}`"))),
        }
        Ok(())
    }

    /// Every field as `key=value` lines, in a fixed order.
    pub fn to_lines(&self) -> Vec<String> {
        let n = &self.network;
        let t = &self.train;
        vec![
            format!("p={}", n.p),
            format!("n={}", n.n),
            format!("m={}", n.m),
            format!("c={}", n.channels),
            format!("kernels={}", join(&n.kernels)),
            format!("bands={}", n.bands),
            format!("fusion_enabled={}", n.fusion_enabled),
            format!("mix_enabled={}", n.mix_enabled),
            format!("channel_order={}", join(&n.channel_order)),
            format!("initial_lr={}", t.initial_lr),
            format!("halve_every={}", t.halve_every),
            format!("weight_decay={}", t.weight_decay),
            format!("batch_size={}", t.batch_size),
            format!("epochs={}", t.epochs),
            format!("patch_size={}", t.patch_size),
            format!("patches_per_image={}", t.patches_per_image),
            format!("seed={}", t.seed),
            format!("beta1={}", t.beta1),
            format!("beta2={}", t.beta2),
            format!("epsilon={}", t.epsilon),
        ]
    }
}

fn join<T: Display>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| Error::config(format!("bad value `{value}` for `{key}`: {e}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: Display,
{
    value.split(',').map(|v| parse(key, v)).collect()
}

/// Parses `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_entries(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = parse_entry(line).map_err(|_| {
            Error::config(format!("line {}: expected key=value, got `{raw}`", i + 1))
        })?;
        out.push((k, v));
    }
    Ok(out)
}

pub fn parse_entry(text: &str) -> Result<(String, String)> {
    let (k, v) = text
        .split_once('=')
        .ok_or_else(|| Error::config(format!("expected key=value, got `{text}`")))?;
    let k = k.trim();
    if k.is_empty() {
        return Err(Error::config(format!("empty key in `{text}`")));
    }
    Ok((k.to_string(), v.trim().to_string()))
}
