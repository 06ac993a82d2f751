//! Checkpoint container: magic `FMCKPT1\0`, `u32` format version, a
//! length-prefixed UTF-8 snapshot of `key=value` lines, a `u32` array count,
//! then per array a length-prefixed name, `u32` rank, `u32` dims and raw
//! little-endian `f32` values. All integers are little-endian.

use std::path::Path;

use ndarray::{ArrayD, IxDyn};

use crate::blocks::ParameterSet;
use crate::error::{Error, Result};
use crate::network::{Network, NetworkConfig};
use crate::settings::{parse_entries, Settings};
use crate::training::{Adam, TrainConfig, TrainState};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"FMCKPT1\0";
pub const CHECKPOINT_VERSION: u32 = 1;

const PARAM_PREFIX: &str = "param:";
const FIRST_MOMENT_PREFIX: &str = "adam_m:";
const SECOND_MOMENT_PREFIX: &str = "adam_v:";

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub network_config: NetworkConfig,
    pub train_config: TrainConfig,
    pub network_seed: u64,
    pub params: ParameterSet<f32>,
    pub adam_step: u64,
    pub adam_first_moment: ParameterSet<f32>,
    pub adam_second_moment: ParameterSet<f32>,
    pub epoch: usize,
    pub loss_history: Vec<f64>,
}

impl Checkpoint {
    pub fn from_state(state: &TrainState<f32>, train_config: &TrainConfig) -> Self {
        Self {
            network_config: state.network.config().clone(),
            train_config: train_config.clone(),
            network_seed: state.network.seed(),
            params: state.network.params().clone(),
            adam_step: state.optimizer.step_count(),
            adam_first_moment: state.optimizer.first_moment().clone(),
            adam_second_moment: state.optimizer.second_moment().clone(),
            epoch: state.epoch,
            loss_history: state.loss_history.clone(),
        }
    }

    pub fn network(&self) -> Result<Network<f32>> {
        Network::from_parts(self.network_config.clone(), self.network_seed, self.params.clone())
    }

    /// Training state for resuming; optimizer hyperparameters come from `config`.
    pub fn into_state(self, config: &TrainConfig) -> Result<TrainState<f32>> {
        let network = Network::from_parts(self.network_config, self.network_seed, self.params)?;
        let shapes = network.layout().param_shapes();
        self.adam_first_moment.validate_against(&shapes)?;
        self.adam_second_moment.validate_against(&shapes)?;
        Ok(TrainState {
            network,
            optimizer: Adam::from_state(
                config,
                self.adam_step,
                self.adam_first_moment,
                self.adam_second_moment,
            ),
            epoch: self.epoch,
            loss_history: self.loss_history,
        })
    }

    /// Fails unless the stored architecture equals `expected`.
    pub fn check_compatible(&self, expected: &NetworkConfig) -> Result<()> {
        if &self.network_config != expected {
            return Err(Error::config(format!(
                "checkpoint architecture {:?} does not match requested {:?}",
                self.network_config, expected
            )));
        }
        Ok(())
    }

    pub fn settings(&self) -> Settings {
        Settings {
            network: self.network_config.clone(),
            train: self.train_config.clone(),
        }
    }

    fn snapshot(&self) -> String {
        let mut lines = self.settings().to_lines();
        lines.push(format!("network_seed={}", self.network_seed));
        lines.push(format!("epoch={}", self.epoch));
        lines.push(format!("adam_step={}", self.adam_step));
        let history: Vec<String> = self.loss_history.iter().map(|v| v.to_string()).collect();
        lines.push(format!("loss_history={}", history.join(",")));
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        write_bytes(&mut out, self.snapshot().as_bytes());
        let sets = [
            (PARAM_PREFIX, &self.params),
            (FIRST_MOMENT_PREFIX, &self.adam_first_moment),
            (SECOND_MOMENT_PREFIX, &self.adam_second_moment),
        ];
        let count: usize = sets.iter().map(|(_, s)| s.len()).sum();
        out.extend_from_slice(&(count as u32).to_le_bytes());
        for (prefix, set) in sets {
            for (name, array) in set.iter() {
                write_bytes(&mut out, format!("{prefix}{name}").as_bytes());
                out.extend_from_slice(&(array.ndim() as u32).to_le_bytes());
                for &d in array.shape() {
                    out.extend_from_slice(&(d as u32).to_le_bytes());
                }
                for v in array.iter() {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8, "magic")? != CHECKPOINT_MAGIC {
            return Err(Error::format("magic", "expected `FMCKPT1\\0`"));
        }
        let version = r.u32("version")?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::format(
                "version",
                format!("unsupported checkpoint version {version} (expected {CHECKPOINT_VERSION})"),
            ));
        }
        let snapshot_len = r.u32("config length")? as usize;
        let snapshot = std::str::from_utf8(r.take(snapshot_len, "config snapshot")?)
            .map_err(|e| Error::format("config snapshot", e.to_string()))?;

        let mut params = ParameterSet::new();
        let mut first = ParameterSet::new();
        let mut second = ParameterSet::new();
        let count = r.u32("array count")?;
        for _ in 0..count {
            let name_len = r.u32("array name length")? as usize;
            let name = std::str::from_utf8(r.take(name_len, "array name")?)
                .map_err(|e| Error::format("array name", e.to_string()))?
                .to_string();
            let rank = r.u32("array rank")? as usize;
            if rank > 8 {
                return Err(Error::format(&name, format!("implausible rank {rank}")));
            }
            let mut dims = Vec::with_capacity(rank);
            for _ in 0..rank {
                dims.push(r.u32("array dims")? as usize);
            }
            let len = dims
                .iter()
                .try_fold(1usize, |acc, &d| acc.checked_mul(d))
                .filter(|n| n.checked_mul(4).is_some())
                .ok_or_else(|| Error::format(&name, "dimensions overflow"))?;
            let payload = r.take(len * 4, &name)?;
            let values: Vec<f32> = payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
                .collect();
            let array = ArrayD::from_shape_vec(IxDyn(&dims), values).expect("length checked");
            let (set, key) = if let Some(k) = name.strip_prefix(PARAM_PREFIX) {
                (&mut params, k)
            } else if let Some(k) = name.strip_prefix(FIRST_MOMENT_PREFIX) {
                (&mut first, k)
            } else if let Some(k) = name.strip_prefix(SECOND_MOMENT_PREFIX) {
                (&mut second, k)
            } else {
                return Err(Error::format(&name, "unknown array namespace"));
            };
            set.insert(key, array)
                .map_err(|e| Error::format(&name, e.to_string()))?;
        }
        if r.pos != bytes.len() {
            return Err(Error::format("payload", "trailing bytes after last array"));
        }

        let ckpt = Self::from_snapshot(snapshot, params, first, second)?;
        ckpt.network()
            .map_err(|e| Error::format("parameters", e.to_string()))?;
        let shapes = ckpt.network()?.layout().param_shapes();
        for (set, field) in [
            (&ckpt.adam_first_moment, "adam first moment"),
            (&ckpt.adam_second_moment, "adam second moment"),
        ] {
            set.validate_against(&shapes)
                .map_err(|e| Error::format(field, e.to_string()))?;
        }
        Ok(ckpt)
    }

    fn from_snapshot(
        snapshot: &str,
        params: ParameterSet<f32>,
        first: ParameterSet<f32>,
        second: ParameterSet<f32>,
    ) -> Result<Self> {
        let bad = |e: Error| Error::format("config snapshot", e.to_string());
        let mut entries = parse_entries(snapshot).map_err(bad)?;
        let mut take = |key: &str| -> Result<String> {
            let i = entries
                .iter()
                .position(|(k, _)| k == key)
                .ok_or_else(|| Error::format("config snapshot", format!("missing `{key}`")))?;
            Ok(entries.remove(i).1)
        };
        let num = |key: &str, v: String| -> Result<u64> {
            v.parse()
                .map_err(|e| Error::format("config snapshot", format!("`{key}`: {e}")))
        };
        let network_seed = num("network_seed", take("network_seed")?)?;
        let epoch = num("epoch", take("epoch")?)? as usize;
        let adam_step = num("adam_step", take("adam_step")?)?;
        let history = take("loss_history")?;
        let loss_history = if history.is_empty() {
            Vec::new()
        } else {
            history
                .split(',')
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|e| Error::format("config snapshot", format!("loss_history: {e}")))
                })
                .collect::<Result<_>>()?
        };
        // the remaining keys must describe the full configuration
        let settings = Settings::from_entries(&entries).map_err(bad)?;
        Ok(Self {
            network_config: settings.network,
            train_config: settings.train,
            network_seed,
            params,
            adam_step,
            adam_first_moment: first,
            adam_second_moment: second,
            epoch,
            loss_history,
        })
    }
}

fn write_bytes(out: &mut Vec<u8>, bytes: &[u8]) {
    out.extend_from_slice(&(bytes.len() as u32).to_le_bytes());
    out.extend_from_slice(bytes);
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, field: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::format(field, "truncated"))?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u32(&mut self, field: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, field)?.try_into().expect("4 bytes")))
    }
}

pub fn save_checkpoint(checkpoint: &Checkpoint, path: &Path) -> Result<()> {
    std::fs::write(path, checkpoint.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::from_bytes(&bytes)
}
