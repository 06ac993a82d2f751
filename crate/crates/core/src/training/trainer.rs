use std::time::Instant;

use rayon::prelude::*;

use crate::blocks::ParameterSet;
use crate::data::{sample_patches, Pair, Patch};
use crate::error::{Error, Result};
use crate::network::Network;
use crate::scalar::Scalar;
use crate::training::{lr_at_epoch, mae_with_grad, Adam, TrainConfig};

/// One row of the training log.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub wall_seconds: f64,
}

pub const TRAIN_LOG_HEADER: &str = "epoch,lr,train_loss,wall_seconds";

pub fn format_train_log(rows: &[EpochLog]) -> String {
    let mut out = format!("{TRAIN_LOG_HEADER}\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{:.3}\n",
            r.epoch, r.lr, r.train_loss, r.wall_seconds
        ));
    }
    out
}

/// Everything that evolves during training.
#[derive(Clone, Debug)]
pub struct TrainState<T> {
    pub network: Network<T>,
    pub optimizer: Adam<T>,
    /// Completed epochs.
    pub epoch: usize,
    /// Mean training loss of each completed epoch.
    pub loss_history: Vec<f64>,
}

impl<T: Scalar> TrainState<T> {
    pub fn new(network: Network<T>, config: &TrainConfig) -> Self {
        let optimizer = Adam::new(network.params(), config);
        Self {
            network,
            optimizer,
            epoch: 0,
            loss_history: Vec::new(),
        }
    }
}

/// Mean loss and mean parameter gradient over a batch of crops.
pub fn batch_gradients<T: Scalar>(network: &Network<T>, batch: &[Patch]) -> Result<(f64, ParameterSet<T>)> {
    if batch.is_empty() {
        return Err(Error::input("empty batch"));
    }
    let per_sample: Vec<(f64, ParameterSet<T>)> = batch
        .par_iter()
        .map(|patch| {
            let input = network.upsample(&patch.rgb)?;
            let target = patch.hsi.to_feature_map::<T>();
            let mut tape = network.tape();
            let (pred, _) = tape.forward(&input)?;
            let (loss, grad) = mae_with_grad(&pred, &target)?;
            let (_, grads) = tape.backward(&grad)?;
            Ok((loss, grads))
        })
        .collect::<Result<_>>()?;

    let mut iter = per_sample.into_iter();
    let (mut loss, mut grads) = iter.next().expect("batch is non-empty");
    for (l, g) in iter {
        loss += l;
        grads.add_assign(&g)?;
    }
    let n = batch.len();
    grads.scale(T::one() / T::from_usize_lossy(n));
    Ok((loss / n as f64, grads))
}

fn epoch_seed(seed: u64, epoch: usize) -> u64 {
    seed ^ (epoch as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Runs epochs `state.epoch .. config.epochs` of mini-batch Adam on the L1
/// objective. Each epoch draws `patches_per_image` crops per training pair.
pub fn train<T: Scalar>(
    mut state: TrainState<T>,
    pairs: &[Pair],
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<(TrainState<T>, Vec<EpochLog>)> {
    config.validate()?;
    if pairs.is_empty() {
        return Err(Error::input("training set is empty"));
    }
    let per_epoch = pairs.len() * config.patches_per_image;
    if config.batch_size > per_epoch {
        return Err(Error::config(format!(
            "batch_size {} exceeds the {per_epoch} crops available per epoch",
            config.batch_size
        )));
    }
    let mut log = Vec::new();
    while state.epoch < config.epochs {
        let epoch = state.epoch;
        let started = Instant::now();
        let lr = lr_at_epoch(config, epoch);
        let patches = sample_patches(pairs, config.patch_size, per_epoch, epoch_seed(config.seed, epoch))?;
        let mut total = 0.0;
        let mut batches = 0;
        for (b, batch) in patches.chunks(config.batch_size).enumerate() {
            let (loss, grads) = batch_gradients(&state.network, batch)?;
            if !loss.is_finite() {
                return Err(Error::Numerical {
                    epoch,
                    batch: b,
                    reason: format!("training loss is {loss}"),
                });
            }
            state.optimizer.step(state.network.params_mut(), &grads, lr)?;
            total += loss;
            batches += 1;
        }
        let row = EpochLog {
            epoch,
            lr,
            train_loss: total / batches as f64,
            wall_seconds: started.elapsed().as_secs_f64(),
        };
        state.loss_history.push(row.train_loss);
        state.epoch += 1;
        on_epoch(&row);
        log.push(row);
    }
    Ok((state, log))
}
