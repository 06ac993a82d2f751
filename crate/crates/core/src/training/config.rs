use crate::error::{Error, Result};

/// Optimisation settings. Defaults follow the reference schedule: Adam,
/// learning rate 1e-4 halved every 20 epochs, weight decay 1e-6, batches of
/// 128 crops, 100 epochs.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub initial_lr: f64,
    pub halve_every: usize,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub patch_size: usize,
    /// Crops drawn per training image per epoch.
    pub patches_per_image: usize,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            initial_lr: 1e-4,
            halve_every: 20,
            weight_decay: 1e-6,
            batch_size: 128,
            epochs: 100,
            patch_size: 64,
            patches_per_image: 64,
            seed: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.initial_lr >= 0.0 && self.initial_lr.is_finite()) {
            return Err(Error::config("initial_lr must be finite and non-negative"));
        }
        if self.halve_every == 0 {
            return Err(Error::config("halve_every must be positive"));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::config("weight_decay must be non-negative"));
        }
        if self.batch_size == 0 || self.patch_size == 0 || self.patches_per_image == 0 {
            return Err(Error::config(
                "batch_size, patch_size and patches_per_image must be positive",
            ));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::config("moment coefficients must lie in [0, 1)"));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::config("epsilon must be positive"));
        }
        Ok(())
    }
}

/// Step schedule: `initial_lr · 0.5^⌊epoch / halve_every⌋`.
pub fn lr_at_epoch(config: &TrainConfig, epoch: usize) -> f64 {
    let halvings = epoch / config.halve_every.max(1);
    config.initial_lr * 0.5f64.powi(halvings.min(i32::MAX as usize) as i32)
}
