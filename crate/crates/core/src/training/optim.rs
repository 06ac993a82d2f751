use ndarray::Zip;

use crate::blocks::ParameterSet;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::training::TrainConfig;

/// Adam with an L2 penalty folded into the gradient of every kernel
/// (`*.weight`); biases are not decayed.
#[derive(Clone, Debug, PartialEq)]
pub struct Adam<T> {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
    step: u64,
    first_moment: ParameterSet<T>,
    second_moment: ParameterSet<T>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(params: &ParameterSet<T>, config: &TrainConfig) -> Self {
        Self {
            beta1: config.beta1,
            beta2: config.beta2,
            epsilon: config.epsilon,
            weight_decay: config.weight_decay,
            step: 0,
            first_moment: params.zeros_like(),
            second_moment: params.zeros_like(),
        }
    }

    pub fn from_state(
        config: &TrainConfig,
        step: u64,
        first_moment: ParameterSet<T>,
        second_moment: ParameterSet<T>,
    ) -> Self {
        Self {
            beta1: config.beta1,
            beta2: config.beta2,
            epsilon: config.epsilon,
            weight_decay: config.weight_decay,
            step,
            first_moment,
            second_moment,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn first_moment(&self) -> &ParameterSet<T> {
        &self.first_moment
    }

    pub fn second_moment(&self) -> &ParameterSet<T> {
        &self.second_moment
    }

    /// Applies one update with learning rate `lr`.
    pub fn step(&mut self, params: &mut ParameterSet<T>, grads: &ParameterSet<T>, lr: f64) -> Result<()> {
        if grads.len() != params.len() {
            return Err(Error::config("gradient set does not match parameters"));
        }
        self.step += 1;
        let t = self.step.min(i32::MAX as u64) as i32;
        let correction1 = 1.0 - self.beta1.powi(t);
        let correction2 = 1.0 - self.beta2.powi(t);
        let b1 = T::from_f64_lossy(self.beta1);
        let b2 = T::from_f64_lossy(self.beta2);
        let one = T::one();
        let decay = T::from_f64_lossy(self.weight_decay);
        let step_size = T::from_f64_lossy(lr / correction1);
        let inv_c2 = T::from_f64_lossy(1.0 / correction2);
        let eps = T::from_f64_lossy(self.epsilon);

        for (name, w) in params.iter_mut() {
            let g = grads.get(name)?;
            let decayed = name.ends_with(".weight");
            let m = self.first_moment.get_mut(name)?;
            let v = self.second_moment.get_mut(name)?;
            Zip::from(w).and(g).and(m).and(v).for_each(|w, &g, m, v| {
                let g = if decayed { g + decay * *w } else { g };
                *m = b1 * *m + (one - b1) * g;
                *v = b2 * *v + (one - b2) * g * g;
                let denom = (*v * inv_c2).sqrt() + eps;
                *w = *w - step_size * *m / denom;
            });
        }
        Ok(())
    }
}
