use ndarray::Zip;

use crate::blocks::FeatureMap;
use crate::data::SpectralImage;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Mean absolute error averaged over a batch of images.
pub fn l1_loss(pred: &[SpectralImage], target: &[SpectralImage]) -> Result<f64> {
    if pred.len() != target.len() {
        return Err(Error::input(format!(
            "batch sizes differ: {} predictions, {} targets",
            pred.len(),
            target.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::input("empty batch"));
    }
    let mut total = 0.0;
    for (i, (p, t)) in pred.iter().zip(target).enumerate() {
        if p.dim() != t.dim() {
            return Err(Error::input(format!(
                "batch item {i}: prediction {:?} vs target {:?}",
                p.dim(),
                t.dim()
            )));
        }
        let sum: f64 = p
            .values()
            .iter()
            .zip(t.values())
            .map(|(&a, &b)| (a as f64 - b as f64).abs())
            .sum();
        total += sum / p.values().len() as f64;
    }
    Ok(total / pred.len() as f64)
}

/// Per-image MAE and its gradient with respect to the prediction.
/// At zero difference the subgradient 0 is used.
pub fn mae_with_grad<T: Scalar>(pred: &FeatureMap<T>, target: &FeatureMap<T>) -> Result<(f64, FeatureMap<T>)> {
    if pred.dim() != target.dim() {
        return Err(Error::input(format!(
            "prediction {:?} vs target {:?}",
            pred.dim(),
            target.dim()
        )));
    }
    let count = pred.values().len();
    let scale = T::one() / T::from_usize_lossy(count);
    let mut grad = FeatureMap::zeros(pred.channels(), pred.height(), pred.width());
    let mut sum = 0.0f64;
    Zip::from(grad.values_mut())
        .and(pred.values())
        .and(target.values())
        .for_each(|g, &p, &t| {
            let d = p - t;
            sum += d.abs().as_f64();
            *g = if d > T::zero() {
                scale
            } else if d < T::zero() {
                -scale
            } else {
                T::zero()
            };
        });
    Ok((sum / count as f64, grad))
}
