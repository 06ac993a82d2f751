use ndarray::{Array3, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A `channels × height × width` activation tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMap<T> {
    values: Array3<T>,
}

impl<T: Scalar> FeatureMap<T> {
    /// Wraps an array after checking that it is non-empty and finite.
    pub fn new(values: Array3<T>) -> Result<Self> {
        let (c, h, w) = values.dim();
        if c == 0 || h == 0 || w == 0 {
            return Err(Error::input(format!(
                "feature map dimensions must be positive, got {c}x{h}x{w}"
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("feature map contains non-finite values"));
        }
        Ok(Self::from_array(values))
    }

    pub(crate) fn from_array(values: Array3<T>) -> Self {
        let values = if values.is_standard_layout() {
            values
        } else {
            values.as_standard_layout().into_owned()
        };
        Self { values }
    }

    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self {
            values: Array3::zeros((channels, height, width)),
        }
    }

    pub fn channels(&self) -> usize {
        self.values.dim().0
    }

    pub fn height(&self) -> usize {
        self.values.dim().1
    }

    pub fn width(&self) -> usize {
        self.values.dim().2
    }

    pub fn dim(&self) -> (usize, usize, usize) {
        self.values.dim()
    }

    pub fn values(&self) -> &Array3<T> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Array3<T> {
        &mut self.values
    }

    pub fn into_values(self) -> Array3<T> {
        self.values
    }

    /// `channels × (height·width)` view, the layout used by the GEMM kernels.
    pub(crate) fn as_matrix(&self) -> ArrayView2<'_, T> {
        let (c, h, w) = self.dim();
        self.values
            .view()
            .into_shape_with_order((c, h * w))
            .expect("feature maps are kept in standard layout")
    }

    pub fn cast<U: Scalar>(&self) -> FeatureMap<U> {
        FeatureMap {
            values: self.values.mapv(|v| U::from_f64_lossy(v.as_f64())),
        }
    }

    /// Stacks maps along the channel axis in the given order.
    pub fn concat_channels(maps: &[&FeatureMap<T>]) -> Result<Self> {
        let first = maps
            .first()
            .ok_or_else(|| Error::input("cannot concatenate an empty list of feature maps"))?;
        let (_, h, w) = first.dim();
        if let Some(bad) = maps.iter().find(|m| m.height() != h || m.width() != w) {
            return Err(Error::input(format!(
                "cannot concatenate {}x{} with {}x{} feature maps",
                bad.height(),
                bad.width(),
                h,
                w
            )));
        }
        let views: Vec<_> = maps.iter().map(|m| m.values.view()).collect();
        let values = ndarray::concatenate(Axis(0), &views)
            .map_err(|e| Error::input(format!("channel concatenation failed: {e}")))?;
        Ok(Self::from_array(values))
    }
}

/// Per-pixel convex weights over `n` basis functions, shaped `n × height × width`.
#[derive(Clone, Debug, PartialEq)]
pub struct MixWeightMaps<T> {
    values: Array3<T>,
}

impl<T: Scalar> MixWeightMaps<T> {
    pub(crate) fn from_array(values: Array3<T>) -> Self {
        Self { values }
    }

    /// Equal weights `1/n` at every pixel.
    pub fn uniform(n: usize, height: usize, width: usize) -> Self {
        let v = T::one() / T::from_usize_lossy(n);
        Self {
            values: Array3::from_elem((n, height, width), v),
        }
    }

    /// One-hot weights selecting `index` at every pixel.
    pub fn one_hot(n: usize, index: usize, height: usize, width: usize) -> Self {
        let mut values = Array3::zeros((n, height, width));
        values.index_axis_mut(Axis(0), index).fill(T::one());
        Self { values }
    }

    pub fn n(&self) -> usize {
        self.values.dim().0
    }

    pub fn height(&self) -> usize {
        self.values.dim().1
    }

    pub fn width(&self) -> usize {
        self.values.dim().2
    }

    pub fn values(&self) -> &Array3<T> {
        &self.values
    }

    /// Largest deviation from the simplex constraints: the most negative
    /// weight (as a positive number) or the worst per-pixel sum error.
    pub fn simplex_violation(&self) -> f64 {
        let (_, h, w) = self.values.dim();
        let mut worst = 0.0f64;
        for y in 0..h {
            for x in 0..w {
                let mut sum = 0.0;
                for v in self.values.slice(ndarray::s![.., y, x]).iter() {
                    let v = v.as_f64();
                    worst = worst.max(-v);
                    sum += v;
                }
                worst = worst.max((sum - 1.0).abs());
            }
        }
        worst
    }

    /// Weight plane of basis `i` (`height × width`).
    pub fn plane(&self, i: usize) -> ndarray::ArrayView2<'_, T> {
        self.values.index_axis(Axis(0), i)
    }
}
