use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array2, Array3, ArrayView2, ArrayView3, Axis, Zip};

use crate::blocks::{FeatureMap, Layer, ParamShape, ParameterSet};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One convolution (stride 1, zero same-padding, with bias) optionally followed by ReLU.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConvBlockSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel_size: usize,
    pub apply_relu: bool,
}

impl ConvBlockSpec {
    pub fn new(in_channels: usize, out_channels: usize, kernel_size: usize, apply_relu: bool) -> Self {
        Self {
            in_channels,
            out_channels,
            kernel_size,
            apply_relu,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.in_channels == 0 || self.out_channels == 0 {
            return Err(Error::config(format!(
                "convolution channels must be positive, got {} -> {}",
                self.in_channels, self.out_channels
            )));
        }
        if self.kernel_size % 2 == 0 {
            return Err(Error::config(format!(
                "kernel size must be odd, got {}",
                self.kernel_size
            )));
        }
        Ok(())
    }

    pub fn weight_shape(&self) -> [usize; 4] {
        [
            self.out_channels,
            self.in_channels,
            self.kernel_size,
            self.kernel_size,
        ]
    }
}

/// A [`ConvBlockSpec`] bound to parameter names `<name>.weight` and `<name>.bias`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvBlock {
    spec: ConvBlockSpec,
    weight_name: String,
    bias_name: String,
}

#[derive(Clone, Debug)]
pub struct ConvTrace<T> {
    input: FeatureMap<T>,
    output: FeatureMap<T>,
}

fn param_name(prefix: &str, leaf: &str) -> String {
    if prefix.is_empty() {
        leaf.to_string()
    } else {
        format!("{prefix}.{leaf}")
    }
}

impl ConvBlock {
    pub fn new(name: &str, spec: ConvBlockSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self {
            weight_name: param_name(name, "weight"),
            bias_name: param_name(name, "bias"),
            spec,
        })
    }

    pub fn spec(&self) -> &ConvBlockSpec {
        &self.spec
    }

    pub fn weight_name(&self) -> &str {
        &self.weight_name
    }

    pub fn bias_name(&self) -> &str {
        &self.bias_name
    }

    pub fn param_shapes(&self) -> Vec<ParamShape> {
        vec![
            (self.weight_name.clone(), self.spec.weight_shape().to_vec()),
            (self.bias_name.clone(), vec![self.spec.out_channels]),
        ]
    }

    fn weight_matrix<'p, T: Scalar>(&self, params: &'p ParameterSet<T>) -> Result<ArrayView2<'p, T>> {
        let w = params.get_shaped(&self.weight_name, &self.spec.weight_shape())?;
        let k = self.spec.kernel_size;
        Ok(w.view()
            .into_shape_with_order((self.spec.out_channels, self.spec.in_channels * k * k))
            .expect("parameters are stored in standard layout"))
    }

    fn check_input<T: Scalar>(&self, input: &FeatureMap<T>) -> Result<()> {
        if input.channels() != self.spec.in_channels {
            return Err(Error::config(format!(
                "convolution `{}` expects {} input channels, got {}",
                self.weight_name,
                self.spec.in_channels,
                input.channels()
            )));
        }
        Ok(())
    }
}

/// Unfolds zero-padded `k × k` neighbourhoods into a `(C·k·k) × (H·W)` matrix.
/// Row `(c·k + ky)·k + kx` matches the `[out, in, ky, kx]` kernel layout.
pub(crate) fn im2col<T: Scalar>(input: ArrayView3<T>, k: usize) -> Array2<T> {
    let (c, h, w) = input.dim();
    let r = k / 2;
    let mut col = Array2::<T>::zeros((c * k * k, h * w));
    for ci in 0..c {
        for ky in 0..k {
            for kx in 0..k {
                let row = (ci * k + ky) * k + kx;
                let mut dst_row = col.row_mut(row);
                let dst = dst_row.as_slice_mut().expect("rows are contiguous");
                // output x such that x + kx - r lies in [0, w)
                let x0 = r.saturating_sub(kx);
                let x1 = (w + r).saturating_sub(kx).min(w);
                if x0 >= x1 {
                    continue;
                }
                for y in 0..h {
                    let sy = y as isize + ky as isize - r as isize;
                    if sy < 0 || sy >= h as isize {
                        continue;
                    }
                    let src = input.slice(s![ci, sy as usize, ..]);
                    for x in x0..x1 {
                        dst[y * w + x] = src[x + kx - r];
                    }
                }
            }
        }
    }
    col
}

/// Adjoint of [`im2col`]: scatters column gradients back onto the input grid.
pub(crate) fn col2im<T: Scalar>(col: ArrayView2<T>, c: usize, h: usize, w: usize, k: usize) -> Array3<T> {
    let r = k / 2;
    let mut out = Array3::<T>::zeros((c, h, w));
    for ci in 0..c {
        for ky in 0..k {
            for kx in 0..k {
                let row = (ci * k + ky) * k + kx;
                let src = col.row(row);
                let x0 = r.saturating_sub(kx);
                let x1 = (w + r).saturating_sub(kx).min(w);
                if x0 >= x1 {
                    continue;
                }
                for y in 0..h {
                    let sy = y as isize + ky as isize - r as isize;
                    if sy < 0 || sy >= h as isize {
                        continue;
                    }
                    let mut dst = out.slice_mut(s![ci, sy as usize, ..]);
                    for x in x0..x1 {
                        let d = &mut dst[x + kx - r];
                        *d = *d + src[y * w + x];
                    }
                }
            }
        }
    }
    out
}

impl<T: Scalar> Layer<T> for ConvBlock {
    type Output = FeatureMap<T>;
    type Trace = ConvTrace<T>;

    fn forward_traced(
        &self,
        params: &ParameterSet<T>,
        input: &FeatureMap<T>,
    ) -> Result<(FeatureMap<T>, ConvTrace<T>)> {
        self.check_input(input)?;
        let weight = self.weight_matrix(params)?;
        let bias = params.get_shaped(&self.bias_name, &[self.spec.out_channels])?;
        let (_, h, w) = input.dim();
        let k = self.spec.kernel_size;

        let mut out = Array2::<T>::zeros((self.spec.out_channels, h * w));
        for (mut row, &b) in out.axis_iter_mut(Axis(0)).zip(bias.iter()) {
            row.fill(b);
        }
        if k == 1 {
            general_mat_mul(T::one(), &weight, &input.as_matrix(), T::one(), &mut out);
        } else {
            let col = im2col(input.values().view(), k);
            general_mat_mul(T::one(), &weight, &col, T::one(), &mut out);
        }
        if self.spec.apply_relu {
            out.mapv_inplace(|v| if v > T::zero() { v } else { T::zero() });
        }
        let out = out
            .into_shape_with_order((self.spec.out_channels, h, w))
            .expect("gemm output is contiguous");
        let output = FeatureMap::from_array(out);
        let trace = ConvTrace {
            input: input.clone(),
            output: output.clone(),
        };
        Ok((output, trace))
    }

    fn backward(
        &self,
        params: &ParameterSet<T>,
        trace: &ConvTrace<T>,
        grad_output: &FeatureMap<T>,
        grads: &mut ParameterSet<T>,
    ) -> Result<FeatureMap<T>> {
        let (c, h, w) = trace.input.dim();
        let o = self.spec.out_channels;
        let k = self.spec.kernel_size;
        if grad_output.dim() != (o, h, w) {
            return Err(Error::input(format!(
                "gradient for `{}` has shape {:?}, expected {:?}",
                self.weight_name,
                grad_output.dim(),
                (o, h, w)
            )));
        }

        let mut g = grad_output.as_matrix().to_owned();
        if self.spec.apply_relu {
            Zip::from(&mut g)
                .and(trace.output.as_matrix())
                .for_each(|g, &y| {
                    if y <= T::zero() {
                        *g = T::zero();
                    }
                });
        }

        {
            let db = grads.get_mut(&self.bias_name)?;
            for (d, row) in db.iter_mut().zip(g.axis_iter(Axis(0))) {
                *d = *d + row.sum();
            }
        }

        let weight = self.weight_matrix(params)?;
        let grad_input = if k == 1 {
            let x = trace.input.as_matrix();
            let dw = grads.get_mut(&self.weight_name)?;
            let mut dw = dw
                .view_mut()
                .into_shape_with_order((o, c))
                .expect("parameters are stored in standard layout");
            general_mat_mul(T::one(), &g, &x.t(), T::one(), &mut dw);
            weight
                .t()
                .dot(&g)
                .into_shape_with_order((c, h, w))
                .expect("gemm output is contiguous")
        } else {
            let col = im2col(trace.input.values().view(), k);
            let dw = grads.get_mut(&self.weight_name)?;
            let mut dw = dw
                .view_mut()
                .into_shape_with_order((o, c * k * k))
                .expect("parameters are stored in standard layout");
            general_mat_mul(T::one(), &g, &col.t(), T::one(), &mut dw);
            let dcol = weight.t().dot(&g);
            col2im(dcol.view(), c, h, w, k)
        };
        Ok(FeatureMap::from_array(grad_input))
    }
}
