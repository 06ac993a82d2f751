use ndarray::{Array3, Axis, Zip};

use crate::blocks::conv::{ConvBlock, ConvBlockSpec, ConvTrace};
use crate::blocks::{FeatureMap, Layer, MixWeightMaps, ParamShape, ParameterSet};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Kernel size used by entry convolutions and the mixing function.
pub const SMALL_KERNEL: usize = 3;

/// Architecture of one function-mixture block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FmBlockSpec {
    pub in_channels: usize,
    /// Working width `c` of the entry conv and the hidden basis/mixing layers.
    pub channels: usize,
    /// Number of basis functions `n`.
    pub n: usize,
    /// Conv blocks per basis/mixing subnet.
    pub m: usize,
    /// One odd kernel size per basis function.
    pub kernels: Vec<usize>,
    pub out_channels: usize,
    /// ReLU after the last conv of each basis function. Disabled for blocks
    /// whose output is a signed residual.
    pub output_relu: bool,
    /// When false the mixing subnet is absent and every pixel mixes with `1/n`.
    pub mix_enabled: bool,
}

impl FmBlockSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::config("an FM block needs at least one basis function"));
        }
        if self.m == 0 {
            return Err(Error::config("subnets need at least one conv block (m >= 1)"));
        }
        if self.kernels.len() != self.n {
            return Err(Error::config(format!(
                "{} kernel sizes given for n = {}",
                self.kernels.len(),
                self.n
            )));
        }
        if let Some(k) = self.kernels.iter().find(|&&k| k % 2 == 0) {
            return Err(Error::config(format!("kernel size must be odd, got {k}")));
        }
        if self.in_channels == 0 || self.channels == 0 || self.out_channels == 0 {
            return Err(Error::config("FM block channel counts must be positive"));
        }
        Ok(())
    }
}

/// `m` stacked conv blocks sharing one kernel size; the `i`-th basis function.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisFunction {
    convs: Vec<ConvBlock>,
}

impl BasisFunction {
    pub fn new(
        name: &str,
        channels: usize,
        out_channels: usize,
        kernel: usize,
        m: usize,
        output_relu: bool,
    ) -> Result<Self> {
        if m == 0 {
            return Err(Error::config("basis function needs m >= 1"));
        }
        let convs = (0..m)
            .map(|j| {
                let last = j + 1 == m;
                let out = if last { out_channels } else { channels };
                let relu = !last || output_relu;
                ConvBlock::new(
                    &format!("{name}.conv{j}"),
                    ConvBlockSpec::new(channels, out, kernel, relu),
                )
            })
            .collect::<Result<_>>()?;
        Ok(Self { convs })
    }

    pub fn convs(&self) -> &[ConvBlock] {
        &self.convs
    }

    pub fn param_shapes(&self) -> Vec<ParamShape> {
        self.convs.iter().flat_map(ConvBlock::param_shapes).collect()
    }
}

fn chain_forward<T: Scalar>(
    convs: &[ConvBlock],
    params: &ParameterSet<T>,
    input: &FeatureMap<T>,
) -> Result<(FeatureMap<T>, Vec<ConvTrace<T>>)> {
    let mut traces = Vec::with_capacity(convs.len());
    let mut x = input.clone();
    for conv in convs {
        let (y, t) = conv.forward_traced(params, &x)?;
        traces.push(t);
        x = y;
    }
    Ok((x, traces))
}

fn chain_backward<T: Scalar>(
    convs: &[ConvBlock],
    params: &ParameterSet<T>,
    traces: &[ConvTrace<T>],
    grad_output: &FeatureMap<T>,
    grads: &mut ParameterSet<T>,
) -> Result<FeatureMap<T>> {
    let mut g = grad_output.clone();
    for (conv, trace) in convs.iter().zip(traces).rev() {
        g = conv.backward(params, trace, &g, grads)?;
    }
    Ok(g)
}

impl<T: Scalar> Layer<T> for BasisFunction {
    type Output = FeatureMap<T>;
    type Trace = Vec<ConvTrace<T>>;

    fn forward_traced(
        &self,
        params: &ParameterSet<T>,
        input: &FeatureMap<T>,
    ) -> Result<(FeatureMap<T>, Self::Trace)> {
        chain_forward(&self.convs, params, input)
    }

    fn backward(
        &self,
        params: &ParameterSet<T>,
        trace: &Self::Trace,
        grad_output: &FeatureMap<T>,
        grads: &mut ParameterSet<T>,
    ) -> Result<FeatureMap<T>> {
        chain_backward(&self.convs, params, trace, grad_output, grads)
    }

}

/// `m − 1` hidden 3×3 conv blocks, a 3×3 projection to `n` logits (no ReLU),
/// then a per-pixel softmax.
#[derive(Clone, Debug, PartialEq)]
pub struct MixingFunction {
    hidden: Vec<ConvBlock>,
    projection: ConvBlock,
    n: usize,
}

#[derive(Clone, Debug)]
pub struct MixingTrace<T> {
    hidden: Vec<ConvTrace<T>>,
    projection: ConvTrace<T>,
    weights: MixWeightMaps<T>,
}

impl MixingFunction {
    pub fn new(name: &str, channels: usize, n: usize, m: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::config("mixing function needs n >= 1"));
        }
        if m == 0 {
            return Err(Error::config("mixing function needs m >= 1"));
        }
        let hidden = (0..m - 1)
            .map(|j| {
                ConvBlock::new(
                    &format!("{name}.conv{j}"),
                    ConvBlockSpec::new(channels, channels, SMALL_KERNEL, true),
                )
            })
            .collect::<Result<_>>()?;
        let projection = ConvBlock::new(
            &format!("{name}.proj"),
            ConvBlockSpec::new(channels, n, SMALL_KERNEL, false),
        )?;
        Ok(Self {
            hidden,
            projection,
            n,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn projection(&self) -> &ConvBlock {
        &self.projection
    }

    pub fn param_shapes(&self) -> Vec<ParamShape> {
        self.hidden
            .iter()
            .chain(std::iter::once(&self.projection))
            .flat_map(ConvBlock::param_shapes)
            .collect()
    }
}

/// Softmax over the channel axis, independently at every pixel.
pub fn softmax_channels<T: Scalar>(logits: &Array3<T>) -> Array3<T> {
    let mut out = logits.clone();
    for mut lane in out.lanes_mut(Axis(0)) {
        let max = lane.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
        lane.mapv_inplace(|v| (v - max).exp());
        let sum: T = lane.iter().copied().sum();
        lane.mapv_inplace(|v| v / sum);
    }
    out
}

impl<T: Scalar> Layer<T> for MixingFunction {
    type Output = MixWeightMaps<T>;
    type Trace = MixingTrace<T>;

    fn forward_traced(
        &self,
        params: &ParameterSet<T>,
        input: &FeatureMap<T>,
    ) -> Result<(MixWeightMaps<T>, MixingTrace<T>)> {
        let (hidden_out, hidden) = chain_forward(&self.hidden, params, input)?;
        let (logits, projection) = self.projection.forward_traced(params, &hidden_out)?;
        let weights = MixWeightMaps::from_array(softmax_channels(logits.values()));
        let trace = MixingTrace {
            hidden,
            projection,
            weights: weights.clone(),
        };
        Ok((weights, trace))
    }

    /// `grad_output` is the gradient with respect to the weight maps.
    fn backward(
        &self,
        params: &ParameterSet<T>,
        trace: &MixingTrace<T>,
        grad_output: &FeatureMap<T>,
        grads: &mut ParameterSet<T>,
    ) -> Result<FeatureMap<T>> {
        let w = trace.weights.values();
        if grad_output.dim() != w.dim() {
            return Err(Error::input("mixing gradient shape does not match weight maps"));
        }
        // dz_i = w_i (dw_i - sum_j w_j dw_j)
        let mut dlogits = grad_output.values().clone();
        for (mut d, wl) in dlogits.lanes_mut(Axis(0)).into_iter().zip(w.lanes(Axis(0))) {
            let dot: T = d.iter().zip(wl.iter()).map(|(&a, &b)| a * b).sum();
            Zip::from(&mut d).and(&wl).for_each(|d, &wi| *d = wi * (*d - dot));
        }
        let g = self.projection.backward(
            params,
            &trace.projection,
            &FeatureMap::from_array(dlogits),
            grads,
        )?;
        chain_backward(&self.hidden, params, &trace.hidden, &g, grads)
    }

}

/// Pixel-wise convex combination: `Σ_i basis[i] ⊙ weights[i]`, each weight
/// plane broadcast over all channels of its basis output.
pub fn mix_outputs<T: Scalar>(basis: &[FeatureMap<T>], weights: &MixWeightMaps<T>) -> Result<FeatureMap<T>> {
    let first = basis
        .first()
        .ok_or_else(|| Error::input("no basis outputs to mix"))?;
    if basis.len() != weights.n() {
        return Err(Error::input(format!(
            "{} basis outputs but {} weight planes",
            basis.len(),
            weights.n()
        )));
    }
    let (c, h, w) = first.dim();
    let mut out = Array3::<T>::zeros((c, h, w));
    for (i, f) in basis.iter().enumerate() {
        if f.dim() != (c, h, w) {
            return Err(Error::input("basis outputs differ in shape"));
        }
        let plane = weights.plane(i);
        for (mut o, fc) in out.outer_iter_mut().zip(f.values().outer_iter()) {
            Zip::from(&mut o)
                .and(&fc)
                .and(&plane)
                .for_each(|o, &f, &wt| *o = *o + f * wt);
        }
    }
    Ok(FeatureMap::from_array(out))
}

/// Entry conv `G`, `n` parallel basis functions and a mixing function, combined
/// pixel-wise.
#[derive(Clone, Debug, PartialEq)]
pub struct FmBlock {
    name: String,
    spec: FmBlockSpec,
    entry: ConvBlock,
    bases: Vec<BasisFunction>,
    mixing: Option<MixingFunction>,
}

/// Intermediate values of one FM block evaluation.
#[derive(Clone, Debug)]
pub struct FmBlockTrace<T> {
    entry: ConvTrace<T>,
    entry_output: FeatureMap<T>,
    bases: Vec<Vec<ConvTrace<T>>>,
    basis_outputs: Vec<FeatureMap<T>>,
    mixing: Option<MixingTrace<T>>,
    weights: MixWeightMaps<T>,
}

impl<T: Scalar> FmBlockTrace<T> {
    /// `x̄`, the entry conv output shared by all subnets.
    pub fn entry_output(&self) -> &FeatureMap<T> {
        &self.entry_output
    }

    pub fn basis_outputs(&self) -> &[FeatureMap<T>] {
        &self.basis_outputs
    }

    pub fn weights(&self) -> &MixWeightMaps<T> {
        &self.weights
    }
}

impl FmBlock {
    pub fn new(name: &str, spec: FmBlockSpec) -> Result<Self> {
        spec.validate()?;
        let entry = ConvBlock::new(
            &format!("{name}.entry"),
            ConvBlockSpec::new(spec.in_channels, spec.channels, SMALL_KERNEL, true),
        )?;
        let bases = spec
            .kernels
            .iter()
            .enumerate()
            .map(|(i, &k)| {
                BasisFunction::new(
                    &format!("{name}.basis{i}"),
                    spec.channels,
                    spec.out_channels,
                    k,
                    spec.m,
                    spec.output_relu,
                )
            })
            .collect::<Result<_>>()?;
        let mixing = if spec.mix_enabled {
            Some(MixingFunction::new(
                &format!("{name}.mix"),
                spec.channels,
                spec.n,
                spec.m,
            )?)
        } else {
            None
        };
        Ok(Self {
            name: name.to_string(),
            spec,
            entry,
            bases,
            mixing,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn spec(&self) -> &FmBlockSpec {
        &self.spec
    }

    pub fn entry(&self) -> &ConvBlock {
        &self.entry
    }

    pub fn bases(&self) -> &[BasisFunction] {
        &self.bases
    }

    pub fn mixing(&self) -> Option<&MixingFunction> {
        self.mixing.as_ref()
    }

    pub fn param_shapes(&self) -> Vec<ParamShape> {
        let mut shapes = self.entry.param_shapes();
        for b in &self.bases {
            shapes.extend(b.param_shapes());
        }
        if let Some(mix) = &self.mixing {
            shapes.extend(mix.param_shapes());
        }
        shapes
    }

    pub fn max_kernel(&self) -> usize {
        self.spec
            .kernels
            .iter()
            .copied()
            .chain(std::iter::once(SMALL_KERNEL))
            .max()
            .unwrap_or(SMALL_KERNEL)
    }

    /// Full evaluation returning the mixed output together with every
    /// intermediate (`x̄`, each `f_i`, the weight maps).
    pub fn evaluate<T: Scalar>(
        &self,
        params: &ParameterSet<T>,
        input: &FeatureMap<T>,
    ) -> Result<(FeatureMap<T>, FmBlockTrace<T>)> {
        let (entry_output, entry) = self.entry.forward_traced(params, input)?;
        let mut bases = Vec::with_capacity(self.bases.len());
        let mut basis_outputs = Vec::with_capacity(self.bases.len());
        for basis in &self.bases {
            let (out, trace) = basis.forward_traced(params, &entry_output)?;
            basis_outputs.push(out);
            bases.push(trace);
        }
        let (weights, mixing) = match &self.mixing {
            Some(mix) => {
                let (w, t) = mix.forward_traced(params, &entry_output)?;
                (w, Some(t))
            }
            None => (
                MixWeightMaps::uniform(self.spec.n, input.height(), input.width()),
                None,
            ),
        };
        let output = mix_outputs(&basis_outputs, &weights)?;
        let trace = FmBlockTrace {
            entry,
            entry_output,
            bases,
            basis_outputs,
            mixing,
            weights,
        };
        Ok((output, trace))
    }
}

impl<T: Scalar> Layer<T> for FmBlock {
    type Output = (FeatureMap<T>, MixWeightMaps<T>);
    type Trace = FmBlockTrace<T>;

    fn forward_traced(
        &self,
        params: &ParameterSet<T>,
        input: &FeatureMap<T>,
    ) -> Result<(Self::Output, FmBlockTrace<T>)> {
        let (output, trace) = self.evaluate(params, input)?;
        Ok(((output, trace.weights.clone()), trace))
    }

    fn backward(
        &self,
        params: &ParameterSet<T>,
        trace: &FmBlockTrace<T>,
        grad_output: &FeatureMap<T>,
        grads: &mut ParameterSet<T>,
    ) -> Result<FeatureMap<T>> {
        let (c, h, w) = trace.basis_outputs[0].dim();
        if grad_output.dim() != (c, h, w) {
            return Err(Error::input(format!(
                "gradient for FM block `{}` has shape {:?}, expected {:?}",
                self.name,
                grad_output.dim(),
                (c, h, w)
            )));
        }
        let dy = grad_output.values();
        let mut grad_entry = Array3::<T>::zeros(trace.entry_output.dim());
        let mut grad_weights = Array3::<T>::zeros(trace.weights.values().dim());

        for (i, (basis, f)) in self.bases.iter().zip(&trace.basis_outputs).enumerate() {
            let plane = trace.weights.plane(i);
            // d f_i = dy ⊙ w_i ; d w_i = Σ_c dy ⊙ f_i
            let mut df = dy.clone();
            for mut ch in df.outer_iter_mut() {
                Zip::from(&mut ch).and(&plane).for_each(|d, &wt| *d = *d * wt);
            }
            let mut dw = grad_weights.index_axis_mut(Axis(0), i);
            for (dch, fch) in dy.outer_iter().zip(f.values().outer_iter()) {
                Zip::from(&mut dw)
                    .and(&dch)
                    .and(&fch)
                    .for_each(|g, &d, &fv| *g = *g + d * fv);
            }
            let g = basis.backward(params, &trace.bases[i], &FeatureMap::from_array(df), grads)?;
            grad_entry = grad_entry + g.values();
        }
        if let (Some(mix), Some(mix_trace)) = (&self.mixing, &trace.mixing) {
            let g = mix.backward(params, mix_trace, &FeatureMap::from_array(grad_weights), grads)?;
            grad_entry = grad_entry + g.values();
        }
        self.entry
            .backward(params, &trace.entry, &FeatureMap::from_array(grad_entry), grads)
    }

}
