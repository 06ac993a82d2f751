//! Stacked FM blocks with a global residual over the spectrally upsampled
//! input, plus optional intermediate-feature fusion.

mod upsample;

pub use upsample::{spectral_upsample, validate_channel_order, DEFAULT_CHANNEL_ORDER};

use crate::blocks::{
    init_array, ConvBlock, ConvBlockSpec, ConvTrace, FeatureMap, FmBlock, FmBlockSpec, FmBlockTrace,
    Layer, MixWeightMaps, ParamShape, ParameterSet, Tape, SMALL_KERNEL,
};
use crate::data::{RgbImage, SpectralImage};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Kernel sizes for the stock three-basis block.
pub const DEFAULT_KERNELS: [usize; 3] = [3, 7, 11];

/// Default kernel list for `n` basis functions: a prefix of 3/7/11 for
/// `n ≤ 3`, otherwise consecutive odd sizes starting at 3.
pub fn default_kernels(n: usize) -> Vec<usize> {
    if n <= DEFAULT_KERNELS.len() {
        DEFAULT_KERNELS[..n].to_vec()
    } else {
        (0..n).map(|i| 3 + 2 * i).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetworkConfig {
    /// Stacked FM blocks, not counting the fusion block.
    pub p: usize,
    pub n: usize,
    pub m: usize,
    /// Working channel count `c`.
    pub channels: usize,
    pub kernels: Vec<usize>,
    /// Output spectral bands `B`.
    pub bands: usize,
    pub fusion_enabled: bool,
    pub mix_enabled: bool,
    pub channel_order: [usize; 3],
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            p: 3,
            n: 3,
            m: 2,
            channels: 64,
            kernels: DEFAULT_KERNELS.to_vec(),
            bands: 31,
            fusion_enabled: true,
            mix_enabled: true,
            channel_order: DEFAULT_CHANNEL_ORDER,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::config("p must be at least 1"));
        }
        if self.bands == 0 {
            return Err(Error::config("bands must be at least 1"));
        }
        if self.channels == 0 {
            return Err(Error::config("channels must be at least 1"));
        }
        if self.n == 0 || self.m == 0 {
            return Err(Error::config("n and m must be at least 1"));
        }
        if self.kernels.len() != self.n {
            return Err(Error::config(format!(
                "{} kernels listed for n = {}",
                self.kernels.len(),
                self.n
            )));
        }
        if let Some(k) = self.kernels.iter().find(|&&k| k % 2 == 0) {
            return Err(Error::config(format!("kernel size must be odd, got {k}")));
        }
        if self.fusion_enabled && self.p < 2 {
            return Err(Error::config(
                "feature fusion needs at least two stacked blocks (p >= 2)",
            ));
        }
        validate_channel_order(self.channel_order)
    }

    /// Number of FM blocks including the fusion block.
    pub fn block_count(&self) -> usize {
        self.p + usize::from(self.fusion_enabled)
    }

    pub fn max_kernel(&self) -> usize {
        self.kernels.iter().copied().chain([SMALL_KERNEL]).max().unwrap_or(SMALL_KERNEL)
    }
}

/// Structure of a network: which layers exist and how their parameters are
/// named. Input is the upsampled `B`-band cube.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkLayout {
    config: NetworkConfig,
    entry: ConvBlock,
    blocks: Vec<FmBlock>,
    fusion: Option<FmBlock>,
}

#[derive(Clone, Debug)]
pub struct NetworkTrace<T> {
    entry: ConvTrace<T>,
    blocks: Vec<FmBlockTrace<T>>,
    fusion: Option<FmBlockTrace<T>>,
}

impl<T: Scalar> NetworkTrace<T> {
    pub fn blocks(&self) -> &[FmBlockTrace<T>] {
        &self.blocks
    }

    pub fn fusion(&self) -> Option<&FmBlockTrace<T>> {
        self.fusion.as_ref()
    }
}

impl NetworkLayout {
    pub fn new(config: NetworkConfig) -> Result<Self> {
        config.validate()?;
        let c = config.channels;
        let entry = ConvBlock::new("g0", ConvBlockSpec::new(config.bands, c, SMALL_KERNEL, true))?;
        let block_spec = |in_channels, out_channels, output_relu| FmBlockSpec {
            in_channels,
            channels: c,
            n: config.n,
            m: config.m,
            kernels: config.kernels.clone(),
            out_channels,
            output_relu,
            mix_enabled: config.mix_enabled,
        };
        let blocks = (1..=config.p)
            .map(|u| {
                let spec = if u == config.p {
                    block_spec(c, config.bands, false)
                } else {
                    block_spec(c, c, true)
                };
                FmBlock::new(&format!("fm{u}"), spec)
            })
            .collect::<Result<Vec<_>>>()?;
        let fusion = if config.fusion_enabled {
            Some(FmBlock::new("fuse", block_spec((config.p - 1) * c, c, true))?)
        } else {
            None
        };
        Ok(Self {
            config,
            entry,
            blocks,
            fusion,
        })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn entry(&self) -> &ConvBlock {
        &self.entry
    }

    /// The stacked blocks `fm1 … fm{p}`.
    pub fn blocks(&self) -> &[FmBlock] {
        &self.blocks
    }

    pub fn fusion(&self) -> Option<&FmBlock> {
        self.fusion.as_ref()
    }

    pub fn output_block(&self) -> &FmBlock {
        self.blocks.last().expect("p >= 1")
    }

    /// FM blocks in execution order: `fm1 … fm{p-1}`, `fuse` (if present), `fm{p}`.
    pub fn execution_order(&self) -> Vec<&FmBlock> {
        let p = self.blocks.len();
        let mut order: Vec<&FmBlock> = self.blocks[..p - 1].iter().collect();
        order.extend(self.fusion.as_ref());
        order.push(&self.blocks[p - 1]);
        order
    }

    pub fn param_shapes(&self) -> Vec<ParamShape> {
        let mut shapes = self.entry.param_shapes();
        for b in &self.blocks {
            shapes.extend(b.param_shapes());
        }
        if let Some(f) = &self.fusion {
            shapes.extend(f.param_shapes());
        }
        shapes
    }

    fn check_input<T: Scalar>(&self, input: &FeatureMap<T>) -> Result<()> {
        if input.channels() != self.config.bands {
            return Err(Error::input(format!(
                "network expects a {}-band input, got {}",
                self.config.bands,
                input.channels()
            )));
        }
        let k = self.config.max_kernel();
        if input.height() < k || input.width() < k {
            return Err(Error::input(format!(
                "input {}x{} is smaller than the largest kernel ({k})",
                input.height(),
                input.width()
            )));
        }
        Ok(())
    }
}

impl<T: Scalar> Layer<T> for NetworkLayout {
    type Output = (FeatureMap<T>, Vec<MixWeightMaps<T>>);
    type Trace = NetworkTrace<T>;

    fn forward_traced(
        &self,
        params: &ParameterSet<T>,
        input: &FeatureMap<T>,
    ) -> Result<(Self::Output, NetworkTrace<T>)> {
        self.check_input(input)?;
        let p = self.blocks.len();
        let (mut h, entry) = self.entry.forward_traced(params, input)?;
        let mut traces = Vec::with_capacity(p);
        let mut weights = Vec::with_capacity(self.config.block_count());
        let mut intermediates = Vec::with_capacity(p - 1);
        for block in &self.blocks[..p - 1] {
            let (out, trace) = block.evaluate(params, &h)?;
            weights.push(trace.weights().clone());
            traces.push(trace);
            intermediates.push(out.clone());
            h = out;
        }
        let fusion = match &self.fusion {
            Some(fuse) => {
                // deepest features first
                let parts: Vec<&FeatureMap<T>> = intermediates.iter().rev().collect();
                let cat = FeatureMap::concat_channels(&parts)?;
                let (out, trace) = fuse.evaluate(params, &cat)?;
                weights.push(trace.weights().clone());
                h = out;
                Some(trace)
            }
            None => None,
        };
        let (residual, trace) = self.blocks[p - 1].evaluate(params, &h)?;
        weights.push(trace.weights().clone());
        traces.push(trace);

        let mut y = residual.into_values();
        y += input.values();
        let trace = NetworkTrace {
            entry,
            blocks: traces,
            fusion,
        };
        Ok(((FeatureMap::from_array(y), weights), trace))
    }

    fn backward(
        &self,
        params: &ParameterSet<T>,
        trace: &NetworkTrace<T>,
        grad_output: &FeatureMap<T>,
        grads: &mut ParameterSet<T>,
    ) -> Result<FeatureMap<T>> {
        let p = self.blocks.len();
        let c = self.config.channels;
        let g = self.blocks[p - 1].backward(params, &trace.blocks[p - 1], grad_output, grads)?;

        let carry = match (&self.fusion, &trace.fusion) {
            (Some(fuse), Some(fuse_trace)) => {
                let gcat = fuse.backward(params, fuse_trace, &g, grads)?;
                let mut carry: Option<FeatureMap<T>> = None;
                for u in (0..p - 1).rev() {
                    let offset = (p - 2 - u) * c;
                    let mut gu = gcat
                        .values()
                        .slice(ndarray::s![offset..offset + c, .., ..])
                        .to_owned();
                    if let Some(next) = carry {
                        gu += next.values();
                    }
                    carry = Some(self.blocks[u].backward(
                        params,
                        &trace.blocks[u],
                        &FeatureMap::from_array(gu),
                        grads,
                    )?);
                }
                carry.expect("fusion requires p >= 2")
            }
            _ => {
                let mut carry = g;
                for u in (0..p - 1).rev() {
                    carry = self.blocks[u].backward(params, &trace.blocks[u], &carry, grads)?;
                }
                carry
            }
        };
        let mut grad_input = self.entry.backward(params, &trace.entry, &carry, grads)?;
        *grad_input.values_mut() += grad_output.values();
        Ok(grad_input)
    }
}

/// A network layout together with its parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Network<T> {
    layout: NetworkLayout,
    params: ParameterSet<T>,
    seed: u64,
}

impl<T: Scalar> Network<T> {
    /// Builds a network with deterministic initial parameters.
    pub fn build(config: NetworkConfig, seed: u64) -> Result<Self> {
        let layout = NetworkLayout::new(config)?;
        let mut params = ParameterSet::new();
        for (name, shape) in layout.param_shapes() {
            let array = init_array(seed, &name, &shape);
            params.insert(name, array)?;
        }
        Ok(Self {
            layout,
            params,
            seed,
        })
    }

    /// Wraps existing parameters after checking them against the layout.
    pub fn from_parts(config: NetworkConfig, seed: u64, params: ParameterSet<T>) -> Result<Self> {
        let layout = NetworkLayout::new(config)?;
        params.validate_against(&layout.param_shapes())?;
        Ok(Self {
            layout,
            params,
            seed,
        })
    }

    pub fn config(&self) -> &NetworkConfig {
        self.layout.config()
    }

    pub fn layout(&self) -> &NetworkLayout {
        &self.layout
    }

    pub fn params(&self) -> &ParameterSet<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParameterSet<T> {
        &mut self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn param_count(&self) -> usize {
        self.params.element_count()
    }

    /// Names of the FM blocks in execution order.
    pub fn block_names(&self) -> Vec<String> {
        self.layout
            .execution_order()
            .iter()
            .map(|b| b.name().to_string())
            .collect()
    }

    /// Spectral upsampling of the RGB input to the network's band count.
    pub fn upsample(&self, rgb: &RgbImage) -> Result<FeatureMap<T>> {
        let cfg = self.config();
        Ok(spectral_upsample(rgb, cfg.bands, cfg.channel_order)?.to_feature_map())
    }

    /// Prediction for an upsampled cube, plus the weight maps of every FM block
    /// in execution order.
    pub fn forward_features(&self, input: &FeatureMap<T>) -> Result<(FeatureMap<T>, Vec<MixWeightMaps<T>>)> {
        self.layout.forward(&self.params, input)
    }

    pub fn forward(&self, rgb: &RgbImage) -> Result<(SpectralImage, Vec<MixWeightMaps<T>>)> {
        let (y, weights) = self.forward_features(&self.upsample(rgb)?)?;
        Ok((SpectralImage::from_feature_map(&y)?, weights))
    }

    pub fn predict(&self, rgb: &RgbImage) -> Result<SpectralImage> {
        self.forward(rgb).map(|(y, _)| y)
    }

    pub fn tape(&self) -> Tape<'_, T, NetworkLayout> {
        Tape::new(&self.layout, &self.params)
    }

    /// Switches pixel-wise mixing and feature fusion on or off. Parameters of
    /// layers that remain are kept; new layers get the same initial values
    /// `build` would have given them.
    pub fn set_ablation(self, mix_enabled: bool, fusion_enabled: bool) -> Result<Self> {
        let config = NetworkConfig {
            mix_enabled,
            fusion_enabled,
            ..self.layout.config().clone()
        };
        let layout = NetworkLayout::new(config)?;
        let mut old = self.params;
        let mut params = ParameterSet::new();
        for (name, shape) in layout.param_shapes() {
            let array = match old.remove(&name) {
                Some(a) if a.shape() == shape.as_slice() => a,
                _ => init_array(self.seed, &name, &shape),
            };
            params.insert(name, array)?;
        }
        Ok(Self {
            layout,
            params,
            seed: self.seed,
        })
    }

    pub fn cast<U: Scalar>(&self) -> Network<U> {
        Network {
            layout: self.layout.clone(),
            params: self.params.cast(),
            seed: self.seed,
        }
    }
}
