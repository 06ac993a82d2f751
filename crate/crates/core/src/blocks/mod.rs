//! Convolutional building blocks: conv blocks, basis and mixing subnets, and
//! the function-mixture (FM) block that combines them pixel by pixel.
//!
//! Every stage implements [`Layer`], which pairs a traced forward pass with a
//! backward pass that accumulates parameter gradients.

mod conv;
mod feature;
mod fm_block;
mod layer;
mod params;

pub use conv::{ConvBlock, ConvBlockSpec, ConvTrace};
pub use feature::{FeatureMap, MixWeightMaps};
pub use fm_block::{
    mix_outputs, softmax_channels, BasisFunction, FmBlock, FmBlockSpec, FmBlockTrace,
    MixingFunction, MixingTrace, SMALL_KERNEL,
};
pub use layer::{Layer, Tape};
pub use params::{init_array, init_parameters, ParamShape, ParameterSet};
