//! RGB-to-hyperspectral reconstruction with pixel-aware function-mixture
//! networks.
//!
//! A network maps a 3-channel RGB image to a `B`-band reflectance cube. It
//! first interpolates the RGB values along the wavelength axis, then predicts
//! a residual correction with a stack of function-mixture (FM) blocks. Each
//! FM block runs several convolutional subnets with different kernel sizes
//! in parallel and blends them with per-pixel softmax weights, so every pixel
//! effectively chooses its own receptive field.
//!
//! Modules:
//! - [`blocks`]: conv blocks, basis/mixing subnets, FM blocks, backward passes
//! - [`network`]: stacking, global residual, feature fusion, spectral upsampling
//! - [`data`]: image types, camera response projection, containers, splits, patches, synthetic scenes
//! - [`training`]: L1 objective, learning-rate schedule, Adam, training loop, checkpoints
//! - [`metrics`]: RMSE, PSNR, SAM, SSIM and per-pixel spectral error
//! - [`analysis`]: weight-map, error-map and spectrum exports
//! - [`baselines`]: bilinear spectral interpolation and the single-basis variant
//! - [`cli`]: the `fmnet` command-line front end

pub mod analysis;
pub mod baselines;
pub mod blocks;
pub mod cli;
pub mod data;
mod error;
pub mod metrics;
pub mod network;
mod scalar;
pub mod settings;
pub mod training;

pub use error::{Error, Result};
pub use scalar::Scalar;
