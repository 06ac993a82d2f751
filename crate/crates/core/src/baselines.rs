//! Reference predictors the network is compared against.

use crate::data::{RgbImage, SpectralImage};
use crate::error::Result;
use crate::network::{spectral_upsample, NetworkConfig, DEFAULT_CHANNEL_ORDER};

/// Band-wise linear interpolation of the RGB channels, with no learned
/// correction. Identical to the network's input upsampling.
pub fn bi_baseline(rgb: &RgbImage, bands: usize) -> Result<SpectralImage> {
    spectral_upsample(rgb, bands, DEFAULT_CHANNEL_ORDER)
}

/// Default architecture with every FM block reduced to a single 3×3 basis
/// subnet, i.e. a plain residual conv stack of the same depth and width.
pub fn dcnn_variant_config() -> NetworkConfig {
    NetworkConfig {
        n: 1,
        kernels: vec![3],
        mix_enabled: false,
        ..NetworkConfig::default()
    }
}
