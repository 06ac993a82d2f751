//! Image types, camera-response RGB synthesis, file formats, dataset splits,
//! patch sampling and synthetic scenes.

mod container;
mod dataset;
mod image;
mod patches;
mod split;
mod srf;
mod synthetic;

pub use container::{decode_hsi, encode_hsi, load_hsi, save_hsi, HSI_MAGIC};
pub use dataset::{hsi_path, load_dataset, load_pair, rgb_path, write_dataset, Dataset, MANIFEST_NAME};
pub use image::{RgbImage, SpectralImage};
pub use patches::{sample_patches, Pair, Patch};
pub use split::{split_dataset, DatasetSplit};
pub use srf::{band_wavelength, synthesize_rgb, SpectralResponseMatrix};
pub use synthetic::{generate_synthetic_dataset, generate_with, generate_with_srf, SyntheticConfig};
