use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{RgbImage, SpectralImage};
use crate::error::{Error, Result};

/// An aligned RGB/HSI pair with its identifier.
#[derive(Clone, Debug, PartialEq)]
pub struct Pair {
    pub id: String,
    pub rgb: RgbImage,
    pub hsi: SpectralImage,
}

impl Pair {
    pub fn new(id: impl Into<String>, rgb: RgbImage, hsi: SpectralImage) -> Result<Self> {
        let id = id.into();
        if rgb.height() != hsi.height() || rgb.width() != hsi.width() {
            return Err(Error::input(format!(
                "pair `{id}`: RGB is {}x{} but HSI is {}x{}",
                rgb.height(),
                rgb.width(),
                hsi.height(),
                hsi.width()
            )));
        }
        Ok(Self { id, rgb, hsi })
    }
}

/// Crops taken at identical coordinates from both images of a pair.
#[derive(Clone, Debug, PartialEq)]
pub struct Patch {
    pub pair_index: usize,
    pub y: usize,
    pub x: usize,
    pub rgb: RgbImage,
    pub hsi: SpectralImage,
}

/// Draws `count` square crops. Pairs are visited in shuffled rounds so every
/// pair contributes before any contributes twice; crop corners are uniform.
pub fn sample_patches(pairs: &[Pair], patch_size: usize, count: usize, seed: u64) -> Result<Vec<Patch>> {
    if pairs.is_empty() {
        return Err(Error::input("no pairs to sample patches from"));
    }
    if patch_size == 0 {
        return Err(Error::input("patch size must be positive"));
    }
    if let Some(p) = pairs
        .iter()
        .find(|p| patch_size > p.hsi.height() || patch_size > p.hsi.width())
    {
        return Err(Error::input(format!(
            "patch size {patch_size} exceeds pair `{}` ({}x{})",
            p.id,
            p.hsi.height(),
            p.hsi.width()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = Vec::new();
    let mut patches = Vec::with_capacity(count);
    for k in 0..count {
        if k % pairs.len() == 0 {
            order = (0..pairs.len()).collect();
            order.shuffle(&mut rng);
        }
        let idx = order[k % pairs.len()];
        let pair = &pairs[idx];
        let y = rng.random_range(0..=pair.hsi.height() - patch_size);
        let x = rng.random_range(0..=pair.hsi.width() - patch_size);
        patches.push(Patch {
            pair_index: idx,
            y,
            x,
            rgb: pair.rgb.crop(y, x, patch_size),
            hsi: pair.hsi.crop(y, x, patch_size),
        });
    }
    Ok(patches)
}
