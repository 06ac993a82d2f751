use ndarray::Array3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{synthesize_rgb, Pair, SpectralImage, SpectralResponseMatrix};
use crate::error::{Error, Result};

/// Parameters of the synthetic scene generator.
///
/// A scene is a background spectrum plus a few Gaussian spatial blobs, each
/// carrying its own spectrum; pixels are convex combinations of these
/// spectra. Every spectrum is a constant floor plus one or two Gaussian
/// bumps along the band axis, so values stay in `[0, 1]` and vary smoothly.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticConfig {
    pub bands: usize,
    pub size: usize,
    pub min_blobs: usize,
    pub max_blobs: usize,
    /// Bump width range as a fraction of the band count.
    pub spectral_width: (f64, f64),
    /// Lower bound on bump width, in bands.
    pub min_spectral_sigma: f64,
}

impl SyntheticConfig {
    pub fn new(bands: usize, size: usize) -> Self {
        Self {
            bands,
            size,
            min_blobs: 2,
            max_blobs: 5,
            spectral_width: (0.15, 0.4),
            min_spectral_sigma: 1.0,
        }
    }

    fn sigma_floor(&self) -> f64 {
        (self.spectral_width.0 * self.bands as f64).max(self.min_spectral_sigma)
    }

    /// Upper bound on `|x[b+1] − 2x[b] + x[b−1]|` for any generated spectrum.
    ///
    /// A second difference of a smooth curve equals its second derivative at
    /// some interior point; a unit Gaussian bump has `|g''| ≤ 1/σ²`, and bump
    /// amplitudes sum to less than one.
    pub fn second_difference_bound(&self) -> f64 {
        1.0 / self.sigma_floor().powi(2)
    }

    fn validate(&self) -> Result<()> {
        if self.bands == 0 || self.size == 0 {
            return Err(Error::input("synthetic bands and size must be positive"));
        }
        if self.min_blobs > self.max_blobs {
            return Err(Error::input("min_blobs exceeds max_blobs"));
        }
        let (lo, hi) = self.spectral_width;
        if !(lo > 0.0 && lo <= hi) {
            return Err(Error::input("invalid spectral width range"));
        }
        Ok(())
    }

    fn random_spectrum(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let bands = self.bands;
        let span = (bands.max(2) - 1) as f64;
        let floor = rng.random_range(0.02..0.25);
        let bumps = rng.random_range(1..=2usize);
        let params: Vec<(f64, f64, f64)> = (0..bumps)
            .map(|_| {
                let amp = (1.0 - floor) * rng.random_range(0.3..1.0) / bumps as f64;
                let mu = rng.random_range(-0.2 * span..=1.2 * span);
                let (lo, hi) = self.spectral_width;
                let sigma = (rng.random_range(lo..=hi) * bands as f64).max(self.min_spectral_sigma);
                (amp, mu, sigma)
            })
            .collect();
        (0..bands)
            .map(|b| {
                floor
                    + params
                        .iter()
                        .map(|(a, mu, s)| a * (-(b as f64 - mu).powi(2) / (2.0 * s * s)).exp())
                        .sum::<f64>()
            })
            .collect()
    }

    /// One synthetic cube.
    pub fn generate_hsi(&self, rng: &mut ChaCha8Rng) -> Result<SpectralImage> {
        self.validate()?;
        let size = self.size as f64;
        let background = self.random_spectrum(rng);
        let blob_count = rng.random_range(self.min_blobs..=self.max_blobs);
        let blobs: Vec<(f64, f64, f64, f64, Vec<f64>)> = (0..blob_count)
            .map(|_| {
                let cy = rng.random_range(0.0..size);
                let cx = rng.random_range(0.0..size);
                let radius = rng.random_range(size / 8.0..=size / 3.0).max(0.5);
                let strength = rng.random_range(1.0..4.0);
                (cy, cx, radius, strength, self.random_spectrum(rng))
            })
            .collect();
        let mut cube = Array3::<f32>::zeros((self.bands, self.size, self.size));
        for y in 0..self.size {
            for x in 0..self.size {
                let alphas: Vec<f64> = blobs
                    .iter()
                    .map(|(cy, cx, r, s, _)| {
                        let d2 = (y as f64 - cy).powi(2) + (x as f64 - cx).powi(2);
                        s * (-d2 / (2.0 * r * r)).exp()
                    })
                    .collect();
                let total = 1.0 + alphas.iter().sum::<f64>();
                for b in 0..self.bands {
                    let mut v = background[b];
                    for (a, blob) in alphas.iter().zip(&blobs) {
                        v += a * blob.4[b];
                    }
                    cube[[b, y, x]] = (v / total).clamp(0.0, 1.0) as f32;
                }
            }
        }
        SpectralImage::new(cube)
    }
}

/// `count` synthetic pairs named `pair_0000`, `pair_0001`, ...; RGB images
/// come from the built-in smooth response curves. Pair `i` depends only on
/// `(seed, i)`.
pub fn generate_synthetic_dataset(count: usize, bands: usize, size: usize, seed: u64) -> Result<Vec<Pair>> {
    generate_with(&SyntheticConfig::new(bands, size), count, seed)
}

pub fn generate_with(config: &SyntheticConfig, count: usize, seed: u64) -> Result<Vec<Pair>> {
    let srf = SpectralResponseMatrix::synthetic(config.bands)?;
    generate_with_srf(config, &srf, count, seed)
}

/// Like [`generate_with`] but projects to RGB through a caller-supplied
/// response matrix.
pub fn generate_with_srf(
    config: &SyntheticConfig,
    srf: &SpectralResponseMatrix,
    count: usize,
    seed: u64,
) -> Result<Vec<Pair>> {
    if count == 0 {
        return Err(Error::input("synthetic dataset needs count >= 1"));
    }
    if srf.bands() != config.bands {
        return Err(Error::input(format!(
            "response matrix has {} bands, generator has {}",
            srf.bands(),
            config.bands
        )));
    }
    (0..count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let hsi = config.generate_hsi(&mut rng)?;
            let rgb = synthesize_rgb(&hsi, srf)?;
            Pair::new(format!("pair_{i:04}"), rgb, hsi)
        })
        .collect()
}
