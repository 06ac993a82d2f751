//! Full-reference quality metrics for reconstructed spectral cubes.
//!
//! Values are taken as `[0, 1]` data and multiplied by `scale` (255 by
//! default) before RMSE, PSNR and SSIM are computed. All arithmetic is `f64`.

use std::fmt::Write as _;

use ndarray::{Array2, ArrayView2, Axis};

use crate::data::SpectralImage;
use crate::error::{Error, Result};

pub const DEFAULT_SCALE: f64 = 255.0;
/// Reported PSNR for identical images.
pub const PSNR_CAP_DB: f64 = 100.0;
pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;

fn check_shapes(a: &SpectralImage, b: &SpectralImage) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::input(format!(
            "image shapes differ: {:?} vs {:?}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(())
}

fn mse(a: &SpectralImage, b: &SpectralImage, scale: f64) -> Result<f64> {
    check_shapes(a, b)?;
    let sum: f64 = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(&x, &y)| {
            let d = (x as f64 - y as f64) * scale;
            d * d
        })
        .sum();
    Ok(sum / a.values().len() as f64)
}

pub fn rmse(a: &SpectralImage, b: &SpectralImage, scale: f64) -> Result<f64> {
    Ok(mse(a, b, scale)?.sqrt())
}

/// Peak signal-to-noise ratio in dB; `f64::INFINITY` when the images match.
pub fn psnr(a: &SpectralImage, b: &SpectralImage, scale: f64) -> Result<f64> {
    let m = mse(a, b, scale)?;
    if m == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (scale * scale / m).log10())
}

/// Mean per-pixel spectral angle in degrees. Pixels where either spectrum
/// has zero norm count as angle 0.
pub fn sam(a: &SpectralImage, b: &SpectralImage) -> Result<f64> {
    check_shapes(a, b)?;
    let (bands, h, w) = a.dim();
    let (va, vb) = (a.values(), b.values());
    let mut total = 0.0;
    for y in 0..h {
        for x in 0..w {
            let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
            for k in 0..bands {
                let p = va[[k, y, x]] as f64;
                let q = vb[[k, y, x]] as f64;
                dot += p * q;
                na += p * p;
                nb += q * q;
            }
            let denom = (na * nb).sqrt();
            if denom > 0.0 {
                total += (dot / denom).clamp(-1.0, 1.0).acos().to_degrees();
            }
        }
    }
    Ok(total / (h * w) as f64)
}

/// Normalized 1-D Gaussian taps; the 2-D window is their outer product.
pub fn gaussian_taps(size: usize, sigma: f64) -> Vec<f64> {
    let c = (size as f64 - 1.0) / 2.0;
    let raw: Vec<f64> = (0..size)
        .map(|i| {
            let d = i as f64 - c;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / sum).collect()
}

/// Valid-mode separable filtering: output is `(h - k + 1) × (w - k + 1)`.
fn filter_valid(img: ArrayView2<f64>, taps: &[f64]) -> Array2<f64> {
    let k = taps.len();
    let (h, w) = img.dim();
    let (oh, ow) = (h + 1 - k, w + 1 - k);
    let mut rows = Array2::<f64>::zeros((h, ow));
    for y in 0..h {
        for x in 0..ow {
            rows[[y, x]] = (0..k).map(|t| taps[t] * img[[y, x + t]]).sum();
        }
    }
    let mut out = Array2::<f64>::zeros((oh, ow));
    for y in 0..oh {
        for x in 0..ow {
            out[[y, x]] = (0..k).map(|t| taps[t] * rows[[y + t, x]]).sum();
        }
    }
    out
}

fn ssim_band(a: ArrayView2<f64>, b: ArrayView2<f64>, taps: &[f64], scale: f64) -> f64 {
    let c1 = (0.01 * scale).powi(2);
    let c2 = (0.03 * scale).powi(2);
    let mu_a = filter_valid(a, taps);
    let mu_b = filter_valid(b, taps);
    let aa = filter_valid((&a * &a).view(), taps);
    let bb = filter_valid((&b * &b).view(), taps);
    let ab = filter_valid((&a * &b).view(), taps);
    let mut total = 0.0;
    for ((((&ma, &mb), &saa), &sbb), &sab) in mu_a.iter().zip(&mu_b).zip(&aa).zip(&bb).zip(&ab) {
        let var_a = saa - ma * ma;
        let var_b = sbb - mb * mb;
        let cov = sab - ma * mb;
        total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
            / ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
    }
    total / mu_a.len() as f64
}

/// Single-scale SSIM with an 11×11 Gaussian window (σ 1.5) over valid
/// window positions, averaged over bands.
pub fn ssim(a: &SpectralImage, b: &SpectralImage, scale: f64) -> Result<f64> {
    check_shapes(a, b)?;
    let (bands, h, w) = a.dim();
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::input(format!(
            "ssim needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels, got {h}x{w}"
        )));
    }
    let taps = gaussian_taps(SSIM_WINDOW, SSIM_SIGMA);
    let fa = a.values().mapv(|v| v as f64 * scale);
    let fb = b.values().mapv(|v| v as f64 * scale);
    let total: f64 = fa
        .axis_iter(Axis(0))
        .zip(fb.axis_iter(Axis(0)))
        .map(|(pa, pb)| ssim_band(pa, pb, &taps, scale))
        .sum();
    Ok(total / bands as f64)
}

/// Per-pixel mean squared error over bands, on the `[0, 1]` scale.
pub fn spectral_error_map(pred: &SpectralImage, gt: &SpectralImage) -> Result<Array2<f64>> {
    check_shapes(pred, gt)?;
    let bands = pred.bands() as f64;
    let mut map = Array2::<f64>::zeros((pred.height(), pred.width()));
    for (p, g) in pred.values().outer_iter().zip(gt.values().outer_iter()) {
        ndarray::Zip::from(&mut map).and(&p).and(&g).for_each(|m, &p, &g| {
            let d = p as f64 - g as f64;
            *m += d * d;
        });
    }
    map /= bands;
    Ok(map)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImageMetrics {
    pub id: String,
    pub rmse: f64,
    /// Capped at [`PSNR_CAP_DB`].
    pub psnr: f64,
    pub sam: f64,
    pub ssim: f64,
}

impl ImageMetrics {
    pub fn compute(id: impl Into<String>, pred: &SpectralImage, gt: &SpectralImage, scale: f64) -> Result<Self> {
        Ok(Self {
            id: id.into(),
            rmse: rmse(pred, gt, scale)?,
            psnr: psnr(pred, gt, scale)?.min(PSNR_CAP_DB),
            sam: sam(pred, gt)?,
            ssim: ssim(pred, gt, scale)?,
        })
    }
}

/// Per-image metrics plus their arithmetic means.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub rmse: f64,
    pub psnr: f64,
    pub sam: f64,
    pub ssim: f64,
    pub per_image: Vec<ImageMetrics>,
}

impl MetricsReport {
    pub fn from_images(per_image: Vec<ImageMetrics>) -> Result<Self> {
        if per_image.is_empty() {
            return Err(Error::input("metrics report needs at least one image"));
        }
        let n = per_image.len() as f64;
        let mean = |f: fn(&ImageMetrics) -> f64| per_image.iter().map(f).sum::<f64>() / n;
        Ok(Self {
            rmse: mean(|m| m.rmse),
            psnr: mean(|m| m.psnr),
            sam: mean(|m| m.sam),
            ssim: mean(|m| m.ssim),
            per_image,
        })
    }

    /// Evaluates `(id, prediction, ground truth)` triples.
    pub fn evaluate<'a, I>(items: I, scale: f64) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a SpectralImage, &'a SpectralImage)>,
    {
        let per_image = items
            .into_iter()
            .map(|(id, pred, gt)| ImageMetrics::compute(id, pred, gt, scale))
            .collect::<Result<Vec<_>>>()?;
        Self::from_images(per_image)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("image_id,rmse,psnr,sam,ssim\n");
        for m in &self.per_image {
            let _ = writeln!(out, "{},{},{},{},{}", m.id, m.rmse, m.psnr, m.sam, m.ssim);
        }
        let _ = writeln!(out, "MEAN,{},{},{},{}", self.rmse, self.psnr, self.sam, self.ssim);
        out
    }
}
