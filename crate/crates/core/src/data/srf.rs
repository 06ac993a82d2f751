use std::path::Path;

use ndarray::{Array2, Array3, Axis};

use crate::data::{RgbImage, SpectralImage};
use crate::error::{Error, Result};

/// Camera spectral sensitivity: `B × 3`, column `j` is the response of
/// channel `j` (R, G, B) to each band.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralResponseMatrix {
    matrix: Array2<f64>,
}

impl SpectralResponseMatrix {
    pub fn new(matrix: Array2<f64>) -> Result<Self> {
        let (b, c) = matrix.dim();
        if c != 3 {
            return Err(Error::input(format!("response matrix needs 3 columns, got {c}")));
        }
        if b == 0 {
            return Err(Error::input("response matrix has no bands"));
        }
        if matrix.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::input("response entries must be finite and non-negative"));
        }
        for (j, col) in matrix.axis_iter(Axis(1)).enumerate() {
            if col.iter().all(|&v| v == 0.0) {
                return Err(Error::input(format!("response column {j} is all zero")));
            }
        }
        Ok(Self { matrix })
    }

    /// Three Gaussian sensitivities (R 610 nm, G 540 nm, B 450 nm) sampled on
    /// `bands` wavelengths evenly spread over 400–700 nm.
    pub fn synthetic(bands: usize) -> Result<Self> {
        if bands == 0 {
            return Err(Error::input("response matrix needs at least one band"));
        }
        let curves = [(610.0, 35.0), (540.0, 35.0), (450.0, 30.0)];
        let matrix = Array2::from_shape_fn((bands, 3), |(b, j)| {
            let lambda = band_wavelength(b, bands);
            let (mu, sigma): (f64, f64) = curves[j];
            (-(lambda - mu).powi(2) / (2.0 * sigma * sigma)).exp()
        });
        Self::new(matrix)
    }

    pub fn bands(&self) -> usize {
        self.matrix.dim().0
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    /// Parses `B` rows of three comma-separated non-negative decimals.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|f| {
                    f.trim().parse::<f64>().map_err(|e| {
                        Error::format(format!("srf row {}", i + 1), format!("`{f}`: {e}"))
                    })
                })
                .collect::<Result<_>>()?;
            if vals.len() != 3 {
                return Err(Error::format(
                    format!("srf row {}", i + 1),
                    format!("expected 3 values, got {}", vals.len()),
                ));
            }
            rows.extend(vals);
        }
        let b = rows.len() / 3;
        let matrix = Array2::from_shape_vec((b, 3), rows).expect("three values per row");
        Self::new(matrix).map_err(|e| Error::format("srf", e.to_string()))
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_str(&text)
    }

    pub fn to_csv_string(&self) -> String {
        self.matrix
            .outer_iter()
            .map(|r| format!("{},{},{}\n", r[0], r[1], r[2]))
            .collect()
    }
}

/// Centre wavelength (nm) of band `b` out of `bands` spanning 400–700 nm.
pub fn band_wavelength(b: usize, bands: usize) -> f64 {
    if bands <= 1 {
        550.0
    } else {
        400.0 + 300.0 * b as f64 / (bands - 1) as f64
    }
}

/// Projects a cube through the camera response. Each channel is divided by
/// its column sum, so a flat spectrum `v` maps to `(v, v, v)`; results are
/// clipped to `[0, 1]`.
pub fn synthesize_rgb(hsi: &SpectralImage, srf: &SpectralResponseMatrix) -> Result<RgbImage> {
    if srf.bands() != hsi.bands() {
        return Err(Error::input(format!(
            "response matrix has {} bands, image has {}",
            srf.bands(),
            hsi.bands()
        )));
    }
    let (b, h, w) = hsi.dim();
    let m = srf.matrix();
    let sums: Vec<f64> = m.axis_iter(Axis(1)).map(|c| c.sum()).collect();
    let mut out = Array3::<f32>::zeros((3, h, w));
    for y in 0..h {
        for x in 0..w {
            for j in 0..3 {
                let mut acc = 0.0f64;
                for band in 0..b {
                    acc += m[[band, j]] * hsi.values()[[band, y, x]] as f64;
                }
                out[[j, y, x]] = (acc / sums[j]).clamp(0.0, 1.0) as f32;
            }
        }
    }
    RgbImage::new(out)
}
