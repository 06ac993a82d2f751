//! Qualitative artifacts: mixing-weight images, error maps and spectrum traces.
//!
//! Rendered maps are binary PGM (P5, maxval 255). A map is min-max
//! normalized to `[0, 1]` before quantization; a constant map renders as 0.5.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ndarray::{Array2, Array3, ArrayView2};

use crate::data::{save_hsi, RgbImage, SpectralImage};
use crate::error::{Error, Result};
use crate::metrics::spectral_error_map;
use crate::network::Network;
use crate::scalar::Scalar;

/// One normalized mixing-weight plane.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVisualization {
    /// Block name, e.g. `fm1` or `fuse`.
    pub block: String,
    /// 1-based basis index.
    pub basis: usize,
    pub map: Array2<f64>,
}

impl WeightVisualization {
    pub fn file_name(&self) -> String {
        format!("weights_{}_{}.pgm", self.block, self.basis)
    }
}

/// Min-max normalization to `[0, 1]`; constant maps become all 0.5.
pub fn normalize_map<T: Scalar>(map: ArrayView2<T>) -> Array2<f64> {
    let (lo, hi) = map.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        let v = v.as_f64();
        (lo.min(v), hi.max(v))
    });
    if !(hi > lo) {
        return Array2::from_elem(map.dim(), 0.5);
    }
    map.mapv(|v| (v.as_f64() - lo) / (hi - lo))
}

/// Quantizes a `[0, 1]` map to 8 bits by rounding and wraps it in a P5 header.
pub fn encode_pgm(map: ArrayView2<f64>) -> Vec<u8> {
    let (h, w) = map.dim();
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.extend(map.iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    out
}

pub fn write_pgm(map: ArrayView2<f64>, path: &Path) -> Result<()> {
    std::fs::write(path, encode_pgm(map)).map_err(|e| Error::io(path, e))
}

/// Runs the network on `rgb` and normalizes every weight plane of every block.
pub fn weight_visualizations<T: Scalar>(net: &Network<T>, rgb: &RgbImage) -> Result<Vec<WeightVisualization>> {
    let (_, weights) = net.forward(rgb)?;
    let mut out = Vec::new();
    for (block, maps) in net.block_names().into_iter().zip(&weights) {
        for i in 0..maps.n() {
            out.push(WeightVisualization {
                block: block.clone(),
                basis: i + 1,
                map: normalize_map(maps.plane(i)),
            });
        }
    }
    Ok(out)
}

/// Writes `weights_<block>_<basis>.pgm` for every block and basis function.
/// Returns the written paths in block execution order.
pub fn export_weight_maps<T: Scalar>(net: &Network<T>, rgb: &RgbImage, out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    weight_visualizations(net, rgb)?
        .into_iter()
        .map(|v| {
            let path = out_dir.join(v.file_name());
            write_pgm(v.map.view(), &path)?;
            Ok(path)
        })
        .collect()
}

/// Path of the raw float error map written next to a rendered one.
pub fn raw_error_map_path(pgm_path: &Path) -> PathBuf {
    pgm_path.with_extension("hsc")
}

/// Renders the per-pixel spectral MSE to `out_path` and stores the raw map as
/// a single-band cube at [`raw_error_map_path`]. Returns the raw map.
pub fn export_error_map(pred: &SpectralImage, gt: &SpectralImage, out_path: &Path) -> Result<Array2<f64>> {
    let map = spectral_error_map(pred, gt)?;
    write_pgm(normalize_map(map.view()).view(), out_path)?;
    let (h, w) = map.dim();
    let raw = Array3::from_shape_fn((1, h, w), |(_, y, x)| map[[y, x]] as f32);
    save_hsi(&SpectralImage::new(raw)?, &raw_error_map_path(out_path))?;
    Ok(map)
}

/// CSV of the spectra at `pixels` (`(y, x)` pairs): a `band` column, then one
/// column per pixel named `y<y>_x<x>`.
pub fn extract_spectra(image: &SpectralImage, pixels: &[(usize, usize)]) -> Result<String> {
    let (bands, h, w) = image.dim();
    for &(y, x) in pixels {
        if y >= h || x >= w {
            return Err(Error::input(format!("pixel ({y}, {x}) outside {h}x{w} image")));
        }
    }
    let mut out = String::from("band");
    for &(y, x) in pixels {
        let _ = write!(out, ",y{y}_x{x}");
    }
    out.push('\n');
    let v = image.values();
    for b in 0..bands {
        let _ = write!(out, "{b}");
        for &(y, x) in pixels {
            let _ = write!(out, ",{}", v[[b, y, x]]);
        }
        out.push('\n');
    }
    Ok(out)
}
