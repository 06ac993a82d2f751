use ndarray::Array3;

use crate::data::{RgbImage, SpectralImage};
use crate::error::{Error, Result};

/// Input channel placed at each wavelength anchor: blue at the first band,
/// green in the middle, red at the last (wavelengths ascending).
pub const DEFAULT_CHANNEL_ORDER: [usize; 3] = [2, 1, 0];

pub fn validate_channel_order(order: [usize; 3]) -> Result<()> {
    let mut seen = [false; 3];
    for &c in &order {
        if c >= 3 || seen[c] {
            return Err(Error::config(format!(
                "channel order {order:?} is not a permutation of 0, 1, 2"
            )));
        }
        seen[c] = true;
    }
    Ok(())
}

/// Linear interpolation along the band axis.
///
/// The three RGB channels, taken in `channel_order`, sit at band positions
/// `0`, `(B−1)/2` and `B−1` (the middle one may be fractional); every other
/// band interpolates between its two neighbouring anchors. A single-band
/// output is the mean of the three channels.
pub fn spectral_upsample(rgb: &RgbImage, bands: usize, channel_order: [usize; 3]) -> Result<SpectralImage> {
    if bands == 0 {
        return Err(Error::input("band count must be at least 1"));
    }
    validate_channel_order(channel_order)?;
    let (h, w) = (rgb.height(), rgb.width());
    let src = rgb.values();
    let mut out = Array3::<f32>::zeros((bands, h, w));
    if bands == 1 {
        for y in 0..h {
            for x in 0..w {
                let s: f64 = (0..3).map(|c| src[[c, y, x]] as f64).sum();
                out[[0, y, x]] = (s / 3.0) as f32;
            }
        }
        return SpectralImage::new(out);
    }

    let last = (bands - 1) as f64;
    let mid = last / 2.0;
    for b in 0..bands {
        let pos = b as f64;
        // (left anchor, right anchor, weight of right anchor)
        let (lo, hi, t) = if pos <= mid {
            (0, 1, if mid > 0.0 { pos / mid } else { 0.0 })
        } else {
            (1, 2, (pos - mid) / (last - mid))
        };
        let (cl, ch) = (channel_order[lo], channel_order[hi]);
        for y in 0..h {
            for x in 0..w {
                let a = src[[cl, y, x]];
                let c = src[[ch, y, x]];
                out[[b, y, x]] = if t == 0.0 {
                    a
                } else if t == 1.0 {
                    c
                } else {
                    ((1.0 - t) * a as f64 + t * c as f64) as f32
                };
            }
        }
    }
    SpectralImage::new(out)
}
