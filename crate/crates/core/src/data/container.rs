//! `HSC1` cube container: 4 magic bytes, little-endian `u32` bands, height and
//! width, then `bands·height·width` little-endian `f32` values, band after
//! band, each band row-major.

use std::path::Path;

use ndarray::Array3;

use crate::data::SpectralImage;
use crate::error::{Error, Result};

pub const HSI_MAGIC: &[u8; 4] = b"HSC1";
const HEADER_LEN: usize = 16;

pub fn encode_hsi(image: &SpectralImage) -> Vec<u8> {
    let (b, h, w) = image.dim();
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * b * h * w);
    out.extend_from_slice(HSI_MAGIC);
    for d in [b, h, w] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for v in image.values().iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_hsi(bytes: &[u8]) -> Result<SpectralImage> {
    if bytes.len() < 4 || &bytes[..4] != HSI_MAGIC {
        return Err(Error::format("magic", "expected `HSC1`"));
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::format("header", "file ends inside the dimension header"));
    }
    let dim = |i: usize, field: &str| -> Result<usize> {
        let off = 4 + 4 * i;
        let v = u32::from_le_bytes(bytes[off..off + 4].try_into().expect("4 bytes")) as usize;
        if v == 0 {
            return Err(Error::format(field, "dimension must be positive"));
        }
        Ok(v)
    };
    let (b, h, w) = (dim(0, "bands")?, dim(1, "height")?, dim(2, "width")?);
    let count = b
        .checked_mul(h)
        .and_then(|n| n.checked_mul(w))
        .and_then(|n| n.checked_mul(4).map(|_| n))
        .ok_or_else(|| Error::format("dimensions", format!("{b}x{h}x{w} overflows")))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() < count * 4 {
        return Err(Error::format(
            "payload",
            format!(
                "truncated: header declares {count} values, found {} bytes",
                payload.len()
            ),
        ));
    }
    if payload.len() > count * 4 {
        return Err(Error::format("payload", "trailing bytes after declared values"));
    }
    let values: Vec<f32> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    let array = Array3::from_shape_vec((b, h, w), values).expect("length checked");
    SpectralImage::new(array).map_err(|e| Error::format("payload", e.to_string()))
}

pub fn save_hsi(image: &SpectralImage, path: &Path) -> Result<()> {
    std::fs::write(path, encode_hsi(image)).map_err(|e| Error::io(path, e))
}

pub fn load_hsi(path: &Path) -> Result<SpectralImage> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_hsi(&bytes)
}
