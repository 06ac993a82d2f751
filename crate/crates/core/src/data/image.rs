use ndarray::{s, Array1, Array3};

use crate::blocks::FeatureMap;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `bands × height × width` reflectance cube, band-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralImage {
    values: Array3<f32>,
}

impl SpectralImage {
    pub fn new(values: Array3<f32>) -> Result<Self> {
        let (b, h, w) = values.dim();
        if b == 0 || h == 0 || w == 0 {
            return Err(Error::input(format!(
                "spectral image dimensions must be positive, got {b}x{h}x{w}"
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("spectral image contains non-finite values"));
        }
        Ok(Self {
            values: values.as_standard_layout().into_owned(),
        })
    }

    pub fn from_elem(bands: usize, height: usize, width: usize, value: f32) -> Result<Self> {
        Self::new(Array3::from_elem((bands, height, width), value))
    }

    pub fn bands(&self) -> usize {
        self.values.dim().0
    }

    pub fn height(&self) -> usize {
        self.values.dim().1
    }

    pub fn width(&self) -> usize {
        self.values.dim().2
    }

    pub fn dim(&self) -> (usize, usize, usize) {
        self.values.dim()
    }

    pub fn values(&self) -> &Array3<f32> {
        &self.values
    }

    pub fn into_values(self) -> Array3<f32> {
        self.values
    }

    /// The `B`-vector at pixel `(y, x)`.
    pub fn spectrum(&self, y: usize, x: usize) -> Array1<f32> {
        self.values.slice(s![.., y, x]).to_owned()
    }

    pub fn crop(&self, y: usize, x: usize, size: usize) -> SpectralImage {
        SpectralImage {
            values: self.values.slice(s![.., y..y + size, x..x + size]).to_owned(),
        }
    }

    pub fn to_feature_map<T: Scalar>(&self) -> FeatureMap<T> {
        FeatureMap::from_array(self.values.mapv(|v| T::from_f64_lossy(v as f64)))
    }

    pub fn from_feature_map<T: Scalar>(map: &FeatureMap<T>) -> Result<Self> {
        Self::new(map.values().mapv(|v| v.as_f64() as f32))
    }
}

/// Three-channel image in `[0, 1]`, channel order R, G, B.
#[derive(Clone, Debug, PartialEq)]
pub struct RgbImage {
    values: Array3<f32>,
}

impl RgbImage {
    pub const CHANNELS: usize = 3;

    pub fn new(values: Array3<f32>) -> Result<Self> {
        let (c, h, w) = values.dim();
        if c != Self::CHANNELS {
            return Err(Error::input(format!("RGB image needs 3 channels, got {c}")));
        }
        if h == 0 || w == 0 {
            return Err(Error::input("RGB image must have positive size"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("RGB image contains non-finite values"));
        }
        Ok(Self {
            values: values.as_standard_layout().into_owned(),
        })
    }

    pub fn height(&self) -> usize {
        self.values.dim().1
    }

    pub fn width(&self) -> usize {
        self.values.dim().2
    }

    pub fn values(&self) -> &Array3<f32> {
        &self.values
    }

    pub fn crop(&self, y: usize, x: usize, size: usize) -> RgbImage {
        RgbImage {
            values: self.values.slice(s![.., y..y + size, x..x + size]).to_owned(),
        }
    }

    /// Views the image as a 3-band cube (for storage in the HSI container).
    pub fn to_spectral(&self) -> SpectralImage {
        SpectralImage {
            values: self.values.clone(),
        }
    }

    pub fn from_spectral(image: SpectralImage) -> Result<Self> {
        Self::new(image.into_values())
    }
}
