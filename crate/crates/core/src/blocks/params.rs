use std::collections::BTreeMap;

use ndarray::{ArrayD, IxDyn, Zip};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Expected name and shape of one learnable array.
pub type ParamShape = (String, Vec<usize>);

/// Learnable arrays keyed by hierarchical dotted names (`fm1.basis0.conv1.weight`).
///
/// Iteration order is the lexical order of names, which keeps checkpoints and
/// optimizer sweeps stable across runs.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ParameterSet<T> {
    arrays: BTreeMap<String, ArrayD<T>>,
}

impl<T: Scalar> ParameterSet<T> {
    pub fn new() -> Self {
        Self {
            arrays: BTreeMap::new(),
        }
    }

    /// Adds a named array; names must be unique.
    pub fn insert(&mut self, name: impl Into<String>, array: ArrayD<T>) -> Result<()> {
        let name = name.into();
        if self.arrays.contains_key(&name) {
            return Err(Error::config(format!("duplicate parameter name `{name}`")));
        }
        let array = if array.is_standard_layout() {
            array
        } else {
            array.as_standard_layout().into_owned()
        };
        self.arrays.insert(name, array);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&ArrayD<T>> {
        self.arrays
            .get(name)
            .ok_or_else(|| Error::config(format!("missing parameter `{name}`")))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut ArrayD<T>> {
        self.arrays
            .get_mut(name)
            .ok_or_else(|| Error::config(format!("missing parameter `{name}`")))
    }

    /// Looks up `name` and checks its shape.
    pub fn get_shaped(&self, name: &str, shape: &[usize]) -> Result<&ArrayD<T>> {
        let array = self.get(name)?;
        if array.shape() != shape {
            return Err(Error::config(format!(
                "parameter `{name}` has shape {:?}, expected {:?}",
                array.shape(),
                shape
            )));
        }
        Ok(array)
    }

    pub fn remove(&mut self, name: &str) -> Option<ArrayD<T>> {
        self.arrays.remove(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.arrays.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.arrays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrays.is_empty()
    }

    /// Total number of scalar entries across all arrays.
    pub fn element_count(&self) -> usize {
        self.arrays.values().map(|a| a.len()).sum()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.arrays.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &ArrayD<T>)> {
        self.arrays.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut ArrayD<T>)> {
        self.arrays.iter_mut().map(|(k, v)| (k.as_str(), v))
    }

    /// Same names and shapes, all entries zero.
    pub fn zeros_like(&self) -> Self {
        Self {
            arrays: self
                .arrays
                .iter()
                .map(|(k, v)| (k.clone(), ArrayD::zeros(v.raw_dim())))
                .collect(),
        }
    }

    pub fn cast<U: Scalar>(&self) -> ParameterSet<U> {
        ParameterSet {
            arrays: self
                .arrays
                .iter()
                .map(|(k, v)| (k.clone(), v.mapv(|x| U::from_f64_lossy(x.as_f64()))))
                .collect(),
        }
    }

    /// Elementwise `self += other`; both sets must hold the same names and shapes.
    pub fn add_assign(&mut self, other: &ParameterSet<T>) -> Result<()> {
        if self.arrays.len() != other.arrays.len() {
            return Err(Error::config(format!(
                "cannot add parameter sets with {} and {} arrays",
                self.arrays.len(),
                other.arrays.len()
            )));
        }
        for (name, dst) in self.arrays.iter_mut() {
            let src = other
                .arrays
                .get(name)
                .ok_or_else(|| Error::config(format!("missing parameter `{name}`")))?;
            if src.shape() != dst.shape() {
                return Err(Error::config(format!("shape mismatch for `{name}`")));
            }
            Zip::from(dst).and(src).for_each(|d, &s| *d = *d + s);
        }
        Ok(())
    }

    pub fn scale(&mut self, factor: T) {
        for array in self.arrays.values_mut() {
            array.mapv_inplace(|v| v * factor);
        }
    }

    pub fn fill(&mut self, value: T) {
        for array in self.arrays.values_mut() {
            array.fill(value);
        }
    }

    /// Checks that the set holds exactly the expected names and shapes.
    pub fn validate_against(&self, expected: &[ParamShape]) -> Result<()> {
        for (name, shape) in expected {
            self.get_shaped(name, shape)?;
        }
        if self.arrays.len() != expected.len() {
            let extra: Vec<&str> = self
                .names()
                .filter(|n| !expected.iter().any(|(e, _)| e == n))
                .collect();
            return Err(Error::config(format!(
                "unexpected parameters: {}",
                extra.join(", ")
            )));
        }
        Ok(())
    }

    /// Largest absolute entry across all arrays.
    pub fn max_abs(&self) -> f64 {
        self.arrays
            .values()
            .flat_map(|a| a.iter())
            .fold(0.0, |m, v| m.max(v.as_f64().abs()))
    }
}

fn name_hash(name: &str) -> u64 {
    // FNV-1a
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Deterministic initial value for one named array.
///
/// Arrays of rank ≥ 2 are kernels shaped `[out, in, k, k]` and get zero-mean
/// normal entries with variance `2 / (in·k·k)`; rank-1 arrays are biases and
/// start at zero. The stream depends only on `(seed, name)`, so adding or
/// removing other arrays never changes this one.
pub fn init_array<T: Scalar>(seed: u64, name: &str, shape: &[usize]) -> ArrayD<T> {
    if shape.len() < 2 {
        return ArrayD::zeros(IxDyn(shape));
    }
    let fan_in: usize = shape[1..].iter().product();
    let std = (2.0 / fan_in.max(1) as f64).sqrt();
    let normal = Normal::new(0.0, std).expect("standard deviation is positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ name_hash(name));
    let len: usize = shape.iter().product();
    let values: Vec<T> = (0..len)
        .map(|_| T::from_f64_lossy(normal.sample(&mut rng)))
        .collect();
    ArrayD::from_shape_vec(IxDyn(shape), values).expect("length matches shape")
}

/// Builds a full parameter set for the given layout.
pub fn init_parameters<T: Scalar>(seed: u64, shapes: &[ParamShape]) -> Result<ParameterSet<T>> {
    let mut params = ParameterSet::new();
    for (name, shape) in shapes {
        params.insert(name.clone(), init_array(seed, name, shape))?;
    }
    Ok(params)
}
