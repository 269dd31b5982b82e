//! Time-ordered 3D scalar rasters.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Extent of a 4D field: time steps, then altitude levels, rows and columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims {
    pub t: usize,
    pub z: usize,
    pub y: usize,
    pub x: usize,
}

impl Dims {
    pub const fn new(t: usize, z: usize, y: usize, x: usize) -> Self {
        Self { t, z, y, x }
    }

    pub fn validate(&self) -> Result<()> {
        if self.t == 0 || self.z == 0 || self.y == 0 || self.x == 0 {
            return Err(Error::EmptyDims(self.to_string()));
        }
        self.checked_len()
            .map(|_| ())
            .ok_or_else(|| Error::Contract(format!("dims {self} overflow the address space")))
    }

    /// Voxels in one time step.
    pub fn frame_len(&self) -> usize {
        self.z * self.y * self.x
    }

    pub fn len(&self) -> usize {
        self.t * self.frame_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn checked_len(&self) -> Option<usize> {
        self.t
            .checked_mul(self.z)?
            .checked_mul(self.y)?
            .checked_mul(self.x)
    }

    /// Flat offset of `(t, z, y, x)` with x varying fastest.
    #[inline]
    pub fn index(&self, t: usize, z: usize, y: usize, x: usize) -> usize {
        ((t * self.z + z) * self.y + y) * self.x + x
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}x{}", self.t, self.z, self.y, self.x)
    }
}

impl FromStr for Dims {
    type Err = Error;

    /// Parses `TxZxYxX`, e.g. `4x6x16x16`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Contract(format!("dims {s:?} must match TxZxYxX, e.g. 4x6x16x16"));
        let parts = s
            .split('x')
            .map(|p| p.trim().parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| bad())?;
        let [t, z, y, x] = parts[..] else {
            return Err(bad());
        };
        let dims = Dims::new(t, z, y, x);
        dims.validate()?;
        Ok(dims)
    }
}

/// A 4D scalar field stored t-major, then z, then y, with x fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Field4D {
    dims: Dims,
    values: Vec<f64>,
    pub name: String,
    pub units: String,
    /// Non-finite samples replaced with 0.0 when the field was ingested.
    pub non_finite_replaced: u64,
}

impl Field4D {
    pub fn new(
        dims: Dims,
        values: Vec<f64>,
        name: impl Into<String>,
        units: impl Into<String>,
    ) -> Result<Self> {
        dims.validate()?;
        if values.len() != dims.len() {
            return Err(Error::ValueCount {
                dims: dims.to_string(),
                expected: dims.len(),
                actual: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Contract(
                "field values must be finite; replace them at ingest".into(),
            ));
        }
        Ok(Self {
            dims,
            values,
            name: name.into(),
            units: units.into(),
            non_finite_replaced: 0,
        })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Values of time step `t`, z-major.
    pub fn time_step(&self, t: usize) -> &[f64] {
        let n = self.dims.frame_len();
        &self.values[t * n..(t + 1) * n]
    }

    pub fn get(&self, t: usize, z: usize, y: usize, x: usize) -> f64 {
        self.values[self.dims.index(t, z, y, x)]
    }

    /// Bytes needed to store every value as a 32-bit float.
    pub fn raw_f32_bytes(&self) -> u64 {
        self.dims.len() as u64 * 4
    }
}
