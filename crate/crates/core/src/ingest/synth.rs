//! Deterministic cloud-like test fields built from drifting Gaussian blobs.

use crate::error::Result;
use crate::field::{Dims, Field4D};

/// SplitMix64 (Steele, Lea & Flood). Increment `0x9E3779B97F4A7C15`,
/// finalizer multipliers `0xBF58476D1CE4E5B9` and `0x94D049BB133111EB`.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(Self::GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

/// An axis-aligned Gaussian whose center moves linearly with time.
/// Axes are ordered `[z, y, x]`, in voxel units.
#[derive(Debug, Clone, PartialEq)]
pub struct Blob {
    pub center: [f64; 3],
    pub velocity: [f64; 3],
    pub sigma: [f64; 3],
    pub amplitude: f64,
}

impl Blob {
    pub fn center_at(&self, t: usize) -> [f64; 3] {
        std::array::from_fn(|a| self.center[a] + self.velocity[a] * t as f64)
    }

    /// Voxel closest to the center at time `t`, clamped into the grid.
    pub fn center_voxel(&self, t: usize, dims: Dims) -> (usize, usize, usize) {
        let c = self.center_at(t);
        let snap = |v: f64, n: usize| v.round().clamp(0.0, (n - 1) as f64) as usize;
        (snap(c[0], dims.z), snap(c[1], dims.y), snap(c[2], dims.x))
    }

    fn profile(&self, axis: usize, t: usize, n: usize) -> Vec<f64> {
        let c = self.center_at(t)[axis];
        let s = self.sigma[axis];
        (0..n)
            .map(|i| {
                let d = (i as f64 - c) / s;
                (-0.5 * d * d).exp()
            })
            .collect()
    }
}

const MIN_SIGMA: f64 = 2.0;

/// Blob parameters for a synthetic field; [`SyntheticField::generate`] evaluates them.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticField {
    pub dims: Dims,
    pub blobs: Vec<Blob>,
}

impl SyntheticField {
    pub fn new(seed: u64, dims: Dims, blobs: usize) -> Self {
        let mut rng = SplitMix64::new(seed);
        let extent = [dims.z, dims.y, dims.x];
        let max_speed = [0.25, 0.5, 0.5];
        let blobs = (0..blobs.max(1))
            .map(|_| {
                let center =
                    std::array::from_fn(|a| rng.uniform(0.2, 0.8) * (extent[a] - 1) as f64);
                let velocity = std::array::from_fn(|a| rng.uniform(-max_speed[a], max_speed[a]));
                let sigma = std::array::from_fn(|a| {
                    (rng.uniform(0.12, 0.3) * extent[a] as f64).max(MIN_SIGMA)
                });
                let amplitude = rng.uniform(0.5, 1.0);
                Blob {
                    center,
                    velocity,
                    sigma,
                    amplitude,
                }
            })
            .collect();
        Self { dims, blobs }
    }

    /// Sum of blobs clamped to `[0, 1]`, rounded to `f32` precision so the
    /// field survives the raw interchange format unchanged.
    pub fn generate(&self, name: &str) -> Result<Field4D> {
        let d = self.dims;
        d.validate()?;
        let mut values = vec![0.0f64; d.len()];
        for t in 0..d.t {
            let step = &mut values[t * d.frame_len()..(t + 1) * d.frame_len()];
            for blob in &self.blobs {
                let gz = blob.profile(0, t, d.z);
                let gy = blob.profile(1, t, d.y);
                let gx = blob.profile(2, t, d.x);
                for (zi, &wz) in gz.iter().enumerate() {
                    for (yi, &wy) in gy.iter().enumerate() {
                        let w = blob.amplitude * wz * wy;
                        let row = &mut step[(zi * d.y + yi) * d.x..][..d.x];
                        for (v, &wx) in row.iter_mut().zip(&gx) {
                            *v += w * wx;
                        }
                    }
                }
            }
        }
        for v in &mut values {
            *v = f64::from(v.min(1.0) as f32);
        }
        Field4D::new(d, values, name, "1")
    }
}

/// Cloud-fraction-like field in `[0, 1]`, smooth in space and time.
pub fn synthesize_field(seed: u64, dims: Dims, blobs: usize) -> Result<Field4D> {
    SyntheticField::new(seed, dims, blobs).generate("synthetic_cloud_fraction")
}
