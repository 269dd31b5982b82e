//! Affine 8-bit quantization with one global scale per dataset.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field4D;

/// Maps field values in `[vmin, vmax]` onto codes `0..=255`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantizer {
    pub vmin: f64,
    pub vmax: f64,
}

impl Quantizer {
    pub fn new(vmin: f64, vmax: f64) -> Result<Self> {
        if !(vmin.is_finite() && vmax.is_finite()) || vmin > vmax {
            return Err(Error::Contract(format!(
                "quantizer range [{vmin}, {vmax}] must be finite and ordered"
            )));
        }
        Ok(Self { vmin, vmax })
    }

    /// Global minimum and maximum over every time step.
    pub fn from_field(field: &Field4D) -> Self {
        Self::from_values(field.values()).expect("Field4D is never empty")
    }

    pub fn from_values(values: &[f64]) -> Option<Self> {
        let first = *values.first()?;
        let (vmin, vmax) = values
            .iter()
            .fold((first, first), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        Some(Self { vmin, vmax })
    }

    /// A constant field has no spread; every value maps to code 0.
    pub fn is_degenerate(&self) -> bool {
        self.vmin == self.vmax
    }

    pub fn range(&self) -> f64 {
        self.vmax - self.vmin
    }

    /// Rounds half away from zero and clamps out-of-range input.
    #[inline]
    pub fn quantize(&self, v: f64) -> u8 {
        if self.is_degenerate() {
            return 0;
        }
        let scaled = ((v - self.vmin) * 255.0 / self.range()).round();
        // `as` saturates and maps NaN to 0
        scaled.clamp(0.0, 255.0) as u8
    }

    #[inline]
    pub fn dequantize(&self, code: u8) -> f64 {
        if self.is_degenerate() {
            return self.vmin;
        }
        self.vmin + f64::from(code) * self.range() / 255.0
    }

    /// Largest round-trip error for in-range values: half a quantization step.
    pub fn max_error(&self) -> f64 {
        self.range() / 510.0
    }

    /// Quantizes time step `t` of `field`.
    pub fn quantize_step(&self, field: &Field4D, t: usize) -> QuantizedFrame {
        let d = field.dims();
        QuantizedFrame {
            z: d.z,
            y: d.y,
            x: d.x,
            codes: field
                .time_step(t)
                .iter()
                .map(|&v| self.quantize(v))
                .collect(),
        }
    }
}

/// Codes for one time step, z-major then y then x.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedFrame {
    pub z: usize,
    pub y: usize,
    pub x: usize,
    pub codes: Vec<u8>,
}

impl QuantizedFrame {
    pub fn new(z: usize, y: usize, x: usize, codes: Vec<u8>) -> Result<Self> {
        if z == 0 || y == 0 || x == 0 {
            return Err(Error::EmptyDims(format!("{z}x{y}x{x}")));
        }
        if codes.len() != z * y * x {
            return Err(Error::ValueCount {
                dims: format!("{z}x{y}x{x}"),
                expected: z * y * x,
                actual: codes.len(),
            });
        }
        Ok(Self { z, y, x, codes })
    }

    pub fn zeros(z: usize, y: usize, x: usize) -> Self {
        Self {
            z,
            y,
            x,
            codes: vec![0; z * y * x],
        }
    }

    #[inline]
    pub fn get(&self, zi: usize, yi: usize, xi: usize) -> u8 {
        self.codes[(zi * self.y + yi) * self.x + xi]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Dims;
    use proptest::prelude::*;

    fn unit() -> Quantizer {
        Quantizer::new(0.0, 1.0).unwrap()
    }

    #[test]
    fn endpoints_and_clamp() {
        let q = unit();
        assert_eq!(q.quantize(0.0), 0);
        assert_eq!(q.quantize(1.0), 255);
        assert_eq!(q.quantize(1.7), 255);
        assert_eq!(q.quantize(-3.0), 0);
    }

    #[test]
    fn rounds_half_away_from_zero() {
        // 0.5 * 255 = 127.5
        assert_eq!(unit().quantize(0.5), 128);
        // 0.003 * 255 = 0.765
        assert_eq!(unit().quantize(0.003), 1);
    }

    #[test]
    fn dequantize_formula() {
        let q = unit();
        assert_eq!(q.dequantize(0), 0.0);
        assert_eq!(q.dequantize(255), 1.0);
        assert!((q.dequantize(128) - 0.501961).abs() < 1e-6);
    }

    #[test]
    fn range_from_field() {
        let f = Field4D::new(Dims::new(1, 1, 1, 3), vec![0.25, 0.0, 1.0], "", "").unwrap();
        assert_eq!(
            Quantizer::from_field(&f),
            Quantizer {
                vmin: 0.0,
                vmax: 1.0
            }
        );
    }

    #[test]
    fn constant_field_is_degenerate() {
        let f = Field4D::new(Dims::new(2, 1, 1, 2), vec![7.0; 4], "", "").unwrap();
        let q = Quantizer::from_field(&f);
        assert_eq!((q.vmin, q.vmax), (7.0, 7.0));
        assert!(q.is_degenerate());
        assert_eq!(q.quantize(7.0), 0);
        assert_eq!(q.quantize(100.0), 0);
        assert_eq!(q.dequantize(200), 7.0);
    }

    #[test]
    fn rejects_inverted_range() {
        assert!(Quantizer::new(1.0, 0.0).is_err());
        assert!(Quantizer::new(0.0, f64::INFINITY).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_error_bounded(
            lo in -1e6f64..1e6,
            span in 1e-6f64..1e6,
            frac in 0.0f64..=1.0,
        ) {
            let q = Quantizer::new(lo, lo + span).unwrap();
            let v = q.vmin + frac * q.range();
            let err = (q.dequantize(q.quantize(v)) - v).abs();
            prop_assert!(err <= q.max_error() + 1e-9 * q.range());
        }

        #[test]
        fn monotone(lo in -100.0f64..100.0, span in 1e-3f64..100.0,
                    a in -200.0f64..200.0, b in -200.0f64..200.0) {
            let q = Quantizer::new(lo, lo + span).unwrap();
            let (v1, v2) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(q.quantize(v1) <= q.quantize(v2));
        }
    }
}
