//! Uniform quantization and the rate/distortion cost model.

use alloc::vec::Vec;

use crate::volume::{Dims, Volume};
use crate::wavelet::CoeffBlock;

/// Bits charged per nonzero coefficient (and per flow parameter).
pub const DEFAULT_ALPHA0: f64 = 7.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QuantError {
    #[error("quantization step must be positive and finite, got {0}")]
    BadDelta(f64),
    #[error("bit-cost constant must be positive and finite, got {0}")]
    BadAlpha(f64),
    #[error("volume dimensions differ: {0:?} vs {1:?}")]
    DimMismatch([usize; 3], [usize; 3]),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuantSpec {
    delta: f64,
    alpha0: f64,
}

impl QuantSpec {
    pub fn new(delta: f64) -> Result<Self, QuantError> {
        Self::with_alpha0(delta, DEFAULT_ALPHA0)
    }

    pub fn with_alpha0(delta: f64, alpha0: f64) -> Result<Self, QuantError> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(QuantError::BadDelta(delta));
        }
        if !(alpha0.is_finite() && alpha0 > 0.0) {
            return Err(QuantError::BadAlpha(alpha0));
        }
        Ok(QuantSpec { delta, alpha0 })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }

    pub fn lambda(&self) -> f64 {
        lambda(self.delta, self.alpha0)
    }
}

/// Lagrange multiplier `3Δ² / (4α₀)`.
pub fn lambda(delta: f64, alpha0: f64) -> f64 {
    3.0 * delta * delta / (4.0 * alpha0)
}

pub fn lambda_of(q: &QuantSpec) -> f64 {
    q.lambda()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuantizedBlock {
    pub dims: Dims,
    pub levels: [u8; 3],
    pub values: Vec<i32>,
}

impl QuantizedBlock {
    pub fn nonzeros(&self) -> usize {
        self.values.iter().filter(|&&q| q != 0).count()
    }
}

/// Round-half-away-from-zero quantization of a single coefficient.
#[inline]
pub fn quantize_value(c: f64, delta: f64) -> i32 {
    libm::round(c / delta) as i32
}

pub fn quantize(c: &CoeffBlock, q: &QuantSpec) -> QuantizedBlock {
    QuantizedBlock {
        dims: c.dims,
        levels: c.levels,
        values: c
            .values
            .iter()
            .map(|&v| quantize_value(v, q.delta))
            .collect(),
    }
}

pub fn dequantize(qb: &QuantizedBlock, delta: f64) -> CoeffBlock {
    CoeffBlock {
        dims: qb.dims,
        levels: qb.levels,
        values: qb.values.iter().map(|&v| v as f64 * delta).collect(),
    }
}

/// `R = α₀ (M + P)`.
pub fn bit_cost(nonzero_count: usize, flow_param_count: usize, q: &QuantSpec) -> f64 {
    q.alpha0 * (nonzero_count + flow_param_count) as f64
}

/// Sum of squared differences.
pub fn distortion(orig: &Volume<f64>, recon: &Volume<f64>) -> Result<f64, QuantError> {
    if orig.dims() != recon.dims() {
        return Err(QuantError::DimMismatch(
            orig.dims().as_array(),
            recon.dims().as_array(),
        ));
    }
    Ok(orig
        .data()
        .iter()
        .zip(recon.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_away_rounding() {
        assert_eq!(quantize_value(0.4, 1.0), 0);
        assert_eq!(quantize_value(7.5, 2.0), 4);
        assert_eq!(quantize_value(-0.5, 1.0), -1);
        assert_eq!(quantize_value(0.5, 1.0), 1);
        let c = CoeffBlock {
            dims: Dims::new(1, 1, 1),
            levels: [0, 0, 0],
            values: alloc::vec![7.5],
        };
        let q = QuantSpec::new(2.0).unwrap();
        assert_eq!(dequantize(&quantize(&c, &q), 2.0).values, [8.0]);
    }

    #[test]
    fn bit_costs() {
        let q = QuantSpec::new(1.0).unwrap();
        assert_eq!(bit_cost(0, 0, &q), 0.0);
        assert_eq!(bit_cost(3, 0, &q), 21.0);
        assert_eq!(bit_cost(5, 2, &q), 49.0);
    }

    #[test]
    fn lambda_values() {
        assert_eq!(lambda(0.0, 7.0), 0.0);
        assert!((lambda_of(&QuantSpec::new(2.0).unwrap()) - 3.0 / 7.0).abs() < 1e-12);
        assert!((lambda_of(&QuantSpec::new(14.0).unwrap()) - 21.0).abs() < 1e-12);
    }

    #[test]
    fn distortion_examples() {
        let d = Dims::new(1, 1, 2);
        let a = Volume::from_vec(d, alloc::vec![1.0, 2.0]).unwrap();
        let b = Volume::from_vec(d, alloc::vec![0.0, 2.0]).unwrap();
        assert_eq!(distortion(&a, &a).unwrap(), 0.0);
        assert_eq!(distortion(&a, &b).unwrap(), 1.0);
        let c = Volume::filled(Dims::new(2, 1, 1), 0.0);
        assert!(matches!(
            distortion(&a, &c),
            Err(QuantError::DimMismatch(..))
        ));
    }

    #[test]
    fn spec_validation() {
        assert!(QuantSpec::new(0.0).is_err());
        assert!(QuantSpec::new(f64::NAN).is_err());
        assert!(QuantSpec::with_alpha0(1.0, -1.0).is_err());
        assert_eq!(QuantSpec::new(3.0).unwrap().alpha0(), 7.0);
    }
}
