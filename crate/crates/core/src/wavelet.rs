//! Separable multi-level orthonormal Haar transform over 3D blocks.
//!
//! Each level lifts every axis whose current low band still has two or more
//! samples, in the order temporal, vertical, horizontal, and leaves the low
//! half of each transformed axis at the front (Mallat layout). Recursion
//! continues on the low band until every axis is down to one sample.

use alloc::vec::Vec;

use crate::volume::{Dims, Volume};

const SQRT2: f64 = core::f64::consts::SQRT_2;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WaveletError {
    #[error("block dimensions {0:?} are not all powers of two")]
    NotPowerOfTwo([usize; 3]),
    #[error("coefficient count {found} does not match dimensions {dims:?}")]
    DimMismatch { dims: [usize; 3], found: usize },
}

/// Wavelet coefficients of one block.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffBlock {
    pub dims: Dims,
    /// Decomposition depth per axis (t, y, x).
    pub levels: [u8; 3],
    pub values: Vec<f64>,
}

impl CoeffBlock {
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

/// Decomposition depth per axis for a power-of-two block.
pub fn levels_for(dims: Dims) -> [u8; 3] {
    dims.as_array().map(|d| d.trailing_zeros() as u8)
}

pub fn dwt3_forward(block: &Volume<f64>) -> Result<CoeffBlock, WaveletError> {
    let dims = block.dims();
    if !dims.is_pow2() {
        return Err(WaveletError::NotPowerOfTwo(dims.as_array()));
    }
    let mut values = block.data().to_vec();
    let mut band = dims.as_array();
    let mut scratch = Vec::new();
    while band.iter().any(|&b| b >= 2) {
        for axis in 0..3 {
            if band[axis] >= 2 {
                transform_axis(&mut values, dims, band, axis, &mut scratch, lift_forward);
            }
        }
        band = band.map(|b| (b / 2).max(1));
    }
    Ok(CoeffBlock {
        dims,
        levels: levels_for(dims),
        values,
    })
}

pub fn dwt3_inverse(coeffs: &CoeffBlock) -> Result<Volume<f64>, WaveletError> {
    let dims = coeffs.dims;
    if !dims.is_pow2() {
        return Err(WaveletError::NotPowerOfTwo(dims.as_array()));
    }
    if coeffs.values.len() != dims.len() || coeffs.levels != levels_for(dims) {
        return Err(WaveletError::DimMismatch {
            dims: dims.as_array(),
            found: coeffs.values.len(),
        });
    }
    // Replay the forward band schedule backwards.
    let mut schedule = Vec::new();
    let mut band = dims.as_array();
    while band.iter().any(|&b| b >= 2) {
        schedule.push(band);
        band = band.map(|b| (b / 2).max(1));
    }
    let mut values = coeffs.values.clone();
    let mut scratch = Vec::new();
    for band in schedule.into_iter().rev() {
        for axis in (0..3).rev() {
            if band[axis] >= 2 {
                transform_axis(&mut values, dims, band, axis, &mut scratch, lift_inverse);
            }
        }
    }
    Ok(Volume::from_vec(dims, values).expect("length checked above"))
}

/// Apply `lift` to every lane along `axis` inside the box `[0, band)`.
fn transform_axis(
    values: &mut [f64],
    dims: Dims,
    band: [usize; 3],
    axis: usize,
    scratch: &mut Vec<f64>,
    lift: fn(&[f64], &mut [f64]),
) {
    let stride = match axis {
        0 => dims.h * dims.w,
        1 => dims.w,
        _ => 1,
    };
    let len = band[axis];
    let mut lane = alloc::vec![0.0; len];
    let mut outer = band;
    outer[axis] = 1;
    for t in 0..outer[0] {
        for y in 0..outer[1] {
            for x in 0..outer[2] {
                let base = dims.index(t, y, x);
                scratch.clear();
                scratch.extend((0..len).map(|k| values[base + k * stride]));
                lift(scratch, &mut lane);
                for (k, v) in lane.iter().enumerate() {
                    values[base + k * stride] = *v;
                }
            }
        }
    }
}

/// One orthonormal Haar step by lifting: predict, update, then normalize.
/// Output is `[lows..., highs...]`.
fn lift_forward(input: &[f64], out: &mut [f64]) {
    let half = input.len() / 2;
    for k in 0..half {
        let (even, odd) = (input[2 * k], input[2 * k + 1]);
        let detail = even - odd;
        let smooth = odd + detail / 2.0;
        out[k] = smooth * SQRT2;
        out[half + k] = detail / SQRT2;
    }
}

fn lift_inverse(input: &[f64], out: &mut [f64]) {
    let half = input.len() / 2;
    for k in 0..half {
        let smooth = input[k] / SQRT2;
        let detail = input[half + k] * SQRT2;
        let odd = smooth - detail / 2.0;
        out[2 * k] = detail + odd;
        out[2 * k + 1] = odd;
    }
}
