//! Uniform `N`-level quantizer.
//!
//! A parameter is mapped to the index of the cell it falls in over the
//! dynamic range `[lo, hi)`; out-of-range values saturate to the first or
//! last cell. Indices are the transmitted levels directly, and the server
//! reconstructs a level as the midpoint of its cell.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizerSpec {
    n_levels: usize,
    lo: f64,
    hi: f64,
}

impl QuantizerSpec {
    pub fn new(n_levels: usize, lo: f64, hi: f64) -> Result<Self> {
        if n_levels < 2 {
            return Err(Error::Config(format!(
                "quantizer needs at least 2 levels, got {n_levels}"
            )));
        }
        if !lo.is_finite() || !hi.is_finite() || hi <= lo {
            return Err(Error::Config(format!(
                "quantizer range [{lo}, {hi}) is empty or not finite"
            )));
        }
        let width = (hi - lo) / n_levels as f64;
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::Config(format!(
                "quantizer cell width {width} is not positive and finite"
            )));
        }
        Ok(Self { n_levels, lo, hi })
    }

    /// `N` levels over the default symmetric range `[-1, 1)`.
    pub fn symmetric(n_levels: usize) -> Result<Self> {
        Self::new(n_levels, -1.0, 1.0)
    }

    pub fn n_levels(&self) -> usize {
        self.n_levels
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn cell_width(&self) -> f64 {
        (self.hi - self.lo) / self.n_levels as f64
    }

    /// True when `value` lies outside `[lo, hi)` and will be clipped.
    pub fn saturates(&self, value: f64) -> bool {
        value < self.lo || value >= self.hi
    }
}

pub fn quantize(value: f64, spec: &QuantizerSpec) -> Result<usize> {
    if !value.is_finite() {
        return Err(Error::InputDomain(format!("cannot quantize {value}")));
    }
    let cell = ((value - spec.lo) / spec.cell_width()).floor();
    let top = (spec.n_levels - 1) as f64;
    Ok(cell.clamp(0.0, top) as usize)
}

pub fn reconstruct(level: usize, spec: &QuantizerSpec) -> Result<f64> {
    if level >= spec.n_levels {
        return Err(Error::Index {
            index: level,
            len: spec.n_levels,
        });
    }
    Ok(spec.lo + (level as f64 + 0.5) * spec.cell_width())
}

/// Element-wise [`quantize`]. The error names the first offending index.
pub fn quantize_vector(params: &[f64], spec: &QuantizerSpec) -> Result<Vec<usize>> {
    params
        .iter()
        .enumerate()
        .map(|(q, &v)| {
            quantize(v, spec).map_err(|_| {
                Error::InputDomain(format!("parameter {q} is not finite ({v})"))
            })
        })
        .collect()
}
