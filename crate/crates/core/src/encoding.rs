//! Observation encoders: real-valued states and binary object planes become
//! Poisson firing rates, which are sampled into per-step input spikes.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Highest representable rate: one spike per millisecond.
pub const MAX_RATE_HZ: f64 = 1000.0;

/// Firing rates (Hz) for every input neuron, bounded by `phi_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateVector {
    rates: Vec<f64>,
    phi_max: f64,
}

impl RateVector {
    pub fn new(rates: Vec<f64>, phi_max: f64) -> Result<Self> {
        if !(phi_max > 0.0 && phi_max <= MAX_RATE_HZ) {
            return Err(Error::InvalidConfig(format!(
                "phi_max must lie in (0, {MAX_RATE_HZ}] Hz, got {phi_max}"
            )));
        }
        for (i, &r) in rates.iter().enumerate() {
            if !r.is_finite() {
                return Err(Error::NonFinite(i));
            }
            if r < 0.0 || r > phi_max {
                return Err(Error::InvalidConfig(format!(
                    "rate {r} at input {i} outside [0, {phi_max}]"
                )));
            }
        }
        Ok(Self { rates, phi_max })
    }

    pub fn zeros(len: usize, phi_max: f64) -> Self {
        Self {
            rates: vec![0.0; len],
            phi_max,
        }
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn phi_max(&self) -> f64 {
        self.phi_max
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    /// Number of inputs with a nonzero rate.
    pub fn active(&self) -> usize {
        self.rates.iter().filter(|&&r| r > 0.0).count()
    }
}

/// Samples one 1 ms step: input `i` spikes with probability `rates[i] / 1000`.
pub fn poisson_step<R: Rng + ?Sized>(rates: &RateVector, rng: &mut R) -> Vec<bool> {
    let mut out = vec![false; rates.len()];
    let mut idx = Vec::new();
    poisson_indices(rates, 1.0, rng, &mut idx);
    for i in idx {
        out[i] = true;
    }
    out
}

/// Writes the indices of inputs spiking during one step of `dt_ms` into `out`.
///
/// Silent inputs consume no random numbers.
pub fn poisson_indices<R: Rng + ?Sized>(
    rates: &RateVector,
    dt_ms: f64,
    rng: &mut R,
    out: &mut Vec<usize>,
) {
    out.clear();
    let scale = dt_ms / 1000.0;
    for (i, &r) in rates.rates.iter().enumerate() {
        if r > 0.0 && rng.gen::<f64>() < r * scale {
            out.push(i);
        }
    }
}

/// Inclusive-exclusive value range for one observed dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub const fn symmetric(bound: f64) -> Self {
        Self {
            lo: -bound,
            hi: bound,
        }
    }
}

/// Index of the equal-width bin holding `value`, clamped to `[0, levels - 1]`.
pub fn level_index(value: f64, range: Range, levels: usize) -> usize {
    let span = range.hi - range.lo;
    let clipped = value.clamp(range.lo, range.hi);
    let raw = ((clipped - range.lo) / span * levels as f64).floor();
    (raw.max(0.0) as usize).min(levels - 1)
}

/// One-hot level coding: `levels` inputs per dimension, the selected one at
/// `phi_max`, the rest silent.
pub fn encode_levels(
    values: &[f64],
    ranges: &[Range],
    levels: usize,
    phi_max: f64,
) -> Result<RateVector> {
    if values.len() != ranges.len() {
        return Err(Error::DimensionMismatch {
            context: "encode_levels ranges",
            expected: values.len(),
            actual: ranges.len(),
        });
    }
    if levels == 0 {
        return Err(Error::InvalidConfig("levels must be positive".into()));
    }
    let mut rates = vec![0.0; values.len() * levels];
    for (d, (&v, &range)) in values.iter().zip(ranges).enumerate() {
        if v.is_nan() {
            return Err(Error::NonFinite(d));
        }
        if !(range.lo.is_finite() && range.hi.is_finite() && range.lo < range.hi) {
            return Err(Error::InvalidConfig(format!(
                "range for dimension {d} must be finite with lo < hi"
            )));
        }
        rates[d * levels + level_index(v, range, levels)] = phi_max;
    }
    RateVector::new(rates, phi_max)
}

/// A two-dimensional boolean occupancy grid, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryPlane {
    rows: usize,
    cols: usize,
    cells: Vec<bool>,
}

impl BinaryPlane {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            cells: vec![false; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.cells[row * self.cols + col] = value;
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.cells[row * self.cols + col]
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }
}

/// Flattens planes row-major and concatenates them in the given order.
pub fn encode_binary_planes(planes: &[BinaryPlane], phi_max: f64) -> Result<RateVector> {
    let Some(first) = planes.first() else {
        return RateVector::new(Vec::new(), phi_max);
    };
    let mut rates = Vec::with_capacity(planes.len() * first.cells.len());
    for p in planes {
        if p.rows != first.rows || p.cols != first.cols {
            return Err(Error::DimensionMismatch {
                context: "binary plane cells",
                expected: first.cells.len(),
                actual: p.cells.len(),
            });
        }
        rates.extend(p.cells.iter().map(|&c| if c { phi_max } else { 0.0 }));
    }
    RateVector::new(rates, phi_max)
}
