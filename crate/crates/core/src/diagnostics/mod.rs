//! Tools for judging a liquid before training: recurrent spectrum, stability
//! and fading-memory probes, and membrane potential traces.

pub mod eigen;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::encoding::{poisson_indices, RateVector};
use crate::error::{Error, Result};
use crate::reservoir::{signed_matrix, step, LiquidParams, LiquidState, LiquidTopology};

pub use eigen::{eigen_spectrum, eigen_spectrum_with, spectral_radius, Complex, EigenOptions};

/// Slack on the unit circle that absorbs QR round-off.
pub const UNIT_CIRCLE_TOLERANCE: f64 = 1e-6;

/// Consecutive silent milliseconds that count as activity having ceased.
pub const QUIESCENCE_MS: f64 = 20.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub eigenvalues: Vec<Complex>,
    pub spectral_radius: f64,
    pub inside_unit_circle_fraction: f64,
    pub stable: bool,
}

impl StabilityReport {
    pub fn outside_unit_circle(&self) -> usize {
        self.eigenvalues
            .iter()
            .filter(|e| e.norm() > 1.0 + UNIT_CIRCLE_TOLERANCE)
            .count()
    }
}

/// Spectrum of the signed recurrent matrix; stable iff every eigenvalue lies
/// within the unit circle.
pub fn stability_report(topology: &LiquidTopology) -> Result<StabilityReport> {
    stability_report_with(topology, EigenOptions::default())
}

pub fn stability_report_with(
    topology: &LiquidTopology,
    options: EigenOptions,
) -> Result<StabilityReport> {
    let eigenvalues = eigen_spectrum_with(&signed_matrix(topology), options)?;
    let radius = spectral_radius(&eigenvalues);
    let inside = eigenvalues
        .iter()
        .filter(|e| e.norm() <= 1.0 + UNIT_CIRCLE_TOLERANCE)
        .count();
    let fraction = if eigenvalues.is_empty() {
        1.0
    } else {
        inside as f64 / eigenvalues.len() as f64
    };
    Ok(StabilityReport {
        stable: radius <= 1.0 + UNIT_CIRCLE_TOLERANCE,
        spectral_radius: radius,
        inside_unit_circle_fraction: fraction,
        eigenvalues,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FadingMemoryReport {
    /// Milliseconds from input cut-off to the end of the last liquid spike
    /// step; zero when the liquid falls silent immediately.
    pub response_tail_ms: f64,
    pub total_spikes_during_silence: usize,
    pub total_spikes_during_stimulus: usize,
    /// Activity ended with at least [`QUIESCENCE_MS`] of silence remaining.
    pub stable: bool,
    /// Activity outlived the input.
    pub fading_memory: bool,
}

/// Random binary representation: each input active at `phi_max` with
/// probability `density`.
pub fn random_stimulus<R: Rng + ?Sized>(
    n_input: usize,
    phi_max: f64,
    density: f64,
    rng: &mut R,
) -> RateVector {
    let rates = (0..n_input)
        .map(|_| {
            if rng.gen::<f64>() < density {
                phi_max
            } else {
                0.0
            }
        })
        .collect();
    RateVector::new(rates, phi_max).expect("rates bounded by phi_max")
}

/// Drives the liquid from rest with `stimulus` for `stimulus_ms`, then with no
/// input for `silence_ms`, and measures how long activity persists.
pub fn fading_memory_probe<R: Rng + ?Sized>(
    topology: &LiquidTopology,
    params: &LiquidParams,
    stimulus: &RateVector,
    stimulus_ms: f64,
    silence_ms: f64,
    rng: &mut R,
) -> Result<FadingMemoryReport> {
    params.validate()?;
    if stimulus.len() != topology.n_input() {
        return Err(Error::DimensionMismatch {
            context: "probe stimulus",
            expected: topology.n_input(),
            actual: stimulus.len(),
        });
    }
    let on_steps = (stimulus_ms / params.dt).round() as usize;
    let off_steps = (silence_ms / params.dt).round() as usize;
    let mut state = LiquidState::at_rest(topology, params);
    let mut input = vec![false; topology.n_input()];
    let mut idx = Vec::new();

    let mut stimulus_spikes = 0;
    for _ in 0..on_steps {
        poisson_indices(stimulus, params.dt, rng, &mut idx);
        input.fill(false);
        for &i in &idx {
            input[i] = true;
        }
        step(topology, params, &mut state, &input)?;
        stimulus_spikes += state.last_step_spikes();
    }

    input.fill(false);
    let mut silence_spikes = 0;
    let mut last_active: Option<usize> = None;
    for k in 0..off_steps {
        step(topology, params, &mut state, &input)?;
        let s = state.last_step_spikes();
        if s > 0 {
            silence_spikes += s;
            last_active = Some(k);
        }
    }
    let tail_ms = last_active.map_or(0.0, |k| (k + 1) as f64 * params.dt);
    Ok(FadingMemoryReport {
        response_tail_ms: tail_ms,
        total_spikes_during_silence: silence_spikes,
        total_spikes_during_stimulus: stimulus_spikes,
        stable: tail_ms + QUIESCENCE_MS <= silence_ms,
        fading_memory: tail_ms > 0.0,
    })
}

/// Membrane potential of each selected excitatory neuron at every step of a
/// `duration_ms` run from rest under `rates`.
pub fn membrane_trace<R: Rng + ?Sized>(
    topology: &LiquidTopology,
    params: &LiquidParams,
    rates: &RateVector,
    neurons: &[usize],
    duration_ms: f64,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    params.validate()?;
    if let Some(&bad) = neurons.iter().find(|&&i| i >= topology.n_exc()) {
        return Err(Error::IndexOutOfRange {
            context: "excitatory neuron",
            index: bad,
            len: topology.n_exc(),
        });
    }
    if rates.len() != topology.n_input() {
        return Err(Error::DimensionMismatch {
            context: "trace rates",
            expected: topology.n_input(),
            actual: rates.len(),
        });
    }
    let steps = (duration_ms / params.dt).round() as usize;
    let mut traces = vec![Vec::with_capacity(steps); neurons.len()];
    let mut state = LiquidState::at_rest(topology, params);
    let mut input = vec![false; topology.n_input()];
    let mut idx = Vec::new();
    for _ in 0..steps {
        poisson_indices(rates, params.dt, rng, &mut idx);
        input.fill(false);
        for &i in &idx {
            input[i] = true;
        }
        step(topology, params, &mut state, &input)?;
        for (trace, &n) in traces.iter_mut().zip(neurons) {
            trace.push(state.v[n]);
        }
    }
    Ok(traces)
}
