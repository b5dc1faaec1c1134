//! The liquid: a fixed sparse random network of excitatory and inhibitory
//! leaky integrate-and-fire neurons driven by Poisson input spikes.
//!
//! Neurons are indexed `0..n_exc` (excitatory) followed by
//! `n_exc..n_exc + n_inh` (inhibitory). Stored weights are non-negative; the
//! inhibitory sign is applied during simulation and in [`signed_matrix`].

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dense::DenseMatrix;
use crate::encoding::{poisson_indices, RateVector};
use crate::error::{Error, Result};
use crate::features::Featurizer;
use crate::sparse::SparseMatrix;

/// LIF neuron constants shared by excitatory and inhibitory neurons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LiquidParams {
    pub v_rest: f64,
    pub v_reset: f64,
    pub v_thres: f64,
    /// Membrane time constant (ms).
    pub tau_mem: f64,
    /// Refractory period (ms).
    pub t_refrac: f64,
    /// Simulation step (ms).
    pub dt: f64,
}

impl Default for LiquidParams {
    fn default() -> Self {
        Self {
            v_rest: 0.0,
            v_reset: 0.0,
            v_thres: 0.5,
            tau_mem: 20.0,
            t_refrac: 1.0,
            dt: 1.0,
        }
    }
}

impl LiquidParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.v_rest,
            self.v_reset,
            self.v_thres,
            self.tau_mem,
            self.t_refrac,
            self.dt,
        ]
        .iter()
        .all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidConfig(
                "liquid parameters must be finite".into(),
            ));
        }
        if self.v_reset >= self.v_thres {
            return Err(Error::InvalidConfig("v_reset must be below v_thres".into()));
        }
        if self.tau_mem <= 0.0 || self.dt <= 0.0 {
            return Err(Error::InvalidConfig(
                "tau_mem and dt must be positive".into(),
            ));
        }
        if self.t_refrac < 0.0 {
            return Err(Error::InvalidConfig("t_refrac must be non-negative".into()));
        }
        Ok(())
    }

    /// Refractory period expressed in simulation steps.
    pub fn refrac_steps(&self) -> u32 {
        (self.t_refrac / self.dt).round() as u32
    }

    /// Number of simulation steps in a window of `t_ms`; errors unless `t_ms`
    /// is a positive multiple of `dt`.
    pub fn window_steps(&self, t_ms: f64) -> Result<usize> {
        let steps = (t_ms / self.dt).round();
        if !t_ms.is_finite() || t_ms <= 0.0 || (steps * self.dt - t_ms).abs() > 1e-9 * t_ms.max(1.0)
        {
            return Err(Error::InvalidConfig(format!(
                "window {t_ms} ms must be a positive multiple of dt = {} ms",
                self.dt
            )));
        }
        if steps > u16::MAX as f64 {
            return Err(Error::InvalidConfig(format!(
                "window of {steps} steps is too long"
            )));
        }
        Ok(steps as usize)
    }
}

/// Sizes, fan-ins and weight bounds used to draw a liquid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyConfig {
    pub n_input: usize,
    pub n_exc: usize,
    pub n_inh: usize,
    /// Mean number of input synapses per excitatory neuron.
    pub k_in: f64,
    /// Mean number of cross-population synapses per target neuron.
    pub c_rec: f64,
    #[serde(default = "defaults::alpha")]
    pub alpha: f64,
    #[serde(default = "defaults::beta_ee")]
    pub beta_ee: f64,
    #[serde(default = "defaults::beta_ei")]
    pub beta_ei: f64,
    #[serde(default = "defaults::beta_ie")]
    pub beta_ie: f64,
    #[serde(default = "defaults::beta_ii")]
    pub beta_ii: f64,
    #[serde(default)]
    pub seed: u64,
}

mod defaults {
    pub fn alpha() -> f64 {
        0.6
    }
    pub fn beta_ee() -> f64 {
        0.05
    }
    pub fn beta_ei() -> f64 {
        0.25
    }
    pub fn beta_ie() -> f64 {
        0.3
    }
    pub fn beta_ii() -> f64 {
        0.01
    }
}

impl TopologyConfig {
    /// A liquid of `n_liquid` neurons split 4:1 into excitatory and inhibitory
    /// populations with the default weight bounds.
    pub fn with_liquid_size(
        n_input: usize,
        n_liquid: usize,
        k_in: f64,
        c_rec: f64,
        seed: u64,
    ) -> Self {
        let n_inh = n_liquid / 5;
        Self {
            n_input,
            n_exc: n_liquid - n_inh,
            n_inh,
            k_in,
            c_rec,
            alpha: defaults::alpha(),
            beta_ee: defaults::beta_ee(),
            beta_ei: defaults::beta_ei(),
            beta_ie: defaults::beta_ie(),
            beta_ii: defaults::beta_ii(),
            seed,
        }
    }

    pub fn n_liquid(&self) -> usize {
        self.n_exc + self.n_inh
    }

    pub fn validate(&self) -> Result<()> {
        let bounds = [
            self.alpha,
            self.beta_ee,
            self.beta_ei,
            self.beta_ie,
            self.beta_ii,
        ];
        if bounds.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
            return Err(Error::InvalidConfig(
                "all weight bounds must be positive".into(),
            ));
        }
        if self.n_exc == 0 {
            return Err(Error::InvalidConfig(
                "the liquid needs excitatory neurons".into(),
            ));
        }
        if !(self.k_in.is_finite()
            && self.k_in >= 0.0
            && self.c_rec.is_finite()
            && self.c_rec >= 0.0)
        {
            return Err(Error::InvalidConfig(
                "k_in and c_rec must be non-negative".into(),
            ));
        }
        if self.n_input > 0 && self.k_in > self.n_input as f64 {
            return Err(Error::InvalidConfig(format!(
                "k_in = {} exceeds n_input = {} (connection probability > 1)",
                self.k_in, self.n_input
            )));
        }
        if self.c_rec > 0.0 && self.c_rec > self.n_exc.min(self.n_inh) as f64 {
            return Err(Error::InvalidConfig(format!(
                "c_rec = {} exceeds min(n_exc, n_inh) = {} (connection probability > 1)",
                self.c_rec,
                self.n_exc.min(self.n_inh)
            )));
        }
        Ok(())
    }

    /// Non-fatal deviations from the usual construction.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.n_exc != 4 * self.n_inh {
            w.push(format!(
                "n_exc = {} is not 4 x n_inh = {}; excitation/inhibition balance may suffer",
                self.n_exc, self.n_inh
            ));
        }
        w
    }
}

/// Every fixed synaptic matrix of a liquid. Rows are presynaptic neurons.
#[derive(Debug, Clone, PartialEq)]
pub struct LiquidTopology {
    /// Input -> excitatory, `n_input x n_exc`.
    pub w_pe: SparseMatrix,
    /// Excitatory -> excitatory, `n_exc x n_exc`.
    pub w_ee: SparseMatrix,
    /// Excitatory -> inhibitory, `n_exc x n_inh`.
    pub w_ei: SparseMatrix,
    /// Inhibitory -> excitatory, `n_inh x n_exc`.
    pub w_ie: SparseMatrix,
    /// Inhibitory -> inhibitory, `n_inh x n_inh`.
    pub w_ii: SparseMatrix,
    pub config: TopologyConfig,
}

fn bernoulli_matrix<R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    p: f64,
    bound: f64,
    keep: impl Fn(usize, usize) -> bool,
) -> SparseMatrix {
    let mut entries = Vec::with_capacity(rows);
    for r in 0..rows {
        let mut row = Vec::new();
        for c in 0..cols {
            if rng.gen::<f64>() < p && keep(r, c) {
                // (0, bound]: a stored synapse never carries a zero weight
                let w = bound * (1.0 - rng.gen::<f64>());
                row.push((c as u32, w));
            }
        }
        entries.push(row);
    }
    SparseMatrix::from_rows(rows, cols, entries).expect("columns generated in order")
}

fn probability(mean_fan_in: f64, population: usize) -> f64 {
    if population == 0 {
        0.0
    } else {
        mean_fan_in / population as f64
    }
}

/// Draws a liquid. Input synapses target excitatory neurons only; recurrent
/// E->E and I->I synapses are restricted to the support of the disynaptic
/// paths through the other population, and E->E self-loops are removed.
pub fn build_topology<R: Rng + ?Sized>(
    config: &TopologyConfig,
    rng: &mut R,
) -> Result<LiquidTopology> {
    config.validate()?;
    let (n_p, n_e, n_i) = (config.n_input, config.n_exc, config.n_inh);
    let p_in = probability(config.k_in, n_p);
    let p_to_inh = probability(config.c_rec, n_e);
    let p_to_exc = probability(config.c_rec, n_i);
    for p in [p_in, p_to_inh, p_to_exc] {
        if p > 1.0 {
            return Err(Error::InvalidConfig(format!(
                "connection probability {p} exceeds 1"
            )));
        }
    }

    let w_pe = bernoulli_matrix(rng, n_p, n_e, p_in, config.alpha, |_, _| true);
    let w_ei = bernoulli_matrix(rng, n_e, n_i, p_to_inh, config.beta_ei, |_, _| true);
    let w_ie = bernoulli_matrix(rng, n_i, n_e, p_to_exc, config.beta_ie, |_, _| true);

    let ee_mask = w_ei.product_support(&w_ie);
    let w_ee = bernoulli_matrix(rng, n_e, n_e, p_to_inh, config.beta_ee, |r, c| {
        r != c && ee_mask[r * n_e + c]
    });
    let ii_mask = w_ie.product_support(&w_ei);
    let w_ii = bernoulli_matrix(rng, n_i, n_i, p_to_exc, config.beta_ii, |r, c| {
        ii_mask[r * n_i + c]
    });

    Ok(LiquidTopology {
        w_pe,
        w_ee,
        w_ei,
        w_ie,
        w_ii,
        config: config.clone(),
    })
}

impl LiquidTopology {
    /// Builds the liquid with a generator seeded from `config.seed`.
    pub fn from_seed(config: &TopologyConfig) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        build_topology(config, &mut rng)
    }

    pub fn n_input(&self) -> usize {
        self.config.n_input
    }

    pub fn n_exc(&self) -> usize {
        self.config.n_exc
    }

    pub fn n_inh(&self) -> usize {
        self.config.n_inh
    }

    pub fn n_liquid(&self) -> usize {
        self.config.n_liquid()
    }

    /// Checks shapes, weight bounds, the zero E->E diagonal and both support masks.
    pub fn check_invariants(&self) -> Result<()> {
        let c = &self.config;
        let shapes = [
            ("w_pe", &self.w_pe, c.n_input, c.n_exc, c.alpha),
            ("w_ee", &self.w_ee, c.n_exc, c.n_exc, c.beta_ee),
            ("w_ei", &self.w_ei, c.n_exc, c.n_inh, c.beta_ei),
            ("w_ie", &self.w_ie, c.n_inh, c.n_exc, c.beta_ie),
            ("w_ii", &self.w_ii, c.n_inh, c.n_inh, c.beta_ii),
        ];
        for (name, m, rows, cols, bound) in shapes {
            if m.rows() != rows || m.cols() != cols {
                return Err(Error::InvalidConfig(format!(
                    "{name} is {}x{}, expected {rows}x{cols}",
                    m.rows(),
                    m.cols()
                )));
            }
            if m.values().iter().any(|&w| !(w > 0.0 && w <= bound)) {
                return Err(Error::InvalidConfig(format!(
                    "{name} has a weight outside (0, {bound}]"
                )));
            }
        }
        let ee_mask = self.w_ei.product_support(&self.w_ie);
        for (r, col, _) in self.w_ee.iter() {
            if r == col {
                return Err(Error::InvalidConfig(format!("w_ee has a self-loop at {r}")));
            }
            if !ee_mask[r * c.n_exc + col] {
                return Err(Error::InvalidConfig(format!(
                    "w_ee[{r}][{col}] lacks a disynaptic path"
                )));
            }
        }
        let ii_mask = self.w_ie.product_support(&self.w_ei);
        for (r, col, _) in self.w_ii.iter() {
            if !ii_mask[r * c.n_inh + col] {
                return Err(Error::InvalidConfig(format!(
                    "w_ii[{r}][{col}] lacks a disynaptic path"
                )));
            }
        }
        Ok(())
    }
}

/// Signed recurrent weight matrix over all liquid neurons; entry `(i, j)` is
/// the weight of synapse `j -> i`, negative when `j` is inhibitory. Input
/// synapses are excluded.
pub fn signed_matrix(topology: &LiquidTopology) -> DenseMatrix {
    let n_e = topology.n_exc();
    let n = topology.n_liquid();
    let mut m = DenseMatrix::zeros(n, n);
    for (pre, post, w) in topology.w_ee.iter() {
        m[(post, pre)] = w;
    }
    for (pre, post, w) in topology.w_ei.iter() {
        m[(n_e + post, pre)] = w;
    }
    for (pre, post, w) in topology.w_ie.iter() {
        m[(post, n_e + pre)] = -w;
    }
    for (pre, post, w) in topology.w_ii.iter() {
        m[(n_e + post, n_e + pre)] = -w;
    }
    m
}

/// Dynamic state of every liquid neuron.
#[derive(Debug, Clone, PartialEq)]
pub struct LiquidState {
    pub v: Vec<f64>,
    pub refrac_remaining: Vec<u32>,
    /// Spikes emitted at the last step; they reach their targets next step.
    pub spikes_exc: Vec<bool>,
    pub spikes_inh: Vec<bool>,
    /// Excitatory spikes accumulated over the current window.
    pub exc_spike_counts: Vec<u32>,
}

impl LiquidState {
    pub fn at_rest(topology: &LiquidTopology, params: &LiquidParams) -> Self {
        let n = topology.n_liquid();
        Self {
            v: vec![params.v_rest; n],
            refrac_remaining: vec![0; n],
            spikes_exc: vec![false; topology.n_exc()],
            spikes_inh: vec![false; topology.n_inh()],
            exc_spike_counts: vec![0; topology.n_exc()],
        }
    }

    pub fn reset(&mut self, params: &LiquidParams) {
        self.v.fill(params.v_rest);
        self.refrac_remaining.fill(0);
        self.spikes_exc.fill(false);
        self.spikes_inh.fill(false);
        self.exc_spike_counts.fill(0);
    }

    fn check_dims(&self, topology: &LiquidTopology) -> Result<()> {
        let n = topology.n_liquid();
        let checks = [
            ("membrane potentials", n, self.v.len()),
            ("refractory counters", n, self.refrac_remaining.len()),
            ("excitatory spikes", topology.n_exc(), self.spikes_exc.len()),
            ("inhibitory spikes", topology.n_inh(), self.spikes_inh.len()),
            (
                "spike counts",
                topology.n_exc(),
                self.exc_spike_counts.len(),
            ),
        ];
        for (context, expected, actual) in checks {
            if expected != actual {
                return Err(Error::DimensionMismatch {
                    context,
                    expected,
                    actual,
                });
            }
        }
        Ok(())
    }

    /// Total spikes emitted at the last step.
    pub fn last_step_spikes(&self) -> usize {
        self.spikes_exc
            .iter()
            .chain(&self.spikes_inh)
            .filter(|&&s| s)
            .count()
    }
}

/// Normalized excitatory spike counts over one window, stored losslessly as
/// integer counts and the window length in steps.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Activation {
    counts: Vec<u16>,
    window: u16,
}

impl Activation {
    pub fn from_counts(counts: Vec<u16>, window: u16) -> Result<Self> {
        if window == 0 {
            return Err(Error::InvalidConfig(
                "activation window must be positive".into(),
            ));
        }
        if let Some(i) = counts.iter().position(|&c| c > window) {
            return Err(Error::InvalidConfig(format!(
                "spike count {} at neuron {i} exceeds the window of {window} steps",
                counts[i]
            )));
        }
        Ok(Self { counts, window })
    }

    /// One-hot or binary features in {0, 1}.
    pub fn from_binary(bits: &[bool]) -> Self {
        Self {
            counts: bits.iter().map(|&b| u16::from(b)).collect(),
            window: 1,
        }
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            counts: vec![0; len],
            window: 1,
        }
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn counts(&self) -> &[u16] {
        &self.counts
    }

    pub fn window(&self) -> u16 {
        self.window
    }

    pub fn value(&self, i: usize) -> f64 {
        f64::from(self.counts[i]) / f64::from(self.window)
    }

    pub fn values(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.counts.len()];
        self.write_values(&mut out);
        out
    }

    pub fn write_values(&self, out: &mut [f64]) {
        let w = f64::from(self.window);
        for (o, &c) in out.iter_mut().zip(&self.counts) {
            *o = f64::from(c) / w;
        }
    }

    pub fn nonzero(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }
}

// One simulation step with inputs given as spiking indices; `current` is scratch.
fn advance(
    topology: &LiquidTopology,
    params: &LiquidParams,
    state: &mut LiquidState,
    input_idx: &[usize],
    current: &mut [f64],
) {
    let n_e = topology.n_exc();
    current.fill(0.0);
    for &l in input_idx {
        topology.w_pe.scatter_row(l, 1.0, current, 0);
    }
    for (j, _) in state.spikes_exc.iter().enumerate().filter(|(_, &s)| s) {
        topology.w_ee.scatter_row(j, 1.0, current, 0);
        topology.w_ei.scatter_row(j, 1.0, current, n_e);
    }
    for (k, _) in state.spikes_inh.iter().enumerate().filter(|(_, &s)| s) {
        topology.w_ie.scatter_row(k, -1.0, current, 0);
        topology.w_ii.scatter_row(k, -1.0, current, n_e);
    }

    let leak = params.dt / params.tau_mem;
    let refrac = params.refrac_steps();
    let (v_rest, v_reset, v_thres) = (params.v_rest, params.v_reset, params.v_thres);
    for i in 0..current.len() {
        let fired = if state.refrac_remaining[i] > 0 {
            state.refrac_remaining[i] -= 1;
            false
        } else {
            let v = state.v[i] + leak * (v_rest - state.v[i]) + current[i];
            if v >= v_thres {
                state.v[i] = v_reset;
                state.refrac_remaining[i] = refrac;
                true
            } else {
                state.v[i] = v;
                false
            }
        };
        if i < n_e {
            state.spikes_exc[i] = fired;
            state.exc_spike_counts[i] += u32::from(fired);
        } else {
            state.spikes_inh[i - n_e] = fired;
        }
    }
}

/// Advances the liquid by one forward-Euler step of `params.dt`.
///
/// Input spikes act within the step; recurrent spikes recorded in `state`
/// from the previous step are delivered now.
pub fn step(
    topology: &LiquidTopology,
    params: &LiquidParams,
    state: &mut LiquidState,
    input_spikes: &[bool],
) -> Result<()> {
    state.check_dims(topology)?;
    if input_spikes.len() != topology.n_input() {
        return Err(Error::DimensionMismatch {
            context: "input spikes",
            expected: topology.n_input(),
            actual: input_spikes.len(),
        });
    }
    let idx: Vec<usize> = (0..input_spikes.len())
        .filter(|&i| input_spikes[i])
        .collect();
    let mut current = vec![0.0; topology.n_liquid()];
    advance(topology, params, state, &idx, &mut current);
    Ok(())
}

/// Presents `rates` for `t_lsm` ms, sampling fresh input spikes every step.
/// Spike counts restart at zero; potentials and refractory state carry over.
pub fn run_window<R: Rng + ?Sized>(
    topology: &LiquidTopology,
    params: &LiquidParams,
    state: &mut LiquidState,
    rates: &RateVector,
    t_lsm: f64,
    rng: &mut R,
) -> Result<Activation> {
    let mut scratch = Scratch::new(topology);
    run_window_with(topology, params, state, rates, t_lsm, rng, &mut scratch)
}

struct Scratch {
    current: Vec<f64>,
    inputs: Vec<usize>,
}

impl Scratch {
    fn new(topology: &LiquidTopology) -> Self {
        Self {
            current: vec![0.0; topology.n_liquid()],
            inputs: Vec::new(),
        }
    }
}

fn run_window_with<R: Rng + ?Sized>(
    topology: &LiquidTopology,
    params: &LiquidParams,
    state: &mut LiquidState,
    rates: &RateVector,
    t_lsm: f64,
    rng: &mut R,
    scratch: &mut Scratch,
) -> Result<Activation> {
    state.check_dims(topology)?;
    if rates.len() != topology.n_input() {
        return Err(Error::DimensionMismatch {
            context: "input rates",
            expected: topology.n_input(),
            actual: rates.len(),
        });
    }
    let steps = params.window_steps(t_lsm)?;
    state.exc_spike_counts.fill(0);
    for _ in 0..steps {
        poisson_indices(rates, params.dt, rng, &mut scratch.inputs);
        advance(
            topology,
            params,
            state,
            &scratch.inputs,
            &mut scratch.current,
        );
    }
    let counts = state.exc_spike_counts.iter().map(|&c| c as u16).collect();
    Activation::from_counts(counts, steps as u16)
}

/// A liquid instance that owns its state and random stream, used as the
/// feature extractor of an agent.
#[derive(Debug, Clone)]
pub struct Liquid {
    topology: Arc<LiquidTopology>,
    params: LiquidParams,
    state: LiquidState,
    rng: ChaCha8Rng,
    window_ms: f64,
    scratch_current: Vec<f64>,
    scratch_inputs: Vec<usize>,
}

impl Liquid {
    pub fn new(
        topology: Arc<LiquidTopology>,
        params: LiquidParams,
        window_ms: f64,
        seed: u64,
    ) -> Result<Self> {
        params.validate()?;
        params.window_steps(window_ms)?;
        let state = LiquidState::at_rest(&topology, &params);
        let n = topology.n_liquid();
        Ok(Self {
            topology,
            params,
            state,
            rng: ChaCha8Rng::seed_from_u64(seed),
            window_ms,
            scratch_current: vec![0.0; n],
            scratch_inputs: Vec::new(),
        })
    }

    pub fn topology(&self) -> &Arc<LiquidTopology> {
        &self.topology
    }

    pub fn params(&self) -> &LiquidParams {
        &self.params
    }

    pub fn state(&self) -> &LiquidState {
        &self.state
    }

    pub fn window_ms(&self) -> f64 {
        self.window_ms
    }

    pub fn run(&mut self, rates: &RateVector) -> Result<Activation> {
        let mut scratch = Scratch {
            current: std::mem::take(&mut self.scratch_current),
            inputs: std::mem::take(&mut self.scratch_inputs),
        };
        let out = run_window_with(
            &self.topology,
            &self.params,
            &mut self.state,
            rates,
            self.window_ms,
            &mut self.rng,
            &mut scratch,
        );
        self.scratch_current = scratch.current;
        self.scratch_inputs = scratch.inputs;
        out
    }
}

impl Featurizer for Liquid {
    fn dim(&self) -> usize {
        self.topology.n_exc()
    }

    fn input_dim(&self) -> usize {
        self.topology.n_input()
    }

    fn reset(&mut self) {
        self.state.reset(&self.params);
    }

    fn features(&mut self, rates: &RateVector) -> Result<Activation> {
        self.run(rates)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(n_input: usize, n_exc: usize, n_inh: usize, k_in: f64, c_rec: f64) -> TopologyConfig {
        TopologyConfig {
            n_input,
            n_exc,
            n_inh,
            k_in,
            c_rec,
            ..TopologyConfig::with_liquid_size(1, 5, 1.0, 1.0, 0)
        }
    }

    fn single_neuron(weight: f64) -> LiquidTopology {
        let config = toy(1, 1, 0, 1.0, 0.0);
        LiquidTopology {
            w_pe: SparseMatrix::from_rows(1, 1, vec![vec![(0, weight)]]).unwrap(),
            w_ee: SparseMatrix::empty(1, 1),
            w_ei: SparseMatrix::empty(1, 0),
            w_ie: SparseMatrix::empty(0, 1),
            w_ii: SparseMatrix::empty(0, 0),
            config,
        }
    }

    #[test]
    fn e_to_i_rate_for_thousand_neuron_example() {
        let c = toy(10, 1000, 250, 1.0, 1.0);
        assert!((probability(c.c_rec, c.n_exc) - 0.001).abs() < 1e-15);
        let t = LiquidTopology::from_seed(&c).unwrap();
        // expected fan-in per inhibitory neuron is 1
        let fan_in = t.w_ei.mean_fan_in();
        assert!((fan_in - 1.0).abs() < 0.25, "{fan_in}");
    }

    #[test]
    fn zero_recurrence_leaves_only_input_weights() {
        let t = LiquidTopology::from_seed(&toy(20, 40, 10, 3.0, 0.0)).unwrap();
        assert_eq!(t.w_ee.nnz() + t.w_ei.nnz() + t.w_ie.nnz() + t.w_ii.nnz(), 0);
        assert!(t.w_pe.nnz() > 0);
    }

    #[test]
    fn tiny_liquid_support_exhaustive() {
        for seed in 0..200 {
            let t = LiquidTopology::from_seed(&TopologyConfig {
                seed,
                ..toy(4, 8, 2, 1.0, 1.0)
            })
            .unwrap();
            let ei = t.w_ei.to_dense();
            let ie = t.w_ie.to_dense();
            for i in 0..8 {
                assert_eq!(t.w_ee.get(i, i), 0.0);
                for j in 0..8 {
                    if t.w_ee.get(i, j) != 0.0 {
                        assert!((0..2).any(|k| ei[i][k] != 0.0 && ie[k][j] != 0.0));
                    }
                }
            }
            for a in 0..2 {
                for b in 0..2 {
                    if t.w_ii.get(a, b) != 0.0 {
                        assert!((0..8).any(|k| ie[a][k] != 0.0 && ei[k][b] != 0.0));
                    }
                }
            }
            t.check_invariants().unwrap();
        }
    }

    #[test]
    fn rejects_probabilities_above_one() {
        assert!(LiquidTopology::from_seed(&toy(2, 8, 2, 3.0, 1.0)).is_err());
        assert!(LiquidTopology::from_seed(&toy(4, 8, 2, 1.0, 3.0)).is_err());
    }

    #[test]
    fn construction_is_deterministic() {
        let c = toy(40, 120, 30, 3.0, 4.0);
        assert_eq!(
            LiquidTopology::from_seed(&c).unwrap(),
            LiquidTopology::from_seed(&c).unwrap()
        );
        let other = TopologyConfig {
            seed: 1,
            ..c.clone()
        };
        assert_ne!(
            LiquidTopology::from_seed(&c).unwrap(),
            LiquidTopology::from_seed(&other).unwrap()
        );
    }

    #[test]
    fn warns_on_unbalanced_populations() {
        assert!(toy(1, 8, 2, 1.0, 1.0).warnings().is_empty());
        assert_eq!(toy(1, 9, 2, 1.0, 1.0).warnings().len(), 1);
    }

    #[test]
    fn strong_input_spike_fires_and_resets() {
        let t = single_neuron(0.6);
        let p = LiquidParams::default();
        let mut s = LiquidState::at_rest(&t, &p);
        step(&t, &p, &mut s, &[true]).unwrap();
        assert!(s.spikes_exc[0]);
        assert_eq!(s.v[0], 0.0);
        assert_eq!(s.refrac_remaining[0], 1);
        assert_eq!(s.exc_spike_counts[0], 1);
        // refractory: the next input is ignored and the potential held
        step(&t, &p, &mut s, &[true]).unwrap();
        assert!(!s.spikes_exc[0]);
        assert_eq!(s.v[0], 0.0);
        assert_eq!(s.refrac_remaining[0], 0);
    }

    #[test]
    fn leak_only_step() {
        let t = single_neuron(0.6);
        let p = LiquidParams::default();
        let mut s = LiquidState::at_rest(&t, &p);
        s.v[0] = 0.4;
        step(&t, &p, &mut s, &[false]).unwrap();
        assert!((s.v[0] - 0.38).abs() < 1e-15);
        assert!(!s.spikes_exc[0]);
    }

    #[test]
    fn rest_is_a_fixed_point() {
        let t = LiquidTopology::from_seed(&toy(10, 16, 4, 2.0, 2.0)).unwrap();
        let p = LiquidParams::default();
        let mut s = LiquidState::at_rest(&t, &p);
        let before = s.clone();
        step(&t, &p, &mut s, &[false; 10]).unwrap();
        assert_eq!(s, before);
    }

    #[test]
    fn recurrent_spikes_arrive_one_step_later() {
        // E0 -> I0 with 0.6: E0 fires on step 1, I0 fires on step 2
        let mut config = toy(1, 1, 1, 1.0, 0.0);
        config.beta_ei = 0.6;
        let t = LiquidTopology {
            w_pe: SparseMatrix::from_rows(1, 1, vec![vec![(0, 0.6)]]).unwrap(),
            w_ee: SparseMatrix::empty(1, 1),
            w_ei: SparseMatrix::from_rows(1, 1, vec![vec![(0, 0.6)]]).unwrap(),
            w_ie: SparseMatrix::empty(1, 1),
            w_ii: SparseMatrix::empty(1, 1),
            config,
        };
        let p = LiquidParams::default();
        let mut s = LiquidState::at_rest(&t, &p);
        step(&t, &p, &mut s, &[true]).unwrap();
        assert!(s.spikes_exc[0] && !s.spikes_inh[0]);
        step(&t, &p, &mut s, &[false]).unwrap();
        assert!(!s.spikes_exc[0] && s.spikes_inh[0]);
    }

    #[test]
    fn step_rejects_bad_dimensions() {
        let t = single_neuron(0.6);
        let p = LiquidParams::default();
        let mut s = LiquidState::at_rest(&t, &p);
        assert!(matches!(
            step(&t, &p, &mut s, &[true, false]),
            Err(Error::DimensionMismatch { .. })
        ));
        s.v.push(0.0);
        assert!(step(&t, &p, &mut s, &[true]).is_err());
    }

    #[test]
    fn silent_window_gives_zero_activation() {
        let t = LiquidTopology::from_seed(&toy(10, 16, 4, 2.0, 2.0)).unwrap();
        let p = LiquidParams::default();
        let mut s = LiquidState::at_rest(&t, &p);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let a = run_window(
            &t,
            &p,
            &mut s,
            &RateVector::zeros(10, 100.0),
            100.0,
            &mut rng,
        )
        .unwrap();
        assert_eq!(a.len(), 16);
        assert!(a.values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn always_firing_neuron_saturates_activation() {
        let t = single_neuron(0.6);
        let p = LiquidParams {
            t_refrac: 0.0,
            ..LiquidParams::default()
        };
        let mut s = LiquidState::at_rest(&t, &p);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let rates = RateVector::new(vec![1000.0], 1000.0).unwrap();
        let a = run_window(&t, &p, &mut s, &rates, 100.0, &mut rng).unwrap();
        assert_eq!(a.counts(), &[100]);
        assert_eq!(a.value(0), 1.0);
    }

    #[test]
    fn window_must_be_multiple_of_dt() {
        let p = LiquidParams {
            dt: 2.0,
            ..LiquidParams::default()
        };
        assert_eq!(p.window_steps(100.0).unwrap(), 50);
        assert!(p.window_steps(101.0).is_err());
        assert!(p.window_steps(0.0).is_err());
    }

    #[test]
    fn signed_matrix_sign_convention() {
        let mut config = toy(1, 2, 1, 1.0, 0.0);
        config.n_exc = 2;
        let t = LiquidTopology {
            w_pe: SparseMatrix::empty(1, 2),
            w_ee: SparseMatrix::empty(2, 2),
            w_ei: SparseMatrix::from_rows(2, 1, vec![vec![(0, 0.25)], vec![]]).unwrap(),
            w_ie: SparseMatrix::from_rows(1, 2, vec![vec![(1, 0.3)]]).unwrap(),
            w_ii: SparseMatrix::empty(1, 1),
            config,
        };
        let m = signed_matrix(&t);
        assert_eq!(m.count_nonzero(), 2);
        assert_eq!(m[(2, 0)], 0.25);
        assert_eq!(m[(1, 2)], -0.3);
    }

    #[test]
    fn signed_matrix_of_empty_liquid_is_zero() {
        let t = LiquidTopology::from_seed(&toy(4, 8, 2, 1.0, 0.0)).unwrap();
        assert_eq!(signed_matrix(&t).count_nonzero(), 0);
    }

    #[test]
    fn activation_bounds() {
        assert!(Activation::from_counts(vec![3, 101], 100).is_err());
        assert!(Activation::from_counts(vec![1], 0).is_err());
        let a = Activation::from_counts(vec![0, 50, 100], 100).unwrap();
        assert_eq!(a.values(), vec![0.0, 0.5, 1.0]);
        assert_eq!(a.nonzero(), 2);
    }
}
