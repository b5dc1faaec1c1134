//! Two-layer rate-based readout (ReLU hidden layer, linear action-value head)
//! trained by backpropagation with RMSProp.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Readout weights stored in one flat buffer:
/// `[w1 (input-major, n_in x hidden) | b1 | w2 (actions x hidden) | b2]`.
///
/// `w1` is kept input-major so sparse activations touch contiguous columns.
/// The same layout is used for gradients and RMSProp accumulators.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutParams {
    n_in: usize,
    hidden: usize,
    actions: usize,
    data: Vec<f64>,
}

impl ReadoutParams {
    pub fn zeros(n_in: usize, hidden: usize, actions: usize) -> Result<Self> {
        if n_in == 0 || hidden == 0 || actions == 0 {
            return Err(Error::InvalidConfig(format!(
                "readout shape {n_in} -> {hidden} -> {actions} must be non-degenerate"
            )));
        }
        let len = n_in * hidden + hidden + actions * hidden + actions;
        Ok(Self {
            n_in,
            hidden,
            actions,
            data: vec![0.0; len],
        })
    }

    pub fn from_flat(n_in: usize, hidden: usize, actions: usize, data: Vec<f64>) -> Result<Self> {
        let mut p = Self::zeros(n_in, hidden, actions)?;
        if data.len() != p.data.len() {
            return Err(Error::DimensionMismatch {
                context: "readout parameters",
                expected: p.data.len(),
                actual: data.len(),
            });
        }
        if let Some(i) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        p.data = data;
        Ok(p)
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn as_flat_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.n_in == other.n_in && self.hidden == other.hidden && self.actions == other.actions
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let b1 = self.n_in * self.hidden;
        let w2 = b1 + self.hidden;
        let b2 = w2 + self.actions * self.hidden;
        (b1, w2, b2)
    }

    pub fn w1_column(&self, input: usize) -> &[f64] {
        &self.data[input * self.hidden..(input + 1) * self.hidden]
    }

    /// Weight from input `j` to hidden unit `h`.
    pub fn w1(&self, h: usize, j: usize) -> f64 {
        self.data[j * self.hidden + h]
    }

    pub fn w1_mut(&mut self, h: usize, j: usize) -> &mut f64 {
        &mut self.data[j * self.hidden + h]
    }

    pub fn b1(&self) -> &[f64] {
        let (b1, w2, _) = self.offsets();
        &self.data[b1..w2]
    }

    pub fn b1_mut(&mut self) -> &mut [f64] {
        let (b1, w2, _) = self.offsets();
        &mut self.data[b1..w2]
    }

    /// Row of output weights for `action`.
    pub fn w2_row(&self, action: usize) -> &[f64] {
        let (_, w2, _) = self.offsets();
        let start = w2 + action * self.hidden;
        &self.data[start..start + self.hidden]
    }

    pub fn w2_row_mut(&mut self, action: usize) -> &mut [f64] {
        let (_, w2, _) = self.offsets();
        let h = self.hidden;
        &mut self.data[w2 + action * h..w2 + (action + 1) * h]
    }

    pub fn b2(&self) -> &[f64] {
        let (_, _, b2) = self.offsets();
        &self.data[b2..]
    }

    pub fn b2_mut(&mut self) -> &mut [f64] {
        let (_, _, b2) = self.offsets();
        &mut self.data[b2..]
    }

    pub fn fill(&mut self, value: f64) {
        self.data.fill(value);
    }
}

/// Uniform fan-based initialization with zero biases.
pub fn init_readout<R: Rng + ?Sized>(
    n_in: usize,
    hidden: usize,
    actions: usize,
    rng: &mut R,
) -> Result<ReadoutParams> {
    let mut p = ReadoutParams::zeros(n_in, hidden, actions)?;
    let b1_bound = (6.0 / (n_in + hidden) as f64).sqrt();
    let b2_bound = (6.0 / (hidden + actions) as f64).sqrt();
    let (b1, w2, b2) = p.offsets();
    for w in &mut p.data[..b1] {
        *w = rng.gen_range(-b1_bound..b1_bound);
    }
    for w in &mut p.data[w2..b2] {
        *w = rng.gen_range(-b2_bound..b2_bound);
    }
    Ok(p)
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCache {
    /// Nonzero inputs as `(index, value)`.
    pub inputs: Vec<(usize, f64)>,
    pub pre: Vec<f64>,
    pub hidden: Vec<f64>,
}

impl ForwardCache {
    pub fn new(hidden: usize) -> Self {
        Self {
            inputs: Vec::new(),
            pre: vec![0.0; hidden],
            hidden: vec![0.0; hidden],
        }
    }
}

impl ReadoutParams {
    /// Forward pass over sparse inputs, writing action-values into `q`.
    pub fn forward_into(&self, cache: &mut ForwardCache, q: &mut [f64]) {
        cache.pre.copy_from_slice(self.b1());
        for &(j, x) in &cache.inputs {
            for (p, &w) in cache.pre.iter_mut().zip(self.w1_column(j)) {
                *p += w * x;
            }
        }
        for (h, &p) in cache.hidden.iter_mut().zip(&cache.pre) {
            *h = p.max(0.0);
        }
        for (a, qa) in q.iter_mut().enumerate() {
            let row = self.w2_row(a);
            *qa = self.b2()[a]
                + row
                    .iter()
                    .zip(&cache.hidden)
                    .map(|(w, h)| w * h)
                    .sum::<f64>();
        }
    }

    /// Adds `scale` times the gradient of `0.5 * td_error^2` (with the target
    /// held fixed) into `grads`. Only the output unit of `action` carries error.
    pub fn accumulate_gradient(
        &self,
        cache: &ForwardCache,
        action: usize,
        td_error: f64,
        scale: f64,
        grads: &mut ReadoutParams,
    ) {
        let dq = -td_error * scale;
        if dq == 0.0 {
            return;
        }
        let hidden = self.hidden;
        grads.b2_mut()[action] += dq;
        for (g, &h) in grads.w2_row_mut(action).iter_mut().zip(&cache.hidden) {
            *g += dq * h;
        }
        let mut delta = vec![0.0; hidden];
        for ((d, &w), &p) in delta.iter_mut().zip(self.w2_row(action)).zip(&cache.pre) {
            if p > 0.0 {
                *d = dq * w;
            }
        }
        for (g, &d) in grads.b1_mut().iter_mut().zip(&delta) {
            *g += d;
        }
        for &(j, x) in &cache.inputs {
            let col = &mut grads.data[j * hidden..(j + 1) * hidden];
            for (g, &d) in col.iter_mut().zip(&delta) {
                *g += d * x;
            }
        }
    }
}

/// Computes `q = w2 * relu(w1 * x + b1) + b2`.
pub fn forward(params: &ReadoutParams, x: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
    if x.len() != params.n_in {
        return Err(Error::DimensionMismatch {
            context: "readout input",
            expected: params.n_in,
            actual: x.len(),
        });
    }
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    let mut cache = ForwardCache::new(params.hidden);
    cache.inputs = x
        .iter()
        .enumerate()
        .filter(|(_, &v)| v != 0.0)
        .map(|(j, &v)| (j, v))
        .collect();
    let mut q = vec![0.0; params.actions];
    params.forward_into(&mut cache, &mut q);
    Ok((q, cache))
}

/// Gradient of `0.5 * (Y - q[action])^2` where `td_error = Y - q[action]`.
pub fn backward(
    params: &ReadoutParams,
    cache: &ForwardCache,
    action: usize,
    td_error: f64,
) -> Result<ReadoutParams> {
    if action >= params.actions {
        return Err(Error::IndexOutOfRange {
            context: "action",
            index: action,
            len: params.actions,
        });
    }
    if cache.pre.len() != params.hidden {
        return Err(Error::DimensionMismatch {
            context: "forward cache",
            expected: params.hidden,
            actual: cache.pre.len(),
        });
    }
    let mut grads = ReadoutParams::zeros(params.n_in, params.hidden, params.actions)?;
    params.accumulate_gradient(cache, action, td_error, 1.0, &mut grads);
    Ok(grads)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RmsPropConfig {
    pub learning_rate: f64,
    pub smoothing: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
}

impl Default for RmsPropConfig {
    fn default() -> Self {
        Self {
            learning_rate: 2e-4,
            smoothing: 0.99,
            epsilon: 1e-6,
            weight_decay: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RmsPropState {
    pub sq_avg: ReadoutParams,
    pub hyper: RmsPropConfig,
}

impl RmsPropState {
    pub fn new(params: &ReadoutParams, hyper: RmsPropConfig) -> Self {
        let mut sq_avg = params.clone();
        sq_avg.fill(0.0);
        Self { sq_avg, hyper }
    }
}

/// One RMSProp step: `s <- a*s + (1-a)*g^2`, `p <- p - lr * g / (sqrt(s) + eps)`.
pub fn rmsprop_update(
    params: &mut ReadoutParams,
    opt: &mut RmsPropState,
    grads: &ReadoutParams,
) -> Result<()> {
    if !params.same_shape(grads) || !params.same_shape(&opt.sq_avg) {
        return Err(Error::DimensionMismatch {
            context: "rmsprop shapes",
            expected: params.data.len(),
            actual: grads.data.len(),
        });
    }
    let RmsPropConfig {
        learning_rate: lr,
        smoothing: a,
        epsilon: eps,
        weight_decay: wd,
    } = opt.hyper;
    for ((p, s), &g) in params
        .data
        .iter_mut()
        .zip(opt.sq_avg.data.iter_mut())
        .zip(&grads.data)
    {
        let g = if wd != 0.0 { g + wd * *p } else { g };
        *s = a * *s + (1.0 - a) * g * g;
        *p -= lr * g / (s.sqrt() + eps);
    }
    Ok(())
}
