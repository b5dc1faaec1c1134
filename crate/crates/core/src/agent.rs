//! Q-learning of the readout: epsilon-greedy acting, experience replay,
//! Bellman targets from the current weights, and evaluation rollouts.

use std::collections::VecDeque;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::envs::Environment;
use crate::error::{Error, Result};
use crate::features::Featurizer;
use crate::metrics::EpochMetrics;
use crate::readout::{
    init_readout, rmsprop_update, ForwardCache, ReadoutParams, RmsPropConfig, RmsPropState,
};
use crate::reservoir::Activation;

/// One replayed experience. Activations are shared with neighbouring
/// transitions, so consecutive steps store each liquid response once.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub x_t: Arc<Activation>,
    pub action: usize,
    pub reward: f64,
    pub x_next: Arc<Activation>,
    pub terminal: bool,
}

/// FIFO experience memory of bounded size.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: VecDeque<Transition>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidConfig(
                "replay capacity must be positive".into(),
            ));
        }
        Ok(Self {
            capacity,
            items: VecDeque::with_capacity(capacity.min(1 << 16)),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(t);
    }

    pub fn get(&self, i: usize) -> Option<&Transition> {
        self.items.get(i)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }

    /// Uniform sample with replacement.
    pub fn sample<'a, R: Rng + ?Sized>(&'a self, batch: usize, rng: &mut R) -> Vec<&'a Transition> {
        if self.items.is_empty() {
            return Vec::new();
        }
        (0..batch)
            .map(|_| &self.items[rng.gen_range(0..self.items.len())])
            .collect()
    }
}

/// Linear decay from `eps_start` to `eps_final` over the first
/// `decay_fraction` of training, constant afterwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub eps_start: f64,
    pub eps_final: f64,
    pub decay_fraction: f64,
    pub total_steps: usize,
}

impl EpsilonSchedule {
    pub fn eps_at(&self, step: usize) -> f64 {
        let decay_steps = self.decay_fraction * self.total_steps as f64;
        if decay_steps <= 0.0 || step as f64 >= decay_steps {
            return self.eps_final;
        }
        let frac = step as f64 / decay_steps;
        self.eps_start + (self.eps_final - self.eps_start) * frac
    }
}

pub fn eps_at(schedule: &EpsilonSchedule, step: usize) -> f64 {
    schedule.eps_at(step)
}

/// Index of the largest value, lowest index on ties.
pub fn argmax(q: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in q.iter().enumerate().skip(1) {
        if v > q[best] {
            best = i;
        }
    }
    best
}

/// Epsilon-greedy choice over `q`.
pub fn select_action<R: Rng + ?Sized>(q: &[f64], eps: f64, rng: &mut R) -> usize {
    assert!(!q.is_empty(), "no actions to choose from");
    if eps > 0.0 && rng.gen::<f64>() < eps {
        rng.gen_range(0..q.len())
    } else {
        argmax(q)
    }
}

/// `sign(r) * min(|r|, 1)`.
pub fn clip_reward(r: f64) -> f64 {
    r.clamp(-1.0, 1.0)
}

fn load_inputs(cache: &mut ForwardCache, x: &Activation) {
    cache.inputs.clear();
    let w = f64::from(x.window());
    cache.inputs.extend(
        x.counts()
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(j, &c)| (j, f64::from(c) / w)),
    );
}

/// Action-values for an activation.
pub fn q_values(readout: &ReadoutParams, x: &Activation) -> Result<Vec<f64>> {
    if x.len() != readout.n_in() {
        return Err(Error::DimensionMismatch {
            context: "activation",
            expected: readout.n_in(),
            actual: x.len(),
        });
    }
    let mut cache = ForwardCache::new(readout.hidden());
    load_inputs(&mut cache, x);
    let mut q = vec![0.0; readout.actions()];
    readout.forward_into(&mut cache, &mut q);
    Ok(q)
}

/// Bellman targets `r + gamma * max_a Q(x_next, a)`, or `r` for terminal
/// transitions, using the given (current) readout.
pub fn q_target(batch: &[&Transition], readout: &ReadoutParams, gamma: f64) -> Result<Vec<f64>> {
    batch
        .iter()
        .map(|t| {
            if t.terminal || gamma == 0.0 {
                Ok(t.reward)
            } else {
                let q = q_values(readout, &t.x_next)?;
                Ok(t.reward + gamma * q[argmax(&q)])
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub gamma: f64,
    pub batch_size: usize,
    /// Game steps before the first readout update.
    pub warmup: usize,
    pub buffer_capacity: usize,
    pub eps_start: f64,
    pub eps_final: f64,
    pub decay_fraction: f64,
    pub eval_epsilon: f64,
    pub epoch_length: usize,
    pub epochs: usize,
    /// Game steps per evaluation after each epoch; 0 skips evaluation.
    pub eval_steps: usize,
    pub clip_rewards: bool,
    pub rmsprop: RmsPropConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            gamma: 0.95,
            batch_size: 32,
            warmup: 100,
            buffer_capacity: 1_000_000,
            eps_start: 1.0,
            eps_final: 1e-3,
            decay_fraction: 0.1,
            eval_epsilon: 0.05,
            epoch_length: 1000,
            epochs: 100,
            eval_steps: 1000,
            clip_rewards: true,
            rmsprop: RmsPropConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn total_steps(&self) -> usize {
        self.epoch_length * self.epochs
    }

    pub fn schedule(&self) -> EpsilonSchedule {
        EpsilonSchedule {
            eps_start: self.eps_start,
            eps_final: self.eps_final,
            decay_fraction: self.decay_fraction,
            total_steps: self.total_steps(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |x: f64| (0.0..=1.0).contains(&x);
        if !prob(self.gamma) {
            return Err(Error::InvalidConfig("gamma must lie in [0, 1]".into()));
        }
        if !(prob(self.eps_start)
            && prob(self.eps_final)
            && prob(self.eval_epsilon)
            && prob(self.decay_fraction))
        {
            return Err(Error::InvalidConfig(
                "exploration settings must lie in [0, 1]".into(),
            ));
        }
        if self.eps_final > self.eps_start {
            return Err(Error::InvalidConfig(
                "eps_final must not exceed eps_start".into(),
            ));
        }
        if self.batch_size == 0 || self.buffer_capacity == 0 || self.epoch_length == 0 {
            return Err(Error::InvalidConfig(
                "batch, buffer and epoch sizes must be positive".into(),
            ));
        }
        if self.batch_size > self.warmup.max(1) * 1000 {
            return Err(Error::InvalidConfig(
                "batch size is implausibly larger than warmup".into(),
            ));
        }
        Ok(())
    }
}

/// Rewards collected by an evaluation rollout.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalStats {
    pub steps: usize,
    pub total_reward: f64,
    /// Accumulated reward of each completed gameplay.
    pub gameplay_rewards: Vec<f64>,
    /// Reward of a gameplay still running when the step budget ran out.
    pub unfinished: Option<f64>,
}

impl EvalStats {
    /// Per-gameplay rewards, falling back to the unfinished gameplay when
    /// none completed.
    pub fn rewards(&self) -> Vec<f64> {
        if self.gameplay_rewards.is_empty() {
            self.unfinished.into_iter().collect()
        } else {
            self.gameplay_rewards.clone()
        }
    }

    pub fn mean_reward(&self) -> f64 {
        let r = self.rewards();
        if r.is_empty() {
            0.0
        } else {
            r.iter().sum::<f64>() / r.len() as f64
        }
    }

    pub fn median_reward(&self) -> f64 {
        crate::metrics::median(&self.rewards()).unwrap_or(0.0)
    }
}

/// One evaluation step, for exporting action-value traces.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    pub gameplay: usize,
    pub q: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub terminal: bool,
}

impl TraceRow {
    /// Mean action-value.
    pub fn state_value(&self) -> f64 {
        self.q.iter().sum::<f64>() / self.q.len() as f64
    }
}

/// Runs the policy without learning. Rewards are not clipped.
pub fn evaluate<E: Environment, F: Featurizer, R: Rng + ?Sized>(
    env: &mut E,
    features: &mut F,
    readout: &ReadoutParams,
    steps: usize,
    eval_epsilon: f64,
    rng: &mut R,
    mut trace: Option<&mut Vec<TraceRow>>,
) -> Result<EvalStats> {
    let mut stats = EvalStats::default();
    env.reset();
    features.reset();
    let mut x = features.features(&env.encode()?)?;
    let mut running = 0.0;
    let mut gameplay = 0;
    for step in 0..steps {
        let q = q_values(readout, &x)?;
        let action = select_action(&q, eval_epsilon, rng);
        let r = env.step(action)?;
        running += r.reward;
        stats.total_reward += r.reward;
        if let Some(t) = trace.as_deref_mut() {
            t.push(TraceRow {
                step,
                gameplay,
                q,
                action,
                reward: r.reward,
                terminal: r.terminal,
            });
        }
        if r.terminal {
            stats.gameplay_rewards.push(running);
            running = 0.0;
            gameplay += 1;
            env.reset();
            features.reset();
        }
        stats.steps += 1;
        if step + 1 < steps {
            x = features.features(&env.encode()?)?;
        }
    }
    if running != 0.0 || stats.gameplay_rewards.is_empty() {
        stats.unfinished = Some(running);
    }
    Ok(stats)
}

/// The trainable part of the agent and its learning state.
#[derive(Debug, Clone)]
pub struct Agent {
    pub readout: ReadoutParams,
    pub opt: RmsPropState,
    pub buffer: ReplayBuffer,
    pub config: TrainConfig,
    rng: ChaCha8Rng,
    eval_rng: ChaCha8Rng,
    steps_done: usize,
    cache: ForwardCache,
    grads: ReadoutParams,
    q: Vec<f64>,
}

impl Agent {
    pub fn new(
        n_in: usize,
        hidden: usize,
        actions: usize,
        config: TrainConfig,
        seed: u64,
    ) -> Result<Self> {
        let mut init_rng = ChaCha8Rng::seed_from_u64(seed);
        let readout = init_readout(n_in, hidden, actions, &mut init_rng)?;
        Self::with_readout(readout, config, seed)
    }

    pub fn with_readout(readout: ReadoutParams, config: TrainConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let opt = RmsPropState::new(&readout, config.rmsprop);
        let mut grads = readout.clone();
        grads.fill(0.0);
        Ok(Self {
            cache: ForwardCache::new(readout.hidden()),
            q: vec![0.0; readout.actions()],
            buffer: ReplayBuffer::new(config.buffer_capacity)?,
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_AC71),
            eval_rng: ChaCha8Rng::seed_from_u64(seed ^ 0xE7A1_0000),
            steps_done: 0,
            readout,
            opt,
            grads,
            config,
        })
    }

    pub fn steps_done(&self) -> usize {
        self.steps_done
    }

    /// Epsilon-greedy action for `x` at the current exploration level.
    pub fn act(&mut self, x: &Activation, eps: f64) -> Result<usize> {
        let q = q_values(&self.readout, x)?;
        Ok(select_action(&q, eps, &mut self.rng))
    }

    /// One minibatch update: the mean gradient of the squared TD error over
    /// a uniform batch, applied in a single RMSProp step. Returns the mean
    /// of `0.5 * td^2`.
    pub fn update(&mut self) -> Result<f64> {
        let warmup = self.config.warmup.max(1);
        if self.buffer.len() < warmup {
            return Err(Error::Warmup {
                filled: self.buffer.len(),
                warmup,
            });
        }
        let batch = self.config.batch_size;
        let gamma = self.config.gamma;
        let scale = 1.0 / batch as f64;
        self.grads.fill(0.0);
        let mut loss = 0.0;
        for _ in 0..batch {
            let t = &self.buffer.items[self.rng.gen_range(0..self.buffer.len())];
            let target = if t.terminal {
                t.reward
            } else {
                load_inputs(&mut self.cache, &t.x_next);
                self.readout.forward_into(&mut self.cache, &mut self.q);
                t.reward + gamma * self.q[argmax(&self.q)]
            };
            load_inputs(&mut self.cache, &t.x_t);
            self.readout.forward_into(&mut self.cache, &mut self.q);
            let td = target - self.q[t.action];
            loss += 0.5 * td * td;
            self.readout
                .accumulate_gradient(&self.cache, t.action, td, scale, &mut self.grads);
        }
        rmsprop_update(&mut self.readout, &mut self.opt, &self.grads)?;
        Ok(loss * scale)
    }

    /// Runs the full training protocol. After each epoch the greedy policy
    /// is evaluated on `eval` (when given) and `on_epoch` receives the
    /// epoch's metrics.
    pub fn train<E, F>(
        &mut self,
        env: &mut E,
        features: &mut F,
        mut eval: Option<(&mut E, &mut F)>,
        mut on_epoch: impl FnMut(&EpochMetrics),
    ) -> Result<Vec<EpochMetrics>>
    where
        E: Environment,
        F: Featurizer,
    {
        if features.dim() != self.readout.n_in() || env.action_count() != self.readout.actions() {
            return Err(Error::InvalidConfig(format!(
                "agent readout {} -> {} does not fit features {} / actions {}",
                self.readout.n_in(),
                self.readout.actions(),
                features.dim(),
                env.action_count()
            )));
        }
        let schedule = self.config.schedule();
        let mut metrics = Vec::with_capacity(self.config.epochs);
        env.reset();
        features.reset();
        let mut x = Arc::new(features.features(&env.encode()?)?);
        let mut running = 0.0;
        let mut finished: Vec<f64> = Vec::new();
        let mut loss_sum = 0.0;
        let mut updates = 0usize;

        for step in 0..self.config.total_steps() {
            let eps = schedule.eps_at(step);
            let action = self.act(&x, eps)?;
            let r = env.step(action)?;
            running += r.reward;
            let reward = if self.config.clip_rewards {
                clip_reward(r.reward)
            } else {
                r.reward
            };
            let x_next = Arc::new(features.features(&env.encode()?)?);
            self.buffer.push(Transition {
                x_t: Arc::clone(&x),
                action,
                reward,
                x_next: Arc::clone(&x_next),
                terminal: r.terminal,
            });
            self.steps_done += 1;
            if step >= self.config.warmup {
                loss_sum += self.update()?;
                updates += 1;
            }
            if r.terminal {
                finished.push(running);
                running = 0.0;
                env.reset();
                features.reset();
                x = Arc::new(features.features(&env.encode()?)?);
            } else {
                x = x_next;
            }

            if (step + 1) % self.config.epoch_length == 0 {
                let epoch = (step + 1) / self.config.epoch_length;
                let eval_stats = match eval.as_mut() {
                    Some((eval_env, eval_features)) if self.config.eval_steps > 0 => {
                        Some(evaluate(
                            *eval_env,
                            *eval_features,
                            &self.readout,
                            self.config.eval_steps,
                            self.config.eval_epsilon,
                            &mut self.eval_rng,
                            None,
                        )?)
                    }
                    _ => None,
                };
                let m = EpochMetrics::new(
                    epoch,
                    &finished,
                    eval_stats.as_ref(),
                    schedule.eps_at(step + 1),
                    if updates > 0 {
                        loss_sum / updates as f64
                    } else {
                        0.0
                    },
                );
                on_epoch(&m);
                metrics.push(m);
                finished.clear();
                loss_sum = 0.0;
                updates = 0;
            }
        }
        Ok(metrics)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tagged(tag: u16) -> Transition {
        let x = Arc::new(Activation::from_counts(vec![tag], u16::MAX).unwrap());
        Transition {
            x_t: Arc::clone(&x),
            action: 0,
            reward: 0.0,
            x_next: x,
            terminal: false,
        }
    }

    #[test]
    fn buffer_evicts_oldest() {
        let mut b = ReplayBuffer::new(5).unwrap();
        for tag in 0..8 {
            b.push(tagged(tag));
            assert!(b.len() <= 5);
        }
        let tags: Vec<u16> = b.iter().map(|t| t.x_t.counts()[0]).collect();
        assert_eq!(tags, vec![3, 4, 5, 6, 7]);
    }

    #[test]
    fn schedule_values() {
        let s = EpsilonSchedule {
            eps_start: 1.0,
            eps_final: 1e-3,
            decay_fraction: 0.1,
            total_steps: 100_000,
        };
        assert_eq!(s.eps_at(0), 1.0);
        assert!((s.eps_at(5000) - 0.5005).abs() < 1e-12);
        assert_eq!(s.eps_at(10_000), 1e-3);
        assert_eq!(s.eps_at(99_999), 1e-3);
        let mut last = f64::INFINITY;
        for step in (0..20_000).step_by(7) {
            let e = s.eps_at(step);
            assert!(e <= last && (1e-3..=1.0).contains(&e));
            last = e;
        }
    }

    #[test]
    fn greedy_choice_and_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            assert_eq!(select_action(&[0.2, 0.7], 0.0, &mut rng), 1);
            assert_eq!(select_action(&[0.5, 0.5], 0.0, &mut rng), 0);
        }
    }

    #[test]
    fn uniform_exploration_passes_chi_square() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut counts = [0usize; 4];
        let n = 10_000;
        for _ in 0..n {
            counts[select_action(&[0.0, 5.0, 1.0, 2.0], 1.0, &mut rng)] += 1;
        }
        let expected = n as f64 / 4.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // 99.9% quantile of chi-square with 3 degrees of freedom
        assert!(chi2 < 16.27, "chi2 = {chi2}");
    }

    #[test]
    fn targets() {
        let mut readout = ReadoutParams::zeros(1, 1, 2).unwrap();
        readout.b2_mut().copy_from_slice(&[2.0, -1.0]);
        let x = Arc::new(Activation::zeros(1));
        let mk = |reward, terminal| Transition {
            x_t: Arc::clone(&x),
            action: 0,
            reward,
            x_next: Arc::clone(&x),
            terminal,
        };
        let (a, b) = (mk(1.0, false), mk(1.0, true));
        let batch = [&a, &b];
        assert_eq!(q_target(&batch, &readout, 0.0).unwrap(), vec![1.0, 1.0]);
        let y = q_target(&batch, &readout, 0.95).unwrap();
        assert!((y[0] - 2.9).abs() < 1e-12);
        assert_eq!(y[1], 1.0);
    }

    #[test]
    fn clipping() {
        assert_eq!(clip_reward(5.0), 1.0);
        assert_eq!(clip_reward(-3.0), -1.0);
        assert_eq!(clip_reward(0.25), 0.25);
    }

    #[test]
    fn update_refused_before_warmup() {
        let mut agent = Agent::new(1, 2, 2, TrainConfig::default(), 0).unwrap();
        agent.buffer.push(tagged(1));
        assert!(matches!(agent.update(), Err(Error::Warmup { .. })));
    }
}
