//! Runs one seed of a configured experiment end to end.

use std::sync::Arc;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::agent::{evaluate, Agent, EvalStats, TraceRow};
use crate::config::{EnvKind, ExperimentConfig, FeatureKind};
use crate::envs::{CartPole, Environment, Pacman};
use crate::error::Result;
use crate::features::{Featurizer, IdentityFeatures};
use crate::metrics::EpochMetrics;
use crate::model::Model;
use crate::readout::ReadoutParams;
use crate::reservoir::{Liquid, LiquidTopology};

/// Independent random streams derived from one run seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Topology = 1,
    TrainLiquid = 2,
    EvalLiquid = 3,
    TrainEnv = 4,
    EvalEnv = 5,
    Agent = 6,
}

pub fn derive_seed(seed: u64, stream: Stream) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng.next_u64()
}

/// The liquid a run with `seed` uses.
pub fn topology_for(config: &ExperimentConfig, seed: u64) -> Result<LiquidTopology> {
    let mut tc = config.topology.clone();
    tc.seed = derive_seed(seed, Stream::Topology);
    LiquidTopology::from_seed(&tc)
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: Vec<EpochMetrics>,
    pub model: Model,
}

enum AnyFeatures {
    Liquid(Box<Liquid>),
    Identity(IdentityFeatures),
}

impl Featurizer for AnyFeatures {
    fn dim(&self) -> usize {
        match self {
            Self::Liquid(f) => f.dim(),
            Self::Identity(f) => f.dim(),
        }
    }

    fn input_dim(&self) -> usize {
        match self {
            Self::Liquid(f) => f.input_dim(),
            Self::Identity(f) => f.input_dim(),
        }
    }

    fn reset(&mut self) {
        match self {
            Self::Liquid(f) => f.reset(),
            Self::Identity(f) => f.reset(),
        }
    }

    fn features(
        &mut self,
        rates: &crate::encoding::RateVector,
    ) -> Result<crate::reservoir::Activation> {
        match self {
            Self::Liquid(f) => f.features(rates),
            Self::Identity(f) => f.features(rates),
        }
    }
}

fn features_for(
    config: &ExperimentConfig,
    topology: &Arc<LiquidTopology>,
    seed: u64,
) -> Result<AnyFeatures> {
    Ok(match config.run.features {
        FeatureKind::Liquid => AnyFeatures::Liquid(Box::new(Liquid::new(
            Arc::clone(topology),
            config.liquid,
            config.run.window_ms,
            seed,
        )?)),
        FeatureKind::Identity => {
            AnyFeatures::Identity(IdentityFeatures::new(config.topology.n_input))
        }
    })
}

fn cartpole(config: &ExperimentConfig, seed: u64) -> CartPole {
    CartPole::new(config.env.cartpole.clone(), seed)
}

fn pacman(config: &ExperimentConfig, seed: u64) -> Result<Pacman> {
    Ok(Pacman::new(
        config.env.pacman_layout()?,
        config.env.pacman.clone(),
        seed,
    ))
}

/// Trains one agent with `seed`, reporting each epoch to `on_epoch`.
pub fn run_seed(
    config: &ExperimentConfig,
    seed: u64,
    on_epoch: impl FnMut(&EpochMetrics),
) -> Result<RunOutput> {
    config.validate()?;
    let topology = Arc::new(topology_for(config, seed)?);
    let mut train_features =
        features_for(config, &topology, derive_seed(seed, Stream::TrainLiquid))?;
    let mut eval_features = features_for(config, &topology, derive_seed(seed, Stream::EvalLiquid))?;
    let mut agent = Agent::new(
        config.feature_dim(),
        config.readout.hidden,
        config.env.action_count(),
        config.agent.clone(),
        derive_seed(seed, Stream::Agent),
    )?;
    let (train_seed, eval_seed) = (
        derive_seed(seed, Stream::TrainEnv),
        derive_seed(seed, Stream::EvalEnv),
    );
    let metrics = match config.env.kind {
        EnvKind::Cartpole => agent.train(
            &mut cartpole(config, train_seed),
            &mut train_features,
            Some((&mut cartpole(config, eval_seed), &mut eval_features)),
            on_epoch,
        )?,
        EnvKind::Pacman => agent.train(
            &mut pacman(config, train_seed)?,
            &mut train_features,
            Some((&mut pacman(config, eval_seed)?, &mut eval_features)),
            on_epoch,
        )?,
    };
    drop(train_features);
    drop(eval_features);
    let topology = Arc::try_unwrap(topology).unwrap_or_else(|t| (*t).clone());
    Ok(RunOutput {
        metrics,
        model: Model {
            config: config.clone(),
            seed,
            steps_done: agent.steps_done(),
            topology,
            readout: agent.readout,
            opt: agent.opt,
        },
    })
}

/// Rolls out a saved model for `steps` game steps, recording Q-values.
pub fn evaluate_model(
    model: &Model,
    steps: usize,
    epsilon: f64,
    seed: u64,
) -> Result<(EvalStats, Vec<TraceRow>)> {
    let config = &model.config;
    let topology = Arc::new(model.topology.clone());
    let mut features = features_for(config, &topology, derive_seed(seed, Stream::EvalLiquid))?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, Stream::Agent));
    let mut trace = Vec::with_capacity(steps);
    let env_seed = derive_seed(seed, Stream::EvalEnv);
    let readout: &ReadoutParams = &model.readout;
    let stats = match config.env.kind {
        EnvKind::Cartpole => run_eval(
            &mut cartpole(config, env_seed),
            &mut features,
            readout,
            steps,
            epsilon,
            &mut rng,
            &mut trace,
        )?,
        EnvKind::Pacman => run_eval(
            &mut pacman(config, env_seed)?,
            &mut features,
            readout,
            steps,
            epsilon,
            &mut rng,
            &mut trace,
        )?,
    };
    Ok((stats, trace))
}

fn run_eval<E: Environment>(
    env: &mut E,
    features: &mut AnyFeatures,
    readout: &ReadoutParams,
    steps: usize,
    epsilon: f64,
    rng: &mut ChaCha8Rng,
    trace: &mut Vec<TraceRow>,
) -> Result<EvalStats> {
    evaluate(env, features, readout, steps, epsilon, rng, Some(trace))
}
