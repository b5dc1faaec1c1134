//! Liquid State Machine toolkit for reinforcement learning: a sparse spiking
//! liquid of leaky integrate-and-fire neurons, Poisson input encoders, an MLP
//! readout trained by Q-learning with experience replay, benchmark
//! environments, and pre-training diagnostics.

pub mod agent;
pub mod config;
pub mod dense;
pub mod diagnostics;
pub mod encoding;
pub mod envs;
pub mod error;
pub mod experiment;
pub mod features;
pub mod metrics;
pub mod model;
pub mod readout;
pub mod reservoir;
pub mod sparse;

pub use agent::{Agent, EpsilonSchedule, EvalStats, ReplayBuffer, TrainConfig, Transition};
pub use config::ExperimentConfig;
pub use dense::DenseMatrix;
pub use diagnostics::{Complex, EigenOptions, FadingMemoryReport, StabilityReport};
pub use encoding::RateVector;
pub use envs::{CartPole, ChainEnv, Environment, Pacman, PacmanLayout, StepResult};
pub use error::{Error, Result};
pub use experiment::{run_seed, RunOutput};
pub use features::{Featurizer, IdentityFeatures};
pub use metrics::EpochMetrics;
pub use model::Model;
pub use readout::{ReadoutParams, RmsPropConfig, RmsPropState};
pub use reservoir::{
    Activation, Liquid, LiquidParams, LiquidState, LiquidTopology, TopologyConfig,
};
pub use sparse::SparseMatrix;
