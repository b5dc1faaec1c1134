//! Reinforcement-learning environments and the interface the agent drives.

pub mod cartpole;
pub mod chain;
pub mod layout;
pub mod pacman;

use crate::encoding::RateVector;
use crate::error::Result;

pub use cartpole::{CartPole, CartPoleConfig, CartPoleState};
pub use chain::ChainEnv;
pub use layout::{load_layout, PacmanLayout};
pub use pacman::{Pacman, PacmanAction, PacmanConfig};

/// Outcome of one environment transition.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult<O> {
    pub observation: O,
    pub reward: f64,
    pub terminal: bool,
}

/// A sequential, single-owner environment. Every stochastic element draws
/// from a generator owned by the environment, so a (seed, action sequence)
/// pair fully determines a trajectory.
pub trait Environment {
    type Observation: Clone;

    fn action_count(&self) -> usize;

    /// Length of the encoded rate vector.
    fn input_dim(&self) -> usize;

    /// Starts a new gameplay and returns its first observation.
    fn reset(&mut self) -> Self::Observation;

    fn step(&mut self, action: usize) -> Result<StepResult<Self::Observation>>;

    fn observation(&self) -> Self::Observation;

    /// Poisson rates describing the current observation.
    fn encode(&self) -> Result<RateVector>;

    fn is_terminal(&self) -> bool;
}
