//! Deterministic chain MDP used to validate the learning loop against
//! tabular value iteration.
//!
//! States `0..n`; action 0 moves left (clamped at 0), action 1 moves right.
//! Entering state `n - 1` pays 1 and ends the gameplay. Gameplays start in a
//! uniformly random non-terminal state.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Environment, StepResult};
use crate::encoding::RateVector;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct ChainEnv {
    n: usize,
    state: usize,
    terminal: bool,
    rng: ChaCha8Rng,
}

impl ChainEnv {
    pub fn new(n: usize, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidConfig(
                "a chain needs at least two states".into(),
            ));
        }
        let mut env = Self {
            n,
            state: 0,
            terminal: false,
            rng: ChaCha8Rng::seed_from_u64(seed),
        };
        env.reset();
        Ok(env)
    }

    pub fn states(&self) -> usize {
        self.n
    }

    /// Deterministic model: `(next state, reward, terminal)`.
    pub fn transition(n: usize, state: usize, action: usize) -> (usize, f64, bool) {
        let next = if action == 0 {
            state.saturating_sub(1)
        } else {
            (state + 1).min(n - 1)
        };
        if next == n - 1 {
            (next, 1.0, true)
        } else {
            (next, 0.0, false)
        }
    }

    /// One-hot rate vector (1 Hz scale) for `state`.
    pub fn one_hot(n: usize, state: usize) -> RateVector {
        let mut rates = vec![0.0; n];
        rates[state] = 1.0;
        RateVector::new(rates, 1.0).expect("unit rates are valid")
    }
}

impl Environment for ChainEnv {
    type Observation = usize;

    fn action_count(&self) -> usize {
        2
    }

    fn input_dim(&self) -> usize {
        self.n
    }

    fn reset(&mut self) -> usize {
        self.state = self.rng.gen_range(0..self.n - 1);
        self.terminal = false;
        self.state
    }

    fn step(&mut self, action: usize) -> Result<StepResult<usize>> {
        if self.terminal {
            return Err(Error::StepAfterTerminal);
        }
        if action >= 2 {
            return Err(Error::IndexOutOfRange {
                context: "chain action",
                index: action,
                len: 2,
            });
        }
        let (next, reward, terminal) = Self::transition(self.n, self.state, action);
        self.state = next;
        self.terminal = terminal;
        Ok(StepResult {
            observation: next,
            reward,
            terminal,
        })
    }

    fn observation(&self) -> usize {
        self.state
    }

    fn encode(&self) -> Result<RateVector> {
        Ok(Self::one_hot(self.n, self.state))
    }

    fn is_terminal(&self) -> bool {
        self.terminal
    }
}
