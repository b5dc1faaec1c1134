//! Classic cart-pole balancing with one-hot level encoding of the state.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Environment, StepResult};
use crate::encoding::{encode_levels, Range, RateVector};
use crate::error::{Error, Result};

pub const GRAVITY: f64 = 9.8;
pub const CART_MASS: f64 = 1.0;
pub const POLE_MASS: f64 = 0.1;
pub const POLE_HALF_LENGTH: f64 = 0.5;
pub const FORCE: f64 = 10.0;
pub const TAU: f64 = 0.02;
pub const X_LIMIT: f64 = 2.4;
/// Twelve degrees.
pub const ANGLE_LIMIT: f64 = 12.0 * std::f64::consts::PI / 180.0;

pub const ACTION_LEFT: usize = 0;
pub const ACTION_RIGHT: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartPoleState {
    pub chi: f64,
    pub chi_dot: f64,
    pub phi: f64,
    pub phi_dot: f64,
}

impl CartPoleState {
    pub fn as_array(&self) -> [f64; 4] {
        [self.chi, self.chi_dot, self.phi, self.phi_dot]
    }

    pub fn out_of_bounds(&self) -> bool {
        self.chi.abs() > X_LIMIT || self.phi.abs() > ANGLE_LIMIT
    }
}

/// Applies one Euler step of the cart-pole equations of motion.
pub fn dynamics(s: CartPoleState, action: usize) -> CartPoleState {
    let force = if action == ACTION_RIGHT {
        FORCE
    } else {
        -FORCE
    };
    let total_mass = CART_MASS + POLE_MASS;
    let pole_mass_length = POLE_MASS * POLE_HALF_LENGTH;
    let (sin, cos) = s.phi.sin_cos();
    let temp = (force + pole_mass_length * s.phi_dot * s.phi_dot * sin) / total_mass;
    let phi_acc = (GRAVITY * sin - cos * temp)
        / (POLE_HALF_LENGTH * (4.0 / 3.0 - POLE_MASS * cos * cos / total_mass));
    let chi_acc = temp - pole_mass_length * phi_acc * cos / total_mass;
    CartPoleState {
        chi: s.chi + TAU * s.chi_dot,
        chi_dot: s.chi_dot + TAU * chi_acc,
        phi: s.phi + TAU * s.phi_dot,
        phi_dot: s.phi_dot + TAU * phi_acc,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CartPoleConfig {
    pub max_steps: usize,
    pub levels: usize,
    pub phi_max: f64,
    /// Encoding half-ranges for (chi, chi_dot, phi, phi_dot).
    pub ranges: [f64; 4],
}

impl Default for CartPoleConfig {
    fn default() -> Self {
        Self {
            max_steps: 200,
            levels: 10,
            phi_max: 100.0,
            ranges: [2.5, 0.5, 0.28, 0.88],
        }
    }
}

#[derive(Debug, Clone)]
pub struct CartPole {
    config: CartPoleConfig,
    state: CartPoleState,
    steps: usize,
    terminal: bool,
    rng: ChaCha8Rng,
}

impl CartPole {
    pub fn new(config: CartPoleConfig, seed: u64) -> Self {
        let mut env = Self {
            config,
            state: CartPoleState {
                chi: 0.0,
                chi_dot: 0.0,
                phi: 0.0,
                phi_dot: 0.0,
            },
            steps: 0,
            terminal: false,
            rng: ChaCha8Rng::seed_from_u64(seed),
        };
        env.reset();
        env
    }

    pub fn state(&self) -> CartPoleState {
        self.state
    }

    /// Overrides the physical state (used by tests and tracing).
    pub fn set_state(&mut self, state: CartPoleState) {
        self.state = state;
        self.terminal = false;
    }

    pub fn steps(&self) -> usize {
        self.steps
    }
}

impl Environment for CartPole {
    type Observation = CartPoleState;

    fn action_count(&self) -> usize {
        2
    }

    fn input_dim(&self) -> usize {
        4 * self.config.levels
    }

    fn reset(&mut self) -> CartPoleState {
        let mut draw = || self.rng.gen_range(-0.05..0.05);
        self.state = CartPoleState {
            chi: draw(),
            chi_dot: draw(),
            phi: draw(),
            phi_dot: draw(),
        };
        self.steps = 0;
        self.terminal = false;
        self.state
    }

    fn step(&mut self, action: usize) -> Result<StepResult<CartPoleState>> {
        if self.terminal {
            return Err(Error::StepAfterTerminal);
        }
        if action >= 2 {
            return Err(Error::IndexOutOfRange {
                context: "cart-pole action",
                index: action,
                len: 2,
            });
        }
        self.state = dynamics(self.state, action);
        self.steps += 1;
        self.terminal = self.state.out_of_bounds() || self.steps >= self.config.max_steps;
        Ok(StepResult {
            observation: self.state,
            reward: 1.0,
            terminal: self.terminal,
        })
    }

    fn observation(&self) -> CartPoleState {
        self.state
    }

    fn encode(&self) -> Result<RateVector> {
        let ranges = self.config.ranges.map(Range::symmetric);
        encode_levels(
            &self.state.as_array(),
            &ranges,
            self.config.levels,
            self.config.phi_max,
        )
    }

    fn is_terminal(&self) -> bool {
        self.terminal
    }
}
