//! Gridworld Pacman with food, cherries and randomly wandering ghosts.
//!
//! Per step: Pacman moves (into walls = stay), collisions resolve, food or a
//! cherry is eaten, then every ghost takes a legal move and collisions resolve
//! again. Food, cherries and scared ghosts are worth +1 each; clearing the
//! last food adds +1 and ends the game. Touching an unscared ghost ends the
//! game without penalty.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layout::{Cell, PacmanLayout};
use super::{Environment, StepResult};
use crate::encoding::{encode_binary_planes, BinaryPlane, RateVector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PacmanAction {
    Up,
    Down,
    Left,
    Right,
    Stay,
}

impl PacmanAction {
    pub const ALL: [PacmanAction; 5] = [Self::Up, Self::Down, Self::Left, Self::Right, Self::Stay];

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn delta(self) -> (isize, isize) {
        match self {
            Self::Up => (-1, 0),
            Self::Down => (1, 0),
            Self::Left => (0, -1),
            Self::Right => (0, 1),
            Self::Stay => (0, 0),
        }
    }
}

const GHOST_MOVES: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PacmanConfig {
    /// Pacman steps a cherry keeps the ghosts scared.
    pub scared_steps: u32,
    /// Gameplay truncation; 0 disables it.
    pub max_steps: usize,
    pub phi_max: f64,
}

impl Default for PacmanConfig {
    fn default() -> Self {
        Self {
            scared_steps: 40,
            max_steps: 100,
            phi_max: 100.0,
        }
    }
}

/// How ghosts pick among their legal moves (listed up, down, left, right).
#[derive(Debug, Clone, PartialEq)]
pub enum GhostPolicy {
    UniformRandom,
    /// Each ghost move consumes one entry, taken modulo the number of legal
    /// moves; an exhausted script keeps ghosts in place.
    Scripted(VecDeque<usize>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ghost {
    pub pos: Cell,
    pub start: Cell,
    pub scared: bool,
}

/// Snapshot of the board.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PacmanObservation {
    pub pacman: Cell,
    pub ghosts: Vec<Ghost>,
    pub food: Vec<Cell>,
    pub cherries: Vec<Cell>,
    pub scared_remaining: u32,
}

#[derive(Debug, Clone)]
pub struct Pacman {
    layout: PacmanLayout,
    config: PacmanConfig,
    policy: GhostPolicy,
    rng: ChaCha8Rng,
    pacman: Cell,
    ghosts: Vec<Ghost>,
    food: Vec<bool>,
    cherries: Vec<bool>,
    food_left: usize,
    scared_remaining: u32,
    steps: usize,
    terminal: bool,
}

impl Pacman {
    pub fn new(layout: PacmanLayout, config: PacmanConfig, seed: u64) -> Self {
        Self::with_policy(layout, config, GhostPolicy::UniformRandom, seed)
    }

    pub fn with_policy(
        layout: PacmanLayout,
        config: PacmanConfig,
        policy: GhostPolicy,
        seed: u64,
    ) -> Self {
        let cells = layout.rows * layout.cols;
        let mut env = Self {
            pacman: layout.pacman,
            ghosts: Vec::new(),
            food: vec![false; cells],
            cherries: vec![false; cells],
            food_left: 0,
            scared_remaining: 0,
            steps: 0,
            terminal: false,
            layout,
            config,
            policy,
            rng: ChaCha8Rng::seed_from_u64(seed),
        };
        env.reset();
        env
    }

    pub fn layout(&self) -> &PacmanLayout {
        &self.layout
    }

    pub fn food_left(&self) -> usize {
        self.food_left
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    fn idx(&self, (r, c): Cell) -> usize {
        r * self.layout.cols + c
    }

    /// Largest total reward one gameplay can yield ignoring ghosts eaten.
    pub fn food_reward_bound(&self) -> usize {
        self.layout.food.len() + self.layout.cherries.len() + 1
    }

    // Returns true when Pacman dies.
    fn resolve_collisions(&mut self, reward: &mut f64) -> bool {
        let mut dead = false;
        for g in &mut self.ghosts {
            if g.pos == self.pacman {
                if g.scared {
                    *reward += 1.0;
                    g.pos = g.start;
                    g.scared = false;
                } else {
                    dead = true;
                }
            }
        }
        dead
    }

    fn move_ghosts(&mut self) {
        for gi in 0..self.ghosts.len() {
            let pos = self.ghosts[gi].pos;
            let legal: Vec<Cell> = GHOST_MOVES
                .iter()
                .filter_map(|&d| self.layout.neighbour(pos, d))
                .collect();
            if legal.is_empty() {
                continue;
            }
            let choice = match &mut self.policy {
                GhostPolicy::UniformRandom => Some(self.rng.gen_range(0..legal.len())),
                GhostPolicy::Scripted(script) => script.pop_front().map(|c| c % legal.len()),
            };
            if let Some(c) = choice {
                self.ghosts[gi].pos = legal[c];
            }
        }
    }

    fn finish(&mut self, reward: f64, terminal: bool) -> StepResult<PacmanObservation> {
        self.terminal = terminal;
        StepResult {
            observation: self.observation(),
            reward,
            terminal,
        }
    }

    /// Object planes in encoding order: pacman, food, cherry, ghost, scared ghost.
    pub fn planes(&self) -> [BinaryPlane; 5] {
        let (rows, cols) = (self.layout.rows, self.layout.cols);
        let mut planes: [BinaryPlane; 5] = std::array::from_fn(|_| BinaryPlane::new(rows, cols));
        planes[0].set(self.pacman.0, self.pacman.1, true);
        for r in 0..rows {
            for c in 0..cols {
                let i = r * cols + c;
                planes[1].set(r, c, self.food[i]);
                planes[2].set(r, c, self.cherries[i]);
            }
        }
        for g in &self.ghosts {
            planes[if g.scared { 4 } else { 3 }].set(g.pos.0, g.pos.1, true);
        }
        planes
    }
}

impl Environment for Pacman {
    type Observation = PacmanObservation;

    fn action_count(&self) -> usize {
        PacmanAction::ALL.len()
    }

    fn input_dim(&self) -> usize {
        5 * self.layout.rows * self.layout.cols
    }

    fn reset(&mut self) -> PacmanObservation {
        self.pacman = self.layout.pacman;
        self.ghosts = self
            .layout
            .ghosts
            .iter()
            .map(|&g| Ghost {
                pos: g,
                start: g,
                scared: false,
            })
            .collect();
        self.food.fill(false);
        self.cherries.fill(false);
        for &f in &self.layout.food {
            let i = self.idx(f);
            self.food[i] = true;
        }
        for &c in &self.layout.cherries {
            let i = self.idx(c);
            self.cherries[i] = true;
        }
        self.food_left = self.layout.food.len();
        self.scared_remaining = 0;
        self.steps = 0;
        self.terminal = false;
        self.observation()
    }

    fn step(&mut self, action: usize) -> Result<StepResult<PacmanObservation>> {
        if self.terminal {
            return Err(Error::StepAfterTerminal);
        }
        let action = PacmanAction::from_index(action).ok_or(Error::IndexOutOfRange {
            context: "pacman action",
            index: action,
            len: PacmanAction::ALL.len(),
        })?;
        if self.scared_remaining > 0 {
            self.scared_remaining -= 1;
            if self.scared_remaining == 0 {
                self.ghosts.iter_mut().for_each(|g| g.scared = false);
            }
        }
        self.steps += 1;
        let truncated = self.config.max_steps > 0 && self.steps >= self.config.max_steps;

        let mut reward = 0.0;
        if let Some(next) = self.layout.neighbour(self.pacman, action.delta()) {
            self.pacman = next;
        }
        if self.resolve_collisions(&mut reward) {
            return Ok(self.finish(reward, true));
        }
        let here = self.idx(self.pacman);
        if self.food[here] {
            self.food[here] = false;
            self.food_left -= 1;
            reward += 1.0;
            if self.food_left == 0 {
                return Ok(self.finish(reward + 1.0, true));
            }
        }
        if self.cherries[here] {
            self.cherries[here] = false;
            reward += 1.0;
            self.scared_remaining = self.config.scared_steps;
            let scared = self.scared_remaining > 0;
            self.ghosts.iter_mut().for_each(|g| g.scared = scared);
        }
        self.move_ghosts();
        let dead = self.resolve_collisions(&mut reward);
        Ok(self.finish(reward, dead || truncated))
    }

    fn observation(&self) -> PacmanObservation {
        let cells = |mask: &[bool]| -> Vec<Cell> {
            (0..mask.len())
                .filter(|&i| mask[i])
                .map(|i| (i / self.layout.cols, i % self.layout.cols))
                .collect()
        };
        PacmanObservation {
            pacman: self.pacman,
            ghosts: self.ghosts.clone(),
            food: cells(&self.food),
            cherries: cells(&self.cherries),
            scared_remaining: self.scared_remaining,
        }
    }

    fn encode(&self) -> Result<RateVector> {
        encode_binary_planes(&self.planes(), self.config.phi_max)
    }

    fn is_terminal(&self) -> bool {
        self.terminal
    }
}
