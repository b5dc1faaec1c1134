//! Experiment configuration files (TOML) and the bundled presets.
//!
//! ```toml
//! name = "cartpole"
//!
//! [env]
//! kind = "cartpole"
//!
//! [topology]
//! n_input = 40
//! n_exc = 120
//! n_inh = 30
//! k_in = 3
//! c_rec = 4
//!
//! [readout]
//! hidden = 32
//!
//! [agent]
//! epochs = 100
//! ```
//!
//! Unknown keys are rejected everywhere. Omitted sections and keys take the
//! defaults of the corresponding types.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agent::TrainConfig;
use crate::envs::cartpole::CartPoleConfig;
use crate::envs::layout::{bundled, load_layout, PacmanLayout};
use crate::envs::pacman::PacmanConfig;
use crate::error::{Error, Result};
use crate::reservoir::{LiquidParams, TopologyConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvKind {
    Cartpole,
    Pacman,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvSection {
    pub kind: EnvKind,
    /// Pacman board: a bundled name (`small_7x7`, `medium_7x17`,
    /// `large_17x19`) or the layout text itself.
    #[serde(default = "default_layout")]
    pub layout: String,
    #[serde(default)]
    pub cartpole: CartPoleConfig,
    #[serde(default)]
    pub pacman: PacmanConfig,
}

fn default_layout() -> String {
    "small_7x7".into()
}

impl EnvSection {
    pub fn pacman_layout(&self) -> Result<PacmanLayout> {
        load_layout(bundled::by_name(&self.layout).unwrap_or(&self.layout))
    }

    /// Length of the encoded observation.
    pub fn input_dim(&self) -> Result<usize> {
        Ok(match self.kind {
            EnvKind::Cartpole => 4 * self.cartpole.levels,
            EnvKind::Pacman => {
                let l = self.pacman_layout()?;
                5 * l.rows * l.cols
            }
        })
    }

    pub fn action_count(&self) -> usize {
        match self.kind {
            EnvKind::Cartpole => 2,
            EnvKind::Pacman => 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    #[default]
    Liquid,
    /// Feed the encoded observation straight to the readout.
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReadoutSection {
    pub hidden: usize,
}

impl Default for ReadoutSection {
    fn default() -> Self {
        Self { hidden: 32 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    /// Liquid simulation time per game step (ms).
    pub window_ms: f64,
    pub features: FeatureKind,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            window_ms: 100.0,
            features: FeatureKind::Liquid,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsSection {
    pub stimulus_ms: f64,
    pub silence_ms: f64,
    /// Fraction of inputs active in the random probe stimulus.
    pub stimulus_density: f64,
    /// Number of excitatory neurons whose membrane potential is traced.
    pub trace_neurons: usize,
    pub trace_ms: f64,
    pub max_order: usize,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        Self {
            stimulus_ms: 200.0,
            silence_ms: 300.0,
            stimulus_density: 0.5,
            trace_neurons: 10,
            trace_ms: 500.0,
            max_order: 4000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub env: EnvSection,
    pub topology: TopologyConfig,
    #[serde(default)]
    pub liquid: LiquidParams,
    #[serde(default)]
    pub readout: ReadoutSection,
    #[serde(default)]
    pub agent: TrainConfig,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn preset(name: &str) -> Result<Self> {
        let text = presets::get(name).ok_or_else(|| {
            Error::InvalidConfig(format!(
                "unknown preset `{name}` (available: {})",
                presets::NAMES.join(", ")
            ))
        })?;
        Self::from_toml(text)
    }

    pub fn validate(&self) -> Result<()> {
        self.topology.validate()?;
        self.liquid.validate()?;
        self.liquid.window_steps(self.run.window_ms)?;
        self.agent.validate()?;
        if self.readout.hidden == 0 {
            return Err(Error::InvalidConfig(
                "readout.hidden must be positive".into(),
            ));
        }
        if self.env.kind == EnvKind::Cartpole && self.env.cartpole.levels == 0 {
            return Err(Error::InvalidConfig(
                "env.cartpole.levels must be positive".into(),
            ));
        }
        let dim = self.env.input_dim()?;
        if self.topology.n_input != dim {
            return Err(Error::InvalidConfig(format!(
                "topology.n_input is {} but the {:?} encoding produces {dim} inputs",
                self.topology.n_input, self.env.kind
            )));
        }
        Ok(())
    }

    /// Width of the readout input.
    pub fn feature_dim(&self) -> usize {
        match self.run.features {
            FeatureKind::Liquid => self.topology.n_exc,
            FeatureKind::Identity => self.topology.n_input,
        }
    }

    /// Non-fatal oddities worth reporting before a run.
    pub fn warnings(&self) -> Vec<String> {
        self.topology.warnings()
    }
}

pub mod presets {
    pub const NAMES: [&str; 6] = [
        "cartpole",
        "cartpole-sparse",
        "pacman-7x7",
        "pacman-7x17",
        "pacman-17x19",
        "unbalanced-500",
    ];

    pub fn get(name: &str) -> Option<&'static str> {
        Some(match name {
            "cartpole" => include_str!("../presets/cartpole.toml"),
            "cartpole-sparse" => include_str!("../presets/cartpole-sparse.toml"),
            "pacman-7x7" => include_str!("../presets/pacman-7x7.toml"),
            "pacman-7x17" => include_str!("../presets/pacman-7x17.toml"),
            "pacman-17x19" => include_str!("../presets/pacman-17x19.toml"),
            "unbalanced-500" => include_str!("../presets/unbalanced-500.toml"),
            _ => return None,
        })
    }
}
