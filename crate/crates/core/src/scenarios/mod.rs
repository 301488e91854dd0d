//! Scenario construction: seeded random generators, TOML scenario files
//! and run bundles.

mod bundle;
mod file;
mod generator;

use std::io;
use std::path::Path;

use thiserror::Error;

use crate::integrator::IntegrationError;
use crate::model::ModelError;

pub use bundle::{save_run, RunSummary, REPORT_FILE, SCENARIO_FILE, TRAJECTORY_FILE};
pub use file::{load_generator_spec, load_scenario, save_scenario, scenario_from_toml, scenario_to_toml};
pub use generator::{generate, GeneratorSpec, Topology, MAX_AGENTS, MAX_DIM, TAU_RANGE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("schema error{}{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default(), field.as_ref().map(|f| format!(", field `{f}`")).unwrap_or_default())]
    Schema {
        line: Option<usize>,
        field: Option<String>,
        message: String,
    },
    #[error("cannot serialize scenario: {0}")]
    Unserializable(String),
    #[error("invalid generator spec: {0}")]
    Generator(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Integration(#[from] IntegrationError),
}

impl ScenarioError {
    pub(crate) fn io(path: &Path, e: io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}
