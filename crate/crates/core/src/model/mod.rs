//! Flock structure, interaction potential, delay kernel, initial histories
//! and leader forcing.

mod dag;
mod forcing;
mod history;
mod kernel;
mod potential;
mod scenario;

use thiserror::Error;

pub use dag::{
    leader_levels, validate_hierarchy, Agent, HierarchyReport, HierarchyViolation, LeaderLevels,
    LeadershipDag,
};
pub use forcing::{
    check_forcing_conditions, check_forcing_conditions_with_horizon, ForcingEvidence,
    ForcingFamily, ForcingReport, LeaderForcing, DEFAULT_FORCING_HORIZON,
};
pub use history::{AgentHistory, HistoryFn, HistorySpec};
pub use kernel::{kernel_mass, DelayKernel, KernelShape};
pub use potential::{
    check_divergent_tail, check_divergent_tail_with_horizon, eval_potential, PartialIntegral,
    Potential, TailDivergence, TailReport, DEFAULT_TAIL_HORIZON,
};
pub use scenario::{grid_ratio, Scenario};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("a flock needs at least one agent")]
    EmptyFlock,
    #[error("agent {agent} is out of range 1..={n_agents}")]
    AgentOutOfRange { agent: Agent, n_agents: usize },
    #[error("not a hierarchical-leadership flock: {}", join(.0))]
    InvalidHierarchy(Vec<HierarchyViolation>),
    #[error("potential evaluated at negative distance {0}")]
    NegativeDistance(f64),
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
    #[error("invalid delay kernel: {0}")]
    InvalidKernel(String),
    #[error("invalid history for agent {agent}: {reason}")]
    InvalidHistory { agent: Agent, reason: String },
    #[error("invalid forcing: {0}")]
    InvalidForcing(String),
    #[error("invalid scenario field `{field}`: {reason}")]
    InvalidScenario { field: &'static str, reason: String },
}

fn join(v: &[HierarchyViolation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
