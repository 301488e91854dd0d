//! Fixed-step integration of the delayed flocking system.
//!
//! The main scheme is Heun's predictor–corrector with the delay integral
//! taken by the composite trapezoid rule on the `m + 1 = τ/h + 1` stored
//! samples of the window. [`simulate_oracle`] is an independent explicit
//! Euler / left-rectangle discretization used for cross-checks.

mod buffer;
mod coupling;
mod export;
mod oracle;
mod stepper;

use thiserror::Error;

use crate::model::{Agent, ModelError};

pub use buffer::{init_history, HistoryBuffer};
pub use coupling::delay_coupling;
pub use export::{read_trajectory_csv, trajectory_csv_header, write_trajectory_csv};
pub use oracle::simulate_oracle;
pub use stepper::{simulate, simulate_with, step, Stepper};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegrationError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("history of agent {agent} is undefined at s = {s}")]
    HistoryUndefined { agent: Agent, s: f64 },
    #[error("agent {agent} is out of range 1..={n_agents}")]
    AgentOutOfRange { agent: Agent, n_agents: usize },
    #[error("history window ends at t = {window_end}, expected t = {t}")]
    WindowMismatch { t: f64, window_end: f64 },
    #[error("history window holds {found} samples, expected {expected}")]
    WindowLength { found: usize, expected: usize },
    #[error("lookup at t = {s} outside the stored window [{start}, {end}]")]
    OutsideWindow { s: f64, start: f64, end: f64 },
    #[error("blow-up detected at t = {t}")]
    BlowUp { t: f64 },
    #[error("step would pass t_end = {t_end}")]
    PastEnd { t_end: f64 },
    #[error("oracle refinement must be at least 1")]
    InvalidRefinement,
    #[error("trajectory csv: {0}")]
    Csv(String),
}

/// Positions and velocities of all agents at one instant, stored
/// agent-major: component `k` of agent `i` sits at `(i - 1) * dim + k`.
#[derive(Clone, Debug, PartialEq)]
pub struct FlockState {
    pub t: f64,
    pub n_agents: usize,
    pub dim: usize,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

impl FlockState {
    pub fn zeros(t: f64, n_agents: usize, dim: usize) -> Self {
        Self {
            t,
            n_agents,
            dim,
            x: vec![0.0; n_agents * dim],
            v: vec![0.0; n_agents * dim],
        }
    }

    pub fn position(&self, agent: Agent) -> &[f64] {
        let k = (agent - 1) * self.dim;
        &self.x[k..k + self.dim]
    }

    pub fn velocity(&self, agent: Agent) -> &[f64] {
        let k = (agent - 1) * self.dim;
        &self.v[k..k + self.dim]
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.v).all(|c| c.is_finite())
    }
}

/// States on `t = 0, h, …, t_end`, plus the sampled initial window on `[-τ, 0]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub h: f64,
    pub history: Vec<FlockState>,
    pub states: Vec<FlockState>,
}

impl Trajectory {
    pub fn n_agents(&self) -> usize {
        self.states.first().map_or(0, |s| s.n_agents)
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, |s| s.dim)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.states.iter().map(|s| s.t)
    }

    pub fn last(&self) -> Option<&FlockState> {
        self.states.last()
    }

    /// Maximum speed over the history samples.
    pub fn history_speed_bound(&self) -> f64 {
        max_speed(&self.history)
    }
}

/// `max_{i, state} |v_i|`.
pub fn max_speed<'a>(states: impl IntoIterator<Item = &'a FlockState>) -> f64 {
    states
        .into_iter()
        .flat_map(|s| s.v.chunks(s.dim).map(crate::numeric::norm))
        .fold(0.0, f64::max)
}
