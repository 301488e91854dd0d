//! Probes that check qualitative properties of the delayed dynamics on
//! computed trajectories: velocity positivity, invariance of the initial
//! velocity ball, the two-agent exponential bound, Lyapunov dissipation,
//! exponential consensus and convergence under a free-will leader.

mod bounds;
mod consensus;
mod decay;
mod free_will;
mod leaders;
mod lyapunov;

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::integrator::{IntegrationError, Trajectory};
use crate::model::Agent;

pub use bounds::{
    ball_invariance_probe, check_two_flock_bound, check_two_flock_bound_series,
    positivity_preconditions, positivity_probe, positivity_of, BallInvarianceReport, PositivityReport, TwoFlockBoundReport,
    BOUND_TOLERANCE, INVARIANCE_TOLERANCE,
};
pub use consensus::{consensus_series, ConsensusSeries};
pub use decay::{default_decay_window, fit_decay_rate, fit_decay_rate_with_floor, DecayFit, DecayWindow, DECAY_FLOOR};
pub use free_will::{free_will_consensus_probe, FreeWillReport, FreeWillStatus};
pub use leaders::{hat_leader_series, HatLeaderSample};
pub use lyapunov::{lyapunov_probe, lyapunov_probe_series, LyapunovReport, Primitive};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error(transparent)]
    Integration(#[from] IntegrationError),
    #[error("insufficient decay data: {found} uncensored samples in window, need {needed}")]
    InsufficientDecayData { found: usize, needed: usize },
    #[error("probe needs a two-agent flock, got {n_agents} agents")]
    NotTwoFlock { n_agents: usize },
    #[error("probe assumes no leader forcing")]
    ForcingPresent,
    #[error("probe needs a scalar (d = 1) flock, got d = {dim}")]
    NotScalar { dim: usize },
    #[error("velocity history of agent {agent} is negative ({value}) at s = {s}")]
    NegativeHistory { agent: Agent, s: f64, value: f64 },
    #[error("agent {agent} has no leaders")]
    NoLeaders { agent: Agent },
    #[error("agent {agent} is out of range 1..={n_agents}")]
    AgentOutOfRange { agent: Agent, n_agents: usize },
    #[error("trajectory is empty")]
    EmptyTrajectory,
    #[error("trajectory has no samples at or after t = {t}")]
    NothingAfter { t: f64 },
    #[error("series lengths differ")]
    LengthMismatch,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeStatus {
    Pass,
    Fail,
    Skipped,
}

/// Uniform, serializable outcome of any probe.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeReport {
    pub probe: String,
    pub status: ProbeStatus,
    pub message: String,
    pub metrics: BTreeMap<String, f64>,
}

impl ProbeReport {
    pub fn new(probe: &str, passed: bool, message: impl Into<String>) -> Self {
        Self {
            probe: probe.to_string(),
            status: if passed { ProbeStatus::Pass } else { ProbeStatus::Fail },
            message: message.into(),
            metrics: BTreeMap::new(),
        }
    }

    pub fn skipped(probe: &str, reason: impl Into<String>) -> Self {
        Self {
            probe: probe.to_string(),
            status: ProbeStatus::Skipped,
            message: reason.into(),
            metrics: BTreeMap::new(),
        }
    }

    pub fn metric(mut self, key: &str, value: f64) -> Self {
        self.metrics.insert(key.to_string(), value);
        self
    }
}

impl fmt::Display for ProbeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = match self.status {
            ProbeStatus::Pass => "PASS",
            ProbeStatus::Fail => "FAIL",
            ProbeStatus::Skipped => "SKIP",
        };
        write!(f, "[{status}] {}: {}", self.probe, self.message)?;
        for (k, v) in &self.metrics {
            write!(f, "\n    {k} = {v:e}")?;
        }
        Ok(())
    }
}

/// Relative discretization slack `C·h` from a main/oracle pair on the same
/// grid: the largest velocity disagreement divided by the initial velocity
/// spread (or by 1 if the flock starts in consensus).
pub fn calibrate_slack(main: &Trajectory, oracle: &Trajectory) -> f64 {
    let gap = max_velocity_gap(main, oracle);
    let spread = main
        .states
        .first()
        .map(consensus::velocity_diameter)
        .unwrap_or(0.0);
    gap / if spread > 0.0 { spread } else { 1.0 }
}

/// Relative slack `C·h` for bounds that scale with the velocity spread:
/// the largest relative disagreement in velocity diameter, over samples
/// where the oracle spread is above `1e-9` of its peak.
pub fn calibrate_relative_slack(main: &Trajectory, oracle: &Trajectory) -> f64 {
    let a: Vec<f64> = main.states.iter().map(consensus::velocity_diameter).collect();
    let b: Vec<f64> = oracle.states.iter().map(consensus::velocity_diameter).collect();
    let floor = 1e-9 * b.iter().copied().fold(0.0, f64::max);
    a.iter()
        .zip(&b)
        .filter(|(_, &q)| q > floor)
        .map(|(p, q)| (p - q).abs() / q)
        .fold(0.0, f64::max)
}

/// `max_{t, i, k} |v_main - v_oracle|` over common grid times.
pub fn max_velocity_gap(a: &Trajectory, b: &Trajectory) -> f64 {
    a.states
        .iter()
        .zip(&b.states)
        .flat_map(|(p, q)| p.v.iter().zip(&q.v).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}

/// Index of the first stored state with `t >= from` (up to rounding).
pub(crate) fn first_index_from(traj: &Trajectory, from: f64) -> Result<usize, DiagnosticsError> {
    let slack = 1e-9 * traj.h.max(f64::MIN_POSITIVE);
    traj.states
        .iter()
        .position(|s| s.t >= from - slack)
        .ok_or(DiagnosticsError::NothingAfter { t: from })
}
