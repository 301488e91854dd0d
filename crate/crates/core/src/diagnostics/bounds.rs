use serde::Serialize;

use super::{first_index_from, DiagnosticsError, ProbeReport};
use crate::integrator::{init_history, max_speed, simulate, FlockState, Trajectory};
use crate::model::{Potential, Scenario};
use crate::numeric::{distance, norm};

/// Relative tolerance on the two-agent exponential bound, before slack.
pub const BOUND_TOLERANCE: f64 = 1e-6;

/// Absolute tolerance on positivity and velocity-ball checks.
pub const INVARIANCE_TOLERANCE: f64 = 1e-8;

fn history_states(traj: &Trajectory, scenario: &Scenario) -> Result<Vec<FlockState>, DiagnosticsError> {
    if traj.history.is_empty() {
        Ok(init_history(scenario)?.samples().cloned().collect())
    } else {
        Ok(traj.history.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TwoFlockBoundReport {
    /// `ŷ_M = sup_{t≥τ} |x₂ - x₁| + 2τD0`, measured.
    pub y_hat_max: f64,
    pub d0: f64,
    pub mu0: f64,
    /// `μ0 ψ(ŷ_M)`
    pub rate: f64,
    /// `|w₂(τ)|`
    pub w_at_tau: f64,
    /// `max_t |w₂(t)| / bound(t)` over samples with a positive bound.
    pub worst_ratio: f64,
    pub tolerance: f64,
    pub violations: usize,
    pub first_violation: Option<f64>,
    pub passed: bool,
}

impl TwoFlockBoundReport {
    pub fn to_report(&self) -> ProbeReport {
        let msg = if self.passed {
            "|w2(t)| stays under the exponential bound".to_string()
        } else {
            format!(
                "{} samples exceed the bound, first at t = {}",
                self.violations,
                self.first_violation.unwrap_or(f64::NAN)
            )
        };
        ProbeReport::new("two_flock_bound", self.passed, msg)
            .metric("y_hat_max", self.y_hat_max)
            .metric("rate", self.rate)
            .metric("worst_ratio", self.worst_ratio)
            .metric("tolerance", self.tolerance)
    }
}

/// Checks `|w(t)| ≤ (1 + tol) e^{-μ0 ψ(ŷ_M)(t-τ)} |w(τ)|` for `t ≥ τ` on
/// precomputed series `|y(t)|`, `|w(t)|`.
#[allow(clippy::too_many_arguments)]
pub fn check_two_flock_bound_series(
    times: &[f64],
    y_norm: &[f64],
    w_norm: &[f64],
    tau: f64,
    d0: f64,
    mu0: f64,
    potential: &Potential,
    tol: f64,
) -> Result<TwoFlockBoundReport, DiagnosticsError> {
    if times.len() != y_norm.len() || times.len() != w_norm.len() {
        return Err(DiagnosticsError::LengthMismatch);
    }
    let h = if times.len() > 1 { times[1] - times[0] } else { 1.0 };
    let start = times
        .iter()
        .position(|&t| t >= tau - 1e-9 * h)
        .ok_or(DiagnosticsError::NothingAfter { t: tau })?;
    let y_hat_max = y_norm[start..].iter().copied().fold(0.0, f64::max) + 2.0 * tau * d0;
    let rate = mu0 * potential.rate(y_hat_max);
    let (t0, w0) = (times[start], w_norm[start]);

    let mut worst_ratio: f64 = 0.0;
    let mut violations = 0;
    let mut first_violation = None;
    for k in start..times.len() {
        let bound = (-rate * (times[k] - t0)).exp() * w0;
        if bound > 0.0 {
            worst_ratio = worst_ratio.max(w_norm[k] / bound);
        }
        if w_norm[k] > (1.0 + tol) * bound {
            violations += 1;
            first_violation.get_or_insert(times[k]);
        }
    }
    Ok(TwoFlockBoundReport {
        y_hat_max,
        d0,
        mu0,
        rate,
        w_at_tau: w0,
        worst_ratio,
        tolerance: tol,
        violations,
        first_violation,
        passed: violations == 0,
    })
}

/// Exponential decay of `w₂ = v₂ - v₁` in an unforced two-agent flock,
/// with `ŷ_M` measured from the run. `slack` is the relative
/// discretization allowance `C·h` added to [`BOUND_TOLERANCE`], see
/// [`calibrate_relative_slack`](super::calibrate_relative_slack).
pub fn check_two_flock_bound(
    traj: &Trajectory,
    scenario: &Scenario,
    slack: f64,
) -> Result<TwoFlockBoundReport, DiagnosticsError> {
    if scenario.n_agents() != 2 {
        return Err(DiagnosticsError::NotTwoFlock {
            n_agents: scenario.n_agents(),
        });
    }
    if !scenario.forcing.is_zero() {
        return Err(DiagnosticsError::ForcingPresent);
    }
    let d0 = max_speed(&history_states(traj, scenario)?);
    let times: Vec<f64> = traj.times().collect();
    let y: Vec<f64> = traj
        .states
        .iter()
        .map(|s| distance(s.position(2), s.position(1)))
        .collect();
    let w: Vec<f64> = traj
        .states
        .iter()
        .map(|s| distance(s.velocity(2), s.velocity(1)))
        .collect();
    check_two_flock_bound_series(
        &times,
        &y,
        &w,
        scenario.tau(),
        d0,
        scenario.mu0(),
        &scenario.potential,
        BOUND_TOLERANCE + slack,
    )
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BallInvarianceReport {
    /// Largest speed over the history grid.
    pub d0: f64,
    pub max_speed: f64,
    /// Per-coordinate min/max of velocities over the history grid.
    pub hull_min: Vec<f64>,
    pub hull_max: Vec<f64>,
    /// Largest amount by which any velocity coordinate leaves its history range.
    pub max_hull_excess: f64,
    pub ball_ok: bool,
    pub hull_ok: bool,
    pub passed: bool,
}

impl BallInvarianceReport {
    pub fn to_report(&self) -> ProbeReport {
        let msg = match (self.ball_ok, self.hull_ok) {
            (true, true) => "velocities stay in the initial ball and coordinate hull".into(),
            (false, _) => format!("speed {} exceeds D0 = {}", self.max_speed, self.d0),
            (true, false) => format!("a velocity coordinate leaves its history range by {}", self.max_hull_excess),
        };
        ProbeReport::new("ball_invariance", self.passed, msg)
            .metric("d0", self.d0)
            .metric("max_speed", self.max_speed)
            .metric("max_hull_excess", self.max_hull_excess)
    }
}

/// Velocities never leave the ball of radius `D0` nor the per-coordinate
/// range spanned by the history.
pub fn ball_invariance_probe(traj: &Trajectory, scenario: &Scenario) -> Result<BallInvarianceReport, DiagnosticsError> {
    if !scenario.forcing.is_zero() {
        return Err(DiagnosticsError::ForcingPresent);
    }
    if traj.states.is_empty() {
        return Err(DiagnosticsError::EmptyTrajectory);
    }
    let history = history_states(traj, scenario)?;
    let dim = scenario.dim;
    let d0 = max_speed(&history);
    let mut hull_min = vec![f64::INFINITY; dim];
    let mut hull_max = vec![f64::NEG_INFINITY; dim];
    for st in &history {
        for v in st.v.chunks(dim) {
            for c in 0..dim {
                hull_min[c] = hull_min[c].min(v[c]);
                hull_max[c] = hull_max[c].max(v[c]);
            }
        }
    }
    let mut top_speed: f64 = 0.0;
    let mut excess: f64 = 0.0;
    for st in &traj.states {
        for v in st.v.chunks(dim) {
            top_speed = top_speed.max(norm(v));
            for c in 0..dim {
                excess = excess.max(v[c] - hull_max[c]).max(hull_min[c] - v[c]);
            }
        }
    }
    let ball_ok = top_speed <= d0 + INVARIANCE_TOLERANCE;
    let hull_ok = excess <= INVARIANCE_TOLERANCE;
    Ok(BallInvarianceReport {
        d0,
        max_speed: top_speed,
        hull_min,
        hull_max,
        max_hull_excess: excess,
        ball_ok,
        hull_ok,
        passed: ball_ok && hull_ok,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PositivityReport {
    /// `min_{i, t} u_i(t)`
    pub min_value: f64,
    pub argmin_time: f64,
    pub passed: bool,
}

impl PositivityReport {
    pub fn to_report(&self) -> ProbeReport {
        ProbeReport::new(
            "positivity",
            self.passed,
            format!("min u = {} at t = {}", self.min_value, self.argmin_time),
        )
        .metric("min_value", self.min_value)
    }
}

/// Minimum velocity over all agents and stored times of a scalar run.
pub fn positivity_of(traj: &Trajectory) -> Result<PositivityReport, DiagnosticsError> {
    let from = first_index_from(traj, 0.0)?;
    let mut min_value = f64::INFINITY;
    let mut argmin_time = f64::NAN;
    for st in &traj.states[from..] {
        for &u in &st.v {
            if u < min_value {
                min_value = u;
                argmin_time = st.t;
            }
        }
    }
    Ok(PositivityReport {
        min_value,
        argmin_time,
        passed: min_value >= -INVARIANCE_TOLERANCE,
    })
}

/// Preconditions of the positivity probe: `d = 1`, no forcing and
/// nonnegative velocity histories on the grid.
pub fn positivity_preconditions(scenario: &Scenario) -> Result<(), DiagnosticsError> {
    if scenario.dim != 1 {
        return Err(DiagnosticsError::NotScalar { dim: scenario.dim });
    }
    if !scenario.forcing.is_zero() {
        return Err(DiagnosticsError::ForcingPresent);
    }
    let hist = init_history(scenario)?;
    for st in hist.samples() {
        for (a, &u) in st.v.iter().enumerate() {
            if u < 0.0 {
                return Err(DiagnosticsError::NegativeHistory {
                    agent: a + 1,
                    s: st.t,
                    value: u,
                });
            }
        }
    }
    Ok(())
}

/// Runs a `d = 1` scenario whose velocity histories are nonnegative and
/// reports the smallest velocity reached.
pub fn positivity_probe(scenario: &Scenario) -> Result<PositivityReport, DiagnosticsError> {
    positivity_preconditions(scenario)?;
    positivity_of(&simulate(scenario)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AgentHistory, DelayKernel, HistorySpec, LeaderForcing, LeadershipDag};

    fn scenario(history: Vec<AgentHistory>, t_end: f64) -> Scenario {
        Scenario {
            dag: LeadershipDag::chain(history.len()).unwrap(),
            dim: history[0].velocity.dim(),
            potential: Potential::cucker_smale(0.5).unwrap(),
            kernel: DelayKernel::normalized_uniform(0.1).unwrap(),
            history: HistorySpec::new(history),
            forcing: LeaderForcing::zero(),
            t_end,
            dt: 0.01,
            rng_seed: None,
        }
    }

    #[test]
    fn zero_histories_stay_zero() {
        let s = scenario(
            vec![
                AgentHistory::constant(vec![0.0], vec![0.0]),
                AgentHistory::constant(vec![1.0], vec![0.0]),
            ],
            1.0,
        );
        let r = positivity_probe(&s).unwrap();
        assert_eq!(r.min_value, 0.0);
        assert!(r.passed);
    }

    #[test]
    fn follower_is_pulled_up_and_stays_nonnegative() {
        let s = scenario(
            vec![
                AgentHistory::constant(vec![0.0], vec![1.0]),
                AgentHistory::constant(vec![1.0], vec![0.0]),
            ],
            10.0,
        );
        let traj = simulate(&s).unwrap();
        let u2: Vec<f64> = traj.states.iter().map(|st| st.v[1]).collect();
        assert!(u2.windows(2).all(|w| w[1] >= w[0]));
        assert!(*u2.last().unwrap() > 0.9 && *u2.last().unwrap() <= 1.0);
        assert!(positivity_of(&traj).unwrap().passed);
    }

    #[test]
    fn negative_history_is_a_precondition_error() {
        let s = scenario(
            vec![
                AgentHistory::constant(vec![0.0], vec![1.0]),
                AgentHistory::constant(vec![1.0], vec![-0.5]),
            ],
            1.0,
        );
        assert!(matches!(
            positivity_probe(&s),
            Err(DiagnosticsError::NegativeHistory { agent: 2, .. })
        ));
        let planar = scenario(vec![AgentHistory::constant(vec![0.0, 0.0], vec![1.0, 0.0])], 1.0);
        assert!(matches!(positivity_probe(&planar), Err(DiagnosticsError::NotScalar { dim: 2 })));
    }

    #[test]
    fn ball_probe_passes_then_catches_a_spike() {
        let s = scenario(
            vec![
                AgentHistory::constant(vec![0.0, 0.0], vec![1.0, 0.0]),
                AgentHistory::constant(vec![1.0, 0.0], vec![0.0, -1.0]),
                AgentHistory::constant(vec![0.0, 2.0], vec![0.5, 0.5]),
            ],
            5.0,
        );
        let mut traj = simulate(&s).unwrap();
        let r = ball_invariance_probe(&traj, &s).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.d0, 1.0);

        // inside the unit ball but above the history range [-1, 0.5] of v_y
        traj.states[100].v[4] = 0.5;
        traj.states[100].v[5] = 0.7;
        let r = ball_invariance_probe(&traj, &s).unwrap();
        assert!(r.ball_ok && !r.hull_ok && !r.passed);

        traj.states[200].v[0] = 1.5;
        let r = ball_invariance_probe(&traj, &s).unwrap();
        assert!(!r.ball_ok);
    }

    #[test]
    fn ball_probe_rejects_forcing() {
        let mut s = scenario(vec![AgentHistory::constant(vec![0.0], vec![1.0])], 1.0);
        s.forcing = LeaderForcing::power_law(1.0, 3.0).unwrap();
        let traj = simulate(&s).unwrap();
        assert!(matches!(ball_invariance_probe(&traj, &s), Err(DiagnosticsError::ForcingPresent)));
    }

    #[test]
    fn two_flock_bound_on_consensus_is_trivial() {
        let s = scenario(
            vec![
                AgentHistory::constant(vec![0.0], vec![1.0]),
                AgentHistory::constant(vec![1.0], vec![1.0]),
            ],
            2.0,
        );
        let traj = simulate(&s).unwrap();
        let r = check_two_flock_bound(&traj, &s, 0.0).unwrap();
        assert!(r.passed);
        assert_eq!(r.w_at_tau, 0.0);
    }

    #[test]
    fn two_flock_bound_flags_inflated_series() {
        let times: Vec<f64> = (0..=100).map(|k| k as f64 * 0.1).collect();
        let y = vec![1.0; times.len()];
        let p = Potential::cucker_smale(0.5).unwrap();
        // Decays at exactly the bound rate: passes.
        let rate = p.rate(1.0 + 2.0 * 0.1 * 1.0);
        let w: Vec<f64> = times.iter().map(|t| (-rate * (t - 0.1)).exp()).collect();
        let r = check_two_flock_bound_series(&times, &y, &w, 0.1, 1.0, 1.0, &p, 1e-6).unwrap();
        assert!(r.passed, "{r:?}");
        // Inflate the tail.
        let inflated: Vec<f64> = w.iter().enumerate().map(|(k, v)| if k > 50 { v * 1.01 } else { *v }).collect();
        let r = check_two_flock_bound_series(&times, &y, &inflated, 0.1, 1.0, 1.0, &p, 1e-6).unwrap();
        assert!(!r.passed);
        assert_eq!(r.violations, 50);
        assert!((r.first_violation.unwrap() - 5.1).abs() < 1e-12);
    }

    #[test]
    fn two_flock_bound_rejects_larger_flocks() {
        let s = scenario(
            vec![
                AgentHistory::constant(vec![0.0], vec![1.0]),
                AgentHistory::constant(vec![1.0], vec![1.0]),
                AgentHistory::constant(vec![2.0], vec![1.0]),
            ],
            1.0,
        );
        let traj = simulate(&s).unwrap();
        assert!(matches!(
            check_two_flock_bound(&traj, &s, 0.0),
            Err(DiagnosticsError::NotTwoFlock { n_agents: 3 })
        ));
    }
}
