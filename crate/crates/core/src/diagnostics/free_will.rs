use serde::Serialize;

use super::consensus::velocity_diameter;
use super::{DiagnosticsError, ProbeReport, INVARIANCE_TOLERANCE};
use crate::integrator::Trajectory;
use crate::model::{check_divergent_tail, check_forcing_conditions, Scenario, TailDivergence};
use crate::numeric::norm;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FreeWillStatus {
    Pass,
    Fail,
    HypothesesUnmet,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FreeWillReport {
    pub status: FreeWillStatus,
    /// Why the hypotheses fail; empty otherwise.
    pub unmet: Vec<String>,
    pub final_velocity_diameter: f64,
    pub eps_target: f64,
    /// Largest increase of `dV` between consecutive samples on the last quarter.
    pub max_late_increase: f64,
    pub monotone_tol: f64,
    /// `max_t |v₁(t)|`
    pub leader_speed_max: f64,
    /// `|v₁(0)| + ‖f‖₁`
    pub leader_speed_bound: f64,
}

impl FreeWillReport {
    pub fn to_report(&self) -> ProbeReport {
        const NAME: &str = "free_will";
        match self.status {
            FreeWillStatus::HypothesesUnmet => {
                ProbeReport::skipped(NAME, format!("hypotheses unmet: {}", self.unmet.join("; ")))
            }
            s => ProbeReport::new(
                NAME,
                s == FreeWillStatus::Pass,
                format!(
                    "dV(t_end) = {:e} (target {:e}), max |v1| = {:e} (bound {:e})",
                    self.final_velocity_diameter,
                    self.eps_target,
                    self.leader_speed_max,
                    self.leader_speed_bound
                ),
            )
            .metric("final_velocity_diameter", self.final_velocity_diameter)
            .metric("max_late_increase", self.max_late_increase)
            .metric("leader_speed_max", self.leader_speed_max)
            .metric("leader_speed_bound", self.leader_speed_bound),
        }
    }
}

/// Consensus under a free-will leader. When the forcing or the potential
/// fails the hypotheses nothing is asserted and the status is
/// [`FreeWillStatus::HypothesesUnmet`].
pub fn free_will_consensus_probe(
    traj: &Trajectory,
    scenario: &Scenario,
    eps_target: f64,
    tol: f64,
) -> Result<FreeWillReport, DiagnosticsError> {
    let first = traj.states.first().ok_or(DiagnosticsError::EmptyTrajectory)?;
    let n = scenario.n_agents();

    let mut unmet = Vec::new();
    let fc = check_forcing_conditions(&scenario.forcing, n);
    if !fc.integrable {
        unmet.push("forcing is not integrable".to_string());
    }
    if !fc.little_o_condition {
        unmet.push(format!("|f(t)| is not o((1+t)^{})", 1 - n as i64));
    }
    if !fc.weighted_l1 {
        unmet.push(format!("t^{} |f(t)| is not integrable", n as i64 - 2));
    }
    if check_divergent_tail(&scenario.potential).verdict == TailDivergence::No {
        unmet.push("potential has a convergent tail".to_string());
    }

    let dv: Vec<f64> = traj.states.iter().map(velocity_diameter).collect();
    let final_dv = dv[dv.len() - 1];
    let late = dv.len() - dv.len().div_ceil(4);
    let max_late_increase = dv[late..]
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    let leader_speed_max = traj
        .states
        .iter()
        .map(|s| norm(s.velocity(1)))
        .fold(0.0, f64::max);
    let leader_speed_bound = norm(first.velocity(1)) + scenario.forcing.l1_norm(n);

    let status = if !unmet.is_empty() {
        FreeWillStatus::HypothesesUnmet
    } else if final_dv <= eps_target
        && (max_late_increase <= tol || max_late_increase.is_nan())
        && leader_speed_max <= leader_speed_bound + INVARIANCE_TOLERANCE
    {
        FreeWillStatus::Pass
    } else {
        FreeWillStatus::Fail
    };
    Ok(FreeWillReport {
        status,
        unmet,
        final_velocity_diameter: final_dv,
        eps_target,
        max_late_increase,
        monotone_tol: tol,
        leader_speed_max,
        leader_speed_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::simulate;
    use crate::model::{AgentHistory, DelayKernel, HistorySpec, LeaderForcing, LeadershipDag, Potential};

    fn chain3(forcing: LeaderForcing, t_end: f64) -> Scenario {
        Scenario {
            dag: LeadershipDag::chain(3).unwrap(),
            dim: 1,
            potential: Potential::cucker_smale(0.5).unwrap(),
            kernel: DelayKernel::normalized_uniform(0.1).unwrap(),
            history: HistorySpec::new(vec![
                AgentHistory::constant(vec![0.0], vec![0.2]),
                AgentHistory::constant(vec![1.0], vec![-0.3]),
                AgentHistory::constant(vec![2.5], vec![0.6]),
            ]),
            forcing,
            t_end,
            dt: 0.01,
            rng_seed: None,
        }
    }

    #[test]
    fn zero_forcing_decays() {
        let sc = chain3(LeaderForcing::zero(), 60.0);
        let traj = simulate(&sc).unwrap();
        let r = free_will_consensus_probe(&traj, &sc, 1e-3, 1e-10).unwrap();
        assert_eq!(r.status, FreeWillStatus::Pass, "{r:?}");
        assert_eq!(r.leader_speed_bound, 0.2);
    }

    #[test]
    fn slow_forcing_is_reported_unmet() {
        let sc = chain3(LeaderForcing::power_law(0.5, 0.5).unwrap(), 1.0);
        let traj = simulate(&sc).unwrap();
        let r = free_will_consensus_probe(&traj, &sc, 1e-3, 1e-10).unwrap();
        assert_eq!(r.status, FreeWillStatus::HypothesesUnmet);
        assert_eq!(r.unmet.len(), 3);
        assert_eq!(r.to_report().status, super::super::ProbeStatus::Skipped);
    }

    #[test]
    fn unreached_target_fails() {
        let sc = chain3(LeaderForcing::power_law(0.5, 3.0).unwrap(), 1.0);
        let traj = simulate(&sc).unwrap();
        let r = free_will_consensus_probe(&traj, &sc, 1e-6, 1e-10).unwrap();
        assert_eq!(r.status, FreeWillStatus::Fail);
    }
}
