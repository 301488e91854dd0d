use serde::Serialize;

use super::{hat_leader_series, DiagnosticsError, ProbeReport};
use crate::integrator::Trajectory;
use crate::model::{Agent, LeadershipDag, Potential};
use crate::numeric::norm;

const PRIMITIVE_STEP: f64 = 1e-4;

/// `φ(s) = ∫₀^s ψ`, cumulative trapezoid on a uniform grid; between nodes
/// it integrates the linear interpolant of `ψ` exactly, so `φ` is
/// non-decreasing with `φ(0) = 0`.
#[derive(Clone, Debug)]
pub struct Primitive {
    step: f64,
    psi: Vec<f64>,
    cum: Vec<f64>,
}

impl Primitive {
    pub fn new(potential: &Potential, s_max: f64, step: f64) -> Self {
        let cells = (s_max / step).ceil().max(1.0) as usize;
        let psi: Vec<f64> = (0..=cells).map(|k| potential.rate(k as f64 * step)).collect();
        let mut cum = Vec::with_capacity(psi.len());
        let mut acc = 0.0;
        cum.push(0.0);
        for w in psi.windows(2) {
            acc += 0.5 * step * (w[0] + w[1]);
            cum.push(acc);
        }
        Self { step, psi, cum }
    }

    pub fn eval(&self, s: f64) -> f64 {
        let s = s.max(0.0);
        let last = self.psi.len() - 1;
        let k = ((s / self.step).floor() as usize).min(last);
        let ds = s - k as f64 * self.step;
        if ds <= 0.0 {
            return self.cum[k];
        }
        let psi_k = self.psi[k];
        let psi_s = if k < last {
            psi_k + (self.psi[k + 1] - psi_k) * ds / self.step
        } else {
            psi_k
        };
        self.cum[k] + 0.5 * ds * (psi_k + psi_s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LyapunovReport {
    pub d0: f64,
    pub m_offset: f64,
    pub t_from: f64,
    /// Largest `(F₊(t+h) - F₊(t))/h`.
    pub max_forward_diff_plus: f64,
    /// Largest `(F₋(t+h) - F₋(t))/h`.
    pub max_forward_diff_minus: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl LyapunovReport {
    pub fn max_forward_diff(&self) -> f64 {
        self.max_forward_diff_plus.max(self.max_forward_diff_minus)
    }

    pub fn to_report(&self) -> ProbeReport {
        ProbeReport::new(
            "lyapunov",
            self.passed,
            format!("max dF/dt = {:e} (tolerance {:e})", self.max_forward_diff(), self.tolerance),
        )
        .metric("max_forward_diff_plus", self.max_forward_diff_plus)
        .metric("max_forward_diff_minus", self.max_forward_diff_minus)
        .metric("tolerance", self.tolerance)
    }
}

/// Forward differences of `F±(t) = |w(t)| ± d0 φ(|y(t)| + M)` from `t_from` on.
#[allow(clippy::too_many_arguments)]
pub fn lyapunov_probe_series(
    times: &[f64],
    y_norm: &[f64],
    w_norm: &[f64],
    d0: f64,
    m_offset: f64,
    potential: &Potential,
    t_from: f64,
    tol: f64,
) -> Result<LyapunovReport, DiagnosticsError> {
    if times.len() != y_norm.len() || times.len() != w_norm.len() {
        return Err(DiagnosticsError::LengthMismatch);
    }
    let h = if times.len() > 1 { times[1] - times[0] } else { 1.0 };
    let start = times
        .iter()
        .position(|&t| t >= t_from - 1e-9 * h)
        .ok_or(DiagnosticsError::NothingAfter { t: t_from })?;
    let s_max = y_norm.iter().copied().fold(0.0, f64::max) + m_offset + 1.0;
    let phi = Primitive::new(potential, s_max, PRIMITIVE_STEP);

    let f = |k: usize, sign: f64| w_norm[k] + sign * d0 * phi.eval(y_norm[k] + m_offset);
    let mut plus = f64::NEG_INFINITY;
    let mut minus = f64::NEG_INFINITY;
    for k in start..times.len().saturating_sub(1) {
        let dt = times[k + 1] - times[k];
        plus = plus.max((f(k + 1, 1.0) - f(k, 1.0)) / dt);
        minus = minus.max((f(k + 1, -1.0) - f(k, -1.0)) / dt);
    }
    Ok(LyapunovReport {
        d0,
        m_offset,
        t_from,
        max_forward_diff_plus: plus,
        max_forward_diff_minus: minus,
        tolerance: tol,
        passed: plus <= tol && minus <= tol,
    })
}

/// Lyapunov dissipation for the fluctuation `(y_l, w_l)` of agent `l`
/// around its leaders' average; for a two-agent flock and `l = 2` this is
/// `(x₂ - x₁, v₂ - v₁)`.
#[allow(clippy::too_many_arguments)]
pub fn lyapunov_probe(
    traj: &Trajectory,
    dag: &LeadershipDag,
    agent: Agent,
    d0: f64,
    m_offset: f64,
    potential: &Potential,
    t_from: f64,
    tol: f64,
) -> Result<LyapunovReport, DiagnosticsError> {
    let series = hat_leader_series(traj, dag, agent)?;
    let times: Vec<f64> = series.iter().map(|s| s.t).collect();
    let y: Vec<f64> = series.iter().map(|s| norm(&s.y)).collect();
    let w: Vec<f64> = series.iter().map(|s| norm(&s.w)).collect();
    lyapunov_probe_series(&times, &y, &w, d0, m_offset, potential, t_from, tol)
}
