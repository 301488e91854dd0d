use super::{
    kernel_mass, validate_hierarchy, DelayKernel, HistorySpec, LeaderForcing, LeadershipDag,
    ModelError, Potential,
};

/// Relative tolerance when checking that a ratio of times is an integer.
const GRID_SLACK: f64 = 1e-9;

/// A complete problem instance.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub dag: LeadershipDag,
    pub dim: usize,
    pub potential: Potential,
    pub kernel: DelayKernel,
    pub history: HistorySpec,
    pub forcing: LeaderForcing,
    pub t_end: f64,
    pub dt: f64,
    pub rng_seed: Option<u64>,
}

/// `round(a / b)` when `a / b` is a positive integer up to rounding.
pub fn grid_ratio(a: f64, b: f64) -> Option<usize> {
    let r = a / b;
    if !r.is_finite() || r < 0.5 {
        return None;
    }
    let n = r.round();
    ((r - n).abs() <= GRID_SLACK * n).then_some(n as usize)
}

impl Scenario {
    /// Checks every cross-field invariant: HL ordering, `τ/dt ∈ ℕ`,
    /// `t_end ≥ τ` on the time grid, and history shapes.
    pub fn validate(&self) -> Result<(), ModelError> {
        validate_hierarchy(&self.dag).into_result()?;
        if self.dim == 0 {
            return Err(ModelError::InvalidScenario {
                field: "dim",
                reason: "spatial dimension must be at least 1".into(),
            });
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(ModelError::InvalidScenario {
                field: "dt",
                reason: format!("time step must be positive, got {}", self.dt),
            });
        }
        let tau = self.kernel.tau();
        if grid_ratio(tau, self.dt).is_none() {
            return Err(ModelError::InvalidScenario {
                field: "dt",
                reason: format!("tau / dt = {tau} / {} is not a positive integer", self.dt),
            });
        }
        if !(self.t_end.is_finite() && self.t_end >= tau * (1.0 - GRID_SLACK)) {
            return Err(ModelError::InvalidScenario {
                field: "t_end",
                reason: format!("t_end = {} must be at least tau = {tau}", self.t_end),
            });
        }
        if grid_ratio(self.t_end, self.dt).is_none() {
            return Err(ModelError::InvalidScenario {
                field: "t_end",
                reason: format!("t_end / dt = {} / {} is not an integer", self.t_end, self.dt),
            });
        }
        if let Some(dir) = self.forcing.direction() {
            if dir.len() != self.dim {
                return Err(ModelError::InvalidScenario {
                    field: "forcing.direction",
                    reason: format!("direction has {} components, dim is {}", dir.len(), self.dim),
                });
            }
        }
        kernel_mass(&self.kernel)?;
        let m = grid_ratio(tau, self.dt).expect("checked above");
        let mass: f64 = self.kernel.trapezoid_weights(m).iter().sum();
        if mass.is_nan() || mass <= 0.0 {
            return Err(ModelError::InvalidScenario {
                field: "dt",
                reason: format!("the kernel has no mass on the {} delay nodes; refine dt", m + 1),
            });
        }
        self.history
            .validate(self.dag.n_agents(), self.dim, tau)?;
        Ok(())
    }

    pub fn n_agents(&self) -> usize {
        self.dag.n_agents()
    }

    pub fn tau(&self) -> f64 {
        self.kernel.tau()
    }

    /// Delay window length in steps, `m = τ/dt`.
    pub fn window_steps(&self) -> usize {
        grid_ratio(self.tau(), self.dt).expect("validated scenario")
    }

    /// Number of steps from 0 to `t_end`.
    pub fn n_steps(&self) -> usize {
        grid_ratio(self.t_end, self.dt).expect("validated scenario")
    }

    /// `μ0`.
    pub fn mu0(&self) -> f64 {
        kernel_mass(&self.kernel).expect("validated scenario")
    }

    /// Copy with a different step and/or horizon, re-validated.
    pub fn with_overrides(&self, dt: Option<f64>, t_end: Option<f64>) -> Result<Self, ModelError> {
        let mut s = self.clone();
        if let Some(dt) = dt {
            s.dt = dt;
        }
        if let Some(t_end) = t_end {
            s.t_end = t_end;
        }
        s.validate()?;
        Ok(s)
    }
}
