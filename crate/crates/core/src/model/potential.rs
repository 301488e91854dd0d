//! Interaction potential `ψ`, the communication rate as a function of
//! inter-agent distance.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use super::ModelError;
use crate::numeric::{interp_flat, log_space, strictly_increasing, trapezoid};

/// Default horizon for numeric tail evidence.
pub const DEFAULT_TAIL_HORIZON: f64 = 1e6;

type PotentialFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Potential {
    /// `ψ(s) = (1 + s²)^(-β)`.
    CuckerSmale { beta: f64 },
    /// Linear interpolation through `(s, ψ)` samples, flat past the last one.
    Table { s: Vec<f64>, psi: Vec<f64> },
    /// User-supplied closure. The caller vouches for positivity and
    /// monotonicity; only sampled checks are possible.
    Custom { name: String, func: PotentialFn },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TailDivergence {
    Yes,
    No,
    Unknown,
}

impl Potential {
    pub fn cucker_smale(beta: f64) -> Result<Self, ModelError> {
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(ModelError::InvalidPotential(format!(
                "beta must be a nonnegative number, got {beta}"
            )));
        }
        Ok(Self::CuckerSmale { beta })
    }

    /// Tabulated potential. Nodes must start at 0 and increase strictly;
    /// values must be nonnegative and non-increasing.
    pub fn table(s: Vec<f64>, psi: Vec<f64>) -> Result<Self, ModelError> {
        let bad = |msg: &str| Err(ModelError::InvalidPotential(msg.to_string()));
        if s.len() != psi.len() || s.len() < 2 {
            return bad("table needs at least two (s, psi) pairs of equal length");
        }
        if s[0] != 0.0 || !strictly_increasing(&s) {
            return bad("table nodes must start at 0 and increase strictly");
        }
        if psi.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return bad("table values must be finite and nonnegative");
        }
        if psi.windows(2).any(|w| w[1] > w[0]) {
            return bad("table values must be non-increasing");
        }
        Ok(Self::Table { s, psi })
    }

    pub fn custom<F>(name: impl Into<String>, func: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::Custom {
            name: name.into(),
            func: Arc::new(func),
        }
    }

    /// `ψ(s)` without the sign check, for hot loops where `s` is a norm.
    #[inline]
    pub fn rate(&self, s: f64) -> f64 {
        match self {
            Self::CuckerSmale { beta } => {
                if *beta == 0.0 {
                    1.0
                } else if *beta == 0.5 {
                    1.0 / (1.0 + s * s).sqrt()
                } else {
                    (1.0 + s * s).powf(-beta)
                }
            }
            Self::Table { s: nodes, psi } => interp_flat(nodes, psi, s),
            Self::Custom { func, .. } => func(s),
        }
    }

    /// Upper bound of `ψ` on `[0, ∞)`, i.e. `ψ(0)` for a non-increasing potential.
    pub fn max_rate(&self) -> f64 {
        self.rate(0.0)
    }

    /// Analytic tail classification where one exists.
    pub fn tail_divergent(&self) -> TailDivergence {
        match self {
            Self::CuckerSmale { beta } if *beta <= 0.5 => TailDivergence::Yes,
            Self::CuckerSmale { .. } => TailDivergence::No,
            _ => TailDivergence::Unknown,
        }
    }

    /// Checks positivity and monotonicity on the given sample points.
    pub fn check_samples(&self, samples: &[f64]) -> Result<(), ModelError> {
        let mut sorted: Vec<f64> = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut prev: Option<(f64, f64)> = None;
        for &s in &sorted {
            let value = eval_potential(self, s)?;
            if !value.is_finite() || value < 0.0 {
                return Err(ModelError::InvalidPotential(format!(
                    "psi({s}) = {value} is not a nonnegative number"
                )));
            }
            if let Some((ps, pv)) = prev {
                if value > pv {
                    return Err(ModelError::InvalidPotential(format!(
                        "psi increases between {ps} and {s}"
                    )));
                }
            }
            prev = Some((s, value));
        }
        Ok(())
    }
}

impl PartialEq for Potential {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Self::CuckerSmale { beta: a }, Self::CuckerSmale { beta: b }) => a == b,
            (Self::Table { s: s1, psi: p1 }, Self::Table { s: s2, psi: p2 }) => {
                s1 == s2 && p1 == p2
            }
            (Self::Custom { func: f1, .. }, Self::Custom { func: f2, .. }) => Arc::ptr_eq(f1, f2),
            _ => false,
        }
    }
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::CuckerSmale { beta } => f.debug_struct("CuckerSmale").field("beta", beta).finish(),
            Self::Table { s, psi } => f
                .debug_struct("Table")
                .field("s", s)
                .field("psi", psi)
                .finish(),
            Self::Custom { name, .. } => f.debug_struct("Custom").field("name", name).finish(),
        }
    }
}

/// `ψ(s)` for `s >= 0`.
pub fn eval_potential(p: &Potential, s: f64) -> Result<f64, ModelError> {
    if s.is_nan() || s < 0.0 {
        return Err(ModelError::NegativeDistance(s));
    }
    Ok(p.rate(s))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PartialIntegral {
    pub upper: f64,
    pub integral: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailReport {
    pub verdict: TailDivergence,
    /// `true` when the verdict is a closed-form fact rather than evidence.
    pub analytic: bool,
    pub horizon: f64,
    /// `∫₀^S ψ` at log-spaced `S` up to the horizon.
    pub evidence: Vec<PartialIntegral>,
}

impl TailReport {
    /// Ratio of the last two partial integrals; stays near 1 for a
    /// convergent tail and grows for a divergent one.
    pub fn trend(&self) -> Option<f64> {
        let n = self.evidence.len();
        (n >= 2).then(|| self.evidence[n - 1].integral / self.evidence[n - 2].integral)
    }
}

/// Decides `∫₀^∞ ψ = ∞`. Closed form for the Cucker–Smale family,
/// partial-integral evidence otherwise.
pub fn check_divergent_tail(p: &Potential) -> TailReport {
    check_divergent_tail_with_horizon(p, DEFAULT_TAIL_HORIZON)
}

pub fn check_divergent_tail_with_horizon(p: &Potential, horizon: f64) -> TailReport {
    let checkpoints = log_space(1.0, horizon, 1 + 2 * horizon.log10().ceil().max(1.0) as usize);

    // Linear cells on [0, 1], log cells beyond, plus any table nodes.
    let mut grid: Vec<f64> = (0..=1000).map(|k| k as f64 / 1000.0).collect();
    let per_decade = 400.0;
    let n_log = (per_decade * horizon.log10()).ceil().max(2.0) as usize;
    grid.extend(log_space(1.0, horizon, n_log).into_iter().skip(1));
    grid.extend(checkpoints.iter().copied());
    if let Potential::Table { s, .. } = p {
        grid.extend(s.iter().copied().filter(|&x| x <= horizon));
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let values: Vec<f64> = grid.iter().map(|&s| p.rate(s)).collect();
    let mut evidence = Vec::with_capacity(checkpoints.len());
    let mut acc = 0.0;
    let mut k = 0;
    for &upper in &checkpoints {
        while k + 1 < grid.len() && grid[k + 1] <= upper {
            acc += trapezoid(&grid[k..k + 2], &values[k..k + 2]);
            k += 1;
        }
        evidence.push(PartialIntegral {
            upper,
            integral: acc,
        });
    }

    let verdict = p.tail_divergent();
    TailReport {
        verdict,
        analytic: verdict != TailDivergence::Unknown,
        horizon,
        evidence,
    }
}
