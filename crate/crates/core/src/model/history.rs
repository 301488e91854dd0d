//! Initial data on the window `[-τ, 0]`.

use super::ModelError;
use crate::numeric::strictly_increasing;

/// Relative slack when deciding whether a table covers a query time.
const COVER_SLACK: f64 = 1e-12;

/// A vector-valued function of `s ∈ [-τ, 0]`.
#[derive(Clone, Debug, PartialEq)]
pub enum HistoryFn {
    Constant(Vec<f64>),
    /// `offset + s · slope`.
    Affine { offset: Vec<f64>, slope: Vec<f64> },
    /// Piecewise-linear through `(times[k], values[k])`; undefined outside
    /// `[times[0], times[last]]`.
    Table { times: Vec<f64>, values: Vec<Vec<f64>> },
}

impl HistoryFn {
    pub fn dim(&self) -> usize {
        match self {
            Self::Constant(v) => v.len(),
            Self::Affine { offset, .. } => offset.len(),
            Self::Table { values, .. } => values.first().map_or(0, Vec::len),
        }
    }

    fn check(&self, dim: usize, tau: f64) -> Result<(), String> {
        let finite = |v: &[f64]| v.iter().all(|c| c.is_finite());
        match self {
            Self::Constant(v) => {
                if v.len() != dim || !finite(v) {
                    return Err(format!("constant needs {dim} finite components"));
                }
            }
            Self::Affine { offset, slope } => {
                if offset.len() != dim || slope.len() != dim || !finite(offset) || !finite(slope) {
                    return Err(format!("affine offset and slope need {dim} finite components"));
                }
            }
            Self::Table { times, values } => {
                if times.len() != values.len() || times.is_empty() {
                    return Err("table needs matching, nonempty times and values".into());
                }
                if !strictly_increasing(times) {
                    return Err("table times must increase strictly".into());
                }
                if values.iter().any(|v| v.len() != dim || !finite(v)) {
                    return Err(format!("table rows need {dim} finite components"));
                }
                let slack = COVER_SLACK * tau.max(1.0);
                if times[0] > -tau + slack || times[times.len() - 1] < -slack {
                    return Err(format!("table must cover the window [-{tau}, 0]"));
                }
            }
        }
        Ok(())
    }

    /// Value at `s`. Tables return `None` outside their node range.
    pub fn eval(&self, s: f64) -> Option<Vec<f64>> {
        match self {
            Self::Constant(v) => Some(v.clone()),
            Self::Affine { offset, slope } => {
                Some(offset.iter().zip(slope).map(|(a, b)| a + s * b).collect())
            }
            Self::Table { times, values } => {
                let last = times.len() - 1;
                let slack = COVER_SLACK * times[0].abs().max(1.0);
                if s < times[0] - slack || s > times[last] + slack {
                    return None;
                }
                if s <= times[0] {
                    return Some(values[0].clone());
                }
                if s >= times[last] {
                    return Some(values[last].clone());
                }
                let k = times.partition_point(|&t| t <= s) - 1;
                let w = (s - times[k]) / (times[k + 1] - times[k]);
                if w == 0.0 {
                    return Some(values[k].clone());
                }
                Some(
                    values[k]
                        .iter()
                        .zip(&values[k + 1])
                        .map(|(a, b)| a + w * (b - a))
                        .collect(),
                )
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AgentHistory {
    pub position: HistoryFn,
    pub velocity: HistoryFn,
}

impl AgentHistory {
    pub fn constant(position: Vec<f64>, velocity: Vec<f64>) -> Self {
        Self {
            position: HistoryFn::Constant(position),
            velocity: HistoryFn::Constant(velocity),
        }
    }
}

/// Initial histories, one entry per agent (agent 1 first).
#[derive(Clone, Debug, PartialEq)]
pub struct HistorySpec {
    pub agents: Vec<AgentHistory>,
}

impl HistorySpec {
    pub fn new(agents: Vec<AgentHistory>) -> Self {
        Self { agents }
    }

    pub fn validate(&self, n_agents: usize, dim: usize, tau: f64) -> Result<(), ModelError> {
        if self.agents.len() != n_agents {
            return Err(ModelError::InvalidHistory {
                agent: self.agents.len().min(n_agents) + 1,
                reason: format!(
                    "expected histories for {n_agents} agents, found {}",
                    self.agents.len()
                ),
            });
        }
        for (k, h) in self.agents.iter().enumerate() {
            for (what, f) in [("position", &h.position), ("velocity", &h.velocity)] {
                f.check(dim, tau).map_err(|reason| ModelError::InvalidHistory {
                    agent: k + 1,
                    reason: format!("{what}: {reason}"),
                })?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_evaluates_directly() {
        let f = HistoryFn::Affine {
            offset: vec![1.0],
            slope: vec![2.0],
        };
        assert_eq!(f.eval(-0.2).unwrap(), vec![1.0 - 0.4]);
        assert_eq!(f.eval(0.0).unwrap(), vec![1.0]);
    }

    #[test]
    fn table_is_exact_on_nodes_and_undefined_outside() {
        let f = HistoryFn::Table {
            times: vec![-0.2, -0.1, 0.0],
            values: vec![vec![3.0], vec![1.0], vec![2.0]],
        };
        assert_eq!(f.eval(-0.1).unwrap(), vec![1.0]);
        assert_eq!(f.eval(-0.2).unwrap(), vec![3.0]);
        assert!((f.eval(-0.05).unwrap()[0] - 1.5).abs() < 1e-15);
        assert!(f.eval(-0.3).is_none());
        assert!(f.eval(0.1).is_none());
    }

    #[test]
    fn validation_catches_short_table_and_dim_mismatch() {
        let short = AgentHistory {
            position: HistoryFn::Constant(vec![0.0]),
            velocity: HistoryFn::Table {
                times: vec![-0.05, 0.0],
                values: vec![vec![0.0], vec![1.0]],
            },
        };
        let err = HistorySpec::new(vec![short]).validate(1, 1, 0.1).unwrap_err();
        assert!(err.to_string().contains("agent 1"), "{err}");

        let wrong_dim = AgentHistory::constant(vec![0.0, 1.0], vec![0.0]);
        assert!(HistorySpec::new(vec![wrong_dim]).validate(1, 2, 0.1).is_err());
        assert!(HistorySpec::new(vec![]).validate(1, 1, 0.1).is_err());
    }
}
