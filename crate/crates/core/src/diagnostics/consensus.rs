use serde::Serialize;

use crate::integrator::{FlockState, Trajectory};
use crate::numeric::distance;

/// Velocity and position diameters along a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConsensusSeries {
    pub times: Vec<f64>,
    /// `dV(t) = max_{i,j} |v_i - v_j|`
    pub velocity_diameter: Vec<f64>,
    /// `dX(t) = max_{i,j} |x_i - x_j|`
    pub position_diameter: Vec<f64>,
}

fn diameter(flat: &[f64], dim: usize) -> f64 {
    let pts: Vec<&[f64]> = flat.chunks(dim).collect();
    let mut best: f64 = 0.0;
    for (a, p) in pts.iter().enumerate() {
        for q in &pts[a + 1..] {
            best = best.max(distance(p, q));
        }
    }
    best
}

pub(crate) fn velocity_diameter(s: &FlockState) -> f64 {
    diameter(&s.v, s.dim)
}

pub(crate) fn position_diameter(s: &FlockState) -> f64 {
    diameter(&s.x, s.dim)
}

pub fn consensus_series(traj: &Trajectory) -> ConsensusSeries {
    ConsensusSeries {
        times: traj.times().collect(),
        velocity_diameter: traj.states.iter().map(velocity_diameter).collect(),
        position_diameter: traj.states.iter().map(position_diameter).collect(),
    }
}

impl ConsensusSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Builds a series from a planted velocity-diameter curve (positions zero).
    pub fn from_velocity_diameter(times: Vec<f64>, velocity_diameter: Vec<f64>) -> Self {
        let n = times.len();
        Self {
            times,
            velocity_diameter,
            position_diameter: vec![0.0; n],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(v: Vec<f64>, dim: usize) -> FlockState {
        let n = v.len() / dim;
        FlockState {
            t: 0.0,
            n_agents: n,
            dim,
            x: vec![0.0; v.len()],
            v,
        }
    }

    #[test]
    fn two_point_diameter() {
        assert_eq!(velocity_diameter(&state(vec![0.0, 3.0], 1)), 3.0);
    }

    #[test]
    fn max_pairwise_gap() {
        assert_eq!(velocity_diameter(&state(vec![0.0, 1.0, 5.0], 1)), 5.0);
        assert_eq!(velocity_diameter(&state(vec![0.0, 0.0, 3.0, 4.0], 2)), 5.0);
    }

    #[test]
    fn consensus_is_zero() {
        let s = state(vec![0.4, -1.0, 0.4, -1.0, 0.4, -1.0], 2);
        let traj = Trajectory {
            h: 0.1,
            history: vec![],
            states: vec![s.clone(), s],
        };
        let series = consensus_series(&traj);
        assert_eq!(series.velocity_diameter, vec![0.0, 0.0]);
        assert_eq!(series.len(), 2);
    }
}
