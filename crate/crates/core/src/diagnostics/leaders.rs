use serde::Serialize;

use super::DiagnosticsError;
use crate::integrator::{FlockState, Trajectory};
use crate::model::{Agent, LeadershipDag};

/// Leader averages of agent `l` and its fluctuation around them.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HatLeaderSample {
    pub t: f64,
    /// `x̂_l = (1/d_l) Σ_{i∈L(l)} x_i`
    pub x_hat: Vec<f64>,
    pub v_hat: Vec<f64>,
    /// `y_l = x_l - x̂_l`
    pub y: Vec<f64>,
    /// `w_l = v_l - v̂_l`
    pub w: Vec<f64>,
}

fn sample(st: &FlockState, dag: &LeadershipDag, l: Agent) -> HatLeaderSample {
    let dim = st.dim;
    let leaders = dag.leaders(l);
    let inv = 1.0 / leaders.len() as f64;
    let mut x_hat = vec![0.0; dim];
    let mut v_hat = vec![0.0; dim];
    for &i in leaders {
        for c in 0..dim {
            x_hat[c] += st.position(i)[c];
            v_hat[c] += st.velocity(i)[c];
        }
    }
    x_hat.iter_mut().chain(v_hat.iter_mut()).for_each(|c| *c *= inv);
    let y = st.position(l).iter().zip(&x_hat).map(|(a, b)| a - b).collect();
    let w = st.velocity(l).iter().zip(&v_hat).map(|(a, b)| a - b).collect();
    HatLeaderSample {
        t: st.t,
        x_hat,
        v_hat,
        y,
        w,
    }
}

pub fn hat_leader_series(
    traj: &Trajectory,
    dag: &LeadershipDag,
    l: Agent,
) -> Result<Vec<HatLeaderSample>, DiagnosticsError> {
    let n = dag.n_agents();
    if l == 0 || l > n {
        return Err(DiagnosticsError::AgentOutOfRange { agent: l, n_agents: n });
    }
    if dag.leaders(l).is_empty() {
        return Err(DiagnosticsError::NoLeaders { agent: l });
    }
    Ok(traj.states.iter().map(|st| sample(st, dag, l)).collect())
}
