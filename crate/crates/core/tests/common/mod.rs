#![allow(dead_code)]

use flockdelay::model::{
    AgentHistory, DelayKernel, HistorySpec, KernelShape, LeaderForcing, LeadershipDag, Potential, Scenario,
};

/// Two planar agents, `ψ = (1+s²)^(-1/2)`, uniform kernel of unit mass on
/// `τ = 0.1`, constant histories with `|w₂(0)| = 1`.
pub fn two_flock() -> Scenario {
    Scenario {
        dag: LeadershipDag::chain(2).unwrap(),
        dim: 2,
        potential: Potential::cucker_smale(0.5).unwrap(),
        kernel: DelayKernel::new(0.1, KernelShape::Uniform { height: 10.0 }).unwrap(),
        history: HistorySpec::new(vec![
            AgentHistory::constant(vec![0.0, 0.0], vec![1.0, 0.0]),
            AgentHistory::constant(vec![1.0, -0.5], vec![1.0, 1.0]),
        ]),
        forcing: LeaderForcing::zero(),
        t_end: 50.0,
        dt: 0.01,
        rng_seed: None,
    }
}

/// Chain of `n` agents on a line with unit-mass uniform kernel on `τ = 0.1`.
pub fn chain(positions: &[f64], velocities: &[f64], beta: f64, t_end: f64) -> Scenario {
    Scenario {
        dag: LeadershipDag::chain(positions.len()).unwrap(),
        dim: 1,
        potential: Potential::cucker_smale(beta).unwrap(),
        kernel: DelayKernel::normalized_uniform(0.1).unwrap(),
        history: HistorySpec::new(
            positions
                .iter()
                .zip(velocities)
                .map(|(&x, &v)| AgentHistory::constant(vec![x], vec![v]))
                .collect(),
        ),
        forcing: LeaderForcing::zero(),
        t_end,
        dt: 0.01,
        rng_seed: None,
    }
}
