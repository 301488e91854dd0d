use rand::rngs::ChaCha8Rng;
use rand::{RngExt, SeedableRng};
use serde::{Deserialize, Serialize};

use super::ScenarioError;
use crate::model::{
    AgentHistory, DelayKernel, HistoryFn, HistorySpec, KernelShape, LeaderForcing, LeadershipDag,
    Potential, Scenario,
};

pub const MAX_AGENTS: usize = 8;
pub const MAX_DIM: usize = 3;
pub const TAU_RANGE: [f64; 2] = [0.05, 0.5];

/// Bound on `h · d_i · Σ_k w_k · ψ(0)`; keeps every Heun stage a convex
/// combination of stored velocities.
const STEP_FACTOR: f64 = 0.5;

const MIN_WINDOW_STEPS: f64 = 4.0;

const BETAS: [f64; 3] = [0.0, 0.25, 0.5];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Topology {
    /// `L(i) = {i-1}`.
    Chain,
    /// `L(i) = {⌊i/2⌋}`.
    BinaryTree,
    /// Each `j < i` joins `L(i)` with probability `edge_prob`; empty draws
    /// are redrawn.
    RandomHl { edge_prob: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub topology: Topology,
    pub n_agents: usize,
    pub dim: usize,
    #[serde(default = "default_position_box")]
    pub position_box: [f64; 2],
    #[serde(default = "default_velocity_box")]
    pub velocity_box: [f64; 2],
    pub rng_seed: u64,
    /// Fixed `β`; drawn from {0, 0.25, 0.5} when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Fixed delay; drawn from [0.05, 0.5] on a 0.01 grid when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    /// Rounded up to a whole number of delay windows.
    #[serde(default = "default_t_end")]
    pub t_end: f64,
}

fn default_position_box() -> [f64; 2] {
    [-5.0, 5.0]
}

fn default_velocity_box() -> [f64; 2] {
    [-1.0, 1.0]
}

fn default_t_end() -> f64 {
    5.0
}

impl GeneratorSpec {
    pub fn new(topology: Topology, n_agents: usize, dim: usize, rng_seed: u64) -> Self {
        Self {
            topology,
            n_agents,
            dim,
            position_box: default_position_box(),
            velocity_box: default_velocity_box(),
            rng_seed,
            beta: None,
            tau: None,
            t_end: default_t_end(),
        }
    }

    /// The same spec with another seed, for suites.
    pub fn with_seed(&self, rng_seed: u64) -> Self {
        Self {
            rng_seed,
            ..self.clone()
        }
    }

    fn check(&self) -> Result<(), ScenarioError> {
        let bad = |msg: String| Err(ScenarioError::Generator(msg));
        if self.n_agents == 0 || self.n_agents > MAX_AGENTS {
            return bad(format!("n_agents must be in 1..={MAX_AGENTS}, got {}", self.n_agents));
        }
        if self.dim == 0 || self.dim > MAX_DIM {
            return bad(format!("dim must be in 1..={MAX_DIM}, got {}", self.dim));
        }
        for (name, b) in [("position_box", self.position_box), ("velocity_box", self.velocity_box)] {
            if !(b[0].is_finite() && b[1].is_finite() && b[0] <= b[1]) {
                return bad(format!("{name} must be a finite [lo, hi] with lo <= hi"));
            }
        }
        if let Topology::RandomHl { edge_prob } = self.topology {
            if !(edge_prob > 0.0 && edge_prob <= 1.0) && self.n_agents > 1 {
                return bad(format!(
                    "edge_prob = {edge_prob} cannot give every agent a leader; need 0 < p <= 1"
                ));
            }
        }
        if let Some(tau) = self.tau {
            if !(TAU_RANGE[0]..=TAU_RANGE[1]).contains(&tau) {
                return bad(format!("tau must lie in [{}, {}], got {tau}", TAU_RANGE[0], TAU_RANGE[1]));
            }
        }
        if let Some(beta) = self.beta {
            if !(beta.is_finite() && beta >= 0.0) {
                return bad(format!("beta must be nonnegative, got {beta}"));
            }
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        Ok(())
    }
}

fn draw_dag(spec: &GeneratorSpec, rng: &mut ChaCha8Rng) -> Result<LeadershipDag, ScenarioError> {
    let n = spec.n_agents;
    let dag = match spec.topology {
        Topology::Chain => LeadershipDag::chain(n)?,
        Topology::BinaryTree => {
            LeadershipDag::new((1..=n).map(|i| if i == 1 { vec![] } else { vec![i / 2] }))?
        }
        Topology::RandomHl { edge_prob } => {
            let mut lists = vec![Vec::new()];
            for i in 2..=n {
                let mut l = Vec::new();
                while l.is_empty() {
                    l = (1..i).filter(|_| rng.random_bool(edge_prob)).collect();
                }
                lists.push(l);
            }
            LeadershipDag::new(lists)?
        }
    };
    Ok(dag)
}

fn draw_point(rng: &mut ChaCha8Rng, b: [f64; 2], dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|_| if b[0] == b[1] { b[0] } else { rng.random_range(b[0]..=b[1]) })
        .collect()
}

/// Builds a deterministic, validated scenario from `spec` with zero forcing.
pub fn generate(spec: &GeneratorSpec) -> Result<Scenario, ScenarioError> {
    spec.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let dag = draw_dag(spec, &mut rng)?;

    let beta = spec
        .beta
        .unwrap_or_else(|| BETAS[rng.random_range(0..BETAS.len())]);
    let tau = spec
        .tau
        .unwrap_or_else(|| rng.random_range(5..=50) as f64 / 100.0);
    let mu0 = rng.random_range(0.5..=2.0);
    let shape = if rng.random_bool(0.5) {
        KernelShape::Uniform { height: mu0 / tau }
    } else {
        KernelShape::Triangular { peak: 2.0 * mu0 / tau }
    };
    let kernel = DelayKernel::new(tau, shape)?;

    // Σ_k w_k ≤ τ · max μ for the trapezoid weights; ψ(0) = 1.
    let max_degree = dag.agents().map(|a| dag.degree(a)).max().unwrap_or(0).max(1);
    let h_max = STEP_FACTOR / (max_degree as f64 * tau * kernel.max_weight());
    // Even, so the kernel peak at τ/2 is a node.
    let m = (tau / h_max).ceil().max(MIN_WINDOW_STEPS);
    let m = m + m % 2.0;
    let dt = tau / m;
    let t_end = tau * (spec.t_end / tau).ceil();

    let agents = (0..spec.n_agents)
        .map(|_| {
            let x = draw_point(&mut rng, spec.position_box, spec.dim);
            let v_now = draw_point(&mut rng, spec.velocity_box, spec.dim);
            let velocity = if rng.random_bool(0.5) {
                HistoryFn::Constant(v_now)
            } else {
                let v_past = draw_point(&mut rng, spec.velocity_box, spec.dim);
                let slope = v_now.iter().zip(&v_past).map(|(a, b)| (a - b) / tau).collect();
                HistoryFn::Affine { offset: v_now, slope }
            };
            AgentHistory {
                position: HistoryFn::Constant(x),
                velocity,
            }
        })
        .collect();

    let scenario = Scenario {
        dag,
        dim: spec.dim,
        potential: Potential::cucker_smale(beta)?,
        kernel,
        history: HistorySpec::new(agents),
        forcing: LeaderForcing::zero(),
        t_end,
        dt,
        rng_seed: Some(spec.rng_seed),
    };
    scenario.validate()?;
    Ok(scenario)
}
