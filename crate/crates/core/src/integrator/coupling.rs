use super::{HistoryBuffer, IntegrationError};
use crate::model::{Agent, LeadershipDag, Potential, Scenario};

/// `Σ_{j∈L(i)} Σ_k w_k ψ(|x_i(t-kh) - x_j(t-kh)|) (v_j(t-kh) - v_i(t))`
/// accumulated into `out`. Both positions inside `ψ` are taken at the
/// delayed time; only the velocity of agent `i` is current.
#[inline]
pub(crate) fn coupling_into(
    dag: &LeadershipDag,
    potential: &Potential,
    agent: Agent,
    hist: &HistoryBuffer,
    v_now: &[f64],
    weights: &[f64],
    out: &mut [f64],
) {
    out.fill(0.0);
    let dim = out.len();
    let me = (agent - 1) * dim;
    for &leader in dag.leaders(agent) {
        let other = (leader - 1) * dim;
        for (k, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let past = hist.at_lag(k);
            let xi = &past.x[me..me + dim];
            let xj = &past.x[other..other + dim];
            let dist = xi
                .iter()
                .zip(xj)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let rate = w * potential.rate(dist);
            let vj = &past.v[other..other + dim];
            for c in 0..dim {
                out[c] += rate * (vj[c] - v_now[c]);
            }
        }
    }
}

/// Delay coupling acting on agent `i` at time `t`, i.e. the right-hand side
/// of its velocity equation, by composite trapezoid on the window nodes.
pub fn delay_coupling(
    agent: Agent,
    t: f64,
    hist: &HistoryBuffer,
    v_now: &[f64],
    scenario: &Scenario,
) -> Result<Vec<f64>, IntegrationError> {
    let n = scenario.n_agents();
    if agent == 0 || agent > n {
        return Err(IntegrationError::AgentOutOfRange { agent, n_agents: n });
    }
    let m = scenario.window_steps();
    if hist.len() != m + 1 {
        return Err(IntegrationError::WindowLength {
            found: hist.len(),
            expected: m + 1,
        });
    }
    if (hist.end_time() - t).abs() > 1e-9 * scenario.dt {
        return Err(IntegrationError::WindowMismatch {
            t,
            window_end: hist.end_time(),
        });
    }
    let weights = scenario.kernel.trapezoid_weights(m);
    let mut out = vec![0.0; scenario.dim];
    coupling_into(
        &scenario.dag,
        &scenario.potential,
        agent,
        hist,
        v_now,
        &weights,
        &mut out,
    );
    Ok(out)
}
