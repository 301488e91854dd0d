use super::{FlockState, IntegrationError, Trajectory};
use crate::model::Scenario;

/// Brute-force reference solution: explicit Euler with step `h / k` and a
/// left-rectangle rule for the delay integral, keeping every fine state.
///
/// Shares nothing with the Heun path beyond the scenario description, and
/// returns states on the coarse grid (`t = 0, h, …`) for direct comparison.
pub fn simulate_oracle(scenario: &Scenario, refinement: usize) -> Result<Trajectory, IntegrationError> {
    scenario.validate()?;
    if refinement == 0 {
        return Err(IntegrationError::InvalidRefinement);
    }
    let (n, dim) = (scenario.n_agents(), scenario.dim);
    let nd = n * dim;
    let hf = scenario.dt / refinement as f64;
    let lags = scenario.window_steps() * refinement;
    let steps = scenario.n_steps() * refinement;

    // Row g + lags holds fine time g·hf for g = -lags ..= steps.
    let rows = lags + steps + 1;
    let mut xs = vec![0.0; rows * nd];
    let mut vs = vec![0.0; rows * nd];
    for row in 0..=lags {
        let s = (row as f64 - lags as f64) * hf;
        for (a, spec) in scenario.history.agents.iter().enumerate() {
            let undefined = || IntegrationError::HistoryUndefined { agent: a + 1, s };
            let x = spec.position.eval(s).ok_or_else(undefined)?;
            let v = spec.velocity.eval(s).ok_or_else(undefined)?;
            let at = row * nd + a * dim;
            xs[at..at + dim].copy_from_slice(&x);
            vs[at..at + dim].copy_from_slice(&v);
        }
    }

    // ψ(|x_i - x_j|) for every edge (i, j), one row per fine time; each row
    // is read by `lags` later steps.
    let edges: Vec<(usize, usize)> = scenario
        .dag
        .agents()
        .flat_map(|i| scenario.dag.leaders(i).iter().map(move |&j| (i, j)))
        .collect();
    let ne = edges.len();
    let mut rates = vec![0.0; rows * ne];
    let fill_rates = |row: usize, xs: &[f64], rates: &mut [f64]| {
        for (e, &(i, j)) in edges.iter().enumerate() {
            let (a, b) = (row * nd + (i - 1) * dim, row * nd + (j - 1) * dim);
            let d2: f64 = (0..dim).map(|c| (xs[a + c] - xs[b + c]).powi(2)).sum();
            rates[row * ne + e] = scenario.potential.rate(d2.sqrt());
        }
    };
    for row in 0..=lags {
        fill_rates(row, &xs, &mut rates);
    }

    // Left endpoints s = t - τ, …, t - hf, i.e. lags M, …, 1.
    let weights: Vec<f64> = (1..=lags)
        .map(|l| hf * scenario.kernel.weight(l as f64 * hf))
        .collect();

    let mut accel = vec![0.0; nd];
    for g in 0..steps {
        let now = g + lags;
        let t = g as f64 * hf;
        let mut e = 0;
        for agent in scenario.dag.agents() {
            let me = (agent - 1) * dim;
            let acc = &mut accel[me..me + dim];
            acc.fill(0.0);
            if agent == 1 {
                let mag = scenario.forcing.magnitude(t, n);
                match scenario.forcing.direction() {
                    Some(e) => acc.iter_mut().zip(e).for_each(|(o, c)| *o = mag * c),
                    None => acc[0] = mag,
                }
                continue;
            }
            let vi_now = &vs[now * nd + me..now * nd + me + dim];
            for &leader in scenario.dag.leaders(agent) {
                let other = (leader - 1) * dim;
                for (l, &w) in weights.iter().enumerate() {
                    let r = now - (l + 1);
                    let row = r * nd;
                    let rate = w * rates[r * ne + e];
                    for c in 0..dim {
                        acc[c] += rate * (vs[row + other + c] - vi_now[c]);
                    }
                }
                e += 1;
            }
        }
        let (cur, next) = (now * nd, (now + 1) * nd);
        for k in 0..nd {
            xs[next + k] = xs[cur + k] + hf * vs[cur + k];
            vs[next + k] = vs[cur + k] + hf * accel[k];
            if !(xs[next + k].is_finite() && vs[next + k].is_finite()) {
                return Err(IntegrationError::BlowUp {
                    t: (g + 1) as f64 * hf,
                });
            }
        }
        fill_rates(now + 1, &xs, &mut rates);
    }

    let coarse = |row: usize, t: f64| FlockState {
        t,
        n_agents: n,
        dim,
        x: xs[row * nd..(row + 1) * nd].to_vec(),
        v: vs[row * nd..(row + 1) * nd].to_vec(),
    };
    let m = scenario.window_steps();
    let history = (0..=m)
        .map(|c| coarse(c * refinement, (c as f64 - m as f64) * scenario.dt))
        .collect();
    let states = (0..=scenario.n_steps())
        .map(|c| coarse(lags + c * refinement, c as f64 * scenario.dt))
        .collect();
    Ok(Trajectory {
        h: scenario.dt,
        history,
        states,
    })
}
