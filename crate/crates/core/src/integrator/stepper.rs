use super::coupling::coupling_into;
use super::{init_history, FlockState, HistoryBuffer, IntegrationError, Trajectory};
use crate::model::Scenario;

/// Heun stepper bound to one scenario, with the quadrature weights cached.
pub struct Stepper<'a> {
    scenario: &'a Scenario,
    weights: Vec<f64>,
    n_steps: usize,
    accel: Vec<f64>,
    scratch: Vec<f64>,
}

impl<'a> Stepper<'a> {
    pub fn new(scenario: &'a Scenario) -> Result<Self, IntegrationError> {
        scenario.validate()?;
        let n = scenario.n_agents() * scenario.dim;
        Ok(Self {
            scenario,
            weights: scenario.kernel.trapezoid_weights(scenario.window_steps()),
            n_steps: scenario.n_steps(),
            accel: vec![0.0; n],
            scratch: vec![0.0; scenario.dim],
        })
    }

    /// Accelerations of every agent at the end of `hist`, given the current
    /// velocities `v`, written into `self.accel`.
    fn accelerations(&mut self, hist: &HistoryBuffer, v: &[f64]) {
        let s = self.scenario;
        let dim = s.dim;
        let t = hist.end_time();
        for agent in s.dag.agents() {
            let range = (agent - 1) * dim..agent * dim;
            if agent == 1 {
                s.forcing
                    .accel_into(t, s.n_agents(), &mut self.accel[range]);
            } else {
                coupling_into(
                    &s.dag,
                    &s.potential,
                    agent,
                    hist,
                    &v[range.clone()],
                    &self.weights,
                    &mut self.scratch,
                );
                self.accel[range].copy_from_slice(&self.scratch);
            }
        }
    }

    /// Advances `hist` by one step of size `h` and returns the new state.
    ///
    /// Predictor: explicit Euler with the coupling at `t`. Corrector: the
    /// coupling at `t + h` over the window extended by the predicted state,
    /// averaged with the first one. Positions use the matching velocity
    /// average. The leader's velocity gains the step mean of `f` in both
    /// stages, so it tracks `v₁(0) + ∫₀ᵗ f` to rounding.
    #[allow(clippy::needless_range_loop)]
    pub fn step(&mut self, hist: &mut HistoryBuffer) -> Result<FlockState, IntegrationError> {
        if hist.latest_step() >= self.n_steps as i64 {
            return Err(IntegrationError::PastEnd {
                t_end: self.scenario.t_end,
            });
        }
        let h = hist.h();
        let current = hist.latest().clone();

        let dim = self.scenario.dim;
        let t = current.t;
        let mut leader_gain = vec![0.0; dim];
        self.scenario
            .forcing
            .mean_accel_into(t, t + h, self.scenario.n_agents(), &mut leader_gain);

        self.accelerations(hist, &current.v);
        let a0 = self.accel.clone();
        let mut predicted = current.clone();
        for k in 0..predicted.v.len() {
            predicted.x[k] += h * current.v[k];
            predicted.v[k] += h * if k < dim { leader_gain[k] } else { a0[k] };
        }
        hist.push(predicted.clone());

        self.accelerations(hist, &predicted.v);
        let mut next = current;
        for k in 0..next.v.len() {
            next.x[k] += 0.5 * h * (next.v[k] + predicted.v[k]);
            if k < dim {
                next.v[k] = predicted.v[k];
            } else {
                next.v[k] += 0.5 * h * (a0[k] + self.accel[k]);
            }
        }
        hist.replace_latest(next);
        let next = hist.latest();
        if !next.is_finite() {
            return Err(IntegrationError::BlowUp { t: next.t });
        }
        Ok(next.clone())
    }
}

/// One Heun step from the end of `hist`.
pub fn step(hist: &mut HistoryBuffer, scenario: &Scenario) -> Result<FlockState, IntegrationError> {
    Stepper::new(scenario)?.step(hist)
}

/// Integrates from `t = 0` to `t_end`.
pub fn simulate(scenario: &Scenario) -> Result<Trajectory, IntegrationError> {
    simulate_with(scenario, |_| {})
}

/// Like [`simulate`], calling `observer` on every stored state (including
/// `t = 0`) as soon as it is produced.
pub fn simulate_with<F>(scenario: &Scenario, mut observer: F) -> Result<Trajectory, IntegrationError>
where
    F: FnMut(&FlockState),
{
    let mut stepper = Stepper::new(scenario)?;
    let mut hist = init_history(scenario)?;
    let history: Vec<FlockState> = hist.samples().cloned().collect();

    let n_steps = scenario.n_steps();
    let mut states = Vec::with_capacity(n_steps + 1);
    states.push(hist.latest().clone());
    observer(hist.latest());
    for _ in 0..n_steps {
        let next = stepper.step(&mut hist)?;
        observer(&next);
        states.push(next);
    }
    Ok(Trajectory {
        h: scenario.dt,
        history,
        states,
    })
}
