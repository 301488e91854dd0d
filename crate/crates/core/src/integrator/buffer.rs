use std::collections::VecDeque;

use super::{FlockState, IntegrationError};
use crate::model::Scenario;

/// Sliding window of the last `m + 1` states, spaced by `h`, covering
/// `[t - τ, t]`.
#[derive(Clone, Debug, PartialEq)]
pub struct HistoryBuffer {
    h: f64,
    m: usize,
    /// Step index of the newest sample; its time is `latest_step * h`.
    latest_step: i64,
    samples: VecDeque<FlockState>,
}

impl HistoryBuffer {
    /// Builds a buffer from samples ordered oldest first. `latest_step` is
    /// the grid index of the newest sample.
    pub fn from_samples(
        h: f64,
        latest_step: i64,
        samples: Vec<FlockState>,
    ) -> Result<Self, IntegrationError> {
        if samples.len() < 2 {
            return Err(IntegrationError::WindowLength {
                found: samples.len(),
                expected: 2,
            });
        }
        Ok(Self {
            h,
            m: samples.len() - 1,
            latest_step,
            samples: samples.into(),
        })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Window length in steps.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn latest_step(&self) -> i64 {
        self.latest_step
    }

    pub fn end_time(&self) -> f64 {
        self.latest_step as f64 * self.h
    }

    pub fn start_time(&self) -> f64 {
        (self.latest_step - self.m as i64) as f64 * self.h
    }

    pub fn latest(&self) -> &FlockState {
        self.samples.back().expect("nonempty window")
    }

    /// Sample at `t - k h`, `k = 0..=m`.
    #[inline]
    pub fn at_lag(&self, k: usize) -> &FlockState {
        &self.samples[self.m - k]
    }

    /// Oldest first.
    pub fn samples(&self) -> impl Iterator<Item = &FlockState> {
        self.samples.iter()
    }

    /// Appends the state at `t + h`, dropping the oldest sample.
    pub fn push(&mut self, mut state: FlockState) {
        self.latest_step += 1;
        state.t = self.end_time();
        self.samples.pop_front();
        self.samples.push_back(state);
    }

    /// Overwrites the newest sample (same time stamp).
    pub fn replace_latest(&mut self, mut state: FlockState) {
        state.t = self.end_time();
        *self.samples.back_mut().expect("nonempty window") = state;
    }

    /// Positions and velocities at `s ∈ [t - τ, t]` by linear interpolation
    /// between neighbouring samples; exact on grid nodes.
    pub fn lookup(&self, s: f64) -> Result<(Vec<f64>, Vec<f64>), IntegrationError> {
        let (start, end) = (self.start_time(), self.end_time());
        let slack = 1e-12 * self.h;
        if s < start - slack || s > end + slack {
            return Err(IntegrationError::OutsideWindow { s, start, end });
        }
        let pos = ((s - start) / self.h).clamp(0.0, self.m as f64);
        let k = (pos.floor() as usize).min(self.m);
        let w = pos - k as f64;
        let lo = &self.samples[k];
        if w == 0.0 || k == self.m {
            return Ok((lo.x.clone(), lo.v.clone()));
        }
        let hi = &self.samples[k + 1];
        let mix = |a: &[f64], b: &[f64]| -> Vec<f64> {
            a.iter().zip(b).map(|(p, q)| p + w * (q - p)).collect()
        };
        Ok((mix(&lo.x, &hi.x), mix(&lo.v, &hi.v)))
    }
}

/// Samples the initial histories at `s = -τ, -τ + h, …, 0`.
pub fn init_history(scenario: &Scenario) -> Result<HistoryBuffer, IntegrationError> {
    scenario.validate()?;
    let (n, dim, h) = (scenario.n_agents(), scenario.dim, scenario.dt);
    let m = scenario.window_steps();
    let mut samples = Vec::with_capacity(m + 1);
    for k in 0..=m {
        let step = k as i64 - m as i64;
        let s = step as f64 * h;
        let mut state = FlockState::zeros(s, n, dim);
        for (a, spec) in scenario.history.agents.iter().enumerate() {
            let agent = a + 1;
            let undefined = || IntegrationError::HistoryUndefined { agent, s };
            let x = spec.position.eval(s).ok_or_else(undefined)?;
            let v = spec.velocity.eval(s).ok_or_else(undefined)?;
            if !x.iter().chain(&v).all(|c| c.is_finite()) {
                return Err(undefined());
            }
            state.x[a * dim..(a + 1) * dim].copy_from_slice(&x);
            state.v[a * dim..(a + 1) * dim].copy_from_slice(&v);
        }
        samples.push(state);
    }
    HistoryBuffer::from_samples(h, 0, samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        AgentHistory, DelayKernel, HistoryFn, HistorySpec, LeaderForcing, LeadershipDag,
        Potential,
    };

    fn scenario(history: Vec<AgentHistory>, tau: f64, dt: f64) -> Scenario {
        Scenario {
            dag: LeadershipDag::chain(history.len()).unwrap(),
            dim: 1,
            potential: Potential::cucker_smale(0.5).unwrap(),
            kernel: DelayKernel::normalized_uniform(tau).unwrap(),
            history: HistorySpec::new(history),
            forcing: LeaderForcing::zero(),
            t_end: 1.0,
            dt,
            rng_seed: None,
        }
    }

    #[test]
    fn constant_history_fills_identical_samples() {
        let s = scenario(vec![AgentHistory::constant(vec![2.0], vec![-1.0])], 0.1, 0.01);
        let buf = init_history(&s).unwrap();
        assert_eq!(buf.len(), 11);
        assert!(buf.samples().all(|st| st.x == vec![2.0] && st.v == vec![-1.0]));
        assert_eq!(buf.end_time(), 0.0);
        assert!((buf.start_time() + 0.1).abs() < 1e-15);
    }

    #[test]
    fn affine_history_is_sampled_on_grid() {
        let (a, b) = (1.0, 3.0);
        let hist = AgentHistory {
            position: HistoryFn::Constant(vec![0.0]),
            velocity: HistoryFn::Affine {
                offset: vec![a],
                slope: vec![b],
            },
        };
        let buf = init_history(&scenario(vec![hist], 0.2, 0.1)).unwrap();
        let v: Vec<f64> = buf.samples().map(|st| st.v[0]).collect();
        assert_eq!(v.len(), 3);
        assert!((v[0] - (a - 0.2 * b)).abs() < 1e-15);
        assert!((v[1] - (a - 0.1 * b)).abs() < 1e-15);
        assert_eq!(v[2], a);
    }

    #[test]
    fn table_history_on_grid_nodes_is_exact() {
        let times: Vec<f64> = (0..=4).map(|k| (k as f64 - 4.0) * 0.05).collect();
        let values: Vec<Vec<f64>> = [0.3, 0.1, 0.4, 0.1, 0.5].iter().map(|v| vec![*v]).collect();
        let hist = AgentHistory {
            position: HistoryFn::Constant(vec![0.0]),
            velocity: HistoryFn::Table {
                times,
                values: values.clone(),
            },
        };
        let buf = init_history(&scenario(vec![hist], 0.2, 0.05)).unwrap();
        let v: Vec<Vec<f64>> = buf.samples().map(|st| st.v.clone()).collect();
        assert_eq!(v, values);
    }

    #[test]
    fn lookup_interpolates_and_rejects_outside() {
        let hist = AgentHistory {
            position: HistoryFn::Affine {
                offset: vec![1.0],
                slope: vec![2.0],
            },
            velocity: HistoryFn::Constant(vec![0.0]),
        };
        let buf = init_history(&scenario(vec![hist], 0.2, 0.1)).unwrap();
        let (x, _) = buf.lookup(-0.1).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-15);
        let (x, _) = buf.lookup(-0.05).unwrap();
        assert!((x[0] - 0.9).abs() < 1e-14);
        assert!(buf.lookup(0.01).is_err());
        assert!(buf.lookup(-0.3).is_err());
    }

    #[test]
    fn push_slides_the_window() {
        let s = scenario(vec![AgentHistory::constant(vec![0.0], vec![1.0])], 0.1, 0.05);
        let mut buf = init_history(&s).unwrap();
        let mut next = buf.latest().clone();
        next.x[0] = 5.0;
        buf.push(next);
        assert_eq!(buf.len(), 3);
        assert!((buf.end_time() - 0.05).abs() < 1e-15);
        assert_eq!(buf.at_lag(0).x[0], 5.0);
        assert_eq!(buf.at_lag(2).t, -0.05);
    }
}
