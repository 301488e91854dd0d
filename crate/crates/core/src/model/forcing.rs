//! Acceleration of the free-will leader (agent 1).

use serde::Serialize;

use super::ModelError;
use crate::numeric::{interp_flat, log_space, strictly_increasing, trapezoid};

/// Horizon for numeric condition checks on tabulated forcings.
pub const DEFAULT_FORCING_HORIZON: f64 = 1e6;

#[derive(Clone, Debug, PartialEq)]
pub enum ForcingFamily {
    Zero,
    /// `C / (1+t)^p`.
    PowerLaw { c: f64, p: f64 },
    /// `C / ((1+t)^(N-1) ln²(2+t))`.
    LogDamped { c: f64 },
    /// Signed magnitude samples from `t = 0`, linear in between, held flat
    /// after the last sample.
    Table { t: Vec<f64>, value: Vec<f64> },
}

/// `f(t) = g(t) · e` for a scalar profile `g` and a unit direction `e`.
#[derive(Clone, Debug, PartialEq)]
pub struct LeaderForcing {
    family: ForcingFamily,
    /// Unit vector; `None` means the first coordinate axis.
    direction: Option<Vec<f64>>,
}

impl Default for LeaderForcing {
    fn default() -> Self {
        Self::zero()
    }
}

impl LeaderForcing {
    pub fn zero() -> Self {
        Self {
            family: ForcingFamily::Zero,
            direction: None,
        }
    }

    pub fn new(family: ForcingFamily) -> Result<Self, ModelError> {
        let bad = |msg: &str| Err(ModelError::InvalidForcing(msg.to_string()));
        match &family {
            ForcingFamily::Zero => {}
            ForcingFamily::PowerLaw { c, p } => {
                if !c.is_finite() || !p.is_finite() {
                    return bad("power_law needs finite c and p");
                }
            }
            ForcingFamily::LogDamped { c } => {
                if !c.is_finite() {
                    return bad("log_damped needs finite c");
                }
            }
            ForcingFamily::Table { t, value } => {
                if t.len() != value.len() || t.is_empty() {
                    return bad("forcing table needs matching, nonempty t and value");
                }
                if t[0] != 0.0 || !strictly_increasing(t) || value.iter().any(|v| !v.is_finite()) {
                    return bad("forcing table must start at t = 0 with increasing times");
                }
            }
        }
        Ok(Self {
            family,
            direction: None,
        })
    }

    pub fn power_law(c: f64, p: f64) -> Result<Self, ModelError> {
        Self::new(ForcingFamily::PowerLaw { c, p })
    }

    pub fn log_damped(c: f64) -> Result<Self, ModelError> {
        Self::new(ForcingFamily::LogDamped { c })
    }

    /// Sets the direction; normalized here unless it is already a unit
    /// vector to within a few ulps, so stored directions reload unchanged.
    pub fn with_direction(mut self, direction: Vec<f64>) -> Result<Self, ModelError> {
        let n = crate::numeric::norm(&direction);
        if !(n.is_finite() && n > 0.0) {
            return Err(ModelError::InvalidForcing(
                "direction must be a nonzero finite vector".into(),
            ));
        }
        if (n - 1.0).abs() <= 4.0 * f64::EPSILON {
            self.direction = Some(direction);
        } else {
            self.direction = Some(direction.into_iter().map(|c| c / n).collect());
        }
        Ok(self)
    }

    pub fn family(&self) -> &ForcingFamily {
        &self.family
    }

    pub fn direction(&self) -> Option<&[f64]> {
        self.direction.as_deref()
    }

    pub fn is_zero(&self) -> bool {
        match &self.family {
            ForcingFamily::Zero => true,
            ForcingFamily::PowerLaw { c, .. } | ForcingFamily::LogDamped { c } => *c == 0.0,
            ForcingFamily::Table { value, .. } => value.iter().all(|v| *v == 0.0),
        }
    }

    /// Scalar profile `g(t)`; `|f(t)| = |g(t)|`.
    pub fn magnitude(&self, t: f64, n_agents: usize) -> f64 {
        match &self.family {
            ForcingFamily::Zero => 0.0,
            ForcingFamily::PowerLaw { c, p } => c / (1.0 + t).powf(*p),
            ForcingFamily::LogDamped { c } => {
                let l = (2.0 + t).ln();
                c / ((1.0 + t).powi(n_agents as i32 - 1) * l * l)
            }
            ForcingFamily::Table { t: nodes, value } => interp_flat(nodes, value, t),
        }
    }

    /// Writes `f(t)` into `out`, which has the spatial dimension.
    pub fn accel_into(&self, t: f64, n_agents: usize, out: &mut [f64]) {
        out.fill(0.0);
        let g = self.magnitude(t, n_agents);
        if g == 0.0 {
            return;
        }
        match &self.direction {
            Some(e) => out.iter_mut().zip(e).for_each(|(o, c)| *o = g * c),
            None => out[0] = g,
        }
    }

    /// Writes the mean of `f` over `[t0, t1]` into `out` (four-point
    /// Gauss–Legendre on the scalar profile).
    pub fn mean_accel_into(&self, t0: f64, t1: f64, n_agents: usize, out: &mut [f64]) {
        const NODES: [f64; 4] = [
            -0.861_136_311_594_052_6,
            -0.339_981_043_584_856_3,
            0.339_981_043_584_856_3,
            0.861_136_311_594_052_6,
        ];
        const WEIGHTS: [f64; 4] = [
            0.347_854_845_137_453_9,
            0.652_145_154_862_546_1,
            0.652_145_154_862_546_1,
            0.347_854_845_137_453_9,
        ];
        out.fill(0.0);
        if self.is_zero() {
            return;
        }
        let (mid, half) = (0.5 * (t0 + t1), 0.5 * (t1 - t0));
        let g = 0.5
            * NODES
                .iter()
                .zip(WEIGHTS)
                .map(|(x, w)| w * self.magnitude(mid + half * x, n_agents))
                .sum::<f64>();
        match &self.direction {
            Some(e) => out.iter_mut().zip(e).for_each(|(o, c)| *o = g * c),
            None => out[0] = g,
        }
    }

    /// `‖f‖₁ = ∫₀^∞ |f|`; infinite when not integrable. Closed form for
    /// the power law, a rigorous upper bound for the log-damped profile,
    /// node trapezoid for tables.
    pub fn l1_norm(&self, n_agents: usize) -> f64 {
        match &self.family {
            ForcingFamily::Zero => 0.0,
            ForcingFamily::PowerLaw { c, .. } if *c == 0.0 => 0.0,
            ForcingFamily::PowerLaw { c, p } => {
                if *p > 1.0 {
                    c.abs() / (p - 1.0)
                } else {
                    f64::INFINITY
                }
            }
            ForcingFamily::LogDamped { c } => c.abs() * log_damped_l1_upper(n_agents),
            ForcingFamily::Table { t, value } => {
                if value[value.len() - 1] != 0.0 {
                    return f64::INFINITY;
                }
                let abs: Vec<f64> = value.iter().map(|v| v.abs()).collect();
                trapezoid(t, &abs)
            }
        }
    }
}

/// Upper bound on `∫₀^∞ dt / ((1+t)^(N-1) ln²(2+t))`.
///
/// With `u = ln(1+t)` the integrand becomes `e^{-(N-2)u} / ln²(1+e^u)`,
/// which is bounded by `1/u²`; the tail past `U` is therefore at most `1/U`.
fn log_damped_l1_upper(n_agents: usize) -> f64 {
    let k = n_agents.saturating_sub(2) as f64;
    let integrand = |u: f64| {
        let l = u + (-u).exp().ln_1p();
        (-k * u).exp() / (l * l)
    };
    let u_max = 1e6;
    let mut grid: Vec<f64> = (0..=2000).map(|j| j as f64 * 1e-3).collect();
    grid.extend(log_space(2.0, u_max, 6000).into_iter().skip(1));
    let values: Vec<f64> = grid.iter().map(|&u| integrand(u)).collect();
    // The integrand is convex in u, so the trapezoid over-estimates.
    trapezoid(&grid, &values) + 1.0 / u_max
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ForcingReport {
    /// `∫₀^∞ |f| < ∞`.
    pub integrable: bool,
    /// `|f(t)| = o((1+t)^(1-N))`.
    pub little_o_condition: bool,
    /// `t^(N-2) |f(t)| ∈ L¹(0, ∞)`.
    pub weighted_l1: bool,
    /// Closed-form facts (built-ins) vs numeric evidence (tables).
    pub analytic: bool,
    pub horizon: Option<f64>,
    pub evidence: Vec<ForcingEvidence>,
}

impl ForcingReport {
    pub fn all_hold(&self) -> bool {
        self.integrable && self.little_o_condition && self.weighted_l1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ForcingEvidence {
    pub upper: f64,
    /// `∫₀^S |f|`
    pub l1: f64,
    /// `∫₀^S t^(N-2) |f|`
    pub weighted_l1: f64,
    /// `max (1+t)^(N-1) |f(t)|` over grid points in `(S/10, S]`.
    pub scaled_peak: f64,
}

/// Hypotheses on the leader acceleration needed for flocking with a
/// free-will leader.
pub fn check_forcing_conditions(f: &LeaderForcing, n_agents: usize) -> ForcingReport {
    check_forcing_conditions_with_horizon(f, n_agents, DEFAULT_FORCING_HORIZON)
}

pub fn check_forcing_conditions_with_horizon(
    f: &LeaderForcing,
    n_agents: usize,
    horizon: f64,
) -> ForcingReport {
    let crit = n_agents.saturating_sub(1) as f64;
    let analytic = |a: bool, b: bool, c: bool| ForcingReport {
        integrable: a,
        little_o_condition: b,
        weighted_l1: c,
        analytic: true,
        horizon: None,
        evidence: Vec::new(),
    };
    if f.is_zero() {
        return analytic(true, true, true);
    }
    match f.family() {
        ForcingFamily::Zero => analytic(true, true, true),
        // |f| = |C|(1+t)^-p: integrable iff p > 1; o((1+t)^(1-N)) iff
        // p > N-1; t^(N-2)(1+t)^-p integrable iff p - (N-2) > 1.
        ForcingFamily::PowerLaw { p, .. } => analytic(*p > 1.0, *p > crit, *p > crit),
        ForcingFamily::LogDamped { .. } => analytic(true, true, true),
        ForcingFamily::Table { .. } => numeric_forcing_conditions(f, n_agents, horizon),
    }
}

fn numeric_forcing_conditions(f: &LeaderForcing, n_agents: usize, horizon: f64) -> ForcingReport {
    let n = n_agents as i32;
    let decades = horizon.log10().ceil().max(1.0) as usize;
    let checkpoints = log_space(1.0, horizon, decades + 1);

    let mut grid: Vec<f64> = (0..=1000).map(|k| k as f64 / 1000.0).collect();
    grid.extend(log_space(1.0, horizon, 400 * decades).into_iter().skip(1));
    grid.extend(checkpoints.iter().copied());
    if let ForcingFamily::Table { t, .. } = f.family() {
        grid.extend(t.iter().copied().filter(|&x| x <= horizon));
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let abs: Vec<f64> = grid.iter().map(|&t| f.magnitude(t, n_agents).abs()).collect();
    let weighted: Vec<f64> = grid
        .iter()
        .zip(&abs)
        .map(|(&t, &a)| t.powi(n - 2) * a)
        .collect();
    let scaled: Vec<f64> = grid
        .iter()
        .zip(&abs)
        .map(|(&t, &a)| (1.0 + t).powi(n - 1) * a)
        .collect();

    let mut evidence = Vec::with_capacity(checkpoints.len());
    let (mut l1, mut wl1) = (0.0, 0.0);
    let mut k = 0;
    for &upper in &checkpoints {
        let mut peak: f64 = 0.0;
        while k + 1 < grid.len() && grid[k + 1] <= upper {
            l1 += trapezoid(&grid[k..k + 2], &abs[k..k + 2]);
            wl1 += trapezoid(&grid[k..k + 2], &weighted[k..k + 2]);
            if grid[k + 1] > upper / 10.0 {
                peak = peak.max(scaled[k + 1]);
            }
            k += 1;
        }
        evidence.push(ForcingEvidence {
            upper,
            l1,
            weighted_l1: wl1,
            scaled_peak: peak,
        });
    }

    // Settled: the last decade adds a negligible fraction.
    let settled = |prev: f64, last: f64| last - prev <= 1e-3 * last + 1e-12;
    let m = evidence.len();
    let (prev, last) = (&evidence[m - 2], &evidence[m - 1]);
    let overall_peak = scaled.iter().copied().fold(0.0, f64::max);
    ForcingReport {
        integrable: settled(prev.l1, last.l1),
        little_o_condition: last.scaled_peak <= 1e-3 * overall_peak.max(1e-300),
        weighted_l1: settled(prev.weighted_l1, last.weighted_l1),
        analytic: false,
        horizon: Some(horizon),
        evidence,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_mean_of_power_law_is_exact() {
        let f = LeaderForcing::power_law(0.5, 3.0).unwrap();
        let mut out = [0.0];
        let (t0, t1) = (0.0, 0.01);
        f.mean_accel_into(t0, t1, 3, &mut out);
        // (0.25 / h) (1 - (1+h)^-2) without the cancellation
        let exact = 0.25 * (2.0 + t1) / (1.0f64 + t1).powi(2);
        assert!((out[0] - exact).abs() < 1e-15);
        LeaderForcing::zero().mean_accel_into(0.0, 1.0, 3, &mut out);
        assert_eq!(out, [0.0]);
    }

    #[test]
    fn power_law_with_p_equal_n_satisfies_everything() {
        for n in 2..7 {
            let f = LeaderForcing::power_law(1.0, n as f64).unwrap();
            assert!(check_forcing_conditions(&f, n).all_hold());
        }
    }

    #[test]
    fn log_damped_satisfies_everything() {
        let f = LeaderForcing::log_damped(1.0).unwrap();
        for n in 2..7 {
            let r = check_forcing_conditions(&f, n);
            assert!(r.all_hold() && r.analytic);
        }
    }

    #[test]
    fn slow_power_law_is_not_integrable() {
        let f = LeaderForcing::power_law(1.0, 0.5).unwrap();
        let r = check_forcing_conditions(&f, 3);
        assert!(!r.integrable && !r.little_o_condition && !r.weighted_l1);
    }

    #[test]
    fn boundary_exponent_fails_little_o() {
        let f = LeaderForcing::power_law(1.0, 2.0).unwrap();
        let r = check_forcing_conditions(&f, 3);
        assert!(r.integrable);
        assert!(!r.little_o_condition);
        assert!(!r.weighted_l1);
    }

    #[test]
    fn flags_flip_at_thresholds() {
        for n in 2..=6usize {
            let crit = (n - 1) as f64;
            let flags = |p: f64| {
                let r = check_forcing_conditions(&LeaderForcing::power_law(1.0, p).unwrap(), n);
                (r.integrable, r.little_o_condition, r.weighted_l1)
            };
            assert!(!flags(0.9).0 && flags(1.1).0);
            let (_, lo_below, w_below) = flags(crit - 0.1);
            let (_, lo_above, w_above) = flags(crit + 0.1);
            assert!(!lo_below && !w_below && lo_above && w_above, "n = {n}");
        }
    }

    #[test]
    fn l1_norms() {
        let f = LeaderForcing::power_law(0.5, 3.0).unwrap();
        assert_eq!(f.l1_norm(3), 0.25);
        assert!(LeaderForcing::power_law(1.0, 1.0).unwrap().l1_norm(3).is_infinite());
        assert_eq!(LeaderForcing::zero().l1_norm(4), 0.0);
    }

    #[test]
    fn log_damped_bound_is_tight_and_above() {
        // N = 3: ∫ (1+t)^-2 ln^-2(2+t) dt, crude reference on a long t-grid.
        let f = LeaderForcing::log_damped(1.0).unwrap();
        let bound = f.l1_norm(3);
        let ts = log_space(1e-6, 1e7, 200_000);
        let mut grid = vec![0.0];
        grid.extend(ts);
        let vals: Vec<f64> = grid.iter().map(|&t| f.magnitude(t, 3)).collect();
        let reference = trapezoid(&grid, &vals);
        assert!(bound >= reference - 1e-9);
        assert!(bound - reference < 1e-4, "{bound} vs {reference}");
    }

    #[test]
    fn direction_is_normalized() {
        let f = LeaderForcing::power_law(2.0, 3.0)
            .unwrap()
            .with_direction(vec![3.0, 4.0])
            .unwrap();
        let mut a = [0.0; 2];
        f.accel_into(0.0, 3, &mut a);
        assert!((a[0] - 1.2).abs() < 1e-15 && (a[1] - 1.6).abs() < 1e-15);
        assert!(LeaderForcing::zero().with_direction(vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn table_forcing_evidence() {
        // Compactly supported: all conditions hold.
        let f = LeaderForcing::new(ForcingFamily::Table {
            t: vec![0.0, 1.0, 2.0],
            value: vec![1.0, 0.5, 0.0],
        })
        .unwrap();
        let r = check_forcing_conditions(&f, 3);
        assert!(!r.analytic && r.all_hold(), "{r:?}");
        assert!((f.l1_norm(3) - 1.0).abs() < 1e-15);

        // Held at a nonzero level forever: nothing holds.
        let g = LeaderForcing::new(ForcingFamily::Table {
            t: vec![0.0, 1.0],
            value: vec![1.0, 0.1],
        })
        .unwrap();
        let r = check_forcing_conditions(&g, 3);
        assert!(!r.integrable && !r.little_o_condition && !r.weighted_l1);
        assert_eq!(r.horizon, Some(DEFAULT_FORCING_HORIZON));
    }
}
