//! Delay weight `μ` on `[0, τ]`.

use super::ModelError;
use crate::numeric::{interp_flat, strictly_increasing, trapezoid};

/// `∫_{-1}^{1} exp(-1/(1-r²)) dr`.
const BUMP_INTEGRAL: f64 = 0.443_993_816_168_079_4;

/// Cells of the reference grid used to integrate built-in shapes.
const REFERENCE_CELLS: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub enum KernelShape {
    /// `μ ≡ height`.
    Uniform { height: f64 },
    /// Hat with value `peak` at `τ/2` and zero at both ends.
    Triangular { peak: f64 },
    /// `height · exp(1 - 1/(1-r²))`, `r = 2s/τ - 1`; smooth, peak `height` at `τ/2`.
    TruncatedBump { height: f64 },
    /// Linear interpolation through `(s, μ)` samples covering `[0, τ]`.
    Table { s: Vec<f64>, mu: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct DelayKernel {
    tau: f64,
    shape: KernelShape,
}

impl DelayKernel {
    pub fn new(tau: f64, shape: KernelShape) -> Result<Self, ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidKernel(msg));
        if !(tau.is_finite() && tau > 0.0) {
            return bad(format!("tau must be positive, got {tau}"));
        }
        match &shape {
            KernelShape::Uniform { height: h }
            | KernelShape::Triangular { peak: h }
            | KernelShape::TruncatedBump { height: h } => {
                if !(h.is_finite() && *h >= 0.0) {
                    return bad(format!("kernel height must be finite and nonnegative, got {h}"));
                }
            }
            KernelShape::Table { s, mu } => {
                if s.len() != mu.len() || s.len() < 2 {
                    return bad("kernel table needs at least two (s, mu) pairs".into());
                }
                if !strictly_increasing(s) || s[0] != 0.0 || s[s.len() - 1] != tau {
                    return bad("kernel table nodes must increase strictly from 0 to tau".into());
                }
                if mu.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return bad("kernel table values must be finite and nonnegative".into());
                }
            }
        }
        let kernel = Self { tau, shape };
        kernel_mass(&kernel)?;
        Ok(kernel)
    }

    /// Uniform kernel with unit mass.
    pub fn normalized_uniform(tau: f64) -> Result<Self, ModelError> {
        Self::new(tau, KernelShape::Uniform { height: 1.0 / tau })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn shape(&self) -> &KernelShape {
        &self.shape
    }

    /// `μ(s)` on `[0, τ]`, zero outside.
    pub fn weight(&self, s: f64) -> f64 {
        if !(0.0..=self.tau).contains(&s) {
            return 0.0;
        }
        match &self.shape {
            KernelShape::Uniform { height } => *height,
            KernelShape::Triangular { peak } => {
                let half = 0.5 * self.tau;
                peak * (1.0 - (s - half).abs() / half).max(0.0)
            }
            KernelShape::TruncatedBump { height } => {
                let r = 2.0 * s / self.tau - 1.0;
                let q = 1.0 - r * r;
                if q <= 0.0 {
                    0.0
                } else {
                    height * (1.0 - 1.0 / q).exp()
                }
            }
            KernelShape::Table { s: nodes, mu } => interp_flat(nodes, mu, s),
        }
    }

    /// Closed-form mass of the built-in shapes.
    pub fn analytic_mass(&self) -> Option<f64> {
        match &self.shape {
            KernelShape::Uniform { height } => Some(height * self.tau),
            KernelShape::Triangular { peak } => Some(0.5 * peak * self.tau),
            KernelShape::TruncatedBump { height } => {
                Some(height * 0.5 * self.tau * std::f64::consts::E * BUMP_INTEGRAL)
            }
            KernelShape::Table { .. } => None,
        }
    }

    /// Grid on which [`kernel_mass`] integrates: the table nodes, or a fine
    /// uniform grid with an even cell count (so `τ/2` is a node).
    pub fn reference_grid(&self) -> Vec<f64> {
        match &self.shape {
            KernelShape::Table { s, .. } => s.clone(),
            _ => (0..=REFERENCE_CELLS)
                .map(|k| {
                    if k == REFERENCE_CELLS {
                        self.tau
                    } else {
                        self.tau * k as f64 / REFERENCE_CELLS as f64
                    }
                })
                .collect(),
        }
    }

    /// Upper bound of `μ` on `[0, τ]`.
    pub fn max_weight(&self) -> f64 {
        match &self.shape {
            KernelShape::Uniform { height } => *height,
            KernelShape::Triangular { peak } => *peak,
            KernelShape::TruncatedBump { height } => *height,
            KernelShape::Table { mu, .. } => mu.iter().copied().fold(0.0, f64::max),
        }
    }

    /// Composite-trapezoid weights on `m + 1` equally spaced lags
    /// `0, h, …, mh = τ`. Entry `k` multiplies the integrand at time `t - kh`.
    pub fn trapezoid_weights(&self, m: usize) -> Vec<f64> {
        let h = self.tau / m as f64;
        (0..=m)
            .map(|k| {
                let end = if k == 0 || k == m { 0.5 } else { 1.0 };
                end * h * self.weight(k as f64 * h)
            })
            .collect()
    }
}

/// `μ0 = ∫₀^τ μ`, composite trapezoid on the kernel's reference grid.
pub fn kernel_mass(k: &DelayKernel) -> Result<f64, ModelError> {
    let grid = k.reference_grid();
    let values: Vec<f64> = grid.iter().map(|&s| k.weight(s)).collect();
    let mass = trapezoid(&grid, &values);
    if mass.is_nan() || mass <= 0.0 {
        return Err(ModelError::InvalidKernel(
            "kernel mass must be positive".into(),
        ));
    }
    Ok(mass)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn normalized_uniform_has_unit_mass() {
        for tau in [0.05, 0.1, 0.3, 1.7] {
            let k = DelayKernel::normalized_uniform(tau).unwrap();
            assert!((kernel_mass(&k).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_height_two() {
        let k = DelayKernel::new(0.5, KernelShape::Uniform { height: 2.0 }).unwrap();
        assert!((kernel_mass(&k).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn triangle_area() {
        let k = DelayKernel::new(0.4, KernelShape::Triangular { peak: 3.0 }).unwrap();
        // h·τ/2
        assert!(rel(kernel_mass(&k).unwrap(), 3.0 * 0.4 / 2.0) < 1e-10);
    }

    #[test]
    fn builtins_match_analytic_mass() {
        for tau in [0.05, 0.1, 0.5, 2.0] {
            for shape in [
                KernelShape::Uniform { height: 1.3 },
                KernelShape::Triangular { peak: 0.7 },
                KernelShape::TruncatedBump { height: 2.5 },
            ] {
                let k = DelayKernel::new(tau, shape).unwrap();
                let exact = k.analytic_mass().unwrap();
                assert!(rel(kernel_mass(&k).unwrap(), exact) < 1e-10, "{k:?}");
            }
        }
    }

    #[test]
    fn zero_mass_is_rejected() {
        let err = DelayKernel::new(0.1, KernelShape::Uniform { height: 0.0 }).unwrap_err();
        assert_eq!(err.to_string(), "invalid delay kernel: kernel mass must be positive");
    }

    #[test]
    fn table_kernel_mass_is_trapezoid_of_nodes() {
        let k = DelayKernel::new(
            1.0,
            KernelShape::Table {
                s: vec![0.0, 0.25, 1.0],
                mu: vec![0.0, 2.0, 0.0],
            },
        )
        .unwrap();
        assert!((kernel_mass(&k).unwrap() - 1.0).abs() < 1e-15);
        assert!(DelayKernel::new(
            2.0,
            KernelShape::Table {
                s: vec![0.0, 1.0],
                mu: vec![1.0, 1.0],
            },
        )
        .is_err());
    }

    #[test]
    fn trapezoid_weights_sum_to_mass_for_piecewise_linear() {
        let k = DelayKernel::new(0.1, KernelShape::Triangular { peak: 20.0 }).unwrap();
        let w = k.trapezoid_weights(10);
        assert_eq!(w.len(), 11);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-13);
        let u = DelayKernel::normalized_uniform(0.1).unwrap();
        assert!((u.trapezoid_weights(7).iter().sum::<f64>() - 1.0).abs() < 1e-13);
    }
}
