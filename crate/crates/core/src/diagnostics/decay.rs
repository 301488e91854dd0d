use serde::Serialize;

use super::{ConsensusSeries, DiagnosticsError};

/// Samples at or below this velocity diameter are treated as converged
/// to rounding and left out of the fit.
pub const DECAY_FLOOR: f64 = 1e-12;

const MIN_SAMPLES: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayWindow {
    pub start: f64,
    pub end: f64,
}

/// `[max(τ, t_end/2), t_end]`: late enough that early transients do not
/// bias the slope.
pub fn default_decay_window(tau: f64, t_end: f64) -> DecayWindow {
    DecayWindow {
        start: tau.max(0.5 * t_end),
        end: t_end,
    }
}

/// Least-squares line through `(t, ln dV(t))`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    pub window: DecayWindow,
    /// `-slope`
    pub rate: f64,
    pub intercept: f64,
    pub residual_rms: f64,
    pub samples: usize,
    /// Samples in the window dropped for lying at or below the floor.
    pub censored: usize,
}

pub fn fit_decay_rate(series: &ConsensusSeries, window: DecayWindow) -> Result<DecayFit, DiagnosticsError> {
    fit_decay_rate_with_floor(series, window, DECAY_FLOOR)
}

pub fn fit_decay_rate_with_floor(
    series: &ConsensusSeries,
    window: DecayWindow,
    floor: f64,
) -> Result<DecayFit, DiagnosticsError> {
    let mut censored = 0;
    let mut pts = Vec::new();
    for (&t, &dv) in series.times.iter().zip(&series.velocity_diameter) {
        if t < window.start || t > window.end {
            continue;
        }
        if dv > floor {
            pts.push((t, dv.ln()));
        } else {
            censored += 1;
        }
    }
    if pts.len() < MIN_SAMPLES {
        return Err(DiagnosticsError::InsufficientDecayData {
            found: pts.len(),
            needed: MIN_SAMPLES,
        });
    }

    let n = pts.len() as f64;
    let t_mean = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let y_mean = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut stt, mut sty) = (0.0, 0.0);
    for &(t, y) in &pts {
        stt += (t - t_mean) * (t - t_mean);
        sty += (t - t_mean) * (y - y_mean);
    }
    let slope = sty / stt;
    let intercept = y_mean - slope * t_mean;
    let sse: f64 = pts
        .iter()
        .map(|&(t, y)| {
            let r = y - (intercept + slope * t);
            r * r
        })
        .sum();
    Ok(DecayFit {
        window,
        rate: -slope,
        intercept,
        residual_rms: (sse / n).sqrt(),
        samples: pts.len(),
        censored,
    })
}
