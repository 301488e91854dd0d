//! Small numeric helpers shared across modules.

/// Euclidean norm.
pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Euclidean distance between two equally sized vectors.
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt()
}

/// Index of the cell `[xs[k], xs[k+1]]` containing `x`, for sorted `xs`
/// with at least two nodes. Assumes `xs[0] <= x <= xs[last]`.
fn cell(xs: &[f64], x: f64) -> usize {
    let k = xs.partition_point(|&node| node <= x);
    k.saturating_sub(1).min(xs.len() - 2)
}

/// Piecewise-linear interpolation on sorted nodes with flat extrapolation
/// on both sides.
pub fn interp_flat(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    let last = xs.len() - 1;
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[last] {
        return ys[last];
    }
    let k = cell(xs, x);
    let w = (x - xs[k]) / (xs[k + 1] - xs[k]);
    if w == 0.0 {
        ys[k]
    } else {
        ys[k] + w * (ys[k + 1] - ys[k])
    }
}

/// Composite trapezoid rule on arbitrary sorted nodes.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// `n` points log-spaced from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| {
            if k + 1 == n {
                hi
            } else {
                (a + (b - a) * k as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// Checks that `xs` is finite and strictly increasing.
pub fn strictly_increasing(xs: &[f64]) -> bool {
    xs.iter().all(|x| x.is_finite()) && xs.windows(2).all(|w| w[0] < w[1])
}
