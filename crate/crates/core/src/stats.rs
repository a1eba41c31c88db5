//! Small statistics helpers shared by the convergence and Monte-Carlo studies.

use serde::{Deserialize, Serialize};

/// Least-squares line through `(x, y)`; `None` with fewer than two distinct abscissae.
pub fn fit_line(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let mx = x[..n].iter().sum::<f64>() / n as f64;
    let my = y[..n].iter().sum::<f64>() / n as f64;
    let sxx: f64 = x[..n].iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x[..n].iter().zip(&y[..n]).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Slope of `log y` against `log x`, skipping non-positive entries.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let (lx, ly): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .unzip();
    fit_line(&lx, &ly).map(|(s, _)| s)
}

/// Convergence order of errors measured at mesh sizes `h`.
///
/// Errors at or below `floor` are roundoff; when every error is at the floor
/// the data carry no rate and the result is `Order::Exact`.
pub fn convergence_order(h: &[f64], err: &[f64], floor: f64) -> Order {
    let kept: Vec<(f64, f64)> = h.iter().zip(err).filter(|(_, e)| e.abs() > floor).map(|(a, e)| (*a, e.abs())).collect();
    if kept.is_empty() {
        return Order::Exact;
    }
    if kept.len() < 2 {
        return Order::Insufficient;
    }
    let (hs, es): (Vec<f64>, Vec<f64>) = kept.into_iter().unzip();
    match loglog_slope(&hs, &es) {
        Some(p) => Order::Fitted(p),
        None => Order::Insufficient,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Order {
    /// All errors at roundoff level.
    Exact,
    Fitted(f64),
    Insufficient,
}

impl Order {
    pub fn at_least(&self, p: f64) -> bool {
        match self {
            Order::Exact => true,
            Order::Fitted(q) => *q >= p,
            Order::Insufficient => false,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub std_err: f64,
}

/// Sample mean, unbiased standard deviation and standard error.
pub fn mean_std(v: &[f64]) -> MeanStd {
    let n = v.len();
    if n == 0 {
        return MeanStd::default();
    }
    let mean = v.iter().sum::<f64>() / n as f64;
    let var = if n > 1 { v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
    let std = var.sqrt();
    MeanStd { n, mean, std, std_err: std / (n as f64).sqrt() }
}

/// Empirical Hoelder exponent of a sampled path from dyadic lags.
///
/// Uses the largest increment at each lag `m = 1, 2, 4, ...`; only used for
/// regularity warnings.
pub fn fit_path_exponent(values: &[f64], points: &[f64]) -> Option<f64> {
    let n = values.len();
    let mut lags = Vec::new();
    let mut sups = Vec::new();
    let mut m = 1;
    while 2 * m < n {
        let mut sup = 0.0f64;
        let mut span = 0.0f64;
        for i in 0..n - m {
            sup = sup.max((values[i + m] - values[i]).abs());
            span = span.max(points[i + m] - points[i]);
        }
        lags.push(span);
        sups.push(sup);
        m *= 2;
    }
    if sups.iter().all(|&s| s == 0.0) {
        return Some(f64::INFINITY);
    }
    loglog_slope(&lags, &sups)
}
