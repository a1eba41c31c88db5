//! The kernel `Q(xi, eta) = int_0^1 e^{i s xi} int_0^s e^{i v eta} dv ds`.
//!
//! Over the simplex `0 < v < s < 1` the exponent is a barycentric combination
//! of `0`, `i xi` and `i (xi + eta)`, so `Q` is the second divided difference
//! of `exp` at those three points.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `(e^w - 1) / w`, by its series near zero.
fn phi1(w: Complex64) -> Complex64 {
    if w.norm() < 0.5 {
        let mut term = Complex64::new(1.0, 0.0);
        let mut acc = term;
        for k in 2..30 {
            term = term * w / k as f64;
            acc += term;
            if term.norm() < 1e-18 {
                break;
            }
        }
        acc
    } else {
        (w.exp() - 1.0) / w
    }
}

/// `exp[a, b]`.
fn dd1(a: Complex64, b: Complex64) -> Complex64 {
    a.exp() * phi1(b - a)
}

/// `exp[a, b, c]`, symmetric in its arguments.
fn dd2(z: [Complex64; 3]) -> Complex64 {
    // Put the farthest pair at the ends.
    let pairs = [(0, 2, 1), (0, 1, 2), (1, 2, 0)];
    let (i, j, k) = pairs.into_iter().max_by(|p, q| (z[p.0] - z[p.1]).norm().total_cmp(&(z[q.0] - z[q.1]).norm())).unwrap();
    let (a, c, b) = (z[i], z[j], z[k]);
    if (c - a).norm() >= 1.0 {
        return (dd1(b, c) - dd1(a, b)) / (c - a);
    }
    // All three points within distance 1: shift to their mean and sum
    // h_k(x, y, w) / (k + 2)! with complete homogeneous polynomials. Odd
    // terms can vanish by symmetry, so no early exit; |h_k| <= C(k+2, 2)
    // makes 30 terms ample.
    let m = (a + b + c) / 3.0;
    let (x, y, w) = (a - m, b - m, c - m);
    let (mut h1, mut h2, mut h3) = (Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0));
    let mut fact = 2.0;
    let mut acc = h3 / fact;
    for k in 1..30 {
        h1 *= x;
        h2 = y * h2 + h1;
        h3 = w * h3 + h2;
        fact *= (k + 2) as f64;
        acc += h3 / fact;
    }
    m.exp() * acc
}

pub fn q_kernel(xi: f64, eta: f64) -> Complex64 {
    let i = Complex64::i();
    dd2([Complex64::new(0.0, 0.0), i * xi, i * (xi + eta)])
}

/// `Q` by nested adaptive quadrature of the defining double integral.
pub fn q_kernel_quadrature(xi: f64, eta: f64, tol: f64) -> Complex64 {
    let part = |re: bool| {
        quadrature::integrate(
            |s| {
                quadrature::integrate(
                    |v| {
                        let a = s * xi + v * eta;
                        if re { a.cos() } else { a.sin() }
                    },
                    0.0,
                    s,
                    tol,
                )
                .integral
            },
            0.0,
            1.0,
            tol,
        )
        .integral
    };
    Complex64::new(part(true), part(false))
}

/// `min(1, 4/|xi|, 4/|eta|, 4/|xi eta| + 4/(|xi + eta| min(|xi|, |eta|)))`.
pub fn q_bound(xi: f64, eta: f64) -> f64 {
    let (a, b, c) = (xi.abs(), eta.abs(), (xi + eta).abs());
    let mut m = 1.0f64;
    if a > 0.0 {
        m = m.min(4.0 / a);
    }
    if b > 0.0 {
        m = m.min(4.0 / b);
    }
    if a > 0.0 && b > 0.0 && c > 0.0 {
        m = m.min(4.0 / (a * b) + 4.0 / (c * a.min(b)));
    }
    m
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QMassReport {
    pub alpha: f64,
    pub half_widths: Vec<f64>,
    /// `iint_{[-L, L]^2} |Q|^2 / |xi eta|^{2 alpha - 1}` for each `L`.
    pub masses: Vec<f64>,
}

impl QMassReport {
    /// Increments between successive squares.
    pub fn increments(&self) -> Vec<f64> {
        self.masses.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// Weighted mass of `|Q|^2` on growing squares, by unit panels of nested
/// quadrature. `|Q(-xi, -eta)| = |Q(xi, eta)|` halves the work.
pub fn q_weighted_mass(alpha: f64, half_widths: &[usize]) -> Result<QMassReport> {
    if !(alpha > 0.25 && alpha < 1.0) {
        return Err(Error::Param(format!("alpha = {alpha} outside (1/4, 1)")));
    }
    if half_widths.windows(2).any(|w| w[1] <= w[0]) || half_widths.first() == Some(&0) {
        return Err(Error::Param("half widths must be positive and increasing".into()));
    }
    let e = 2.0 * alpha - 1.0;
    let f = |xi: f64, eta: f64| {
        let w = (xi * eta).abs();
        if w == 0.0 {
            0.0
        } else {
            q_kernel(xi, eta).norm_sqr() / w.powf(e)
        }
    };
    let panel = |a: f64, b: f64| {
        quadrature::integrate(|xi| quadrature::integrate(|eta| f(xi, eta), b, b + 1.0, 1e-10).integral, a, a + 1.0, 1e-10).integral
    };
    let mut masses = Vec::new();
    let mut acc = 0.0;
    let mut done = 0usize;
    for &l in half_widths {
        // Add the frame between the squares of half width `done` and `l`:
        // xi in [-l, l), eta in [0, l), minus what was already counted.
        let (l, d) = (l as i64, done as i64);
        for a in -l..l {
            for b in 0..l {
                let inside = a >= -d && a < d && b < d;
                if !inside {
                    acc += panel(a as f64, b as f64);
                }
            }
        }
        done = l as usize;
        masses.push(2.0 * acc);
    }
    Ok(QMassReport { alpha, half_widths: half_widths.iter().map(|&l| l as f64).collect(), masses })
}
