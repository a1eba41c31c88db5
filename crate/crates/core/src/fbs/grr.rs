//! Discrete Garsia-Rodemich-Rumsey functionals.
//!
//! `U^2_{a1,a2,p}(V)^p = iint |V|^p / (|s2 - s1|^{a1 p} |t2 - t1|^{a2 p})` over
//! `[0,1]^4`, by the trapezoid rule on the grid nodes. The weight carries the
//! factor `p` on each exponent, which is what the two-parameter estimate
//! `||dy||_{a - 2/p, b - 2/p} <~ U^2_{a,b,p}(dy)` needs. Both orderings of
//! each pair are counted, assuming `|V|` is symmetric under them.

use serde::{Deserialize, Serialize};

use crate::complex::holder_norm_22;
use crate::error::{Error, Result};
use crate::grid::{BiIncrement, Grid1D};
use crate::sewing1d::{holder_norm_1d, Inc};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrrReport {
    pub exponents: Vec<f64>,
    pub p: f64,
    pub u: f64,
    /// Grid Hoelder norm at the exponents lowered by `2/p`, when those are positive.
    pub holder: Option<f64>,
    /// `holder / u`; the constant of the estimate is unknown and only monitored.
    pub ratio: Option<f64>,
    /// Set when neighbouring-node pairs carry most of the sum, i.e. the
    /// integrand is not summable at grid scale.
    pub flagged: Option<String>,
}

fn trapezoid(g: &Grid1D) -> Vec<f64> {
    let p = g.points();
    let n = p.len();
    (0..n)
        .map(|i| {
            let l = if i > 0 { p[i] - p[i - 1] } else { 0.0 };
            let r = if i + 1 < n { p[i + 1] - p[i] } else { 0.0 };
            0.5 * (l + r)
        })
        .collect()
}

fn check(exponents: &[f64], p: f64) -> Result<()> {
    if !(p > 1.0) {
        return Err(Error::Param(format!("p = {p} must exceed 1")));
    }
    if exponents.iter().any(|a| !a.is_finite()) {
        return Err(Error::Param("non-finite exponent".into()));
    }
    Ok(())
}

fn finish(exponents: Vec<f64>, p: f64, total: f64, near: f64, holder: Option<f64>) -> Result<GrrReport> {
    if !total.is_finite() {
        return Err(Error::Param("functional is not finite on this grid".into()));
    }
    let u = total.powf(1.0 / p);
    let flagged = (total > 0.0 && near > 0.5 * total).then(|| format!("{:.0}% of the integral sits on neighbouring nodes", 100.0 * near / total));
    if let Some(f) = &flagged {
        log::warn!("{f}");
    }
    let ratio = holder.map(|h| if u > 0.0 { h / u } else { 0.0 });
    Ok(GrrReport { exponents, p, u, holder, ratio, flagged })
}

/// `U^2` of a (2,2)-field.
pub fn grr_functional(field: &dyn BiIncrement, exponents: (f64, f64), p: f64) -> Result<GrrReport> {
    check(&[exponents.0, exponents.1], p)?;
    if field.arity() != (2, 2) {
        return Err(Error::Arity(format!("grr_functional needs a (2,2)-field, got {:?}", field.arity())));
    }
    let g = field.grid();
    let (ws, wt) = (trapezoid(&g.g1), trapezoid(&g.g2));
    let (ps, pt) = (g.g1.points(), g.g2.points());
    let (n1, n2) = g.shape();
    let (e1, e2) = (exponents.0 * p, exponents.1 * p);
    let (mut total, mut near) = (0.0, 0.0);
    for i1 in 0..n1 {
        for i2 in i1 + 1..n1 {
            let a = ws[i1] * ws[i2] / (ps[i2] - ps[i1]).powf(e1);
            for j1 in 0..n2 {
                for j2 in j1 + 1..n2 {
                    let b = wt[j1] * wt[j2] / (pt[j2] - pt[j1]).powf(e2);
                    let v = 4.0 * field.eval(&[i1, i2], &[j1, j2]).abs().powf(p) * a * b;
                    total += v;
                    if i2 == i1 + 1 || j2 == j1 + 1 {
                        near += v;
                    }
                }
            }
        }
    }
    let (h1, h2) = (exponents.0 - 2.0 / p, exponents.1 - 2.0 / p);
    let holder = if h1 > 0.0 && h2 > 0.0 { Some(holder_norm_22(field, h1, h2)?.norm) } else { None };
    finish(vec![exponents.0, exponents.1], p, total, near, holder)
}

/// `U^1` of a one-parameter 2-increment.
pub fn grr_functional_1d(inc: &Inc, exponent: f64, p: f64) -> Result<GrrReport> {
    check(&[exponent], p)?;
    if inc.k() != 2 {
        return Err(Error::Arity("grr_functional_1d needs a 2-increment".into()));
    }
    let g = inc.grid();
    let w = trapezoid(g);
    let pts = g.points();
    let e = exponent * p;
    let (mut total, mut near) = (0.0, 0.0);
    for a in 0..pts.len() {
        for b in a + 1..pts.len() {
            let v = 2.0 * inc.eval2(a, b).abs().powf(p) * w[a] * w[b] / (pts[b] - pts[a]).powf(e);
            total += v;
            if b == a + 1 {
                near += v;
            }
        }
    }
    let h = exponent - 2.0 / p;
    let holder = if h > 0.0 { Some(holder_norm_1d(inc, h)?.norm) } else { None };
    finish(vec![exponent], p, total, near, holder)
}
