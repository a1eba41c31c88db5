//! Two-parameter Young integrals as corrected Riemann sums over grid cells.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Rect, SheetSample};
use crate::phi::Phi;
use crate::stats;

/// Evaluation point of the integrand inside a cell.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rule {
    /// Lower-left corner: the plain sum of `f dg`.
    #[default]
    LeftPoint,
    /// Corner average for `f`; the mixed measure uses the averaged products
    /// of opposite edges, which makes the change of variable exact for quadratics.
    Midpoint,
}

impl FromStr for Rule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left" | "left-point" | "ito" => Ok(Rule::LeftPoint),
            "mid" | "midpoint" | "stratonovich" => Ok(Rule::Midpoint),
            _ => Err(Error::Param(format!("unknown rule {s:?}"))),
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::LeftPoint => "left-point",
            Rule::Midpoint => "midpoint",
        })
    }
}

/// Order of the two partial differentials in a triple integral.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TripleVariant {
    /// `y d1x(s,s+;t) d2z(s+;t,t+)`.
    D1xD2z,
    /// `y d2z(s;t,t+) d1x(s,s+;t+)`.
    D2zD1x,
    /// `y d1x(s,s+;t) d2z(s;t,t+)`.
    Bullet,
}

impl FromStr for TripleVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "d1x_d2z" => Ok(Self::D1xD2z),
            "d2z_d1x" => Ok(Self::D2zD1x),
            "bullet" => Ok(Self::Bullet),
            _ => Err(Error::Param(format!("unknown triple variant {s:?}"))),
        }
    }
}

fn check_pair(f: &SheetSample, g: &SheetSample, r: &Rect) -> Result<()> {
    if f.grid() != g.grid() {
        return Err(Error::Shape("sheets live on different grids".into()));
    }
    r.check_in(f.grid())
}

/// Fitted Hoelder exponents of a sheet along its middle row and column.
pub fn fitted_exponents(x: &SheetSample) -> (f64, f64) {
    let (n1, n2) = x.shape();
    let g = x.grid();
    let col: Vec<f64> = (0..n1).map(|i| x.get(i, n2 / 2)).collect();
    let row: Vec<f64> = (0..n2).map(|j| x.get(n1 / 2, j)).collect();
    let a = stats::fit_path_exponent(&col, g.g1.points()).unwrap_or(f64::NAN);
    let b = stats::fit_path_exponent(&row, g.g2.points()).unwrap_or(f64::NAN);
    (a, b)
}

fn warn_if_rough(label: &str, f: &SheetSample, g: &SheetSample, need: f64) {
    let (fa, fb) = fitted_exponents(f);
    let (ga, gb) = fitted_exponents(g);
    if fa + ga <= need || fb + gb <= need {
        log::warn!("{label}: fitted exponent sums ({:.3}, {:.3}) do not exceed {need}", fa + ga, fb + gb);
    }
}

#[inline]
fn cell_dx(g: &SheetSample, i: usize, j: usize) -> f64 {
    g.get(i + 1, j + 1) - g.get(i + 1, j) - g.get(i, j + 1) + g.get(i, j)
}

#[inline]
fn corner_mean(f: &SheetSample, i: usize, j: usize) -> f64 {
    0.25 * (f.get(i, j) + f.get(i + 1, j) + f.get(i, j + 1) + f.get(i + 1, j + 1))
}

/// `int f dg` over the box.
pub fn young2d(f: &SheetSample, g: &SheetSample, r: &Rect) -> Result<f64> {
    young2d_with(f, g, r, Rule::LeftPoint)
}

pub fn young2d_with(f: &SheetSample, g: &SheetSample, r: &Rect, rule: Rule) -> Result<f64> {
    check_pair(f, g, r)?;
    warn_if_rough("young2d", f, g, 1.0);
    let mut acc = 0.0;
    for i in r.i1..r.i2 {
        for j in r.j1..r.j2 {
            let w = match rule {
                Rule::LeftPoint => f.get(i, j),
                Rule::Midpoint => corner_mean(f, i, j),
            };
            acc += w * cell_dx(g, i, j);
        }
    }
    Ok(acc)
}

/// `int f d1g d2g` over the box.
pub fn young2d_mixed(f: &SheetSample, g: &SheetSample, r: &Rect) -> Result<f64> {
    young2d_mixed_with(f, g, r, Rule::LeftPoint)
}

pub fn young2d_mixed_with(f: &SheetSample, g: &SheetSample, r: &Rect, rule: Rule) -> Result<f64> {
    check_pair(f, g, r)?;
    let (ga, gb) = fitted_exponents(g);
    if ga <= 0.5 || gb <= 0.5 {
        log::warn!("young2d_mixed: fitted exponents ({ga:.3}, {gb:.3}) not above 1/2");
    }
    let mut acc = 0.0;
    for i in r.i1..r.i2 {
        for j in r.j1..r.j2 {
            acc += match rule {
                Rule::LeftPoint => f.get(i, j) * (g.get(i + 1, j) - g.get(i, j)) * (g.get(i + 1, j + 1) - g.get(i + 1, j)),
                Rule::Midpoint => {
                    let d1 = g.get(i + 1, j) - g.get(i, j) + g.get(i + 1, j + 1) - g.get(i, j + 1);
                    let d2 = g.get(i, j + 1) - g.get(i, j) + g.get(i + 1, j + 1) - g.get(i + 1, j);
                    corner_mean(f, i, j) * 0.25 * d1 * d2
                }
            };
        }
    }
    Ok(acc)
}

/// `int y d1x d2z` in one of its three Riemann-sum forms.
pub fn young2d_triple(y: &SheetSample, x: &SheetSample, z: &SheetSample, r: &Rect, variant: TripleVariant) -> Result<f64> {
    check_pair(y, x, r)?;
    check_pair(y, z, r)?;
    let mut acc = 0.0;
    for i in r.i1..r.i2 {
        for j in r.j1..r.j2 {
            let (d1x, d2z) = match variant {
                TripleVariant::D1xD2z => (x.get(i + 1, j) - x.get(i, j), z.get(i + 1, j + 1) - z.get(i + 1, j)),
                TripleVariant::D2zD1x => (x.get(i + 1, j + 1) - x.get(i, j + 1), z.get(i, j + 1) - z.get(i, j)),
                TripleVariant::Bullet => (x.get(i + 1, j) - x.get(i, j), z.get(i, j + 1) - z.get(i, j)),
            };
            acc += y.get(i, j) * d1x * d2z;
        }
    }
    Ok(acc)
}

/// `dphi(x) - int phi'(x) dx - int phi''(x) d1x d2x` on the box.
pub fn young_change_of_variable_residual(phi: &Phi, x: &SheetSample, r: &Rect, rule: Rule) -> Result<f64> {
    r.check_in(x.grid())?;
    let (a, b) = fitted_exponents(x);
    if a <= 0.5 || b <= 0.5 {
        log::warn!("change of variable: fitted exponents ({a:.3}, {b:.3}) not above 1/2");
    }
    let y = x.map(|u| phi.eval(u))?;
    let y1 = x.map(|u| phi.d(1, u))?;
    let y2 = x.map(|u| phi.d(2, u))?;
    let lhs = y.rect_increment(r);
    Ok(lhs - young2d_with(&y1, x, r, rule)? - young2d_mixed_with(&y2, x, r, rule)?)
}
