//! Scalar nonlinearities with closed-form derivatives of every order.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Phi {
    Const(f64),
    /// `a + b u`
    Affine(f64, f64),
    Id,
    /// `u^2`
    Square,
    /// `u^2 / 2`
    HalfSquare,
    /// `u^3`
    Cube,
    Sin,
    Cos,
    Exp,
}

impl Phi {
    /// k-th derivative at `u`.
    pub fn d(&self, k: usize, u: f64) -> f64 {
        match *self {
            Phi::Const(c) => if k == 0 { c } else { 0.0 },
            Phi::Affine(a, b) => match k {
                0 => a + b * u,
                1 => b,
                _ => 0.0,
            },
            Phi::Id => match k {
                0 => u,
                1 => 1.0,
                _ => 0.0,
            },
            Phi::Square => match k {
                0 => u * u,
                1 => 2.0 * u,
                2 => 2.0,
                _ => 0.0,
            },
            Phi::HalfSquare => match k {
                0 => 0.5 * u * u,
                1 => u,
                2 => 1.0,
                _ => 0.0,
            },
            Phi::Cube => match k {
                0 => u * u * u,
                1 => 3.0 * u * u,
                2 => 6.0 * u,
                3 => 6.0,
                _ => 0.0,
            },
            Phi::Sin => match k % 4 {
                0 => u.sin(),
                1 => u.cos(),
                2 => -u.sin(),
                _ => -u.cos(),
            },
            Phi::Cos => match k % 4 {
                0 => u.cos(),
                1 => -u.sin(),
                2 => -u.cos(),
                _ => u.sin(),
            },
            Phi::Exp => u.exp(),
        }
    }

    pub fn eval(&self, u: f64) -> f64 {
        self.d(0, u)
    }

    /// Supremum of `|phi^(k)|` over `[lo, hi]` by dense sampling.
    pub fn sup_abs(&self, k: usize, lo: f64, hi: f64) -> f64 {
        let n = 512;
        (0..=n).map(|i| self.d(k, lo + (hi - lo) * i as f64 / n as f64).abs()).fold(0.0, f64::max)
    }
}

impl fmt::Display for Phi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Phi::Const(c) => write!(f, "const:{c}"),
            Phi::Affine(a, b) => write!(f, "affine:{a},{b}"),
            Phi::Id => write!(f, "id"),
            Phi::Square => write!(f, "sq"),
            Phi::HalfSquare => write!(f, "halfsq"),
            Phi::Cube => write!(f, "cube"),
            Phi::Sin => write!(f, "sin"),
            Phi::Cos => write!(f, "cos"),
            Phi::Exp => write!(f, "exp"),
        }
    }
}

impl FromStr for Phi {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || Error::Param(format!("unknown phi {s:?}"));
        Ok(match s {
            "id" => Phi::Id,
            "sq" | "square" | "u2" => Phi::Square,
            "halfsq" => Phi::HalfSquare,
            "cube" | "u3" => Phi::Cube,
            "sin" => Phi::Sin,
            "cos" => Phi::Cos,
            "exp" => Phi::Exp,
            _ => {
                if let Some(c) = s.strip_prefix("const:") {
                    Phi::Const(c.parse().map_err(|_| bad())?)
                } else if let Some(ab) = s.strip_prefix("affine:") {
                    let (a, b) = ab.split_once(',').ok_or_else(bad)?;
                    Phi::Affine(a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?)
                } else {
                    return Err(bad());
                }
            }
        })
    }
}
