//! One-parameter increments, the coboundary, Hoelder norms and discrete sewing.
//!
//! The sewing map is only realized through the composite `Ld = 1 - S`, where
//! `S` sums an increment over consecutive grid intervals.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cochain;
use crate::error::{Error, Result};
use crate::grid::{for_each_increasing, has_contiguous_repeat, Grid1D, DENSE_ENTRY_LIMIT};
use crate::phi::Phi;
use crate::stats;

type IncFn = Arc<dyn Fn(&[usize]) -> f64 + Send + Sync>;

/// A k-increment on a 1D grid (k = 1 is a plain function of one grid point).
#[derive(Clone)]
pub struct Inc {
    grid: Grid1D,
    k: usize,
    repr: Repr,
}

#[derive(Clone)]
enum Repr {
    Dense(Arc<Vec<f64>>),
    /// `d^m base` with the expansion precomputed; `base` is never itself a coboundary.
    Delta { base: Arc<Inc>, m: usize, terms: Arc<Vec<(Vec<usize>, i64)>> },
    Func(IncFn),
}

impl Inc {
    pub fn function(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape(format!("{} values on {} points", values.len(), grid.len())));
        }
        Ok(Self { grid, k: 1, repr: Repr::Dense(Arc::new(values)) })
    }

    /// Tabulates `f` over all k-tuples when small enough, otherwise keeps `f`.
    pub fn from_fn(grid: Grid1D, k: usize, f: impl Fn(&[usize]) -> f64 + Send + Sync + 'static) -> Result<Self> {
        if !(1..=3).contains(&k) {
            return Err(Error::Arity(format!("k = {k} outside 1..=3")));
        }
        let n = grid.len();
        let total = n.pow(k as u32);
        if total > DENSE_ENTRY_LIMIT {
            return Ok(Self { grid, k, repr: Repr::Func(Arc::new(f)) });
        }
        let mut v = vec![0.0; total];
        let mut idx = vec![0usize; k];
        for (flat, slot) in v.iter_mut().enumerate() {
            let mut r = flat;
            for p in (0..k).rev() {
                idx[p] = r % n;
                r /= n;
            }
            if !has_contiguous_repeat(&idx) {
                *slot = f(&idx);
            }
        }
        Ok(Self { grid, k, repr: Repr::Dense(Arc::new(v)) })
    }

    pub fn zeros(grid: Grid1D, k: usize) -> Result<Self> {
        Self::from_fn(grid, k, |_| 0.0)
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Value at an index tuple; exactly zero on contiguous repeats.
    pub fn eval(&self, idx: &[usize]) -> f64 {
        debug_assert_eq!(idx.len(), self.k);
        if has_contiguous_repeat(idx) {
            return 0.0;
        }
        match &self.repr {
            Repr::Dense(v) => {
                let n = self.grid.len();
                v[idx.iter().fold(0usize, |acc, &i| acc * n + i)]
            }
            Repr::Delta { base, terms, .. } => {
                let mut sub = Vec::with_capacity(base.k);
                let mut acc = 0.0;
                for (pat, c) in terms.iter() {
                    sub.clear();
                    sub.extend(pat.iter().map(|&p| idx[p]));
                    acc += *c as f64 * base.eval(&sub);
                }
                acc
            }
            Repr::Func(f) => f(idx),
        }
    }

    pub fn eval2(&self, s: usize, t: usize) -> f64 {
        self.eval(&[s, t])
    }

    /// The function `f` when this increment is exactly `df` for a 1-increment `f`.
    pub fn coboundary_of_function(&self) -> Option<&Inc> {
        match &self.repr {
            Repr::Delta { base, m: 1, .. } if base.k == 1 => Some(base),
            _ => None,
        }
    }

    /// Values of a 1-increment in grid order.
    pub fn function_values(&self) -> Result<Vec<f64>> {
        if self.k != 1 {
            return Err(Error::Arity("function_values on k != 1".into()));
        }
        Ok((0..self.grid.len()).map(|i| self.eval(&[i])).collect())
    }

    /// Entrywise `self - other`.
    pub fn sub(&self, other: &Inc) -> Result<Inc> {
        if self.k != other.k || self.grid != other.grid {
            return Err(Error::Shape("increments of different type".into()));
        }
        let (a, b) = (self.clone(), other.clone());
        Inc::from_fn(self.grid.clone(), self.k, move |i| a.eval(i) - b.eval(i))
    }
}

/// Coboundary of a 1- or 2-increment.
pub fn delta1d(g: &Inc) -> Result<Inc> {
    if g.k > 2 {
        return Err(Error::Arity(format!("coboundary of a {}-increment not supported", g.k)));
    }
    let (base, m) = match &g.repr {
        Repr::Delta { base, m, .. } => (base.clone(), m + 1),
        _ => (Arc::new(g.clone()), 1),
    };
    let k = g.k + 1;
    Ok(Inc { grid: g.grid.clone(), k, repr: Repr::Delta { base, m, terms: Arc::new(cochain::expansion(k, m)) } })
}

/// Product of a 2-increment and a 2-increment sharing the meeting index:
/// `(ab)_{s u t} = a_{s u} b_{u t}`.
pub fn product_22(a: &Inc, b: &Inc) -> Result<Inc> {
    if a.k != 2 || b.k != 2 || a.grid != b.grid {
        return Err(Error::Arity("product_22 needs two 2-increments on one grid".into()));
    }
    let (a, b) = (a.clone(), b.clone());
    Inc::from_fn(a.grid.clone(), 3, move |i| a.eval(&[i[0], i[1]]) * b.eval(&[i[1], i[2]]))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderReport {
    pub exponents: Vec<f64>,
    pub norm: f64,
    pub argmax: Vec<usize>,
}

/// `sup |g_{st}| / |t - s|^mu` over distinct grid pairs.
pub fn holder_norm_1d(g: &Inc, mu: f64) -> Result<HolderReport> {
    holder_norm_1d_filtered(g, mu, |_, _| true)
}

/// As [`holder_norm_1d`], restricted to pairs accepted by `keep`.
pub fn holder_norm_1d_filtered(g: &Inc, mu: f64, keep: impl Fn(usize, usize) -> bool) -> Result<HolderReport> {
    if g.k != 2 {
        return Err(Error::Arity("holder_norm_1d needs a 2-increment".into()));
    }
    if !(mu > 0.0) {
        return Err(Error::Param(format!("exponent {mu} must be positive")));
    }
    let p = g.grid.points();
    let mut best = HolderReport { exponents: vec![mu], norm: 0.0, argmax: vec![0, 1] };
    for s in 0..p.len() {
        for t in s + 1..p.len() {
            if !keep(s, t) {
                continue;
            }
            let r = g.eval2(s, t).abs() / (p[t] - p[s]).powf(mu);
            if r > best.norm {
                best.norm = r;
                best.argmax = vec![s, t];
            }
        }
    }
    Ok(best)
}

/// `sup |h_{sut}| / (|u - s|^gamma |t - u|^rho)` over distinct grid triples.
pub fn holder_norm_c3(h: &Inc, gamma: f64, rho: f64) -> Result<HolderReport> {
    if h.k != 3 {
        return Err(Error::Arity("holder_norm_c3 needs a 3-increment".into()));
    }
    if !(gamma > 0.0 && rho > 0.0) {
        return Err(Error::Param(format!("exponents ({gamma}, {rho}) must be positive")));
    }
    let p = h.grid.points();
    let mut best = HolderReport { exponents: vec![gamma, rho], norm: 0.0, argmax: vec![0, 1, 2] };
    for_each_increasing(p.len(), 3, |i| {
        let r = h.eval(i).abs() / ((p[i[1]] - p[i[0]]).powf(gamma) * (p[i[2]] - p[i[1]]).powf(rho));
        if r > best.norm {
            best.norm = r;
            best.argmax = i.to_vec();
        }
    });
    Ok(best)
}

/// `sum_i a(t_i, t_{i+1})` over the grid intervals between `s_idx` and `t_idx`.
///
/// A coboundary `df` telescopes exactly to `f(t) - f(s)`.
pub fn sewing_sum_1d(a: &Inc, s_idx: usize, t_idx: usize) -> Result<f64> {
    check_pair(a, s_idx, t_idx)?;
    if a.coboundary_of_function().is_some() {
        return Ok(a.eval2(s_idx, t_idx));
    }
    Ok((s_idx..t_idx).map(|i| a.eval2(i, i + 1)).sum())
}

fn check_pair(a: &Inc, s: usize, t: usize) -> Result<()> {
    if a.k != 2 {
        return Err(Error::Arity("sewing needs a 2-increment".into()));
    }
    if s > t {
        return Err(Error::IndexOrder(format!("s_idx {s} > t_idx {t}")));
    }
    if t >= a.grid.len() {
        return Err(Error::Shape(format!("index {t} outside grid of {}", a.grid.len())));
    }
    Ok(())
}

/// Output of the discrete composite `Ld`.
#[derive(Clone)]
pub struct LambdaDelta {
    /// `a - S(a)`.
    pub residual: Inc,
    /// Fitted total exponent of `da` from dyadic triples.
    pub fitted_exponent: Option<f64>,
    pub warning: Option<String>,
}

/// `a - S(a)` interval-wise, with a regularity diagnostic on `da`.
pub fn lambda_delta_1d(a: &Inc) -> Result<LambdaDelta> {
    if a.k != 2 {
        return Err(Error::Arity("lambda_delta_1d needs a 2-increment".into()));
    }
    let fitted = fit_delta_exponent(a);
    let warning = match fitted {
        Some(e) if e <= 1.0 => Some(format!("fitted exponent of da is {e:.3} <= 1; sewing may not converge")),
        _ => None,
    };
    if let Some(w) = &warning {
        log::warn!("{w}");
    }
    let residual = if a.coboundary_of_function().is_some() {
        Inc::zeros(a.grid.clone(), 2)?
    } else {
        let n = a.grid.len();
        let mut prefix = vec![0.0; n];
        for i in 1..n {
            prefix[i] = prefix[i - 1] + a.eval2(i - 1, i);
        }
        let a2 = a.clone();
        Inc::from_fn(a.grid.clone(), 2, move |i| {
            a2.eval2(i[0], i[1]) - (prefix[i[1]] - prefix[i[0]])
        })?
    };
    Ok(LambdaDelta { residual, fitted_exponent: fitted, warning })
}

/// Exponent fitted to `sup |da(s, s+m, s+2m)|` against `2m` spacing over dyadic m.
fn fit_delta_exponent(a: &Inc) -> Option<f64> {
    let p = a.grid.points();
    let n = p.len();
    let (mut spans, mut sups) = (Vec::new(), Vec::new());
    let mut m = 1;
    while 2 * m < n {
        let (mut sup, mut span) = (0.0f64, 0.0f64);
        for s in 0..n - 2 * m {
            let d = a.eval2(s, s + 2 * m) - a.eval2(s, s + m) - a.eval2(s + m, s + 2 * m);
            sup = sup.max(d.abs());
            span = span.max(p[s + 2 * m] - p[s]);
        }
        spans.push(span);
        sups.push(sup);
        m *= 2;
    }
    if sups.iter().all(|&s| s < 1e-300) {
        return None;
    }
    stats::loglog_slope(&spans, &sups)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    pub mu: f64,
    /// `sup |a - S(a)| / |t - s|^mu` over intervals of `2^m` grid cells.
    pub residual_norm: HolderReport,
    /// `||da||_{mu/2, mu/2}` over all triples.
    pub delta_norm: HolderReport,
    /// `residual_norm / delta_norm * (2^mu - 2)`.
    pub ratio: f64,
}

/// Measures the sewing contraction on intervals made of a power-of-two number of cells.
pub fn contraction_1d(a: &Inc, mu: f64) -> Result<ContractionReport> {
    if !(mu > 1.0) {
        return Err(Error::Param(format!("contraction needs mu > 1, got {mu}")));
    }
    let ld = lambda_delta_1d(a)?;
    let r = holder_norm_1d_filtered(&ld.residual, mu, |s, t| (t - s).is_power_of_two())?;
    let d = holder_norm_c3(&delta1d(a)?, mu / 2.0, mu / 2.0)?;
    let ratio = if d.norm > 0.0 { r.norm / d.norm * (2f64.powf(mu) - 2.0) } else if r.norm == 0.0 { 0.0 } else { f64::INFINITY };
    Ok(ContractionReport { mu, residual_norm: r, delta_norm: d, ratio })
}

/// Left-point Riemann-Stieltjes sum of `f dg` over `[s_idx, t_idx]`.
pub fn young_integral_1d(grid: &Grid1D, f: &[f64], g: &[f64], s_idx: usize, t_idx: usize) -> Result<f64> {
    if f.len() != grid.len() || g.len() != grid.len() {
        return Err(Error::Shape("samples do not match grid".into()));
    }
    if s_idx > t_idx || t_idx >= grid.len() {
        return Err(Error::IndexOrder(format!("({s_idx}, {t_idx})")));
    }
    if let (Some(a), Some(b)) = (stats::fit_path_exponent(f, grid.points()), stats::fit_path_exponent(g, grid.points())) {
        if a + b <= 1.0 {
            log::warn!("fitted exponents {a:.3} + {b:.3} <= 1: Young regime not reached");
        }
    }
    Ok((s_idx..t_idx).map(|i| f[i] * (g[i + 1] - g[i])).sum())
}

/// Relative tolerance for the area relation `d(area) = dx dx`.
pub const AREA_RELATION_TOL: f64 = 1e-8;

/// Step-2 rough integral `S(phi(x) dx + phi'(x) area)` over `[s_idx, t_idx]`.
pub fn rough_integral_step2_1d(phi: &Phi, grid: &Grid1D, x: &[f64], area: &Inc, s_idx: usize, t_idx: usize) -> Result<f64> {
    if x.len() != grid.len() || area.grid() != grid || area.k() != 2 {
        return Err(Error::Shape("path and area do not match grid".into()));
    }
    if s_idx > t_idx || t_idx >= grid.len() {
        return Err(Error::IndexOrder(format!("({s_idx}, {t_idx})")));
    }
    check_area_relation(x, area)?;
    Ok((s_idx..t_idx)
        .map(|i| phi.eval(x[i]) * (x[i + 1] - x[i]) + phi.d(1, x[i]) * area.eval2(i, i + 1))
        .sum())
}

/// Verifies `area_st - area_su - area_ut = (x_u - x_s)(x_t - x_u)`.
///
/// Exhaustive up to 65 points, otherwise on a fixed deterministic sample.
pub fn check_area_relation(x: &[f64], area: &Inc) -> Result<()> {
    let n = x.len();
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let tol = AREA_RELATION_TOL * scale * scale;
    let mut worst = (0.0f64, [0usize; 3]);
    let mut probe = |i: &[usize]| {
        let lhs = area.eval2(i[0], i[2]) - area.eval2(i[0], i[1]) - area.eval2(i[1], i[2]);
        let rhs = (x[i[1]] - x[i[0]]) * (x[i[2]] - x[i[1]]);
        let r = (lhs - rhs).abs();
        if r > worst.0 {
            worst = (r, [i[0], i[1], i[2]]);
        }
    };
    if n <= 65 {
        for_each_increasing(n, 3, &mut probe);
    } else {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
        for _ in 0..20_000 {
            let mut t = [rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n)];
            t.sort_unstable();
            probe(&t);
        }
        for i in 0..n - 2 {
            probe(&[i, i + 1, i + 2]);
        }
    }
    if worst.0 > tol {
        return Err(Error::Relation(format!("area relation residual {:.3e} at {:?}", worst.0, worst.1)));
    }
    Ok(())
}
