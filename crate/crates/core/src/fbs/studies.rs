//! Monte-Carlo studies on sampled sheets. Every trial draws from its own
//! stream keyed by `(seed, trial)`, so results do not depend on trial order.

use serde::{Deserialize, Serialize};

use super::{brownian_sheet, CoupledSampler, FbsParams, FbsSampler};
use crate::controlled::{lift_phi, lift_phi_derivative, rough_integral, IntegralOptions, Measure};
use crate::enhance::{enhance_smooth_with, roughsheet_norm_fields, Convention, EnhanceOptions, FieldId, NormOptions, Sig};
use crate::error::{Error, Result};
use crate::grid::{make_dyadic_grid, Rect, SheetSample};
use crate::phi::Phi;
use crate::stats::{convergence_order, loglog_slope, mean_std, MeanStd, Order};

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceOptions {
    pub level: u32,
    pub samples: usize,
    /// Box sides in the scanned direction; default: dyadic sides `h <= 1`
    /// with `N h >= min_cycles`, where truncation barely bends the power law.
    pub sides: Option<Vec<f64>>,
    pub min_cycles: f64,
    /// Side in the other direction.
    pub other_side: f64,
}

impl Default for VarianceOptions {
    fn default() -> Self {
        Self { level: 6, samples: 10_000, sides: None, min_cycles: 16.0, other_side: 0.25 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub sides: Vec<f64>,
    /// Pooled empirical variance of box increments, per side, per direction.
    pub empirical: [Vec<MeanStd>; 2],
    /// Exact variance of the sampled law.
    pub model: [Vec<f64>; 2],
    pub slopes: [f64; 2],
    pub model_slopes: [f64; 2],
    /// `(2 alpha, 2 beta)`.
    pub expected: [f64; 2],
}

impl VarianceReport {
    pub fn to_csv(&self) -> Result<String> {
        let mut rows = Vec::new();
        for d in 0..2 {
            for (k, h) in self.sides.iter().enumerate() {
                let e = &self.empirical[d][k];
                rows.push(vec![(d + 1).to_string(), h.to_string(), e.mean.to_string(), e.std_err.to_string(), self.model[d][k].to_string()]);
            }
        }
        csv_string(&["direction", "side", "variance", "std_err", "model"], rows)
    }
}

/// Box-increment variance against box side in each direction.
pub fn variance_scaling(params: &FbsParams, opts: &VarianceOptions) -> Result<VarianceReport> {
    let grid = make_dyadic_grid(opts.level, 1.0, 1.0)?;
    let n = 1usize << opts.level;
    let sides = match &opts.sides {
        Some(s) => s.clone(),
        None => {
            let mut v: Vec<f64> = (0..=opts.level).map(|k| 0.5f64.powi(k as i32)).filter(|h| params.cutoff * h >= opts.min_cycles).collect();
            v.reverse();
            v
        }
    };
    if sides.len() < 2 {
        return Err(Error::Param("need at least two box sides; raise the cutoff or lower min_cycles".into()));
    }
    let steps = |h: f64| -> Result<usize> {
        let m = h * n as f64;
        let k = m.round() as usize;
        if k == 0 || k > n || (m - k as f64).abs() > 1e-9 {
            return Err(Error::Param(format!("side {h} is not a whole number of grid steps")));
        }
        Ok(k)
    };
    let ms: Vec<usize> = sides.iter().map(|&h| steps(h)).collect::<Result<_>>()?;
    let w = steps(opts.other_side)?;
    if opts.samples < 2 {
        return Err(Error::Param("need at least two samples".into()));
    }
    let sampler = FbsSampler::new(params, &grid)?;
    let boxes = |m: usize, d: usize| -> Vec<Rect> {
        let mut v = Vec::new();
        for a in 0..n / m {
            for b in 0..n / w {
                let (p, q) = ([a * m, (a + 1) * m], [b * w, (b + 1) * w]);
                v.push(if d == 0 { Rect { i1: p[0], i2: p[1], j1: q[0], j2: q[1] } } else { Rect { i1: q[0], i2: q[1], j1: p[0], j2: p[1] } });
            }
        }
        v
    };
    let all: Vec<Vec<Vec<Rect>>> = (0..2).map(|d| ms.iter().map(|&m| boxes(m, d)).collect()).collect();
    let mut per: Vec<Vec<Vec<f64>>> = vec![vec![Vec::with_capacity(opts.samples); ms.len()]; 2];
    for trial in 0..opts.samples {
        let x = sampler.sample(trial as u64)?;
        for d in 0..2 {
            for (k, bs) in all[d].iter().enumerate() {
                let s: f64 = bs.iter().map(|r| x.rect_increment(r).powi(2)).sum();
                per[d][k].push(s / bs.len() as f64);
            }
        }
    }
    let empirical = [0, 1].map(|d| per[d].iter().map(|v| mean_std(v)).collect::<Vec<_>>());
    let model = [0, 1].map(|d| all[d].iter().map(|bs| sampler.box_variance(&bs[0])).collect::<Vec<_>>());
    let slope = |v: &[f64]| loglog_slope(&sides, v).unwrap_or(f64::NAN);
    let slopes = [0, 1].map(|d| slope(&empirical[d].iter().map(|m| m.mean).collect::<Vec<_>>()));
    let model_slopes = [0, 1].map(|d| slope(&model[d]));
    Ok(VarianceReport { sides, empirical, model, slopes, model_slopes, expected: [2.0 * params.alpha, 2.0 * params.beta] })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceOptions {
    pub level: u32,
    /// Hoelder exponents `(h, h')` of the norm.
    pub exponents: (f64, f64),
    pub p: f64,
    pub fields: Vec<FieldId>,
    pub norm: NormOptions,
}

impl Default for ConvergenceOptions {
    fn default() -> Self {
        Self {
            level: 5,
            exponents: (0.4, 0.4),
            p: 2.0,
            fields: vec![FieldId::A(Sig::X), FieldId::B(crate::grid::Dir::One, Sig::X), FieldId::C(Sig::X, Sig::X), FieldId::D(crate::grid::Dir::One, Sig::X, Sig::X)],
            norm: NormOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub lo: f64,
    pub hi: f64,
    pub field: String,
    /// `E ||F^{hi} - F^{lo}||^p`.
    pub moment: MeanStd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub exponents: (f64, f64),
    pub p: f64,
    pub trials: usize,
    pub rows: Vec<ConvergenceRow>,
    pub warning: Option<String>,
}

impl ConvergenceReport {
    pub fn series(&self, field: FieldId) -> Vec<&ConvergenceRow> {
        let name = field.to_string();
        self.rows.iter().filter(|r| r.field == name).collect()
    }

    /// Each moment is below its predecessor up to two combined standard errors.
    pub fn decreasing(&self, field: FieldId) -> bool {
        self.series(field).windows(2).all(|w| {
            let (a, b) = (&w[0].moment, &w[1].moment);
            b.mean - a.mean <= 2.0 * (a.std_err.powi(2) + b.std_err.powi(2)).sqrt()
        })
    }

    pub fn to_csv(&self) -> Result<String> {
        let rows = self.rows.iter().map(|r| vec![r.lo.to_string(), r.hi.to_string(), r.field.clone(), r.moment.mean.to_string(), r.moment.std_err.to_string()]);
        csv_string(&["cutoff_lo", "cutoff_hi", "field", "moment", "std_err"], rows)
    }
}

/// Cauchy differences of the enhanced truncations at successive cutoffs.
pub fn convergence_study(params: &FbsParams, cutoffs: &[f64], trials: usize, opts: &ConvergenceOptions) -> Result<ConvergenceReport> {
    let (h1, h2) = opts.exponents;
    let warning = (h1 >= params.alpha || h2 >= params.beta)
        .then(|| format!("norm exponents ({h1}, {h2}) not below ({}, {}); the differences need not vanish", params.alpha, params.beta));
    if let Some(w) = &warning {
        log::warn!("{w}");
    }
    if !(opts.p >= 1.0) {
        return Err(Error::Param(format!("moment order {} below 1", opts.p)));
    }
    let grid = make_dyadic_grid(opts.level, 1.0, 1.0)?;
    let sampler = CoupledSampler::new(params, cutoffs, &grid)?;
    let eo = EnhanceOptions { alpha: h1, beta: h2, convention: Convention::Midpoint };
    let pairs = cutoffs.len().saturating_sub(1);
    let mut vals = vec![vec![Vec::with_capacity(trials); opts.fields.len()]; pairs];
    for trial in 0..trials {
        let xs = sampler.sample(trial as u64)?;
        let bundles: Vec<_> = xs.iter().map(|x| enhance_smooth_with(x, &eo)).collect::<Result<_>>()?;
        for k in 0..pairs {
            let rep = roughsheet_norm_fields(&bundles[k + 1], Some(&bundles[k]), &opts.fields, &opts.norm)?;
            for (f, v) in rep.components.iter().enumerate() {
                vals[k][f].push(v.1.powf(opts.p));
            }
        }
    }
    let mut rows = Vec::new();
    for (f, id) in opts.fields.iter().enumerate() {
        for k in 0..pairs {
            rows.push(ConvergenceRow { lo: cutoffs[k], hi: cutoffs[k + 1], field: id.to_string(), moment: mean_std(&vals[k][f]) });
        }
    }
    Ok(ConvergenceReport { exponents: opts.exponents, p: opts.p, trials, rows, warning })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StratoOptions {
    pub levels: Vec<u32>,
    pub trials: usize,
    /// Paths with `sup |x|` above this leave the range where the derivative
    /// bounds are taken and are rejected.
    pub range: f64,
    pub max_rejection: f64,
    pub stride: usize,
}

impl Default for StratoOptions {
    fn default() -> Self {
        Self { levels: vec![4, 5, 6], trials: 100, range: 8.0, max_rejection: 0.1, stride: 4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StratoRow {
    pub level: u32,
    /// `|d phi(x) - iint phi'(x) dx - iint phi''(x) dw|` over accepted paths.
    pub residual: MeanStd,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StratoReport {
    pub phi: Phi,
    pub rows: Vec<StratoRow>,
    pub accepted: usize,
    pub rejected: usize,
    /// `sup |phi^(k)|` on `[-range, range]` for `k = 0..=3`.
    pub derivative_bounds: Vec<f64>,
    pub order: Order,
}

impl StratoReport {
    pub fn row(&self, level: u32) -> Option<&StratoRow> {
        self.rows.iter().find(|r| r.level == level)
    }

    pub fn to_csv(&self) -> Result<String> {
        let rows = self.rows.iter().map(|r| vec![r.level.to_string(), r.residual.mean.to_string(), r.residual.std_err.to_string(), r.max.to_string()]);
        csv_string(&["level", "mean_abs_residual", "std_err", "max_abs_residual"], rows)
    }
}

/// Residual of the change-of-variable formula on the unit square, for one sheet.
pub fn stratonovich_residual(phi: &Phi, x: &SheetSample, stride: usize) -> Result<f64> {
    let eo = EnhanceOptions { convention: Convention::Midpoint, ..Default::default() };
    let b = enhance_smooth_with(x, &eo)?;
    let full = x.grid().full_box();
    let io = IntegralOptions { stride, verify: None };
    let first = lift_phi_derivative(phi, 1, x, &b, 10)?;
    let second = lift_phi_derivative(phi, 2, x, &b, 10)?;
    let lhs = x.map(|u| phi.eval(u))?.rect_increment(&full);
    Ok(lhs - rough_integral(&first, &b, Measure::Dx, &full, &io)?.value - rough_integral(&second, &b, Measure::Dw, &full, &io)?.value)
}

/// Change-of-variable residuals on truncated sheets, one path per trial
/// sampled on the finest level and restricted to the coarser ones.
pub fn stratonovich_mc_check(phi: &Phi, params: &FbsParams, opts: &StratoOptions) -> Result<StratoReport> {
    let top = *opts.levels.iter().max().ok_or_else(|| Error::Param("no levels".into()))?;
    if opts.trials == 0 {
        return Err(Error::Param("need at least one trial".into()));
    }
    let grid = make_dyadic_grid(top, 1.0, 1.0)?;
    let sampler = FbsSampler::new(params, &grid)?;
    let mut res = vec![Vec::new(); opts.levels.len()];
    let mut rejected = 0;
    for trial in 0..opts.trials {
        let x = sampler.sample(trial as u64)?;
        if x.values().iter().any(|v| v.abs() > opts.range) {
            rejected += 1;
            continue;
        }
        for (k, &l) in opts.levels.iter().enumerate() {
            let xs = x.subsample(1 << (top - l))?;
            res[k].push(stratonovich_residual(phi, &xs, opts.stride)?.abs());
        }
    }
    let rate = rejected as f64 / opts.trials as f64;
    if rate > opts.max_rejection {
        return Err(Error::Rejection { rate, limit: opts.max_rejection });
    }
    let rows: Vec<StratoRow> = opts
        .levels
        .iter()
        .zip(&res)
        .map(|(&level, v)| StratoRow { level, residual: mean_std(v), max: v.iter().fold(0.0f64, |a, &b| a.max(b)) })
        .collect();
    let hs: Vec<f64> = rows.iter().map(|r| 0.5f64.powi(r.level as i32)).collect();
    let means: Vec<f64> = rows.iter().map(|r| r.residual.mean).collect();
    let order = convergence_order(&hs, &means, 1e-13);
    let derivative_bounds = (0..=3).map(|k| phi.sup_abs(k, -opts.range, opts.range)).collect();
    Ok(StratoReport { phi: *phi, rows, accepted: opts.trials - rejected, rejected, derivative_bounds, order })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ItoOptions {
    pub level: u32,
    pub trials: usize,
    pub stride: usize,
    pub phi: Phi,
    pub seed: u64,
}

impl Default for ItoOptions {
    fn default() -> Self {
        Self { level: 6, trials: 200, stride: 4, phi: Phi::Id, seed: 0x1d0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ItoReport {
    pub level: u32,
    pub stride: usize,
    /// `(rough integral - left-point sum)^2` across paths.
    pub mean_square_difference: MeanStd,
    /// Mean of the squared summation error bound `n eps sum |phi(x) dx|`;
    /// for `phi = id` the two integrals agree in exact arithmetic.
    pub roundoff_floor: f64,
    /// `(sum phi(x) C^{xx})^2` over the cells of the rough integral.
    pub c_sum_square: MeanStd,
    /// `1/4 sup E phi(x)^2 sum |ds|^2 |dt|^2` over those cells.
    pub c_bound: f64,
    pub c_ratio: f64,
}

impl ItoReport {
    /// The mean-square difference is within three standard errors of zero,
    /// once summation roundoff is allowed for.
    pub fn difference_vanishes(&self) -> bool {
        let m = &self.mean_square_difference;
        m.mean <= 3.0 * m.std_err + self.roundoff_floor
    }

    pub fn to_csv(&self) -> Result<String> {
        let m = &self.mean_square_difference;
        let c = &self.c_sum_square;
        let row = vec![self.level.to_string(), self.stride.to_string(), m.mean.to_string(), m.std_err.to_string(), self.roundoff_floor.to_string(), c.mean.to_string(), c.std_err.to_string(), self.c_bound.to_string(), self.c_ratio.to_string()];
        csv_string(&["level", "stride", "mean_sq_diff", "std_err", "roundoff_floor", "c_sum_sq", "c_std_err", "c_bound", "c_ratio"], [row])
    }
}

/// Brownian sheet with the Ito bundle: rough integral of `phi(x) dx` against
/// the left-point sum on the same grid, and the size of the `C^{xx}` sum.
pub fn ito_compare(opts: &ItoOptions) -> Result<ItoReport> {
    if opts.trials < 2 || opts.stride == 0 {
        return Err(Error::Param("need two trials and a positive stride".into()));
    }
    let grid = make_dyadic_grid(opts.level, 1.0, 1.0)?;
    let (n1, n2) = grid.shape();
    let full = grid.full_box();
    let eo = EnhanceOptions { convention: Convention::Ito, ..Default::default() };
    let io = IntegralOptions { stride: opts.stride, verify: None };
    let cells: Vec<Rect> = {
        let b: Vec<usize> = (0..n1).step_by(opts.stride).chain(std::iter::once(n1 - 1)).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
        let c: Vec<usize> = (0..n2).step_by(opts.stride).chain(std::iter::once(n2 - 1)).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
        let mut v = Vec::new();
        for a in b.windows(2) {
            for d in c.windows(2) {
                v.push(Rect { i1: a[0], i2: a[1], j1: d[0], j2: d[1] });
            }
        }
        v
    };
    let (mut diff, mut csum, mut floor) = (Vec::new(), Vec::new(), 0.0);
    let mut second = vec![0.0; n1 * n2];
    for trial in 0..opts.trials {
        let x = brownian_sheet(&grid, opts.seed, trial as u64)?;
        let b = enhance_smooth_with(&x, &eo)?;
        let lift = lift_phi(&opts.phi, &x, &b, 5)?;
        let rough = rough_integral(&lift, &b, Measure::Dx, &full, &io)?.value;
        let (mut lp, mut abs) = (0.0, 0.0);
        for i in 0..n1 - 1 {
            for j in 0..n2 - 1 {
                let v = opts.phi.eval(x.get(i, j)) * x.rect_increment(&Rect { i1: i, i2: i + 1, j1: j, j2: j + 1 });
                lp += v;
                abs += v.abs();
            }
        }
        diff.push((rough - lp).powi(2));
        floor += ((n1 * n2) as f64 * f64::EPSILON * abs).powi(2) / opts.trials as f64;
        let c: f64 = cells.iter().map(|r| opts.phi.eval(x.get(r.i1, r.j1)) * b.c(Sig::X, Sig::X, r)).sum();
        csum.push(c * c);
        for (k, v) in x.values().iter().enumerate() {
            second[k] += opts.phi.eval(*v).powi(2) / opts.trials as f64;
        }
    }
    let sup = second.iter().fold(0.0f64, |a, &b| a.max(b));
    let (p, q) = (grid.g1.points(), grid.g2.points());
    let c_bound = 0.25 * sup * cells.iter().map(|r| (p[r.i2] - p[r.i1]).powi(2) * (q[r.j2] - q[r.j1]).powi(2)).sum::<f64>();
    let c_sum_square = mean_std(&csum);
    let c_ratio = if c_bound > 0.0 { c_sum_square.mean / c_bound } else { 0.0 };
    Ok(ItoReport { level: opts.level, stride: opts.stride, mean_square_difference: mean_std(&diff), roundoff_floor: floor, c_sum_square, c_bound, c_ratio })
}
