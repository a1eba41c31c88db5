//! Fractional Brownian sheets from the truncated harmonizable representation.
//!
//! The spectral integral over `[-N, N]^2` is a midpoint sum on a uniform
//! frequency grid. Hermitian-paired complex weights are written in real form:
//! each positive frequency contributes a cosine and a sine feature, so a path
//! is `K F_1 Z F_2^T` with `Z` standard normal. Its law is the centred Gaussian
//! with covariance `K^2 R_1 (x) R_2`, `R_a = F_a F_a^T`. Monte-Carlo studies
//! sample that law through a factor of each `R_a`; splitting the frequency
//! square into shells gives the exact joint law of several truncations.

pub mod grr;
pub mod qkernel;
pub mod studies;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid2D, Rect, SheetSample};

pub use grr::{grr_functional, grr_functional_1d, GrrReport};
pub use qkernel::{q_bound, q_kernel, q_kernel_quadrature, q_weighted_mass, QMassReport};
pub use studies::*;

/// Frequency spacing below which the midpoint sum is considered resolved.
pub const MAX_SPACING: f64 = 0.125;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FbsParams {
    pub alpha: f64,
    pub beta: f64,
    /// Spectral cutoff `N`.
    pub cutoff: f64,
    /// Positive frequencies per direction.
    pub modes: usize,
    pub seed: u64,
    /// Normalisation `K_{alpha,beta}`.
    pub k: f64,
}

impl FbsParams {
    /// Parameters with `8 N` modes (at least 16) and `K` calibrated so that
    /// the untruncated sheet has unit variance at `(1, 1)`.
    pub fn new(alpha: f64, beta: f64, cutoff: f64, seed: u64) -> Result<Self> {
        let modes = ((cutoff / MAX_SPACING).ceil() as usize).max(16);
        let k = calibrate_k(alpha, beta)?;
        let p = Self { alpha, beta, cutoff, modes, seed, k };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, h) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(h > 1.0 / 3.0 && h <= 0.5) {
                return Err(Error::Param(format!("{name} = {h} outside (1/3, 1/2]")));
            }
        }
        if !(self.cutoff > 0.0 && self.cutoff.is_finite()) {
            return Err(Error::Param(format!("cutoff {} must be positive", self.cutoff)));
        }
        if self.modes < 16 {
            return Err(Error::Param(format!("{} modes, at least 16 needed", self.modes)));
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::Param(format!("normalisation {} must be positive", self.k)));
        }
        if self.spacing() > MAX_SPACING {
            log::warn!("frequency spacing {} exceeds {MAX_SPACING}; discretisation bias may show", self.spacing());
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        self.cutoff / self.modes as f64
    }

    /// Same spacing, different cutoff; the cutoff must be a whole number of modes.
    pub fn with_cutoff(&self, cutoff: f64) -> Result<Self> {
        let m = cutoff / self.spacing();
        let modes = m.round() as usize;
        if (m - modes as f64).abs() > 1e-9 * m.max(1.0) {
            return Err(Error::Param(format!("cutoff {cutoff} is not a multiple of the spacing {}", self.spacing())));
        }
        Ok(Self { cutoff, modes, ..*self })
    }
}

/// `int_R |e^{i xi} - 1|^2 / |xi|^{2h+1} d xi` by panel quadrature over
/// half-periods, with the tail `int_A^inf 2 / xi^{2h+1}` added in closed form.
pub fn spectral_constant(h: f64) -> Result<f64> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::Param(format!("exponent {h} outside (0, 1)")));
    }
    let f = |u: f64| if u == 0.0 { 0.0 } else { (1.0 - u.cos()) / u.powf(2.0 * h + 1.0) };
    let panels = 4000;
    let mut acc = 0.0;
    for k in 0..panels {
        let (a, b) = (k as f64 * std::f64::consts::PI, (k + 1) as f64 * std::f64::consts::PI);
        acc += quadrature::integrate(f, a, b, 1e-14).integral;
    }
    // Over whole periods the cosine tail is O(A^{-2h-2}).
    let a = panels as f64 * std::f64::consts::PI;
    acc += a.powf(-2.0 * h) / (2.0 * h);
    Ok(4.0 * acc)
}

/// `K_{alpha,beta}` with `Var x_{1,1} = 1` for the untruncated sheet.
pub fn calibrate_k(alpha: f64, beta: f64) -> Result<f64> {
    Ok(1.0 / (spectral_constant(alpha)? * spectral_constant(beta)?).sqrt())
}

/// `1/4 (s^{2a} + s'^{2a} - |s - s'|^{2a}) (t^{2b} + t'^{2b} - |t - t'|^{2b})`.
pub fn fbs_covariance(params: &FbsParams, (s, t): (f64, f64), (s2, t2): (f64, f64)) -> Result<f64> {
    for v in [s, t, s2, t2] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Param(format!("argument {v} outside [0, 1]")));
        }
    }
    let r = |a: f64, b: f64, h: f64| a.powf(2.0 * h) + b.powf(2.0 * h) - (a - b).abs().powf(2.0 * h);
    Ok(0.25 * r(s, s2, params.alpha) * r(t, t2, params.beta))
}

fn check_unit(grid: &Grid2D) -> Result<()> {
    for g in [&grid.g1, &grid.g2] {
        if g.t_max() > 1.0 + 1e-12 {
            return Err(Error::Grid(format!("sheet grids live in [0, 1], got horizon {}", g.t_max())));
        }
    }
    Ok(())
}

/// Real spectral features of modes `lo..hi`: columns `sqrt(w) (cos(s xi) - 1)` and `sqrt(w) sin(s xi)`.
fn features(points: &[f64], h: f64, spacing: f64, lo: usize, hi: usize) -> DMatrix<f64> {
    let m = hi - lo;
    let mut f = DMatrix::zeros(points.len(), 2 * m);
    for k in 0..m {
        let xi = (lo + k) as f64 * spacing + 0.5 * spacing;
        let w = (2.0 * spacing / xi.powf(2.0 * h + 1.0)).sqrt();
        for (i, &s) in points.iter().enumerate() {
            let (sn, cs) = (s * xi).sin_cos();
            f[(i, 2 * k)] = w * (cs - 1.0);
            f[(i, 2 * k + 1)] = w * sn;
        }
    }
    f
}

/// Spectral covariance of modes `lo..hi` in one direction (without `K`).
pub fn spectral_covariance(points: &[f64], h: f64, spacing: f64, lo: usize, hi: usize) -> DMatrix<f64> {
    let f = features(points, h, spacing, lo, hi);
    &f * f.transpose()
}

/// `L` with `L L^T = cov`, built on the nodes away from the origin so that
/// the row of the origin is exactly zero.
fn factor(cov: &DMatrix<f64>, points: &[f64]) -> DMatrix<f64> {
    let inner: Vec<usize> = (0..points.len()).filter(|&i| points[i] > 0.0).collect();
    let m = inner.len();
    let sub = DMatrix::from_fn(m, m, |a, b| cov[(inner[a], inner[b])]);
    let eig = SymmetricEigen::new(sub);
    let top = eig.eigenvalues.iter().fold(0.0f64, |a, &v| a.max(v));
    let keep: Vec<usize> = (0..m).filter(|&k| eig.eigenvalues[k] > 1e-14 * top).collect();
    let mut l = DMatrix::zeros(points.len(), keep.len());
    for (c, &k) in keep.iter().enumerate() {
        let r = eig.eigenvalues[k].sqrt();
        for (a, &i) in inner.iter().enumerate() {
            l[(i, c)] = eig.eigenvectors[(a, k)] * r;
        }
    }
    l
}

/// Independent stream for trial `trial` of a study seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(trial);
    r
}

fn normals(rng: &mut impl Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

fn to_sheet(grid: &Grid2D, m: &DMatrix<f64>, k: f64) -> Result<SheetSample> {
    let (n1, n2) = grid.shape();
    let mut v = Vec::with_capacity(n1 * n2);
    for i in 0..n1 {
        for j in 0..n2 {
            v.push(k * m[(i, j)]);
        }
    }
    SheetSample::from_values(grid.clone(), v)
}

/// The truncated spectral sum with explicit weights on a grid.
#[derive(Clone, Debug)]
pub struct SpectralSheetModel {
    pub params: FbsParams,
    grid: Grid2D,
    f1: DMatrix<f64>,
    f2: DMatrix<f64>,
}

impl SpectralSheetModel {
    pub fn new(params: &FbsParams, grid: &Grid2D) -> Result<Self> {
        params.validate()?;
        check_unit(grid)?;
        let sp = params.spacing();
        Ok(Self {
            params: *params,
            grid: grid.clone(),
            f1: features(grid.g1.points(), params.alpha, sp, 0, params.modes),
            f2: features(grid.g2.points(), params.beta, sp, 0, params.modes),
        })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    /// Frequencies `(k + 1/2) spacing`, `k < modes`, on each half-line.
    pub fn frequencies(&self) -> Vec<f64> {
        let sp = self.params.spacing();
        (0..self.params.modes).map(|k| (k as f64 + 0.5) * sp).collect()
    }

    /// One path: every frequency pair gets its own standard normal weights.
    pub fn synthesize(&self, trial: u64) -> Result<SheetSample> {
        let mut rng = trial_rng(self.params.seed, trial);
        let z = normals(&mut rng, self.f1.ncols(), self.f2.ncols());
        to_sheet(&self.grid, &(&self.f1 * z * self.f2.transpose()), self.params.k)
    }

    /// Covariance of the nodes `(i, j)` and `(k, l)`.
    pub fn covariance(&self, (i, j): (usize, usize), (k, l): (usize, usize)) -> f64 {
        let r1 = self.f1.row(i).dot(&self.f1.row(k));
        let r2 = self.f2.row(j).dot(&self.f2.row(l));
        self.params.k * self.params.k * r1 * r2
    }
}

/// One path of the truncated sheet with trial index 0.
#[allow(non_snake_case)]
pub fn synthesize_xN(params: &FbsParams, grid: &Grid2D) -> Result<SheetSample> {
    SpectralSheetModel::new(params, grid)?.synthesize(0)
}

/// Sampler of the truncated sheet's law through covariance factors.
#[derive(Clone, Debug)]
pub struct FbsSampler {
    pub params: FbsParams,
    grid: Grid2D,
    r1: DMatrix<f64>,
    r2: DMatrix<f64>,
    l1: DMatrix<f64>,
    l2: DMatrix<f64>,
}

impl FbsSampler {
    pub fn new(params: &FbsParams, grid: &Grid2D) -> Result<Self> {
        params.validate()?;
        check_unit(grid)?;
        let sp = params.spacing();
        let (p, q) = (grid.g1.points(), grid.g2.points());
        let r1 = spectral_covariance(p, params.alpha, sp, 0, params.modes);
        let r2 = spectral_covariance(q, params.beta, sp, 0, params.modes);
        let (l1, l2) = (factor(&r1, p), factor(&r2, q));
        Ok(Self { params: *params, grid: grid.clone(), r1, r2, l1, l2 })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn sample(&self, trial: u64) -> Result<SheetSample> {
        let mut rng = trial_rng(self.params.seed, trial);
        let z = normals(&mut rng, self.l1.ncols(), self.l2.ncols());
        to_sheet(&self.grid, &(&self.l1 * z * self.l2.transpose()), self.params.k)
    }

    pub fn covariance(&self, (i, j): (usize, usize), (k, l): (usize, usize)) -> f64 {
        self.params.k * self.params.k * self.r1[(i, k)] * self.r2[(j, l)]
    }

    /// Exact variance of the rectangular increment over `r`.
    pub fn box_variance(&self, r: &Rect) -> f64 {
        let v = |m: &DMatrix<f64>, a: usize, b: usize| m[(b, b)] - 2.0 * m[(a, b)] + m[(a, a)];
        self.params.k * self.params.k * v(&self.r1, r.i1, r.i2) * v(&self.r2, r.j1, r.j2)
    }
}

/// Joint sampler of the truncations at increasing cutoffs driven by the same noise.
#[derive(Clone, Debug)]
pub struct CoupledSampler {
    pub params: FbsParams,
    pub cutoffs: Vec<f64>,
    grid: Grid2D,
    /// Per shell, the independent tensor pieces `(L_1, L_2)`.
    shells: Vec<Vec<(DMatrix<f64>, DMatrix<f64>)>>,
}

impl CoupledSampler {
    /// `params` fixes the exponents, seed and frequency spacing; every cutoff
    /// must be a whole number of modes.
    pub fn new(params: &FbsParams, cutoffs: &[f64], grid: &Grid2D) -> Result<Self> {
        params.validate()?;
        check_unit(grid)?;
        if cutoffs.is_empty() || cutoffs.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Param("cutoffs must be a non-empty non-decreasing list".into()));
        }
        let modes: Vec<usize> = cutoffs.iter().map(|&c| params.with_cutoff(c).map(|p| p.modes)).collect::<Result<_>>()?;
        let sp = params.spacing();
        let (p, q) = (grid.g1.points(), grid.g2.points());
        let f1 = |lo, hi| factor(&spectral_covariance(p, params.alpha, sp, lo, hi), p);
        let f2 = |lo, hi| factor(&spectral_covariance(q, params.beta, sp, lo, hi), q);
        let mut shells = vec![vec![(f1(0, modes[0]), f2(0, modes[0]))]];
        for w in modes.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            shells.push(vec![(f1(lo, hi), f2(0, hi)), (f1(0, lo), f2(lo, hi))]);
        }
        Ok(Self { params: *params, cutoffs: cutoffs.to_vec(), grid: grid.clone(), shells })
    }

    /// `x^{N_1}, ..., x^{N_k}` for one trial.
    pub fn sample(&self, trial: u64) -> Result<Vec<SheetSample>> {
        let mut rng = trial_rng(self.params.seed, trial);
        let (n1, n2) = self.grid.shape();
        let mut acc = DMatrix::zeros(n1, n2);
        let mut out = Vec::with_capacity(self.shells.len());
        for shell in &self.shells {
            for (l1, l2) in shell {
                if l1.ncols() > 0 && l2.ncols() > 0 {
                    let z = normals(&mut rng, l1.ncols(), l2.ncols());
                    acc += l1 * z * l2.transpose();
                }
            }
            out.push(to_sheet(&self.grid, &acc, self.params.k)?);
        }
        Ok(out)
    }
}

/// Brownian sheet on a grid: cumulative sums of independent cell increments
/// with variance `ds dt`.
pub fn brownian_sheet(grid: &Grid2D, seed: u64, trial: u64) -> Result<SheetSample> {
    let mut rng = trial_rng(seed, trial);
    let (p, q) = (grid.g1.points(), grid.g2.points());
    let (n1, n2) = grid.shape();
    let mut v = vec![0.0; n1 * n2];
    for i in 1..n1 {
        for j in 1..n2 {
            let z: f64 = rng.sample(StandardNormal);
            let cell = z * ((p[i] - p[i - 1]) * (q[j] - q[j - 1])).sqrt();
            v[i * n2 + j] = cell + v[(i - 1) * n2 + j] + v[i * n2 + j - 1] - v[(i - 1) * n2 + j - 1];
        }
    }
    SheetSample::from_values(grid.clone(), v)
}
