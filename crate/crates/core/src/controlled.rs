//! Controlled paths and sheets over a rough sheet, their boundary integrals,
//! the rough integral and the lift of `phi(x)`.
//!
//! The one-direction sewing map is realised on the grid: for a three-point
//! object `h`, `L h(s_0, s_n) = sum_{k=1}^{n-1} h(s_0, s_k, s_{k+1})`, which
//! inverts the two-point coboundary up to the additive part. Every boundary
//! formula then collapses to a second-order sum over grid steps; both forms
//! are exposed and agree to roundoff.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::complex::nnorm;
use crate::enhance::{FieldId, RoughSheet, Sig};
use crate::error::{Error, Result};
use crate::grid::{for_each_increasing, BiIncRef, Dir, FnField, Rect, SheetSample};
use crate::phi::Phi;

/// Value of a sheet with the `dir` index first.
#[inline]
fn at(f: &SheetSample, dir: Dir, k: usize, o: usize) -> f64 {
    match dir {
        Dir::One => f.get(k, o),
        Dir::Two => f.get(o, k),
    }
}

/// Rectangle from a pair in `dir` and a pair in the other direction.
#[inline]
fn rect_in(dir: Dir, p: [usize; 2], o: [usize; 2]) -> Rect {
    match dir {
        Dir::One => Rect { i1: p[0], i2: p[1], j1: o[0], j2: o[1] },
        Dir::Two => Rect { i1: o[0], i2: o[1], j1: p[0], j2: p[1] },
    }
}

/// Splits a rectangle into its range along `dir` and the other range.
#[inline]
fn split_rect(dir: Dir, r: &Rect) -> ([usize; 2], [usize; 2]) {
    match dir {
        Dir::One => (r.s(), r.t()),
        Dir::Two => (r.t(), r.s()),
    }
}

/// A sheet `y` with directional derivatives: `d_a y = y^{x_a} d_a x + y^{#a}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlledPath2D {
    x: SheetSample,
    y: SheetSample,
    deriv: [SheetSample; 2],
}

pub fn make_controlled_path(y: SheetSample, d1: SheetSample, d2: SheetSample, x: &SheetSample) -> Result<ControlledPath2D> {
    for (name, f) in [("y", &y), ("y^x1", &d1), ("y^x2", &d2)] {
        if f.grid() != x.grid() {
            return Err(Error::Shape(format!("{name} and the control live on different grids")));
        }
    }
    Ok(ControlledPath2D { x: x.clone(), y, deriv: [d1, d2] })
}

impl ControlledPath2D {
    pub fn value(&self) -> &SheetSample {
        &self.y
    }
    pub fn control(&self) -> &SheetSample {
        &self.x
    }
    pub fn deriv(&self, dir: Dir) -> &SheetSample {
        &self.deriv[dir.index() - 1]
    }

    /// `y^{#a}` on the pair `p` of direction `dir` at other index `o`.
    pub fn sharp(&self, dir: Dir, p: [usize; 2], o: usize) -> f64 {
        let d = self.deriv(dir);
        at(&self.y, dir, p[1], o) - at(&self.y, dir, p[0], o) - at(d, dir, p[0], o) * (at(&self.x, dir, p[1], o) - at(&self.x, dir, p[0], o))
    }

    /// `y^{#1}` as a (2,1)-field or `y^{#2}` as a (1,2)-field.
    pub fn sharp_field(self: &Arc<Self>, dir: Dir) -> BiIncRef {
        let me = self.clone();
        let arity = if dir == Dir::One { (2, 1) } else { (1, 2) };
        FnField::new(self.x.grid().clone(), arity, move |s: &[usize], t: &[usize]| match dir {
            Dir::One => me.sharp(dir, [s[0], s[1]], t[0]),
            Dir::Two => me.sharp(dir, [t[0], t[1]], s[0]),
        })
    }

    /// `(||y^{#1}||_{2 alpha, .}, ||y^{#2}||_{., 2 beta})` over all grid pairs.
    pub fn regularity(&self, alpha: f64, beta: f64) -> (f64, f64) {
        let g = self.x.grid();
        let mut out = [0.0f64; 2];
        for (slot, dir, h) in [(0, Dir::One, alpha), (1, Dir::Two, beta)] {
            let pts = g.dir(dir).points();
            let no = g.dir(dir.other()).len();
            for_each_increasing(pts.len(), 2, |p| {
                let w = (pts[p[1]] - pts[p[0]]).powf(2.0 * h);
                for o in 0..no {
                    out[slot] = out[slot].max(self.sharp(dir, [p[0], p[1]], o).abs() / w);
                }
            });
        }
        (out[0], out[1])
    }
}

/// Which boundary integral `int_a y int_b (...)` to form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryKind {
    /// `int_a y int_b dx`
    X,
    /// `int_a y int_b dx dx`
    XX,
    /// `int_a y int_b dw`
    W,
    /// `int_a y int_b dw dx`
    WX,
    /// `int_a y int_b dx dw`
    XW,
    /// `int_a y int_b dw dw`
    WW,
}

impl BoundaryKind {
    pub const ALL: [BoundaryKind; 6] = [Self::X, Self::XX, Self::W, Self::WX, Self::XW, Self::WW];

    /// Inner and outer measures of the double kinds.
    fn double(self) -> Option<(Sig, Sig)> {
        match self {
            Self::XX => Some((Sig::X, Sig::X)),
            Self::WX => Some((Sig::W, Sig::X)),
            Self::XW => Some((Sig::X, Sig::W)),
            Self::WW => Some((Sig::W, Sig::W)),
            _ => None,
        }
    }
}

impl FromStr for BoundaryKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "x" => Self::X,
            "xx" => Self::XX,
            "w" | "omega" => Self::W,
            "wx" => Self::WX,
            "xw" => Self::XW,
            "ww" => Self::WW,
            _ => return Err(Error::Param(format!("unknown boundary kind {s:?}"))),
        })
    }
}

impl fmt::Display for BoundaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::X => "x",
            Self::XX => "xx",
            Self::W => "w",
            Self::WX => "wx",
            Self::XW => "xw",
            Self::WW => "ww",
        })
    }
}

/// `G`-form `int_a y d_b x d_a x` or `I`-form `int_a y int_b d_b x dx`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GhijKind {
    G,
    I,
}

impl FromStr for GhijKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "g" | "G" => Ok(Self::G),
            "i" | "I" => Ok(Self::I),
            _ => Err(Error::Param(format!("unknown form {s:?}"))),
        }
    }
}

fn check(y: &ControlledPath2D, x: &RoughSheet, r: &Rect) -> Result<()> {
    if y.x.grid() != x.grid() {
        return Err(Error::Shape("controlled path and rough sheet live on different grids".into()));
    }
    r.check_in(x.grid())
}

/// Boundary integral along `dir` over `r`, as the second-order step sum
/// the sewing formula reduces to.
pub fn boundary_integral(kind: BoundaryKind, dir: Dir, y: &ControlledPath2D, x: &RoughSheet, r: &Rect) -> Result<f64> {
    check(y, x, r)?;
    Ok(boundary_sum(kind, dir, y, x, r))
}

fn boundary_sum(kind: BoundaryKind, dir: Dir, y: &ControlledPath2D, x: &RoughSheet, r: &Rect) -> f64 {
    let (p, o) = split_rect(dir, r);
    let yv = |k: usize| at(&y.y, dir, k, o[0]);
    let yd = |k: usize| at(y.deriv(dir), dir, k, o[0]);
    let mut acc = 0.0;
    match kind.double() {
        None => {
            let s = if kind == BoundaryKind::X { Sig::X } else { Sig::W };
            for k in p[0]..p[1] {
                let c = rect_in(dir, [k, k + 1], o);
                acc += yv(k) * x.a(s, &c) + yd(k) * x.b(dir, s, &c);
            }
        }
        Some((s, t)) => {
            for k in p[0]..p[1] {
                acc += yv(k) * x.c(s, t, &rect_in(dir, [k, k + 1], o));
                for j in p[0]..k {
                    let (pj, pk) = ([j, j + 1], [k, k + 1]);
                    acc += yv(j) * x.d(dir, s, t, pj, pk, o) + yd(j) * x.e(dir, s, t, pj, pk, o);
                }
            }
        }
    }
    acc
}

/// The same boundary integral written literally: germ on the whole range
/// plus the grid sewing map applied to the bracketed three-point objects.
pub fn boundary_integral_lambda(kind: BoundaryKind, dir: Dir, y: &ControlledPath2D, x: &RoughSheet, r: &Rect) -> Result<f64> {
    check(y, x, r)?;
    let (p, o) = split_rect(dir, r);
    let (s0, n) = (p[0], p[1]);
    let yv = |k: usize| at(&y.y, dir, k, o[0]);
    let yd = |k: usize| at(y.deriv(dir), dir, k, o[0]);
    let step = |k: usize| rect_in(dir, [k, k + 1], o);
    let whole = rect_in(dir, p, o);
    let mut acc;
    match kind.double() {
        None => {
            let s = if kind == BoundaryKind::X { Sig::X } else { Sig::W };
            acc = yv(s0) * x.a(s, &whole) + yd(s0) * x.b(dir, s, &whole);
            for k in s0 + 1..n {
                let sharp = y.sharp(dir, [s0, k], o[0]);
                acc += sharp * x.a(s, &step(k)) + (yd(k) - yd(s0)) * x.b(dir, s, &step(k));
            }
        }
        Some((s, t)) => {
            acc = yv(s0) * x.c(s, t, &whole);
            for k in s0 + 1..n {
                let pk = [k, k + 1];
                let mut h = (yv(k) - yv(s0)) * x.c(s, t, &step(k)) + yd(s0) * x.e(dir, s, t, [s0, k], pk, o);
                for j in s0 + 1..k {
                    let pj = [j, j + 1];
                    h += y.sharp(dir, [s0, j], o[0]) * x.d(dir, s, t, pj, pk, o) + (yd(j) - yd(s0)) * x.e(dir, s, t, pj, pk, o);
                }
                acc += h;
            }
        }
    }
    Ok(acc)
}

/// `G`-form `y G_a + y^{x_a} H_a` or `I`-form `y I_b + y^{x_a} J_a`, summed over steps.
pub fn boundary_integral_ghij(kind: GhijKind, dir: Dir, y: &ControlledPath2D, x: &RoughSheet, r: &Rect) -> Result<f64> {
    check(y, x, r)?;
    let (p, o) = split_rect(dir, r);
    let (f0, f1) = match kind {
        GhijKind::G => (FieldId::G(dir), FieldId::H(dir)),
        GhijKind::I => (FieldId::I(dir.other()), FieldId::J(dir)),
    };
    let mut acc = 0.0;
    for k in p[0]..p[1] {
        let c = rect_in(dir, [k, k + 1], o);
        acc += at(&y.y, dir, k, o[0]) * x.get(f0, &c) + at(y.deriv(dir), dir, k, o[0]) * x.get(f1, &c);
    }
    Ok(acc)
}

/// A controlled sheet: `y` with first-order coefficients `y^x` (against `dx`)
/// and `y^w` (against `dw`), each itself controlled. The derivatives of `yx`
/// and `yw` are the secondary derivatives `y^{xx_a}` and `y^{wx_a}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlledSheet {
    pub y: ControlledPath2D,
    pub yx: ControlledPath2D,
    pub yw: ControlledPath2D,
}

impl ControlledSheet {
    pub fn new(y: ControlledPath2D, yx: ControlledPath2D, yw: ControlledPath2D) -> Result<Self> {
        if y.x != yx.x || y.x != yw.x {
            return Err(Error::Shape("components are controlled by different sheets".into()));
        }
        Ok(Self { y, yx, yw })
    }

    pub fn control(&self) -> &SheetSample {
        &self.y.x
    }

    /// `y^#` on `r`: the residual of the defining decomposition of `dy`.
    pub fn sharp(&self, x: &RoughSheet, r: &Rect) -> Result<f64> {
        check(&self.y, x, r)?;
        Ok(self.sharp_unchecked(x, r))
    }

    fn sharp_unchecked(&self, x: &RoughSheet, r: &Rect) -> f64 {
        let (i, j) = (r.i1, r.j1);
        let mut v = self.y.y.rect_increment(r) + self.yx.y.get(i, j) * x.a(Sig::X, r) + self.yw.y.get(i, j) * x.a(Sig::W, r);
        for d in [Dir::One, Dir::Two] {
            v -= boundary_sum(BoundaryKind::X, d, &self.yx, x, r) + boundary_sum(BoundaryKind::W, d, &self.yw, x, r);
        }
        v
    }

    /// Largest `|y^#| / (|ds|^z1 |dt|^z2)` over rectangles with corners on an
    /// evenly spaced index subset.
    pub fn sharp_norm(&self, x: &RoughSheet, z1: f64, z2: f64, max_points: usize) -> Result<f64> {
        check(&self.y, x, &x.grid().full_box())?;
        let mut best = 0.0f64;
        for_each_subset_rect(x, max_points, |r, w1, w2| {
            best = best.max(self.sharp_unchecked(x, r).abs() / (w1.powf(z1) * w2.powf(z2)));
        });
        Ok(best)
    }
}

/// Rectangles with corners on an evenly spaced subset, with their side lengths.
fn for_each_subset_rect(x: &RoughSheet, max_points: usize, mut f: impl FnMut(&Rect, f64, f64)) {
    let g = x.grid();
    let (n1, n2) = g.shape();
    let is = subset(n1, max_points);
    let js = subset(n2, max_points);
    let (p, q) = (g.g1.points(), g.g2.points());
    for_each_increasing(is.len(), 2, |a| {
        for_each_increasing(js.len(), 2, |b| {
            let r = Rect { i1: is[a[0]], i2: is[a[1]], j1: js[b[0]], j2: js[b[1]] };
            f(&r, p[r.i2] - p[r.i1], q[r.j2] - q[r.j1]);
        });
    });
}

fn subset(n: usize, max: usize) -> Vec<usize> {
    let max = max.max(2);
    if n <= max {
        return (0..n).collect();
    }
    let mut v: Vec<usize> = (0..max).map(|k| (k * (n - 1) + (max - 1) / 2) / (max - 1)).collect();
    v.dedup();
    v
}

/// Integrating measure of the rough integral.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Measure {
    Dx,
    Dw,
}

impl FromStr for Measure {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dx" => Ok(Self::Dx),
            "dw" | "domega" => Ok(Self::Dw),
            _ => Err(Error::Param(format!("unknown measure {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegralOptions {
    /// Cells of the two-dimensional sum span this many grid steps per direction.
    pub stride: usize,
    /// When set, the bundle is checked against every relation at this
    /// tolerance (sampled) before integrating.
    pub verify: Option<f64>,
}

impl Default for IntegralOptions {
    fn default() -> Self {
        Self { stride: 4, verify: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegralReport {
    pub value: f64,
    /// The explicit formula evaluated on the whole box.
    pub formula: f64,
    /// `value - formula`: the two-dimensional sewing correction.
    pub correction: f64,
    pub cells: usize,
}

/// Explicit part of the rough integral on one box.
fn germ(y: &ControlledSheet, x: &RoughSheet, m: Measure, r: &Rect) -> f64 {
    let (i, j) = (r.i1, r.j1);
    let (y0, yx0, yw0) = (y.y.y.get(i, j), y.yx.y.get(i, j), y.yw.y.get(i, j));
    let (top, first, second, third) = match m {
        Measure::Dx => (Sig::X, BoundaryKind::X, BoundaryKind::XX, BoundaryKind::WX),
        Measure::Dw => (Sig::W, BoundaryKind::W, BoundaryKind::XW, BoundaryKind::WW),
    };
    let mut v = -y0 * x.a(top, r) - yx0 * x.c(Sig::X, top, r) - yw0 * x.c(Sig::W, top, r);
    for d in [Dir::One, Dir::Two] {
        v += boundary_sum(first, d, &y.y, x, r) + boundary_sum(second, d, &y.yx, x, r) + boundary_sum(third, d, &y.yw, x, r);
    }
    v
}

fn breaks(lo: usize, hi: usize, stride: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (lo..hi).step_by(stride).collect();
    v.push(hi);
    v
}

fn verify_first(x: &RoughSheet, opts: &IntegralOptions) -> Result<()> {
    if opts.stride == 0 {
        return Err(Error::Param("stride must be positive".into()));
    }
    if let Some(tol) = opts.verify {
        let vo = crate::enhance::VerifyOptions { max_exhaustive: 200, samples: 20, seed: 1 };
        crate::enhance::verify_chen_with(x, x.sample(), tol, &vo)?.into_result()?;
    }
    Ok(())
}

/// `int int y dx` or `int int y dw` over `r`: the explicit formula summed over
/// cells of `stride` grid steps.
pub fn rough_integral(y: &ControlledSheet, x: &RoughSheet, m: Measure, r: &Rect, opts: &IntegralOptions) -> Result<IntegralReport> {
    check(&y.y, x, r)?;
    verify_first(x, opts)?;
    let formula = germ(y, x, m, r);
    let b1 = breaks(r.i1, r.i2, opts.stride);
    let b2 = breaks(r.j1, r.j2, opts.stride);
    let mut value = 0.0;
    for a in b1.windows(2) {
        for b in b2.windows(2) {
            value += germ(y, x, m, &Rect { i1: a[0], i2: a[1], j1: b[0], j2: b[1] });
        }
    }
    Ok(IntegralReport { value, formula, correction: value - formula, cells: (b1.len() - 1) * (b2.len() - 1) })
}

/// Cell values of the rough integral on the whole grid, with prefix sums so
/// that any union of cells is read in constant time.
#[derive(Clone, Debug)]
pub struct CellIntegrals {
    pub breaks1: Vec<usize>,
    pub breaks2: Vec<usize>,
    prefix: Vec<f64>,
}

impl CellIntegrals {
    /// Integral over cells `[c1, c2) x [d1, d2)` in breakpoint indices.
    pub fn value(&self, c1: usize, c2: usize, d1: usize, d2: usize) -> f64 {
        let w = self.breaks2.len();
        let p = |a: usize, b: usize| self.prefix[a * w + b];
        p(c2, d2) - p(c1, d2) - p(c2, d1) + p(c1, d1)
    }
}

pub fn cell_integrals(y: &ControlledSheet, x: &RoughSheet, m: Measure, opts: &IntegralOptions) -> Result<CellIntegrals> {
    let full = x.grid().full_box();
    check(&y.y, x, &full)?;
    verify_first(x, opts)?;
    let b1 = breaks(full.i1, full.i2, opts.stride);
    let b2 = breaks(full.j1, full.j2, opts.stride);
    let w = b2.len();
    let mut prefix = vec![0.0; b1.len() * w];
    for c in 0..b1.len() - 1 {
        for d in 0..w - 1 {
            let v = germ(y, x, m, &Rect { i1: b1[c], i2: b1[c + 1], j1: b2[d], j2: b2[d + 1] });
            prefix[(c + 1) * w + d + 1] = v + prefix[c * w + d + 1] + prefix[(c + 1) * w + d] - prefix[c * w + d];
        }
    }
    Ok(CellIntegrals { breaks1: b1, breaks2: b2, prefix })
}

/// Lift of `phi(x)`: `y = phi(x)`, `y^x = phi'(x)`, `y^w = phi''(x)`, with
/// directional derivatives one order higher. `smoothness` is the number of
/// continuous derivatives the caller asserts for `phi`.
pub fn lift_phi(phi: &Phi, x: &SheetSample, bundle: &RoughSheet, smoothness: usize) -> Result<ControlledSheet> {
    lift_phi_derivative(phi, 0, x, bundle, smoothness)
}

/// Lift of `phi^(k)(x)`; needs `k + 5` continuous derivatives.
pub fn lift_phi_derivative(phi: &Phi, k: usize, x: &SheetSample, bundle: &RoughSheet, smoothness: usize) -> Result<ControlledSheet> {
    if smoothness < k + 5 {
        return Err(Error::Param(format!("lift needs {} continuous derivatives, {smoothness} asserted", k + 5)));
    }
    if x.grid() != bundle.grid() {
        return Err(Error::Shape("sheet and rough sheet live on different grids".into()));
    }
    let d = |j: usize| x.map(|u| phi.d(k + j, u));
    let path = |j: usize| -> Result<ControlledPath2D> {
        let dj1 = d(j + 1)?;
        make_controlled_path(d(j)?, dj1.clone(), dj1, x)
    };
    ControlledSheet::new(path(0)?, path(1)?, path(2)?)
}

/// `nu_1` of a box from its corner values, its closed form after the Taylor
/// rearrangement, and the right side of the bound with unit constant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Nu1Report {
    pub nu1: f64,
    pub closed_form: f64,
    pub bound: f64,
}

fn integrate01(f: impl Fn(f64) -> f64) -> f64 {
    quadrature::integrate(f, 0.0, 1.0, 1e-14).integral
}

pub fn nu1_diagnostic(phi: &Phi, x: &SheetSample, r: &Rect) -> Result<Nu1Report> {
    r.check_in(x.grid())?;
    let (x00, x10, x01, x11) = (x.get(r.i1, r.j1), x.get(r.i2, r.j1), x.get(r.i1, r.j2), x.get(r.i2, r.j2));
    let d = x11 - x10 - x01 + x00;
    let d1_0 = x10 - x00;
    let d1_1 = x11 - x01;
    let d2_0 = x01 - x00;
    let d2_1 = x11 - x10;
    let dsq = x11 * x11 - x10 * x10 - x01 * x01 + x00 * x00;
    let p = |k: usize, u: f64| phi.d(k, u);
    let m1 = integrate01(|s| p(1, x00 + s * d1_0));
    let m2 = integrate01(|s| p(2, x00 + s * d1_0));
    let m2s = integrate01(|s| s * p(2, x00 + s * d1_0));
    let nu1 = -p(1, x00) * d - p(2, x00) * (0.5 * dsq - x00 * d) + m1 * d + m2 * d2_0 * d1_1 + m2s * d * d1_1
        - (p(1, x10) - p(1, x00) - p(2, x00) * d1_0) * d2_1;
    let m3 = integrate01(|s| s * integrate01(|sp| p(3, x00 + s * sp * d1_0)));
    let closed_form = m3 * d1_0 * d2_0 * d + m2s * d * d - 0.5 * p(2, x00) * d * d;
    // Suprema along the lower edge, both on the grid and on the chord.
    let mut s2 = 0.0f64;
    let mut s3 = 0.0f64;
    let mut visit = |u: f64| {
        s2 = s2.max(p(2, u).abs());
        s3 = s3.max(p(3, u).abs());
    };
    for i in r.i1..=r.i2 {
        visit(x.get(i, r.j1));
    }
    for k in 0..=64 {
        visit(x00 + k as f64 / 64.0 * d1_0);
    }
    let bound = s2 * d * d + s3 * (d1_0 * d2_0 * d).abs();
    Ok(Nu1Report { nu1, closed_form, bound })
}

/// `r_1` on a box: `d phi(x)` minus the two direction-2 boundary integrals
/// and `phi'(x)^{#1} d_2 x`, all evaluated through the bundle.
pub fn r1_diagnostic(phi: &Phi, bundle: &RoughSheet, r: &Rect) -> Result<f64> {
    r.check_in(bundle.grid())?;
    let x = bundle.sample();
    let lift = lift_phi(phi, x, bundle, 5)?;
    let y = x.map(|u| phi.eval(u))?;
    let first = boundary_sum(BoundaryKind::X, Dir::Two, &lift.yx, bundle, r);
    let second = boundary_integral_ghij(GhijKind::G, Dir::Two, &lift.yw, bundle, r)?;
    let sharp = lift.yx.sharp(Dir::One, [r.i1, r.i2], r.j1);
    Ok(y.rect_increment(r) - first - second - sharp * (x.get(r.i2, r.j2) - x.get(r.i2, r.j1)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HprReport {
    pub lhs: f64,
    pub c: f64,
    pub rhs: f64,
}

/// Both sides of `N(phi(x1) - phi(x2)) <= c N(x1 - x2) (1 + N(x1) + N(x2))^2`.
pub fn hpr_check(phi: &Phi, x1: &SheetSample, x2: &SheetSample, rho1: f64, rho2: f64) -> Result<HprReport> {
    let diff = x1.zip_with(x2, |a, b| a - b)?;
    let f1 = x1.map(|u| phi.eval(u))?;
    let f2 = x2.map(|u| phi.eval(u))?;
    let lhs = nnorm(&f1.zip_with(&f2, |a, b| a - b)?, rho1, rho2)?.total;
    let sup = |x: &SheetSample, k: usize| x.values().iter().fold(0.0f64, |m, &u| m.max(phi.d(k, u).abs()));
    let c: f64 = (1..=3).map(|k| sup(x1, k) + sup(x2, k)).sum();
    let n = |x: &SheetSample| nnorm(x, rho1, rho2).map(|r| r.total);
    let rhs = c * n(&diff)? * (1.0 + n(x1)? + n(x2)?).powi(2);
    Ok(HprReport { lhs, c, rhs })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuityOptions {
    pub stride: usize,
    /// Index subset size per direction for the remainder norm.
    pub max_points: usize,
    pub norm: crate::enhance::NormOptions,
}

impl Default for ContinuityOptions {
    fn default() -> Self {
        Self { stride: 4, max_points: 9, norm: Default::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuityReport {
    /// `||phi(x)^# - phi(xbar)^#||_{2 alpha, 2 beta}`.
    pub sharp: f64,
    /// `||int int phi(x) dx - int int phi(xbar) dxbar||_{alpha, beta}`.
    pub integral_dx: f64,
    pub integral_dw: f64,
    /// `||X - Xbar||` in the bundle metric.
    pub rough_distance: f64,
    /// Sum of the three distances over the bundle distance.
    pub ratio: f64,
}

fn integral_distance(a: &CellIntegrals, b: &CellIntegrals, x: &RoughSheet) -> f64 {
    let g = x.grid();
    let (p, q) = (g.g1.points(), g.g2.points());
    let (al, be) = (x.alpha(), x.beta());
    let (n1, n2) = (a.breaks1.len(), a.breaks2.len());
    let mut best = 0.0f64;
    for_each_increasing(n1, 2, |c| {
        let w1 = (p[a.breaks1[c[1]]] - p[a.breaks1[c[0]]]).powf(al);
        for_each_increasing(n2, 2, |d| {
            let w2 = (q[a.breaks2[d[1]]] - q[a.breaks2[d[0]]]).powf(be);
            let v = a.value(c[0], c[1], d[0], d[1]) - b.value(c[0], c[1], d[0], d[1]);
            best = best.max(v.abs() / (w1 * w2));
        });
    });
    best
}

/// Distances between the remainders and integrals of `phi(x)` and `phi(xbar)`
/// and their ratio to the bundle distance.
pub fn continuity_modulus(phi: &Phi, x: &RoughSheet, xbar: &RoughSheet, opts: &ContinuityOptions) -> Result<ContinuityReport> {
    if x.grid() != xbar.grid() {
        return Err(Error::Shape("rough sheets live on different grids".into()));
    }
    let ly = lift_phi(phi, x.sample(), x, 8)?;
    let lb = lift_phi(phi, xbar.sample(), xbar, 8)?;
    let (al, be) = (x.alpha(), x.beta());
    let mut sharp = 0.0f64;
    for_each_subset_rect(x, opts.max_points, |r, w1, w2| {
        let d = ly.sharp_unchecked(x, r) - lb.sharp_unchecked(xbar, r);
        sharp = sharp.max(d.abs() / (w1.powf(2.0 * al) * w2.powf(2.0 * be)));
    });
    let io = IntegralOptions { stride: opts.stride, verify: None };
    let mut dist = [0.0; 2];
    for (k, m) in [Measure::Dx, Measure::Dw].into_iter().enumerate() {
        let a = cell_integrals(&ly, x, m, &io)?;
        let b = cell_integrals(&lb, xbar, m, &io)?;
        dist[k] = integral_distance(&a, &b, x);
    }
    let rough_distance = crate::enhance::roughsheet_distance(x, xbar, &opts.norm)?.total;
    let total = sharp + dist[0] + dist[1];
    let ratio = if rough_distance > 0.0 { total / rough_distance } else if total == 0.0 { 0.0 } else { f64::INFINITY };
    Ok(ContinuityReport { sharp, integral_dx: dist[0], integral_dw: dist[1], rough_distance, ratio })
}
