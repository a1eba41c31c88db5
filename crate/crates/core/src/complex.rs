//! The two-parameter increment complex: directional coboundaries, products,
//! splitting, Hoelder norms, 2D sewing and the bicocycle decomposition.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cochain;
use crate::error::{Error, Result};
use crate::grid::{for_each_increasing, BiIncRef, BiIncrement, Dir, Grid2D, Rect, SheetSample};

/// Largest arity produced by the operations of this module.
pub const MAX_ARITY: usize = 3;

/// Base point fixed by the contracting maps.
pub const SIGMA_BASE: usize = 0;

/// Iterated coboundary `d1^m1 d2^m2 base`, evaluated through its exact expansion.
pub struct DeltaField {
    base: BiIncRef,
    m: (usize, usize),
    arity: (usize, usize),
    terms1: Vec<(Vec<usize>, i64)>,
    terms2: Vec<(Vec<usize>, i64)>,
}

impl DeltaField {
    fn build(base: BiIncRef, m: (usize, usize)) -> Self {
        let (k, l) = base.arity();
        let arity = (k + m.0, l + m.1);
        Self { terms1: cochain::expansion(arity.0, m.0), terms2: cochain::expansion(arity.1, m.1), base, m, arity }
    }
}

impl BiIncrement for DeltaField {
    fn arity(&self) -> (usize, usize) {
        self.arity
    }
    fn grid(&self) -> &Grid2D {
        self.base.grid()
    }
    fn eval_raw(&self, s: &[usize], t: &[usize]) -> f64 {
        let (k, l) = self.base.arity();
        let mut ss = Vec::with_capacity(k);
        let mut tt = Vec::with_capacity(l);
        let mut acc = 0.0;
        for (p1, c1) in &self.terms1 {
            ss.clear();
            ss.extend(p1.iter().map(|&p| s[p]));
            for (p2, c2) in &self.terms2 {
                tt.clear();
                tt.extend(p2.iter().map(|&p| t[p]));
                acc += (c1 * c2) as f64 * self.base.eval(&ss, &tt);
            }
        }
        acc
    }
    fn as_full_coboundary(&self) -> Option<BiIncRef> {
        (self.m == (1, 1) && self.base.arity() == (1, 1)).then(|| self.base.clone())
    }
    fn as_delta(&self) -> Option<(BiIncRef, usize, usize)> {
        Some((self.base.clone(), self.m.0, self.m.1))
    }
}

/// Coboundary along one direction.
pub fn delta_dir(a: &BiIncRef, dir: Dir) -> Result<BiIncRef> {
    let (k, l) = a.arity();
    let out = match dir {
        Dir::One => (k + 1, l),
        Dir::Two => (k, l + 1),
    };
    if out.0 > MAX_ARITY || out.1 > MAX_ARITY {
        return Err(Error::Arity(format!("coboundary would produce arity {out:?}")));
    }
    let (base, m1, m2) = a.as_delta().unwrap_or_else(|| (a.clone(), 0, 0));
    let m = match dir {
        Dir::One => (m1 + 1, m2),
        Dir::Two => (m1, m2 + 1),
    };
    Ok(Arc::new(DeltaField::build(base, m)))
}

/// Full coboundary `d = d1 d2`.
pub fn delta_full(a: &BiIncRef) -> Result<BiIncRef> {
    delta_dir(&delta_dir(a, Dir::Two)?, Dir::One)
}

/// `(ab)_{(s_1..)(t_1..)} = a_{(s_1..s_n)(t_1..t_m)} b_{(s_n..)(t_m..)}`.
pub struct ProductField {
    a: BiIncRef,
    b: BiIncRef,
    arity: (usize, usize),
}

impl BiIncrement for ProductField {
    fn arity(&self) -> (usize, usize) {
        self.arity
    }
    fn grid(&self) -> &Grid2D {
        self.a.grid()
    }
    fn eval_raw(&self, s: &[usize], t: &[usize]) -> f64 {
        let (n, m) = self.a.arity();
        self.a.eval(&s[..n], &t[..m]) * self.b.eval(&s[n - 1..], &t[m - 1..])
    }
    fn as_product(&self) -> Option<(BiIncRef, BiIncRef)> {
        Some((self.a.clone(), self.b.clone()))
    }
}

fn same_grid(a: &BiIncRef, b: &BiIncRef) -> Result<()> {
    if a.grid() != b.grid() {
        return Err(Error::Shape("fields live on different grids".into()));
    }
    Ok(())
}

pub fn bi_product(a: &BiIncRef, b: &BiIncRef) -> Result<BiIncRef> {
    same_grid(a, b)?;
    let ((n, m), (k, l)) = (a.arity(), b.arity());
    if n == 0 || m == 0 || k == 0 || l == 0 {
        return Err(Error::Arity("product factors need arity >= 1 in both directions".into()));
    }
    let arity = (n + k - 1, m + l - 1);
    if arity.0 > MAX_ARITY || arity.1 > MAX_ARITY {
        return Err(Error::Arity(format!("product would have arity {arity:?}")));
    }
    Ok(Arc::new(ProductField { a: a.clone(), b: b.clone(), arity }))
}

/// `f o_1 g`: both factors see all direction-1 indices; direction 2 is chained.
/// `f o_2 g` is the mirror image.
pub struct CircleField {
    f: BiIncRef,
    g: BiIncRef,
    dir: Dir,
    arity: (usize, usize),
}

impl BiIncrement for CircleField {
    fn arity(&self) -> (usize, usize) {
        self.arity
    }
    fn grid(&self) -> &Grid2D {
        self.f.grid()
    }
    fn eval_raw(&self, s: &[usize], t: &[usize]) -> f64 {
        let (m, n) = self.f.arity();
        match self.dir {
            Dir::One => self.f.eval(s, &t[..n]) * self.g.eval(s, &t[n - 1..]),
            Dir::Two => self.f.eval(&s[..m], t) * self.g.eval(&s[m - 1..], t),
        }
    }
}

pub fn circle_product(f: &BiIncRef, g: &BiIncRef, dir: Dir) -> Result<BiIncRef> {
    same_grid(f, g)?;
    let ((m, n), (k, l)) = (f.arity(), g.arity());
    let arity = match dir {
        Dir::One if m == k && n >= 1 && l >= 1 => (m, n + l - 1),
        Dir::Two if n == l && m >= 1 && k >= 1 => (m + k - 1, n),
        _ => return Err(Error::Arity(format!("circle product {dir}: arities {:?} and {:?}", f.arity(), g.arity()))),
    };
    if arity.0 > MAX_ARITY || arity.1 > MAX_ARITY {
        return Err(Error::Arity(format!("circle product would have arity {arity:?}")));
    }
    Ok(Arc::new(CircleField { f: f.clone(), g: g.clone(), dir, arity }))
}

/// `(a . b)_{(s_1 s_2)(t_1 t_2)} = a_{(s_1 s_2) t_1} b_{s_1 (t_1 t_2)}` for `a` in (2,1), `b` in (1,2).
///
/// Differs from the chained product only in that `b` reads `s_1` instead of `s_2`.
pub struct BulletField {
    a: BiIncRef,
    b: BiIncRef,
}

impl BiIncrement for BulletField {
    fn arity(&self) -> (usize, usize) {
        (2, 2)
    }
    fn grid(&self) -> &Grid2D {
        self.a.grid()
    }
    fn eval_raw(&self, s: &[usize], t: &[usize]) -> f64 {
        self.a.eval(s, &t[..1]) * self.b.eval(&s[..1], t)
    }
}

pub fn bullet_product(a: &BiIncRef, b: &BiIncRef) -> Result<BiIncRef> {
    same_grid(a, b)?;
    if a.arity() != (2, 1) || b.arity() != (1, 2) {
        return Err(Error::Arity(format!("bullet needs (2,1) and (1,2), got {:?}, {:?}", a.arity(), b.arity())));
    }
    Ok(Arc::new(BulletField { a: a.clone(), b: b.clone() }))
}

/// Element of a split tensor space: two index pairs in direction `dir`,
/// any tuple in the other direction.
pub trait SplitEval: Send + Sync {
    fn dir(&self) -> Dir;
    /// Arity in the non-split direction.
    fn other_arity(&self) -> usize;
    fn eval_split(&self, first: [usize; 2], second: [usize; 2], other: &[usize]) -> f64;
}

/// Split of a product field `u v` whose factors have arity 2 in `dir`.
pub struct SplitField {
    u: BiIncRef,
    v: BiIncRef,
    dir: Dir,
    other: usize,
}

impl SplitEval for SplitField {
    fn dir(&self) -> Dir {
        self.dir
    }
    fn other_arity(&self) -> usize {
        self.other
    }
    fn eval_split(&self, first: [usize; 2], second: [usize; 2], other: &[usize]) -> f64 {
        match self.dir {
            Dir::One => {
                let m = self.u.arity().1;
                self.u.eval(&first, &other[..m]) * self.v.eval(&second, &other[m - 1..])
            }
            Dir::Two => {
                let m = self.u.arity().0;
                self.u.eval(&other[..m], &first) * self.v.eval(&other[m - 1..], &second)
            }
        }
    }
}

pub fn split(a: &BiIncRef, dir: Dir) -> Result<SplitField> {
    let (u, v) = a.as_product().ok_or(Error::NotProduct)?;
    let ok = match dir {
        Dir::One => u.arity().0 == 2 && v.arity().0 == 2,
        Dir::Two => u.arity().1 == 2 && v.arity().1 == 2,
    };
    if !ok {
        return Err(Error::NotProduct);
    }
    let other = match dir {
        Dir::One => a.arity().1,
        Dir::Two => a.arity().0,
    };
    Ok(SplitField { u, v, dir, other })
}

/// `mu c (s_1, s_2, s_3) = c((s_1, s_2), (s_2, s_3))`.
pub struct MergeField<S> {
    c: S,
    grid: Grid2D,
}

impl<S: SplitEval> BiIncrement for MergeField<S> {
    fn arity(&self) -> (usize, usize) {
        match self.c.dir() {
            Dir::One => (3, self.c.other_arity()),
            Dir::Two => (self.c.other_arity(), 3),
        }
    }
    fn grid(&self) -> &Grid2D {
        &self.grid
    }
    fn eval_raw(&self, s: &[usize], t: &[usize]) -> f64 {
        match self.c.dir() {
            Dir::One => self.c.eval_split([s[0], s[1]], [s[1], s[2]], t),
            Dir::Two => self.c.eval_split([t[0], t[1]], [t[1], t[2]], s),
        }
    }
}

pub fn merge<S: SplitEval + 'static>(c: S, grid: Grid2D) -> BiIncRef {
    Arc::new(MergeField { c, grid })
}

/// Fixes the first index in `dir` to [`SIGMA_BASE`], lowering that arity by one.
pub struct SigmaField {
    inner: BiIncRef,
    dir: Dir,
}

impl BiIncrement for SigmaField {
    fn arity(&self) -> (usize, usize) {
        let (k, l) = self.inner.arity();
        match self.dir {
            Dir::One => (k - 1, l),
            Dir::Two => (k, l - 1),
        }
    }
    fn grid(&self) -> &Grid2D {
        self.inner.grid()
    }
    fn eval_raw(&self, s: &[usize], t: &[usize]) -> f64 {
        let mut full = Vec::with_capacity(s.len().max(t.len()) + 1);
        full.push(SIGMA_BASE);
        match self.dir {
            Dir::One => {
                full.extend_from_slice(s);
                self.inner.eval(&full, t)
            }
            Dir::Two => {
                full.extend_from_slice(t);
                self.inner.eval(s, &full)
            }
        }
    }
}

pub fn sigma(a: &BiIncRef, dir: Dir) -> Result<BiIncRef> {
    let (k, l) = a.arity();
    let n = match dir {
        Dir::One => k,
        Dir::Two => l,
    };
    if n == 0 {
        return Err(Error::Arity("sigma on arity 0".into()));
    }
    Ok(Arc::new(SigmaField { inner: a.clone(), dir }))
}

/// Fixed linear combination of fields with equal arity.
pub struct LinearField {
    terms: Vec<(f64, BiIncRef)>,
    arity: (usize, usize),
    grid: Grid2D,
}

impl BiIncrement for LinearField {
    fn arity(&self) -> (usize, usize) {
        self.arity
    }
    fn grid(&self) -> &Grid2D {
        &self.grid
    }
    fn eval_raw(&self, s: &[usize], t: &[usize]) -> f64 {
        self.terms.iter().map(|(c, f)| c * f.eval(s, t)).sum()
    }
}

pub fn linear(terms: Vec<(f64, BiIncRef)>) -> Result<BiIncRef> {
    let first = terms.first().ok_or_else(|| Error::Arity("empty combination".into()))?.1.clone();
    for (_, f) in &terms {
        if f.arity() != first.arity() || f.grid() != first.grid() {
            return Err(Error::Arity("combination of incompatible fields".into()));
        }
    }
    Ok(Arc::new(LinearField { arity: first.arity(), grid: first.grid().clone(), terms }))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Holder22Report {
    pub exponents: (f64, f64),
    pub norm: f64,
    pub argmax: [usize; 4],
}

/// `sup |g| / (|s_2 - s_1|^z1 |t_2 - t_1|^z2)` over all grid rectangles.
pub fn holder_norm_22(a: &dyn BiIncrement, z1: f64, z2: f64) -> Result<Holder22Report> {
    holder_norm_22_filtered(a, z1, z2, |_| true)
}

pub fn holder_norm_22_filtered(a: &dyn BiIncrement, z1: f64, z2: f64, keep: impl Fn(&Rect) -> bool) -> Result<Holder22Report> {
    if a.arity() != (2, 2) {
        return Err(Error::Arity(format!("holder_norm_22 on arity {:?}", a.arity())));
    }
    if !(z1 > 0.0 && z2 > 0.0) {
        return Err(Error::Param(format!("exponents ({z1}, {z2}) must be positive")));
    }
    let g = a.grid();
    let (p, q) = (g.g1.points(), g.g2.points());
    let mut best = Holder22Report { exponents: (z1, z2), norm: 0.0, argmax: [0, 1, 0, 1] };
    for i1 in 0..p.len() {
        for i2 in i1 + 1..p.len() {
            let ds = (p[i2] - p[i1]).powf(z1);
            for j1 in 0..q.len() {
                for j2 in j1 + 1..q.len() {
                    let r = Rect { i1, i2, j1, j2 };
                    if !keep(&r) {
                        continue;
                    }
                    let v = a.eval(&[i1, i2], &[j1, j2]).abs() / (ds * (q[j2] - q[j1]).powf(z2));
                    if v > best.norm {
                        best.norm = v;
                        best.argmax = [i1, i2, j1, j2];
                    }
                }
            }
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NNormReport {
    pub rho: (f64, f64),
    pub delta: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub sup: f64,
    pub total: f64,
}

/// `||df||_{r1,r2} + ||d1 f||_{r1,0} + ||d2 f||_{0,r2} + ||f||_inf`.
pub fn nnorm(f: &SheetSample, rho1: f64, rho2: f64) -> Result<NNormReport> {
    if !(rho1 > 0.0 && rho2 > 0.0) {
        return Err(Error::Param(format!("exponents ({rho1}, {rho2}) must be positive")));
    }
    let g = f.grid();
    let (p, q) = (g.g1.points(), g.g2.points());
    let (n1, n2) = g.shape();
    let sup = f.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut d1 = 0.0f64;
    for i1 in 0..n1 {
        for i2 in i1 + 1..n1 {
            let w = (p[i2] - p[i1]).powf(rho1);
            for j in 0..n2 {
                d1 = d1.max((f.get(i2, j) - f.get(i1, j)).abs() / w);
            }
        }
    }
    let mut d2 = 0.0f64;
    for j1 in 0..n2 {
        for j2 in j1 + 1..n2 {
            let w = (q[j2] - q[j1]).powf(rho2);
            for i in 0..n1 {
                d2 = d2.max((f.get(i, j2) - f.get(i, j1)).abs() / w);
            }
        }
    }
    let delta = holder_norm_22(&*delta_full(&f.as_field())?, rho1, rho2)?.norm;
    Ok(NNormReport { rho: (rho1, rho2), delta, delta1: d1, delta2: d2, sup, total: delta + d1 + d2 + sup })
}

fn check_22(a: &dyn BiIncrement, r: &Rect) -> Result<()> {
    if a.arity() != (2, 2) {
        return Err(Error::Arity(format!("expected a (2,2)-field, got {:?}", a.arity())));
    }
    r.check_in(a.grid())
}

/// Sum of `a` over the grid cells inside `r`; exact for full coboundaries of sheets.
pub fn sewing_sum_2d(a: &dyn BiIncrement, r: &Rect) -> Result<f64> {
    check_22(a, r)?;
    if a.as_full_coboundary().is_some() {
        return Ok(a.eval(&r.s(), &r.t()));
    }
    let mut acc = 0.0;
    for i in r.i1..r.i2 {
        for j in r.j1..r.j2 {
            acc += a.eval(&[i, i + 1], &[j, j + 1]);
        }
    }
    Ok(acc)
}

/// Partial sewing `S_dir a`: sum over grid intervals in `dir` only.
pub struct SewnField {
    a: BiIncRef,
    dir: Dir,
}

impl BiIncrement for SewnField {
    fn arity(&self) -> (usize, usize) {
        self.a.arity()
    }
    fn grid(&self) -> &Grid2D {
        self.a.grid()
    }
    fn eval_raw(&self, s: &[usize], t: &[usize]) -> f64 {
        match self.dir {
            Dir::One => (s[0]..s[1]).map(|i| self.a.eval(&[i, i + 1], t)).sum(),
            Dir::Two => (t[0]..t[1]).map(|j| self.a.eval(s, &[j, j + 1])).sum(),
        }
    }
}

pub fn sewn(a: &BiIncRef, dir: Dir) -> Result<BiIncRef> {
    let (k, l) = a.arity();
    let n = match dir {
        Dir::One => k,
        Dir::Two => l,
    };
    if n != 2 {
        return Err(Error::Arity(format!("sewing in direction {dir} needs arity 2 there")));
    }
    Ok(Arc::new(SewnField { a: a.clone(), dir }))
}

/// `a - S_dir a`, the discrete `L_dir d_dir a`.
pub fn lambda_dir_delta(a: &BiIncRef, dir: Dir) -> Result<BiIncRef> {
    linear(vec![(1.0, a.clone()), (-1.0, sewn(a, dir)?)])
}

/// Residuals of `a = S1 S2 a + r1 + r2 + r`.
pub struct Lambda2D {
    /// `S1 S2 a`, the corrected double Riemann sum.
    pub sewn: BiIncRef,
    /// `S1 (1 - S2) a`; satisfies `d1 r1 = 0`.
    pub r1: BiIncRef,
    /// `(1 - S1) S2 a`; satisfies `d2 r2 = 0`.
    pub r2: BiIncRef,
    /// `(1 - S1)(1 - S2) a`, the discrete `L d a`.
    pub r: BiIncRef,
}

pub fn lambda2d_delta(a: &BiIncRef) -> Result<Lambda2D> {
    if a.arity() != (2, 2) {
        return Err(Error::Arity("lambda2d_delta needs a (2,2)-field".into()));
    }
    let s1 = sewn(a, Dir::One)?;
    let s2 = sewn(a, Dir::Two)?;
    let s12 = sewn(&s2, Dir::One)?;
    Ok(Lambda2D {
        r1: linear(vec![(1.0, s1.clone()), (-1.0, s12.clone())])?,
        r2: linear(vec![(1.0, s2.clone()), (-1.0, s12.clone())])?,
        r: linear(vec![(1.0, a.clone()), (-1.0, s1), (-1.0, s2), (1.0, s12.clone())])?,
        sewn: s12,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Contraction2DReport {
    pub z: (f64, f64),
    /// `||L d a||_{z1,z2}` over boxes with power-of-two cell counts per side.
    pub residual_norm: f64,
    /// Surrogate `||da||` with split exponents `z/2` on every gap.
    pub delta_norm: f64,
    /// `residual_norm (2^z1 - 2)(2^z2 - 2) / delta_norm`.
    pub ratio: f64,
}

/// Product contraction of the 2D composite on small dyadic grids.
pub fn contraction_2d(a: &BiIncRef, z1: f64, z2: f64) -> Result<Contraction2DReport> {
    if !(z1 > 1.0 && z2 > 1.0) {
        return Err(Error::Param(format!("contraction needs z > 1, got ({z1}, {z2})")));
    }
    let lam = lambda2d_delta(a)?;
    let r = holder_norm_22_filtered(&*lam.r, z1, z2, |b| (b.i2 - b.i1).is_power_of_two() && (b.j2 - b.j1).is_power_of_two())?;
    let da = delta_full(a)?;
    let g = a.grid();
    let (p, q) = (g.g1.points().to_vec(), g.g2.points().to_vec());
    let mut dn = 0.0f64;
    let mut triples2 = Vec::new();
    for_each_increasing(q.len(), 3, |t| triples2.push([t[0], t[1], t[2]]));
    for_each_increasing(p.len(), 3, |s| {
        let ws = ((p[s[1]] - p[s[0]]) * (p[s[2]] - p[s[1]])).powf(z1 / 2.0);
        for t in &triples2 {
            let wt = ((q[t[1]] - q[t[0]]) * (q[t[2]] - q[t[1]])).powf(z2 / 2.0);
            dn = dn.max(da.eval(s, t).abs() / (ws * wt));
        }
    });
    let c = (2f64.powf(z1) - 2.0) * (2f64.powf(z2) - 2.0);
    let ratio = if dn > 0.0 { r.norm * c / dn } else if r.norm == 0.0 { 0.0 } else { f64::INFINITY };
    Ok(Contraction2DReport { z: (z1, z2), residual_norm: r.norm, delta_norm: dn, ratio })
}

/// Absolute tolerance for the cocycle precondition.
pub const COCYCLE_TOL: f64 = 1e-10;

/// Parts of a bicocycle `a = dq + p1 + p2`, returned with their signs applied.
pub struct CocycleParts {
    pub q: BiIncRef,
    /// `dq`.
    pub exact: BiIncRef,
    /// Lies in the image of `d1`.
    pub part1: BiIncRef,
    /// Lies in the image of `d2`.
    pub part2: BiIncRef,
}

/// Decomposes a (k,k)-field with `da = 0` using the contractions that fix the
/// first index of each direction at [`SIGMA_BASE`].
///
/// With `e = (-1)^(k+1)` the homotopy reads `s_i d_i - d_i s_i = e` on degree k.
/// Setting `b = a - e (s1 d1 a + s2 d2 a)` and `q = s1 s2 b` gives
/// `a = dq - d1 s d2 a - d2 s d1 a` with `s = s1 s2`.
pub fn cocycle_decompose(a: &BiIncRef) -> Result<CocycleParts> {
    let (k, l) = a.arity();
    if k != l || k == 0 || k >= MAX_ARITY {
        return Err(Error::Arity(format!("cocycle_decompose needs (k,k) with 1 <= k < {MAX_ARITY}, got {:?}", a.arity())));
    }
    let da = delta_full(a)?;
    let (n1, n2) = a.grid().shape();
    let mut worst = 0.0f64;
    for_each_increasing(n1, k + 1, |s| {
        for_each_increasing(n2, k + 1, |t| worst = worst.max(da.eval(s, t).abs()));
    });
    if worst > COCYCLE_TOL {
        return Err(Error::NotCocycle(worst));
    }
    let e = if (k + 1) % 2 == 0 { 1.0 } else { -1.0 };
    let s1d1 = sigma(&delta_dir(a, Dir::One)?, Dir::One)?;
    let s2d2 = sigma(&delta_dir(a, Dir::Two)?, Dir::Two)?;
    let b = linear(vec![(1.0, a.clone()), (-e, s1d1), (-e, s2d2)])?;
    let q = sigma(&sigma(&b, Dir::One)?, Dir::Two)?;
    let exact = delta_full(&q)?;
    let s_d2a = sigma(&sigma(&delta_dir(a, Dir::Two)?, Dir::One)?, Dir::Two)?;
    let s_d1a = sigma(&sigma(&delta_dir(a, Dir::One)?, Dir::One)?, Dir::Two)?;
    let part1 = linear(vec![(-1.0, delta_dir(&s_d2a, Dir::One)?)])?;
    let part2 = linear(vec![(-1.0, delta_dir(&s_d1a, Dir::Two)?)])?;
    Ok(CocycleParts { q, exact, part1, part2 })
}
