//! The rough-sheet bundle of a sampled smooth sheet: every postulated
//! iterated integral, built by cell quadrature, plus relation checks,
//! norms and persistence.

mod chen;
mod io;
mod tables;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use chen::{verify_chen, verify_chen_with, ChenReport, RelationResult, VerifyOptions};
pub use io::{load_roughsheet, read_roughsheet, save_roughsheet, write_roughsheet, RSH_VERSION};

use crate::error::{Error, Result};
use crate::grid::{for_each_increasing, BiIncRef, BiIncrement, Dir, Grid2D, Rect, SheetSample};
use tables::{Tables, MW, MX};

/// Minimum number of grid points per direction accepted by [`enhance_smooth`].
pub const MIN_POINTS: usize = 9;

/// Where point values inside a cell are read.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Convention {
    /// Bilinear centre values; the geometric relations hold exactly.
    #[default]
    Midpoint,
    /// Lower-left values; the discrete analogue of iterated Ito integrals.
    Ito,
}

impl Convention {
    fn half_weight(self) -> f64 {
        match self {
            Convention::Midpoint => 0.5,
            Convention::Ito => 0.0,
        }
    }
}

impl FromStr for Convention {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "midpoint" | "stratonovich" => Ok(Self::Midpoint),
            "ito" => Ok(Self::Ito),
            _ => Err(Error::Param(format!("unknown convention {s:?}"))),
        }
    }
}

/// Integrating measure: `X` is `dx`, `W` is `d1x d2x`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sig {
    X,
    W,
}

impl Sig {
    fn idx(self) -> usize {
        match self {
            Sig::X => MX,
            Sig::W => MW,
        }
    }
}

impl fmt::Display for Sig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sig::X => "x",
            Sig::W => "w",
        })
    }
}

/// Names one field of the bundle. For `C`, `D`, `E`, `F` the first measure is
/// the inner one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FieldId {
    A(Sig),
    B(Dir, Sig),
    C(Sig, Sig),
    D(Dir, Sig, Sig),
    E(Dir, Sig, Sig),
    F(Dir, Sig, Sig),
    G(Dir),
    H(Dir),
    I(Dir),
    J(Dir),
    K(Dir),
    L(Dir),
    M(Dir),
    N(Dir),
    O(Dir),
    P(Dir),
    Q(Dir),
    T(Dir),
}

impl FieldId {
    /// Every field of the bundle.
    pub fn all() -> Vec<FieldId> {
        let sigs = [Sig::X, Sig::W];
        let mut v = Vec::new();
        for s in sigs {
            v.push(FieldId::A(s));
        }
        for d in [Dir::One, Dir::Two] {
            for s in sigs {
                v.push(FieldId::B(d, s));
            }
        }
        for s in sigs {
            for t in sigs {
                v.push(FieldId::C(s, t));
            }
        }
        for d in [Dir::One, Dir::Two] {
            for s in sigs {
                for t in sigs {
                    v.extend([FieldId::D(d, s, t), FieldId::E(d, s, t), FieldId::F(d, s, t)]);
                }
            }
        }
        for d in [Dir::One, Dir::Two] {
            v.extend([
                FieldId::G(d),
                FieldId::H(d),
                FieldId::I(d),
                FieldId::J(d),
                FieldId::K(d),
                FieldId::L(d),
                FieldId::M(d),
                FieldId::N(d),
                FieldId::O(d),
                FieldId::P(d),
                FieldId::Q(d),
                FieldId::T(d),
            ]);
        }
        v
    }

    /// Arity of the field viewed as an ordinary biincrement, `None` for split fields.
    pub fn arity(self) -> Option<(usize, usize)> {
        match self {
            FieldId::D(..) | FieldId::E(..) | FieldId::F(..) => None,
            FieldId::P(Dir::One) => Some((2, 1)),
            FieldId::P(Dir::Two) => Some((1, 2)),
            _ => Some((2, 2)),
        }
    }

    /// Hoelder exponents as multiples of `(alpha, beta)`.
    pub fn exponents(self) -> (f64, f64) {
        let sw = |d: Dir, e: (f64, f64)| if d == Dir::One { e } else { (e.1, e.0) };
        match self {
            FieldId::A(_) | FieldId::G(_) => (1.0, 1.0),
            FieldId::B(d, _) | FieldId::H(d) | FieldId::I(d) => sw(d, (2.0, 1.0)),
            FieldId::C(..) | FieldId::J(_) | FieldId::K(_) | FieldId::M(_) | FieldId::N(_) => (2.0, 2.0),
            FieldId::L(d) => sw(d, (1.0, 2.0)),
            FieldId::Q(d) => sw(d, (2.0, 1.0)),
            FieldId::O(d) => sw(d, (2.0, 3.0)),
            FieldId::T(d) => sw(d, (3.0, 1.0)),
            FieldId::P(d) => sw(d, (2.0, 0.0)),
            // Split fields: first pair, second pair; the other direction uses `split_other_exponent`.
            FieldId::D(..) => (1.0, 1.0),
            FieldId::E(..) | FieldId::F(..) => (2.0, 1.0),
        }
    }

    /// Exponent multiple in the non-split direction of a split field.
    pub fn split_other_exponent(self) -> f64 {
        match self {
            FieldId::F(..) => 3.0,
            _ => 2.0,
        }
    }
}

impl fmt::Display for FieldId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldId::A(s) => write!(f, "A^{s}"),
            FieldId::B(d, s) => write!(f, "B{d}^x{s}"),
            FieldId::C(s, t) => write!(f, "C^{s}{t}"),
            FieldId::D(d, s, t) => write!(f, "D{d}^{s}{t}"),
            FieldId::E(d, s, t) => write!(f, "E{d}^x{s}{t}"),
            FieldId::F(d, s, t) => write!(f, "F{d}^x{s}{t}"),
            FieldId::G(d) => write!(f, "G{d}"),
            FieldId::H(d) => write!(f, "H{d}"),
            FieldId::I(d) => write!(f, "I{d}"),
            FieldId::J(d) => write!(f, "J{d}"),
            FieldId::K(d) => write!(f, "K{d}"),
            FieldId::L(d) => write!(f, "L{d}"),
            FieldId::M(d) => write!(f, "M{d}"),
            FieldId::N(d) => write!(f, "N{d}"),
            FieldId::O(d) => write!(f, "O{d}"),
            FieldId::P(d) => write!(f, "P{d}"),
            FieldId::Q(d) => write!(f, "Q{d}"),
            FieldId::T(d) => write!(f, "T{d}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnhanceOptions {
    pub alpha: f64,
    pub beta: f64,
    pub convention: Convention,
}

impl Default for EnhanceOptions {
    fn default() -> Self {
        Self { alpha: 1.0, beta: 1.0, convention: Convention::Midpoint }
    }
}

/// The enhanced sheet. Fields are evaluated on demand from cached cell tables;
/// every accessor takes indices in the original orientation.
#[derive(Clone, Debug)]
pub struct RoughSheet {
    alpha: f64,
    beta: f64,
    convention: Convention,
    x: SheetSample,
    t: Tables,
    tt: Tables,
    zeroed: BTreeSet<FieldId>,
    provenance: String,
}

impl PartialEq for RoughSheet {
    fn eq(&self, o: &Self) -> bool {
        self.alpha.to_bits() == o.alpha.to_bits()
            && self.beta.to_bits() == o.beta.to_bits()
            && self.convention == o.convention
            && self.x == o.x
            && self.zeroed == o.zeroed
            && self.provenance == o.provenance
    }
}

/// SHA-256 over the grid coordinates and node values.
pub fn provenance_hash(x: &SheetSample) -> String {
    let mut h = Sha256::new();
    let g = x.grid();
    for v in g.g1.points().iter().chain(g.g2.points()).chain(x.values()) {
        h.update(v.to_le_bytes());
    }
    hex::encode(h.finalize())
}

pub fn enhance_smooth(x: &SheetSample) -> Result<RoughSheet> {
    enhance_smooth_with(x, &EnhanceOptions::default())
}

pub fn enhance_smooth_with(x: &SheetSample, opts: &EnhanceOptions) -> Result<RoughSheet> {
    let (n1, n2) = x.shape();
    if n1 < MIN_POINTS || n2 < MIN_POINTS {
        return Err(Error::Grid(format!("enhancement needs at least {MIN_POINTS} points per direction, got {n1}x{n2}")));
    }
    if !(opts.alpha > 1.0 / 3.0 && opts.alpha <= 1.0 && opts.beta > 1.0 / 3.0 && opts.beta <= 1.0) {
        return Err(Error::Param(format!("exponents ({}, {}) outside (1/3, 1]", opts.alpha, opts.beta)));
    }
    let t = Tables::from_sample(x, opts.convention.half_weight());
    let tt = t.transpose();
    Ok(RoughSheet {
        alpha: opts.alpha,
        beta: opts.beta,
        convention: opts.convention,
        x: x.clone(),
        t,
        tt,
        zeroed: BTreeSet::new(),
        provenance: provenance_hash(x),
    })
}

impl RoughSheet {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn convention(&self) -> Convention {
        self.convention
    }
    pub fn grid(&self) -> &Grid2D {
        self.x.grid()
    }
    pub fn sample(&self) -> &SheetSample {
        &self.x
    }
    pub fn provenance(&self) -> &str {
        &self.provenance
    }
    pub fn zeroed(&self) -> impl Iterator<Item = &FieldId> {
        self.zeroed.iter()
    }

    /// Replaces a field by zero; used to construct deliberate violations.
    pub fn zero_field(&mut self, id: FieldId) {
        self.zeroed.insert(id);
    }

    #[inline]
    fn z(&self, id: FieldId) -> bool {
        !self.zeroed.is_empty() && self.zeroed.contains(&id)
    }

    /// Table in which `dir` is the first index.
    #[inline]
    fn row(&self, dir: Dir) -> &Tables {
        match dir {
            Dir::One => &self.t,
            Dir::Two => &self.tt,
        }
    }

    /// Table in which `dir` is the second index.
    #[inline]
    fn col(&self, dir: Dir) -> &Tables {
        self.row(dir.other())
    }

    pub fn a(&self, s: Sig, r: &Rect) -> f64 {
        if self.z(FieldId::A(s)) {
            return 0.0;
        }
        self.t.a(s.idx(), r.i1, r.i2, r.j1, r.j2)
    }

    /// Row kernels: `dir` is the integrated direction.
    fn row_eval(&self, dir: Dir, r: &Rect, f: impl Fn(&Tables, usize, usize, usize, usize) -> f64) -> f64 {
        match dir {
            Dir::One => f(&self.t, r.i1, r.i2, r.j1, r.j2),
            Dir::Two => f(&self.tt, r.j1, r.j2, r.i1, r.i2),
        }
    }

    /// Column kernels: `dir` is the integrated direction.
    fn col_eval(&self, dir: Dir, r: &Rect, f: impl Fn(&Tables, usize, usize, usize, usize) -> f64) -> f64 {
        match dir {
            Dir::Two => f(&self.t, r.i1, r.i2, r.j1, r.j2),
            Dir::One => f(&self.tt, r.j1, r.j2, r.i1, r.i2),
        }
    }

    pub fn b(&self, dir: Dir, s: Sig, r: &Rect) -> f64 {
        if self.z(FieldId::B(dir, s)) {
            return 0.0;
        }
        self.row_eval(dir, r, |t, a, b, c, d| t.b(s.idx(), a, b, c, d))
    }

    pub fn c(&self, s: Sig, u: Sig, r: &Rect) -> f64 {
        if self.z(FieldId::C(s, u)) {
            return 0.0;
        }
        self.t.c(s.idx(), u.idx(), r.i1, r.i2, r.j1, r.j2)
    }

    /// `first`, `second` are index pairs in `dir`; `other` lies in the other direction.
    pub fn d(&self, dir: Dir, s: Sig, u: Sig, first: [usize; 2], second: [usize; 2], other: [usize; 2]) -> f64 {
        if self.z(FieldId::D(dir, s, u)) {
            return 0.0;
        }
        self.row(dir).d(s.idx(), u.idx(), first, second, other[0], other[1])
    }

    pub fn e(&self, dir: Dir, s: Sig, u: Sig, first: [usize; 2], second: [usize; 2], other: [usize; 2]) -> f64 {
        if self.z(FieldId::E(dir, s, u)) {
            return 0.0;
        }
        self.row(dir).e(s.idx(), u.idx(), first, second, other[0], other[1])
    }

    pub fn f(&self, dir: Dir, s: Sig, u: Sig, first: [usize; 2], second: [usize; 2], other: [usize; 3]) -> f64 {
        if self.z(FieldId::F(dir, s, u)) {
            return 0.0;
        }
        self.row(dir).f(s.idx(), u.idx(), first, second, other[0], other[1], other[2])
    }

    pub fn p(&self, dir: Dir, fixed: usize, pair: [usize; 2]) -> f64 {
        if self.z(FieldId::P(dir)) {
            return 0.0;
        }
        self.col(dir).p(fixed, pair[0], pair[1])
    }

    /// Any field of arity (2,2).
    pub fn eval22(&self, id: FieldId, r: &Rect) -> Result<f64> {
        if id.arity() != Some((2, 2)) {
            return Err(Error::Arity(format!("{id} is not a (2,2)-field")));
        }
        if self.z(id) {
            return Ok(0.0);
        }
        Ok(match id {
            FieldId::A(s) => self.a(s, r),
            FieldId::B(d, s) => self.b(d, s, r),
            FieldId::C(s, u) => self.c(s, u, r),
            FieldId::G(d) => self.row_eval(d, r, Tables::g),
            FieldId::H(d) => self.row_eval(d, r, Tables::h),
            FieldId::I(d) => self.row_eval(d, r, Tables::i),
            FieldId::J(d) => self.row_eval(d, r, Tables::j),
            FieldId::K(d) => self.col_eval(d, r, Tables::k),
            FieldId::L(d) => self.col_eval(d, r, Tables::l),
            FieldId::M(d) => self.col_eval(d, r, Tables::m_field),
            FieldId::N(d) => self.col_eval(d, r, Tables::n),
            FieldId::O(d) => self.col_eval(d, r, Tables::o),
            FieldId::Q(d) => self.col_eval(d, r, Tables::q),
            FieldId::T(d) => self.col_eval(d, r, Tables::t),
            _ => unreachable!(),
        })
    }

    /// Shorthand for (2,2)-fields with a rectangle known to be valid.
    pub fn get(&self, id: FieldId, r: &Rect) -> f64 {
        self.eval22(id, r).expect("not a (2,2)-field")
    }

    /// Evaluates any field on index tuples: `s`, `t` for ordinary fields,
    /// `(first, second)` in the split direction followed by the other tuple for split fields.
    pub fn eval_any(&self, id: FieldId, s: &[usize], t: &[usize]) -> Result<f64> {
        let bad = || Error::Arity(format!("wrong index counts for {id}"));
        match id {
            FieldId::P(Dir::Two) if s.len() == 1 && t.len() == 2 => Ok(self.p(Dir::Two, s[0], [t[0], t[1]])),
            FieldId::P(Dir::One) if s.len() == 2 && t.len() == 1 => Ok(self.p(Dir::One, t[0], [s[0], s[1]])),
            FieldId::D(d, a, b) | FieldId::E(d, a, b) | FieldId::F(d, a, b) => {
                let (split, other) = if d == Dir::One { (s, t) } else { (t, s) };
                let want_other = if matches!(id, FieldId::F(..)) { 3 } else { 2 };
                if split.len() != 4 || other.len() != want_other {
                    return Err(bad());
                }
                let (p, q) = ([split[0], split[1]], [split[2], split[3]]);
                Ok(match id {
                    FieldId::D(..) => self.d(d, a, b, p, q, [other[0], other[1]]),
                    FieldId::E(..) => self.e(d, a, b, p, q, [other[0], other[1]]),
                    _ => self.f(d, a, b, p, q, [other[0], other[1], other[2]]),
                })
            }
            _ if s.len() == 2 && t.len() == 2 => self.eval22(id, &Rect { i1: s[0], i2: s[1], j1: t[0], j2: t[1] }),
            _ => Err(bad()),
        }
    }

    /// A (2,2)- or P-field as a biincrement.
    pub fn field(self: &Arc<Self>, id: FieldId) -> Result<BiIncRef> {
        let arity = id.arity().ok_or_else(|| Error::Arity(format!("{id} is a split field")))?;
        Ok(Arc::new(FieldView { sheet: self.clone(), id, arity }))
    }
}

struct FieldView {
    sheet: Arc<RoughSheet>,
    id: FieldId,
    arity: (usize, usize),
}

impl BiIncrement for FieldView {
    fn arity(&self) -> (usize, usize) {
        self.arity
    }
    fn grid(&self) -> &Grid2D {
        self.sheet.grid()
    }
    fn eval_raw(&self, s: &[usize], t: &[usize]) -> f64 {
        self.sheet.eval_any(self.id, s, t).unwrap_or(f64::NAN)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormOptions {
    /// Ordinary fields are scanned on at most this many evenly spaced indices per direction.
    pub max_points: usize,
    /// Same for split fields, whose scan is two orders more expensive.
    pub split_max_points: usize,
}

impl Default for NormOptions {
    fn default() -> Self {
        Self { max_points: 17, split_max_points: 7 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub components: Vec<(String, f64)>,
    pub total: f64,
}

impl NormReport {
    pub fn component(&self, id: FieldId) -> Option<f64> {
        let name = id.to_string();
        self.components.iter().find(|(n, _)| *n == name).map(|c| c.1)
    }
}

/// Evenly spaced indices including both ends.
fn index_subset(n: usize, max: usize) -> Vec<usize> {
    if n <= max {
        return (0..n).collect();
    }
    let mut v: Vec<usize> = (0..max).map(|k| (k * (n - 1) + (max - 1) / 2) / (max - 1)).collect();
    v[0] = 0;
    v[max - 1] = n - 1;
    v.dedup();
    v
}

/// Sum over all fields of the Hoelder norm at the declared exponents
/// (product-topology surrogate).
pub fn roughsheet_norm(x: &RoughSheet) -> NormReport {
    roughsheet_norm_with(x, None, &NormOptions::default()).expect("same sheet")
}

/// Norm of the field-wise difference of two bundles on the same grid.
pub fn roughsheet_distance(x: &RoughSheet, y: &RoughSheet, opts: &NormOptions) -> Result<NormReport> {
    roughsheet_norm_with(x, Some(y), opts)
}

pub fn roughsheet_norm_with(x: &RoughSheet, y: Option<&RoughSheet>, opts: &NormOptions) -> Result<NormReport> {
    roughsheet_norm_fields(x, y, &FieldId::all(), opts)
}

/// The norm restricted to `ids`.
pub fn roughsheet_norm_fields(x: &RoughSheet, y: Option<&RoughSheet>, ids: &[FieldId], opts: &NormOptions) -> Result<NormReport> {
    if let Some(y) = y {
        if x.grid() != y.grid() {
            return Err(Error::Shape("rough sheets live on different grids".into()));
        }
    }
    let g = x.grid();
    let (p, q) = (g.g1.points(), g.g2.points());
    let (n1, n2) = g.shape();
    let val = |id: FieldId, s: &[usize], t: &[usize]| -> f64 {
        let a = x.eval_any(id, s, t).unwrap_or(0.0);
        let b = y.map_or(0.0, |y| y.eval_any(id, s, t).unwrap_or(0.0));
        a - b
    };
    let (al, be) = (x.alpha, x.beta);
    let mut components = Vec::new();
    for &id in ids {
        let (e1, e2) = id.exponents();
        let mut best = 0.0f64;
        match id.arity() {
            Some((2, 2)) => {
                let is = index_subset(n1, opts.max_points);
                let js = index_subset(n2, opts.max_points);
                for_each_increasing(is.len(), 2, |a| {
                    let (i1, i2) = (is[a[0]], is[a[1]]);
                    let ws = (p[i2] - p[i1]).powf(e1 * al);
                    for_each_increasing(js.len(), 2, |b| {
                        let (j1, j2) = (js[b[0]], js[b[1]]);
                        let v = val(id, &[i1, i2], &[j1, j2]).abs() / (ws * (q[j2] - q[j1]).powf(e2 * be));
                        best = best.max(v);
                    });
                });
            }
            Some(ar) => {
                // P-fields: increments in the integrated direction at every fixed index.
                let (fixed_n, pair_pts, ex) = if ar == (1, 2) { (n1, q, e2 * be) } else { (n2, p, e1 * al) };
                let pairs = index_subset(pair_pts.len(), opts.max_points);
                for f in index_subset(fixed_n, opts.max_points) {
                    for_each_increasing(pairs.len(), 2, |b| {
                        let (k1, k2) = (pairs[b[0]], pairs[b[1]]);
                        let v = if ar == (1, 2) { val(id, &[f], &[k1, k2]) } else { val(id, &[k1, k2], &[f]) };
                        best = best.max(v.abs() / (pair_pts[k2] - pair_pts[k1]).powf(ex));
                    });
                }
            }
            None => {
                let dir = match id {
                    FieldId::D(d, ..) | FieldId::E(d, ..) | FieldId::F(d, ..) => d,
                    _ => unreachable!(),
                };
                let (sp, op, hs, ho) = if dir == Dir::One { (p, q, al, be) } else { (q, p, be, al) };
                let ss = index_subset(sp.len(), opts.split_max_points);
                let os = index_subset(op.len(), opts.split_max_points);
                let k_other = if matches!(id, FieldId::F(..)) { 3 } else { 2 };
                let eo = id.split_other_exponent() * ho;
                for_each_increasing(ss.len(), 4, |a| {
                    let sp4 = [ss[a[0]], ss[a[1]], ss[a[2]], ss[a[3]]];
                    let w = (sp[sp4[1]] - sp[sp4[0]]).powf(e1 * hs) * (sp[sp4[3]] - sp[sp4[2]]).powf(e2 * hs);
                    for_each_increasing(os.len(), k_other, |b| {
                        let o: Vec<usize> = b.iter().map(|&k| os[k]).collect();
                        // For three indices the exponent is split as 1/3 : 2/3 over the two gaps.
                        let wo = if k_other == 2 {
                            (op[o[1]] - op[o[0]]).powf(eo)
                        } else {
                            (op[o[1]] - op[o[0]]).powf(eo / 3.0) * (op[o[2]] - op[o[1]]).powf(2.0 * eo / 3.0)
                        };
                        let v = if dir == Dir::One { val(id, &sp4, &o) } else { val(id, &o, &sp4) };
                        best = best.max(v.abs() / (w * wo));
                    });
                });
            }
        }
        components.push((id.to_string(), best));
    }
    let total = components.iter().map(|c| c.1).sum();
    Ok(NormReport { components, total })
}

/// Largest difference of representative fields between the enhancement of
/// `x_fine` and that of its every-other-point subsample, on the coarse boxes.
pub fn quadrature_error(x_fine: &SheetSample, opts: &EnhanceOptions) -> Result<f64> {
    let fine = enhance_smooth_with(x_fine, opts)?;
    let coarse = enhance_smooth_with(&x_fine.subsample(2)?, opts)?;
    let (n1, n2) = coarse.grid().shape();
    let is = index_subset(n1, 9);
    let js = index_subset(n2, 9);
    let ids = [
        FieldId::A(Sig::W),
        FieldId::B(Dir::One, Sig::X),
        FieldId::B(Dir::Two, Sig::W),
        FieldId::C(Sig::X, Sig::X),
        FieldId::C(Sig::W, Sig::X),
        FieldId::G(Dir::One),
        FieldId::H(Dir::Two),
        FieldId::J(Dir::One),
        FieldId::K(Dir::Two),
        FieldId::N(Dir::Two),
    ];
    let mut worst = 0.0f64;
    for id in ids {
        for_each_increasing(is.len(), 2, |a| {
            for_each_increasing(js.len(), 2, |b| {
                let rc = Rect { i1: is[a[0]], i2: is[a[1]], j1: js[b[0]], j2: js[b[1]] };
                let rf = Rect { i1: 2 * rc.i1, i2: 2 * rc.i2, j1: 2 * rc.j1, j2: 2 * rc.j2 };
                worst = worst.max((coarse.get(id, &rc) - fine.get(id, &rf)).abs());
            });
        });
    }
    Ok(worst)
}
