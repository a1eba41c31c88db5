//! Relation checks for a rough-sheet bundle.
//!
//! Every relation is written once in "view" coordinates: the view of
//! direction `a` lists indices of direction `a` first. Row families (B..J)
//! integrate along `a`; column families (K..Q, T) integrate along the other
//! direction `c`. Running both views covers both orientations.
//!
//! Two-point objects are differenced as `h(u1,u3) - h(u1,u2) - h(u2,u3)`.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{FieldId, RoughSheet, Sig};
use crate::error::{Error, Result};
use crate::grid::{for_each_increasing, Dir, Rect, SheetSample};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    /// Enumerate every tuple when their number is at most this.
    pub max_exhaustive: usize,
    /// Otherwise draw this many random tuples per relation.
    pub samples: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { max_exhaustive: 3000, samples: 400, seed: 0x5eed }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationResult {
    /// Family of the relation: "chen", "ghij", "klmno" or "pq".
    pub group: String,
    /// Item label within the family, e.g. "2a".
    pub item: String,
    /// Direction of the view.
    pub dir: Dir,
    /// Human-readable statement.
    pub statement: String,
    /// Implemented reading differs from the literal printed form.
    pub corrected: bool,
    pub max_residual: f64,
    /// Indices in the original orientation, direction 1 first.
    pub argmax: (Vec<usize>, Vec<usize>),
    pub samples: usize,
    pub pass: bool,
}

impl RelationResult {
    pub fn id(&self) -> String {
        format!("{}.{}[{}]", self.group, self.item, self.dir)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChenReport {
    pub tol: f64,
    pub relations: Vec<RelationResult>,
    pub pass: bool,
}

impl ChenReport {
    pub fn max_residual(&self) -> f64 {
        self.relations.iter().map(|r| r.max_residual).fold(0.0, f64::max)
    }

    pub fn failures(&self) -> impl Iterator<Item = &RelationResult> {
        self.relations.iter().filter(|r| !r.pass)
    }

    pub fn find(&self, group: &str, item: &str, dir: Dir) -> Option<&RelationResult> {
        self.relations.iter().find(|r| r.group == group && r.item == item && r.dir == dir)
    }

    /// Turns a failing report into an error carrying the worst residual.
    pub fn into_result(self) -> Result<Self> {
        if self.pass {
            return Ok(self);
        }
        let worst = self.failures().max_by(|a, b| a.max_residual.total_cmp(&b.max_residual)).expect("a failure");
        Err(Error::Relation(format!("{} residual {:e} > {:e}", worst.id(), worst.max_residual, self.tol)))
    }
}

/// Accessors in view coordinates.
struct View<'a> {
    x: &'a RoughSheet,
    y: &'a SheetSample,
    a: Dir,
}

impl<'a> View<'a> {
    fn b_dir(&self) -> Dir {
        self.a.other()
    }
    fn rect(&self, i1: usize, i2: usize, j1: usize, j2: usize) -> Rect {
        match self.a {
            Dir::One => Rect { i1, i2, j1, j2 },
            Dir::Two => Rect { i1: j1, i2: j2, j1: i1, j2: i2 },
        }
    }
    fn v(&self, i: usize, j: usize) -> f64 {
        match self.a {
            Dir::One => self.y.get(i, j),
            Dir::Two => self.y.get(j, i),
        }
    }
    /// Increment along the view's first direction at fixed `j`.
    fn d1x(&self, i1: usize, i2: usize, j: usize) -> f64 {
        self.v(i2, j) - self.v(i1, j)
    }
    fn d2x(&self, i: usize, j1: usize, j2: usize) -> f64 {
        self.v(i, j2) - self.v(i, j1)
    }
    fn dx(&self, i1: usize, i2: usize, j1: usize, j2: usize) -> f64 {
        self.v(i2, j2) - self.v(i1, j2) - self.v(i2, j1) + self.v(i1, j1)
    }
    fn dx2(&self, i1: usize, i2: usize, j1: usize, j2: usize) -> f64 {
        let q = |i, j| self.v(i, j) * self.v(i, j);
        q(i2, j2) - q(i1, j2) - q(i2, j1) + q(i1, j1)
    }
    fn get(&self, id: FieldId, i1: usize, i2: usize, j1: usize, j2: usize) -> f64 {
        self.x.get(id, &self.rect(i1, i2, j1, j2))
    }
    fn p(&self, i: usize, j1: usize, j2: usize) -> f64 {
        self.x.p(self.b_dir(), i, [j1, j2])
    }
    /// Split fields of direction `a` (pairs in the view's first direction).
    fn d(&self, s: Sig, t: Sig, p: [usize; 2], q: [usize; 2], j1: usize, j2: usize) -> f64 {
        self.x.d(self.a, s, t, p, q, [j1, j2])
    }
    fn e(&self, s: Sig, t: Sig, p: [usize; 2], q: [usize; 2], j1: usize, j2: usize) -> f64 {
        self.x.e(self.a, s, t, p, q, [j1, j2])
    }
    fn f(&self, s: Sig, t: Sig, p: [usize; 2], q: [usize; 2], o: [usize; 3]) -> f64 {
        self.x.f(self.a, s, t, p, q, o)
    }
    /// Split field of the other direction: pairs in the view's second direction.
    fn d_other(&self, s: Sig, t: Sig, p: [usize; 2], q: [usize; 2], i1: usize, i2: usize) -> f64 {
        self.x.d(self.b_dir(), s, t, p, q, [i1, i2])
    }
}

#[inline]
fn dd(h13: f64, h12: f64, h23: f64) -> f64 {
    h13 - h12 - h23
}

type Residual<'r> = Box<dyn Fn(&View, &[usize], &[usize]) -> f64 + 'r>;

struct Relation<'r> {
    group: &'static str,
    item: String,
    statement: String,
    corrected: bool,
    /// Index counts in the view's first and second directions.
    k: (usize, usize),
    f: Residual<'r>,
}

fn rel<'r>(
    group: &'static str,
    item: impl Into<String>,
    statement: impl Into<String>,
    corrected: bool,
    k: (usize, usize),
    f: impl Fn(&View, &[usize], &[usize]) -> f64 + 'r,
) -> Relation<'r> {
    Relation { group, item: item.into(), statement: statement.into(), corrected, k, f: Box::new(f) }
}

fn sig_name(s: Sig) -> &'static str {
    match s {
        Sig::X => "x",
        Sig::W => "w",
    }
}

fn chen_relations<'r>() -> Vec<Relation<'r>> {
    use FieldId as F;
    let mut v = Vec::new();
    v.push(rel("chen", "1", "A^x = dx", false, (2, 2), |w, i, j| w.get(F::A(Sig::X), i[0], i[1], j[0], j[1]) - w.dx(i[0], i[1], j[0], j[1])));
    v.push(rel("chen", "6", "d_a A^w = 0", false, (3, 2), |w, i, j| {
        let g = |p, q| w.get(F::A(Sig::W), p, q, j[0], j[1]);
        dd(g(i[0], i[2]), g(i[0], i[1]), g(i[1], i[2]))
    }));
    for (s, base) in [(Sig::X, 2), (Sig::W, 7)] {
        let n = sig_name(s);
        v.push(rel("chen", format!("{base}a"), format!("d_a B_a^x{n} = d_a x (x) A^{n}"), false, (3, 2), move |w, i, j| {
            let g = |p, q| w.get(F::B(w.a, s), p, q, j[0], j[1]);
            dd(g(i[0], i[2]), g(i[0], i[1]), g(i[1], i[2])) - w.d1x(i[0], i[1], j[0]) * w.get(F::A(s), i[1], i[2], j[0], j[1])
        }));
        v.push(rel("chen", format!("{base}b"), format!("d_b B_a^x{n} = -D_b^x{n}"), s == Sig::W, (2, 3), move |w, i, j| {
            let g = |p, q| w.get(F::B(w.a, s), i[0], i[1], p, q);
            dd(g(j[0], j[2]), g(j[0], j[1]), g(j[1], j[2])) + w.d_other(Sig::X, s, [j[0], j[1]], [j[1], j[2]], i[0], i[1])
        }));
    }
    let pairs = [(Sig::X, Sig::X, 3, 4, 5), (Sig::W, Sig::X, 8, 9, 10), (Sig::X, Sig::W, 11, 12, 13), (Sig::W, Sig::W, 14, 15, 16)];
    for (s, t, ci, di, ei) in pairs {
        let (ns, nt) = (sig_name(s), sig_name(t));
        v.push(rel("chen", format!("{ci}"), format!("d_a C^{ns}{nt} = D_a^{ns}{nt}"), false, (3, 2), move |w, i, j| {
            let g = |p, q| w.get(F::C(s, t), p, q, j[0], j[1]);
            dd(g(i[0], i[2]), g(i[0], i[1]), g(i[1], i[2])) - w.d(s, t, [i[0], i[1]], [i[1], i[2]], j[0], j[1])
        }));
        v.push(rel("chen", format!("{di}a"), format!("(1 (x) d_a) D_a^{ns}{nt} = 0"), false, (5, 2), move |w, i, j| {
            let g = |p, q| w.d(s, t, [i[0], i[1]], [p, q], j[0], j[1]);
            dd(g(i[2], i[4]), g(i[2], i[3]), g(i[3], i[4]))
        }));
        v.push(rel("chen", format!("{di}b"), format!("d_b D_a^{ns}{nt} = A^{ns} (x)_a A^{nt}"), false, (4, 3), move |w, i, j| {
            let (p, q) = ([i[0], i[1]], [i[2], i[3]]);
            let g = |a, b| w.d(s, t, p, q, a, b);
            dd(g(j[0], j[2]), g(j[0], j[1]), g(j[1], j[2]))
                - w.get(F::A(s), p[0], p[1], j[0], j[1]) * w.get(F::A(t), q[0], q[1], j[1], j[2])
        }));
        v.push(rel("chen", format!("{ei}a"), format!("(1 (x) d_a) E_a^x{ns}{nt} = 0"), false, (5, 2), move |w, i, j| {
            let g = |p, q| w.e(s, t, [i[0], i[1]], [p, q], j[0], j[1]);
            dd(g(i[2], i[4]), g(i[2], i[3]), g(i[3], i[4]))
        }));
        v.push(rel("chen", format!("{ei}b"), format!("(d_a (x) 1) E_a^x{ns}{nt} = d_a x D_a^{ns}{nt}"), false, (5, 2), move |w, i, j| {
            let q = [i[3], i[4]];
            let g = |a, b| w.e(s, t, [a, b], q, j[0], j[1]);
            dd(g(i[0], i[2]), g(i[0], i[1]), g(i[1], i[2])) - w.d1x(i[0], i[1], j[0]) * w.d(s, t, [i[1], i[2]], q, j[0], j[1])
        }));
        v.push(rel(
            "chen",
            format!("{ei}c"),
            format!("d_b E_a^x{ns}{nt} = F_a^x{ns}{nt} + B_a^x{ns} (x)_a A^{nt}"),
            ei == 10,
            (4, 3),
            move |w, i, j| {
                let (p, q) = ([i[0], i[1]], [i[2], i[3]]);
                let g = |a, b| w.e(s, t, p, q, a, b);
                dd(g(j[0], j[2]), g(j[0], j[1]), g(j[1], j[2]))
                    - w.f(s, t, p, q, [j[0], j[1], j[2]])
                    - w.get(F::B(w.a, s), p[0], p[1], j[0], j[1]) * w.get(F::A(t), q[0], q[1], j[1], j[2])
            },
        ));
    }
    v
}

fn ghij_relations<'r>() -> Vec<Relation<'r>> {
    use FieldId as F;
    vec![
        rel("ghij", "1a", "d_a G_a = 0", false, (3, 2), |w, i, j| {
            let g = |p, q| w.get(F::G(w.a), p, q, j[0], j[1]);
            dd(g(i[0], i[2]), g(i[0], i[1]), g(i[1], i[2]))
        }),
        rel("ghij", "1b", "d_a I_b = 0", false, (3, 2), |w, i, j| {
            let g = |p, q| w.get(F::I(w.b_dir()), p, q, j[0], j[1]);
            dd(g(i[0], i[2]), g(i[0], i[1]), g(i[1], i[2]))
        }),
        rel("ghij", "2", "d_a H_a = d_a x G_a", true, (3, 2), |w, i, j| {
            let g = |p, q| w.get(F::H(w.a), p, q, j[0], j[1]);
            dd(g(i[0], i[2]), g(i[0], i[1]), g(i[1], i[2])) - w.d1x(i[0], i[1], j[0]) * w.get(F::G(w.a), i[1], i[2], j[0], j[1])
        }),
        rel("ghij", "3", "d_a J_a = d_a x I_b", false, (3, 2), |w, i, j| {
            let g = |p, q| w.get(F::J(w.a), p, q, j[0], j[1]);
            dd(g(i[0], i[2]), g(i[0], i[1]), g(i[1], i[2])) - w.d1x(i[0], i[1], j[0]) * w.get(F::I(w.b_dir()), i[1], i[2], j[0], j[1])
        }),
        rel("ghij", "4", "I_a = B_a^xx + C^xx", false, (2, 2), |w, i, j| {
            let g = |id| w.get(id, i[0], i[1], j[0], j[1]);
            g(F::I(w.a)) - g(F::B(w.a, Sig::X)) - g(F::C(Sig::X, Sig::X))
        }),
        rel("ghij", "5a", "A^w = dx^2/2 - x A^x - B_1^xx - B_2^xx - C^xx", false, (2, 2), |w, i, j| {
            let g = |id| w.get(id, i[0], i[1], j[0], j[1]);
            g(F::A(Sig::W)) - 0.5 * w.dx2(i[0], i[1], j[0], j[1])
                + w.v(i[0], j[0]) * g(F::A(Sig::X))
                + g(F::B(Dir::One, Sig::X))
                + g(F::B(Dir::Two, Sig::X))
                + g(F::C(Sig::X, Sig::X))
        }),
        rel("ghij", "5b", "A^w = G_a - I_b", true, (2, 2), |w, i, j| {
            let g = |id| w.get(id, i[0], i[1], j[0], j[1]);
            g(F::A(Sig::W)) - g(F::G(w.a)) + g(F::I(w.b_dir()))
        }),
        rel("ghij", "6", "B_a^xw = H_a - J_a", false, (2, 2), |w, i, j| {
            let g = |id| w.get(id, i[0], i[1], j[0], j[1]);
            g(F::B(w.a, Sig::W)) - g(F::H(w.a)) + g(F::J(w.a))
        }),
    ]
}

/// Column families: the view's second direction `c` is integrated.
fn klmno_relations<'r>() -> Vec<Relation<'r>> {
    use FieldId as F;
    let d2 = |w: &View, id: FieldId, i: &[usize], j: &[usize]| {
        let g = |p, q| w.get(id, i[0], i[1], p, q);
        dd(g(j[0], j[2]), g(j[0], j[1]), g(j[1], j[2]))
    };
    vec![
        rel("klmno", "1", "d_c K_c = dx (x)_c dx", true, (2, 3), move |w, i, j| {
            d2(w, F::K(w.b_dir()), i, j) - w.dx(i[0], i[1], j[0], j[1]) * w.dx(i[0], i[1], j[1], j[2])
        }),
        rel("klmno", "2", "d_c L_c = 0", false, (2, 3), move |w, i, j| d2(w, F::L(w.b_dir()), i, j)),
        rel("klmno", "3", "d_c M_c = d_c x L_c", false, (2, 3), move |w, i, j| {
            d2(w, F::M(w.b_dir()), i, j) - w.d2x(i[0], j[0], j[1]) * w.get(F::L(w.b_dir()), i[0], i[1], j[1], j[2])
        }),
        rel("klmno", "4", "d_c N_c = dx (x)_c G_c", true, (2, 3), move |w, i, j| {
            d2(w, F::N(w.b_dir()), i, j) - w.dx(i[0], i[1], j[0], j[1]) * w.get(F::G(w.b_dir()), i[0], i[1], j[1], j[2])
        }),
        rel("klmno", "5", "d_c O_c = dx (x)_c L_c", true, (2, 3), move |w, i, j| {
            d2(w, F::O(w.b_dir()), i, j) - w.dx(i[0], i[1], j[0], j[1]) * w.get(F::L(w.b_dir()), i[0], i[1], j[1], j[2])
        }),
    ]
}

fn pq_relations<'r>() -> Vec<Relation<'r>> {
    use FieldId as F;
    vec![
        rel("pq", "1", "d_c P_c = d_c x (x) d_c x", false, (1, 3), |w, i, j| {
            let g = |p, q| w.p(i[0], p, q);
            dd(g(j[0], j[2]), g(j[0], j[1]), g(j[1], j[2])) - w.d2x(i[0], j[0], j[1]) * w.d2x(i[0], j[1], j[2])
        }),
        rel("pq", "2", "d_a P_c = B_c^xx + Q_c", false, (2, 2), |w, i, j| {
            let c = w.b_dir();
            w.p(i[1], j[0], j[1]) - w.p(i[0], j[0], j[1]) - w.get(F::B(c, Sig::X), i[0], i[1], j[0], j[1]) - w.get(F::Q(c), i[0], i[1], j[0], j[1])
        }),
        rel("pq", "3", "d_c Q_c = dx (x)_c d_c x", true, (2, 3), |w, i, j| {
            let g = |p, q| w.get(F::Q(w.b_dir()), i[0], i[1], p, q);
            dd(g(j[0], j[2]), g(j[0], j[1]), g(j[1], j[2])) - w.dx(i[0], i[1], j[0], j[1]) * w.d2x(i[1], j[1], j[2])
        }),
        rel("pq", "4", "d_a x P_c = d_a x Q_c + H_c - T_c", false, (2, 2), |w, i, j| {
            let c = w.b_dir();
            let u = w.d1x(i[0], i[1], j[0]);
            let g = |id| w.get(id, i[0], i[1], j[0], j[1]);
            u * w.p(i[1], j[0], j[1]) - u * g(F::Q(c)) - g(F::H(c)) + g(F::T(c))
        }),
        rel("pq", "5", "d_a x d_c x = G_c - Q_c", false, (2, 2), |w, i, j| {
            let c = w.b_dir();
            let g = |id| w.get(id, i[0], i[1], j[0], j[1]);
            w.d1x(i[0], i[1], j[0]) * w.d2x(i[1], j[0], j[1]) - g(F::G(c)) + g(F::Q(c))
        }),
    ]
}

fn binom(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, m| acc * (n - m) as f64 / (m + 1) as f64)
}

pub fn verify_chen(x_bundle: &RoughSheet, x: &SheetSample, tol: f64) -> Result<ChenReport> {
    verify_chen_with(x_bundle, x, tol, &VerifyOptions::default())
}

/// Checks every relation in both views. Fails only on grid mismatch; relation
/// failures are carried in the report.
pub fn verify_chen_with(bundle: &RoughSheet, x: &SheetSample, tol: f64, opts: &VerifyOptions) -> Result<ChenReport> {
    if bundle.grid() != x.grid() {
        return Err(Error::Shape("bundle and sheet live on different grids".into()));
    }
    if !(tol >= 0.0) {
        return Err(Error::Param(format!("tolerance {tol} must be non-negative")));
    }
    let mut rels = chen_relations();
    rels.extend(ghij_relations());
    rels.extend(klmno_relations());
    rels.extend(pq_relations());
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut out = Vec::new();
    for a in [Dir::One, Dir::Two] {
        let view = View { x: bundle, y: x, a };
        let (n_i, n_j) = match a {
            Dir::One => x.shape(),
            Dir::Two => (x.shape().1, x.shape().0),
        };
        for r in &rels {
            let (ki, kj) = r.k;
            let mut best = (0.0f64, Vec::new(), Vec::new());
            let mut count = 0usize;
            let mut visit = |i: &[usize], j: &[usize]| {
                let v = (r.f)(&view, i, j).abs();
                count += 1;
                // NaN residuals are always reported.
                if v > best.0 || (v.is_nan() && !best.0.is_nan()) {
                    best = (v, i.to_vec(), j.to_vec());
                }
            };
            if binom(n_i, ki) * binom(n_j, kj) <= opts.max_exhaustive as f64 {
                for_each_increasing(n_i, ki, |i| for_each_increasing(n_j, kj, |j| visit(i, j)));
            } else {
                for _ in 0..opts.samples {
                    let mut i = sample(&mut rng, n_i, ki).into_vec();
                    let mut j = sample(&mut rng, n_j, kj).into_vec();
                    i.sort_unstable();
                    j.sort_unstable();
                    visit(&i, &j);
                }
            }
            let (res, bi, bj) = best;
            let argmax = if a == Dir::One { (bi, bj) } else { (bj, bi) };
            out.push(RelationResult {
                group: r.group.into(),
                item: r.item.clone(),
                dir: a,
                statement: r.statement.clone(),
                corrected: r.corrected,
                max_residual: res,
                argmax,
                samples: count,
                pass: res <= tol,
            });
        }
    }
    let pass = out.iter().all(|r| r.pass);
    Ok(ChenReport { tol, relations: out, pass })
}
