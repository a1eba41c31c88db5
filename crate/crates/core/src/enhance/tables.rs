//! Cell tables of one orientation of a sampled sheet and the iterated-integral
//! kernels built on them.
//!
//! Kernels come in two families. "Row" kernels integrate along direction 1
//! of the table (B, D, E, F, G, H, I, J); "column" kernels integrate along
//! direction 2 (K, L, M, N, O, P, Q, T). The other orientation is obtained by
//! running the same kernel on the transposed table.
//!
//! With half weight `hw = 1/2` every point value inside a cell or on an edge
//! is the bilinear interpolant at its centre; `hw = 0` gives lower-left values.

use crate::grid::SheetSample;

/// Index of the cell measure: `X` is the cell increment, `W` the mixed measure.
pub(crate) const MX: usize = 0;
pub(crate) const MW: usize = 1;

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Tables {
    pub n1: usize,
    pub n2: usize,
    pub hw: f64,
    pub x: Vec<f64>,
    /// `x(i+1,j) - x(i,j)`, (n1-1) x n2.
    pub d1: Vec<f64>,
    /// `x(i,j+1) - x(i,j)`, n1 x (n2-1).
    pub d2: Vec<f64>,
    /// Edge values along direction 1, (n1-1) x n2.
    pub xs: Vec<f64>,
    /// Edge values along direction 2, n1 x (n2-1).
    pub xt: Vec<f64>,
    /// Cell values, (n1-1) x (n2-1).
    pub xc: Vec<f64>,
    /// Cell measures.
    pub m: [Vec<f64>; 2],
    /// `pre(i,j)` = sum of the measure over cells `[0,i) x [0,j)`, n1 x n2.
    pub pre: [Vec<f64>; 2],
    /// `cp(i,j)` = sum over cells `(i, [0,j))`, (n1-1) x n2.
    pub cp: [Vec<f64>; 2],
}

impl Tables {
    pub fn new(n1: usize, n2: usize, x: Vec<f64>, hw: f64) -> Self {
        debug_assert_eq!(x.len(), n1 * n2);
        let at = |i: usize, j: usize| x[i * n2 + j];
        let mut d1 = vec![0.0; (n1 - 1) * n2];
        let mut xs = vec![0.0; (n1 - 1) * n2];
        for i in 0..n1 - 1 {
            for j in 0..n2 {
                let d = at(i + 1, j) - at(i, j);
                d1[i * n2 + j] = d;
                xs[i * n2 + j] = at(i, j) + hw * d;
            }
        }
        let w2 = n2 - 1;
        let mut d2 = vec![0.0; n1 * w2];
        let mut xt = vec![0.0; n1 * w2];
        for i in 0..n1 {
            for j in 0..w2 {
                let d = at(i, j + 1) - at(i, j);
                d2[i * w2 + j] = d;
                xt[i * w2 + j] = at(i, j) + hw * d;
            }
        }
        let cells = (n1 - 1) * w2;
        let mut mx = vec![0.0; cells];
        let mut mw = vec![0.0; cells];
        let mut xc = vec![0.0; cells];
        for i in 0..n1 - 1 {
            for j in 0..w2 {
                let (a, b, c, d) = (at(i, j), at(i + 1, j), at(i, j + 1), at(i + 1, j + 1));
                let k = i * w2 + j;
                mx[k] = d - b - c + a;
                xc[k] = if hw == 0.0 { a } else { 0.25 * (a + b + c + d) };
                mw[k] = if hw == 0.0 { (b - a) * (c - a) } else { 0.25 * ((b - a) + (d - c)) * ((c - a) + (d - b)) };
            }
        }
        let prefix = |m: &[f64]| {
            let mut p = vec![0.0; n1 * n2];
            for i in 1..n1 {
                let mut row = 0.0;
                for j in 1..n2 {
                    row += m[(i - 1) * w2 + j - 1];
                    p[i * n2 + j] = p[(i - 1) * n2 + j] + row;
                }
            }
            p
        };
        let colprefix = |m: &[f64]| {
            let mut p = vec![0.0; (n1 - 1) * n2];
            for i in 0..n1 - 1 {
                for j in 1..n2 {
                    p[i * n2 + j] = p[i * n2 + j - 1] + m[i * w2 + j - 1];
                }
            }
            p
        };
        let pre = [prefix(&mx), prefix(&mw)];
        let cp = [colprefix(&mx), colprefix(&mw)];
        Self { n1, n2, hw, x, d1, d2, xs, xt, xc, m: [mx, mw], pre, cp }
    }

    pub fn from_sample(x: &SheetSample, hw: f64) -> Self {
        let (n1, n2) = x.shape();
        Self::new(n1, n2, x.values().to_vec(), hw)
    }

    pub fn transpose(&self) -> Self {
        let (n1, n2) = (self.n1, self.n2);
        let mut v = vec![0.0; n1 * n2];
        for i in 0..n1 {
            for j in 0..n2 {
                v[j * n1 + i] = self.x[i * n2 + j];
            }
        }
        Self::new(n2, n1, v, self.hw)
    }

    #[inline]
    pub fn x(&self, i: usize, j: usize) -> f64 {
        self.x[i * self.n2 + j]
    }
    #[inline]
    fn d1(&self, i: usize, j: usize) -> f64 {
        self.d1[i * self.n2 + j]
    }
    #[inline]
    fn d2(&self, i: usize, j: usize) -> f64 {
        self.d2[i * (self.n2 - 1) + j]
    }
    #[inline]
    fn xs(&self, i: usize, j: usize) -> f64 {
        self.xs[i * self.n2 + j]
    }
    #[inline]
    fn xt(&self, i: usize, j: usize) -> f64 {
        self.xt[i * (self.n2 - 1) + j]
    }
    #[inline]
    fn xc(&self, i: usize, j: usize) -> f64 {
        self.xc[i * (self.n2 - 1) + j]
    }
    #[inline]
    fn m(&self, s: usize, i: usize, j: usize) -> f64 {
        self.m[s][i * (self.n2 - 1) + j]
    }
    #[inline]
    fn pre(&self, s: usize, i: usize, j: usize) -> f64 {
        self.pre[s][i * self.n2 + j]
    }
    #[inline]
    fn cp(&self, s: usize, i: usize, j: usize) -> f64 {
        self.cp[s][i * self.n2 + j]
    }

    /// Sum of measure `s` over cells `[i1,i2) x [j1,j2)`.
    #[inline]
    pub fn box_sum(&self, s: usize, i1: usize, i2: usize, j1: usize, j2: usize) -> f64 {
        self.pre(s, i2, j2) - self.pre(s, i1, j2) - self.pre(s, i2, j1) + self.pre(s, i1, j1)
    }

    /// Sum over cells `(i, [j1,j2))`.
    #[inline]
    fn col_sum(&self, s: usize, i: usize, j1: usize, j2: usize) -> f64 {
        if s == MX {
            self.d1(i, j2) - self.d1(i, j1)
        } else {
            self.cp(s, i, j2) - self.cp(s, i, j1)
        }
    }

    /// Sum over cells `([i1,i2), j)`.
    #[inline]
    fn row_sum(&self, s: usize, i1: usize, i2: usize, j: usize) -> f64 {
        if s == MX {
            self.d2(i2, j) - self.d2(i1, j)
        } else {
            self.box_sum(s, i1, i2, j, j + 1)
        }
    }

    pub fn rect_dx(&self, i1: usize, i2: usize, j1: usize, j2: usize) -> f64 {
        self.x(i2, j2) - self.x(i1, j2) - self.x(i2, j1) + self.x(i1, j1)
    }

    pub fn a(&self, s: usize, i1: usize, i2: usize, j1: usize, j2: usize) -> f64 {
        if s == MX {
            self.rect_dx(i1, i2, j1, j2)
        } else {
            self.box_sum(s, i1, i2, j1, j2)
        }
    }

    /// `sum_i (x(s_i, t1) - x(s1, t1)) * [measure s of column i over [j1,j2)]`.
    pub fn b(&self, s: usize, i1: usize, i2: usize, j1: usize, j2: usize) -> f64 {
        let base = self.x(i1, j1);
        (i1..i2).map(|i| (self.xs(i, j1) - base) * self.col_sum(s, i, j1, j2)).sum()
    }

    /// Measure `s` over the part of `[i1, i+.] x [j1, j+.]` below-left of the
    /// centre of cell (i,j), with the cell's own contributions weighted.
    #[inline]
    fn inner(&self, s: usize, i1: usize, j1: usize, i: usize, j: usize) -> f64 {
        let hw = self.hw;
        self.box_sum(s, i1, i, j1, j) + hw * (self.box_sum(s, i1, i, j, j + 1) + self.cp(s, i, j) - self.cp(s, i, j1)) + hw * hw * self.m(s, i, j)
    }

    /// `sum_cells inner_s * m_t`.
    pub fn c(&self, s: usize, t: usize, i1: usize, i2: usize, j1: usize, j2: usize) -> f64 {
        let mut acc = 0.0;
        for i in i1..i2 {
            for j in j1..j2 {
                acc += self.inner(s, i1, j1, i, j) * self.m(t, i, j);
            }
        }
        acc
    }

    /// Split field with pairs `(i1,i2)`, `(i3,i4)` in direction 1.
    pub fn d(&self, s: usize, t: usize, p: [usize; 2], q: [usize; 2], j1: usize, j2: usize) -> f64 {
        let mut acc = 0.0;
        for j in j1..j2 {
            let inner = self.box_sum(s, p[0], p[1], j1, j) + self.hw * self.row_sum(s, p[0], p[1], j);
            acc += inner * self.row_sum(t, q[0], q[1], j);
        }
        acc
    }

    pub fn e(&self, s: usize, t: usize, p: [usize; 2], q: [usize; 2], j1: usize, j2: usize) -> f64 {
        let base = self.x(p[0], j1);
        let mut acc = 0.0;
        for j in j1..j2 {
            let mut inner = 0.0;
            for i in p[0]..p[1] {
                inner += (self.xs(i, j1) - base) * (self.cp(s, i, j) - self.cp(s, i, j1) + self.hw * self.m(s, i, j));
            }
            acc += inner * self.row_sum(t, q[0], q[1], j);
        }
        acc
    }

    pub fn f(&self, s: usize, t: usize, p: [usize; 2], q: [usize; 2], j1: usize, j2: usize, j3: usize) -> f64 {
        let base = self.x(p[0], j2) - self.x(p[0], j1);
        let mut acc = 0.0;
        for j in j2..j3 {
            let mut inner = 0.0;
            for i in p[0]..p[1] {
                let w = self.xs(i, j2) - self.xs(i, j1) - base;
                inner += w * (self.cp(s, i, j) - self.cp(s, i, j2) + self.hw * self.m(s, i, j));
            }
            acc += inner * self.row_sum(t, q[0], q[1], j);
        }
        -acc
    }

    pub fn g(&self, i1: usize, i2: usize, j1: usize, j2: usize) -> f64 {
        (i1..i2).map(|i| (self.xs(i, j2) - self.xs(i, j1)) * self.d1(i, j2)).sum()
    }

    pub fn h(&self, i1: usize, i2: usize, j1: usize, j2: usize) -> f64 {
        let base = self.x(i1, j1);
        (i1..i2).map(|i| (self.xs(i, j1) - base) * (self.xs(i, j2) - self.xs(i, j1)) * self.d1(i, j2)).sum()
    }

    /// Cell sum of `(x(centre) - x(s1, t_centre)) dx`.
    pub fn i(&self, i1: usize, i2: usize, j1: usize, j2: usize) -> f64 {
        let mut acc = 0.0;
        for j in j1..j2 {
            let base = self.xt(i1, j);
            for i in i1..i2 {
                acc += (self.xc(i, j) - base) * self.m(MX, i, j);
            }
        }
        acc
    }

    pub fn j(&self, i1: usize, i2: usize, j1: usize, j2: usize) -> f64 {
        let base = self.x(i1, j1);
        let mut acc = 0.0;
        for i in i1..i2 {
            let w = self.xs(i, j1) - base;
            let mut col = 0.0;
            for j in j1..j2 {
                col += (self.xc(i, j) - self.xs(i, j1)) * self.m(MX, i, j);
            }
            acc += w * col;
        }
        acc
    }

    /// Column kernels share the per-step quantities
    /// `u = x(s2,.) - x(s1,.)`, its edge value `ub`, step `du`,
    /// `vb = x(s1, t_edge) - x(s1, t1)`, `wb = ub - u(t1)` and `dz = d2 x(s2, .)`.
    #[inline]
    fn col_terms(&self, i1: usize, i2: usize, j1: usize, j: usize) -> [f64; 5] {
        let u1 = self.x(i2, j1) - self.x(i1, j1);
        let ub = self.xt(i2, j) - self.xt(i1, j);
        let du = self.d2(i2, j) - self.d2(i1, j);
        let vb = self.xt(i1, j) - self.x(i1, j1);
        [ub, du, vb, ub - u1, self.d2(i2, j)]
    }

    fn col_sum_of(&self, i1: usize, i2: usize, j1: usize, j2: usize, f: impl Fn([f64; 5]) -> f64) -> f64 {
        (j1..j2).map(|j| f(self.col_terms(i1, i2, j1, j))).sum()
    }

    pub fn k(&self, i1: usize, i2: usize, j1: usize, j2: usize) -> f64 {
        self.col_sum_of(i1, i2, j1, j2, |[_, du, _, wb, _]| wb * du)
    }

    pub fn l(&self, i1: usize, i2: usize, j1: usize, j2: usize) -> f64 {
        self.col_sum_of(i1, i2, j1, j2, |[ub, du, _, _, _]| ub * du)
    }

    pub fn m_field(&self, i1: usize, i2: usize, j1: usize, j2: usize) -> f64 {
        self.col_sum_of(i1, i2, j1, j2, |[ub, du, vb, _, _]| vb * ub * du)
    }

    pub fn n(&self, i1: usize, i2: usize, j1: usize, j2: usize) -> f64 {
        self.col_sum_of(i1, i2, j1, j2, |[ub, _, _, wb, dz]| wb * ub * dz)
    }

    pub fn o(&self, i1: usize, i2: usize, j1: usize, j2: usize) -> f64 {
        self.col_sum_of(i1, i2, j1, j2, |[ub, du, _, wb, _]| wb * ub * du)
    }

    pub fn q(&self, i1: usize, i2: usize, j1: usize, j2: usize) -> f64 {
        self.col_sum_of(i1, i2, j1, j2, |[_, _, _, wb, dz]| wb * dz)
    }

    pub fn t(&self, i1: usize, i2: usize, j1: usize, j2: usize) -> f64 {
        self.col_sum_of(i1, i2, j1, j2, |[_, _, vb, wb, dz]| vb * wb * dz)
    }

    /// `sum_j (x(s, t_edge) - x(s, t1)) d2 x(s, j)`, a (1,2)-field.
    pub fn p(&self, i: usize, j1: usize, j2: usize) -> f64 {
        let base = self.x(i, j1);
        (j1..j2).map(|j| (self.xt(i, j) - base) * self.d2(i, j)).sum()
    }
}
