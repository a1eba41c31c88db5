//! Tensor grids, sampled sheets and the increment-field abstraction.
//!
//! Increment fields are addressed by grid *indices*, never by coordinates.
//! A (k,l)-field takes k indices in direction 1 and l in direction 2.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest dyadic level accepted by grid constructors.
pub const MAX_LEVEL: u32 = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    points: Vec<f64>,
}

impl Grid1D {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Grid("need at least 2 points".into()));
        }
        if points[0] != 0.0 {
            return Err(Error::Grid("first point must be 0".into()));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::Grid("non-finite grid point".into()));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Grid("points must be strictly increasing".into()));
        }
        Ok(Self { points })
    }

    /// `n` equal intervals over `[0, t_max]`; the last point is exactly `t_max`.
    pub fn uniform(n: usize, t_max: f64) -> Result<Self> {
        if n == 0 || !(t_max > 0.0) || !t_max.is_finite() {
            return Err(Error::Grid(format!("uniform grid needs n >= 1 and T > 0 (n={n}, T={t_max})")));
        }
        let mut pts: Vec<f64> = (0..=n).map(|i| t_max * i as f64 / n as f64).collect();
        pts[n] = t_max;
        Self::new(pts)
    }

    pub fn dyadic(level: u32, t_max: f64) -> Result<Self> {
        if level == 0 || level > MAX_LEVEL {
            return Err(Error::Grid(format!("level {level} outside 1..={MAX_LEVEL}")));
        }
        Self::uniform(1usize << level, t_max)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn t_max(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    #[inline]
    pub fn at(&self, i: usize) -> f64 {
        self.points[i]
    }

    pub fn max_spacing(&self) -> f64 {
        self.points.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Every `stride`-th point; the stride must divide the interval count.
    pub fn subsample(&self, stride: usize) -> Result<Self> {
        let n = self.len() - 1;
        if stride == 0 || n % stride != 0 {
            return Err(Error::Grid(format!("stride {stride} does not divide {n}")));
        }
        Self::new(self.points.iter().step_by(stride).copied().collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub g1: Grid1D,
    pub g2: Grid1D,
}

impl Grid2D {
    pub fn new(g1: Grid1D, g2: Grid1D) -> Self {
        Self { g1, g2 }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.g1.len(), self.g2.len())
    }

    pub fn dir(&self, d: Dir) -> &Grid1D {
        match d {
            Dir::One => &self.g1,
            Dir::Two => &self.g2,
        }
    }

    pub fn transpose(&self) -> Self {
        Self { g1: self.g2.clone(), g2: self.g1.clone() }
    }

    pub fn full_box(&self) -> Rect {
        Rect { i1: 0, i2: self.g1.len() - 1, j1: 0, j2: self.g2.len() - 1 }
    }

    pub fn subsample(&self, stride: usize) -> Result<Self> {
        Ok(Self { g1: self.g1.subsample(stride)?, g2: self.g2.subsample(stride)? })
    }
}

/// Tensor dyadic grid with `2^n_levels + 1` points per direction.
pub fn make_dyadic_grid(n_levels: u32, t1: f64, t2: f64) -> Result<Grid2D> {
    Ok(Grid2D::new(Grid1D::dyadic(n_levels, t1)?, Grid1D::dyadic(n_levels, t2)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dir {
    One,
    Two,
}

impl Dir {
    pub fn other(self) -> Dir {
        match self {
            Dir::One => Dir::Two,
            Dir::Two => Dir::One,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Dir::One => 1,
            Dir::Two => 2,
        }
    }

    pub fn from_index(a: usize) -> Result<Dir> {
        match a {
            1 => Ok(Dir::One),
            2 => Ok(Dir::Two),
            _ => Err(Error::Param(format!("direction must be 1 or 2, got {a}"))),
        }
    }
}

impl fmt::Display for Dir {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

/// Index rectangle `[i1,i2] x [j1,j2]` with `i1 <= i2`, `j1 <= j2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub i1: usize,
    pub i2: usize,
    pub j1: usize,
    pub j2: usize,
}

impl Rect {
    pub fn new(i1: usize, i2: usize, j1: usize, j2: usize) -> Result<Self> {
        if i1 > i2 || j1 > j2 {
            return Err(Error::IndexOrder(format!("box ({i1},{i2})x({j1},{j2})")));
        }
        Ok(Self { i1, i2, j1, j2 })
    }

    pub fn check_in(&self, grid: &Grid2D) -> Result<()> {
        let (n1, n2) = grid.shape();
        if self.i2 >= n1 || self.j2 >= n2 {
            return Err(Error::Shape(format!("box {self:?} outside {n1}x{n2} grid")));
        }
        Ok(())
    }

    pub fn transpose(&self) -> Self {
        Self { i1: self.j1, i2: self.j2, j1: self.i1, j2: self.i2 }
    }

    pub fn s(&self) -> [usize; 2] {
        [self.i1, self.i2]
    }

    pub fn t(&self) -> [usize; 2] {
        [self.j1, self.j2]
    }
}

/// Values of a sheet at the nodes of a tensor grid, row-major in direction 1.
#[derive(Clone, Debug, PartialEq)]
pub struct SheetSample {
    grid: Grid2D,
    values: Vec<f64>,
}

impl SheetSample {
    pub fn from_values(grid: Grid2D, values: Vec<f64>) -> Result<Self> {
        let (n1, n2) = grid.shape();
        if values.len() != n1 * n2 {
            return Err(Error::Shape(format!("{} values for a {n1}x{n2} grid", values.len())));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(k / n2, k % n2));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid2D) -> Self {
        let (n1, n2) = grid.shape();
        Self { grid, values: vec![0.0; n1 * n2] }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn shape(&self) -> (usize, usize) {
        self.grid.shape()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.g2.len() + j]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_values(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::Shape("sheets live on different grids".into()));
        }
        let v = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Self::from_values(self.grid.clone(), v)
    }

    pub fn transpose(&self) -> Self {
        let (n1, n2) = self.shape();
        let mut v = vec![0.0; n1 * n2];
        for i in 0..n1 {
            for j in 0..n2 {
                v[j * n1 + i] = self.values[i * n2 + j];
            }
        }
        Self { grid: self.grid.transpose(), values: v }
    }

    pub fn subsample(&self, stride: usize) -> Result<Self> {
        let grid = self.grid.subsample(stride)?;
        let (m1, m2) = grid.shape();
        let mut v = Vec::with_capacity(m1 * m2);
        for i in 0..m1 {
            for j in 0..m2 {
                v.push(self.get(i * stride, j * stride));
            }
        }
        Ok(Self { grid, values: v })
    }

    /// Rectangular increment `x22 - x12 - x21 + x11`.
    pub fn rect_increment(&self, r: &Rect) -> f64 {
        self.get(r.i2, r.j2) - self.get(r.i1, r.j2) - self.get(r.i2, r.j1) + self.get(r.i1, r.j1)
    }

    pub fn as_field(&self) -> BiIncRef {
        Arc::new(SheetField(self.clone()))
    }

    pub fn save_shs(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_shs(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn load_shs(path: impl AsRef<Path>) -> Result<Self> {
        let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read_shs(&mut f)
    }

    pub fn write_shs(&self, w: &mut impl Write) -> Result<()> {
        let header = ShsHeader {
            format: "shs".into(),
            version: SHS_VERSION,
            t1: self.grid.g1.t_max(),
            t2: self.grid.g2.t_max(),
            g1: self.grid.g1.points().to_vec(),
            g2: self.grid.g2.points().to_vec(),
        };
        let h = serde_json::to_vec(&header)?;
        w.write_all(&(h.len() as u64).to_le_bytes())?;
        w.write_all(&h)?;
        write_f64s(w, &self.values)?;
        Ok(())
    }

    pub fn read_shs(r: &mut impl Read) -> Result<Self> {
        let h = read_header_block(r)?;
        let header: ShsHeader = serde_json::from_slice(&h)?;
        if header.format != "shs" {
            return Err(Error::Format(format!("unexpected format tag {:?}", header.format)));
        }
        if header.version != SHS_VERSION {
            return Err(Error::Version { found: header.version, expected: SHS_VERSION });
        }
        let grid = Grid2D::new(Grid1D::new(header.g1)?, Grid1D::new(header.g2)?);
        if grid.g1.t_max() != header.t1 || grid.g2.t_max() != header.t2 {
            return Err(Error::Format("T1/T2 disagree with grid points".into()));
        }
        let (n1, n2) = grid.shape();
        let values = read_f64s(r, n1 * n2)?;
        expect_eof(r)?;
        Self::from_values(grid, values)
    }
}

pub const SHS_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ShsHeader {
    format: String,
    version: u32,
    t1: f64,
    t2: f64,
    g1: Vec<f64>,
    g2: Vec<f64>,
}

/// Samples `f` at every node; fails on the first non-finite value.
pub fn sample_sheet(f: impl Fn(f64, f64) -> f64, grid: &Grid2D) -> Result<SheetSample> {
    let (n1, n2) = grid.shape();
    let mut v = Vec::with_capacity(n1 * n2);
    for i in 0..n1 {
        for j in 0..n2 {
            let y = f(grid.g1.at(i), grid.g2.at(j));
            if !y.is_finite() {
                return Err(Error::NonFinite(i, j));
            }
            v.push(y);
        }
    }
    SheetSample::from_values(grid.clone(), v)
}

pub(crate) fn write_f64s(w: &mut impl Write, v: &[f64]) -> Result<()> {
    let mut buf = Vec::with_capacity(v.len() * 8);
    for x in v {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub(crate) fn read_f64s(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; n * 8];
    r.read_exact(&mut buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Corrupt(format!("payload shorter than {n} values")),
        _ => Error::Io(e),
    })?;
    Ok(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

pub(crate) fn read_header_block(r: &mut impl Read) -> Result<Vec<u8>> {
    let mut len = [0u8; 8];
    r.read_exact(&mut len).map_err(|_| Error::Corrupt("missing header length".into()))?;
    let len = u64::from_le_bytes(len);
    if len > (1 << 30) {
        return Err(Error::Corrupt(format!("implausible header length {len}")));
    }
    let mut h = vec![0u8; len as usize];
    r.read_exact(&mut h).map_err(|_| Error::Corrupt("truncated header".into()))?;
    Ok(h)
}

pub(crate) fn expect_eof(r: &mut impl Read) -> Result<()> {
    let mut one = [0u8; 1];
    match r.read(&mut one)? {
        0 => Ok(()),
        _ => Err(Error::Corrupt("trailing bytes after payload".into())),
    }
}

/// A scalar (k,l)-increment field on a tensor grid.
///
/// `eval` returns an exact `0.0` whenever two contiguous indices coincide in
/// either direction; implementors only provide `eval_raw`.
pub trait BiIncrement: Send + Sync {
    fn arity(&self) -> (usize, usize);
    fn grid(&self) -> &Grid2D;
    fn eval_raw(&self, s: &[usize], t: &[usize]) -> f64;

    fn eval(&self, s: &[usize], t: &[usize]) -> f64 {
        debug_assert_eq!((s.len(), t.len()), self.arity());
        if has_contiguous_repeat(s) || has_contiguous_repeat(t) {
            return 0.0;
        }
        self.eval_raw(s, t)
    }

    /// Factors of a product-constructed field.
    fn as_product(&self) -> Option<(BiIncRef, BiIncRef)> {
        None
    }

    /// `Some(f)` when the field is exactly the full coboundary of a (1,1)-field `f`.
    fn as_full_coboundary(&self) -> Option<BiIncRef> {
        None
    }

    /// `Some((base, m1, m2))` when the field is `d1^m1 d2^m2 base`.
    fn as_delta(&self) -> Option<(BiIncRef, usize, usize)> {
        None
    }
}

pub type BiIncRef = Arc<dyn BiIncrement>;

#[inline]
pub fn has_contiguous_repeat(idx: &[usize]) -> bool {
    idx.windows(2).any(|w| w[0] == w[1])
}

/// A sheet viewed as a (1,1)-field.
pub struct SheetField(pub SheetSample);

impl BiIncrement for SheetField {
    fn arity(&self) -> (usize, usize) {
        (1, 1)
    }
    fn grid(&self) -> &Grid2D {
        self.0.grid()
    }
    fn eval_raw(&self, s: &[usize], t: &[usize]) -> f64 {
        self.0.get(s[0], t[0])
    }
}

/// Field given by a closure over index tuples.
pub struct FnField<F> {
    grid: Grid2D,
    arity: (usize, usize),
    f: F,
}

impl<F> FnField<F>
where
    F: Fn(&[usize], &[usize]) -> f64 + Send + Sync + 'static,
{
    pub fn new(grid: Grid2D, arity: (usize, usize), f: F) -> BiIncRef {
        Arc::new(Self { grid, arity, f })
    }
}

impl<F> BiIncrement for FnField<F>
where
    F: Fn(&[usize], &[usize]) -> f64 + Send + Sync,
{
    fn arity(&self) -> (usize, usize) {
        self.arity
    }
    fn grid(&self) -> &Grid2D {
        &self.grid
    }
    fn eval_raw(&self, s: &[usize], t: &[usize]) -> f64 {
        (self.f)(s, t)
    }
}

/// Entry cap for dense caches (8 bytes each).
pub const DENSE_ENTRY_LIMIT: usize = 1 << 22;

/// Dense table of a field over all index tuples, addressed in mixed radix.
#[derive(Clone)]
pub struct DenseField {
    grid: Grid2D,
    arity: (usize, usize),
    values: Arc<Vec<f64>>,
}

impl DenseField {
    pub fn entries_for(grid: &Grid2D, arity: (usize, usize)) -> Option<usize> {
        let (n1, n2) = grid.shape();
        let a = n1.checked_pow(arity.0 as u32)?;
        let b = n2.checked_pow(arity.1 as u32)?;
        a.checked_mul(b)
    }

    /// Materializes `field` when it fits under `limit` entries.
    pub fn materialize(field: &dyn BiIncrement, limit: usize) -> Option<Self> {
        let arity = field.arity();
        let grid = field.grid().clone();
        let total = Self::entries_for(&grid, arity).filter(|&n| n <= limit)?;
        let (n1, n2) = grid.shape();
        let mut values = Vec::with_capacity(total);
        let mut s = vec![0usize; arity.0];
        let mut t = vec![0usize; arity.1];
        for flat in 0..total {
            decode(flat, n1, n2, &mut s, &mut t);
            values.push(field.eval(&s, &t));
        }
        Some(Self { grid, arity, values: Arc::new(values) })
    }

    pub fn from_values(grid: Grid2D, arity: (usize, usize), values: Vec<f64>) -> Result<Self> {
        let n = Self::entries_for(&grid, arity).ok_or_else(|| Error::Shape("arity overflow".into()))?;
        if values.len() != n {
            return Err(Error::Corrupt(format!("dense field needs {n} values, got {}", values.len())));
        }
        Ok(Self { grid, arity, values: Arc::new(values) })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn offset(&self, s: &[usize], t: &[usize]) -> usize {
        let (n1, n2) = self.grid.shape();
        let mut k = 0usize;
        for &i in s {
            k = k * n1 + i;
        }
        for &j in t {
            k = k * n2 + j;
        }
        k
    }
}

fn decode(mut flat: usize, n1: usize, n2: usize, s: &mut [usize], t: &mut [usize]) {
    for j in t.iter_mut().rev() {
        *j = flat % n2;
        flat /= n2;
    }
    for i in s.iter_mut().rev() {
        *i = flat % n1;
        flat /= n1;
    }
}

impl BiIncrement for DenseField {
    fn arity(&self) -> (usize, usize) {
        self.arity
    }
    fn grid(&self) -> &Grid2D {
        &self.grid
    }
    fn eval_raw(&self, s: &[usize], t: &[usize]) -> f64 {
        self.values[self.offset(s, t)]
    }
}

/// Calls `f` on every strictly increasing k-tuple of indices in `0..n`.
pub fn for_each_increasing(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k == 0 {
        f(&[]);
        return;
    }
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut p = k;
        while p > 0 {
            p -= 1;
            if idx[p] < n - k + p {
                idx[p] += 1;
                for q in p + 1..k {
                    idx[q] = idx[q - 1] + 1;
                }
                break;
            }
            if p == 0 {
                return;
            }
        }
    }
}
