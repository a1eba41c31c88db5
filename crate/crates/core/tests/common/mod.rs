#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use roughsheet::grid::{BiIncRef, FnField, Grid1D, Grid2D, SheetSample};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Non-uniform grid with `n` points on [0, t].
pub fn jitter_grid(rng: &mut ChaCha8Rng, n: usize, t: f64) -> Grid1D {
    let mut steps: Vec<f64> = (1..n).map(|_| rng.gen_range(0.5..1.5)).collect();
    let total: f64 = steps.iter().sum();
    let mut acc = 0.0;
    let mut pts = vec![0.0];
    for s in steps.iter_mut() {
        acc += *s / total * t;
        pts.push(acc);
    }
    *pts.last_mut().unwrap() = t;
    Grid1D::new(pts).unwrap()
}

pub fn grid2(rng: &mut ChaCha8Rng, n1: usize, n2: usize) -> Grid2D {
    Grid2D::new(jitter_grid(rng, n1, 1.0), jitter_grid(rng, n2, 1.0))
}

pub fn random_sheet(rng: &mut ChaCha8Rng, grid: &Grid2D) -> SheetSample {
    let (n1, n2) = grid.shape();
    let v = (0..n1 * n2).map(|_| rng.gen_range(-1.0..1.0)).collect();
    SheetSample::from_values(grid.clone(), v).unwrap()
}

/// Dense random field of the given arity.
pub fn random_field(rng: &mut ChaCha8Rng, grid: &Grid2D, arity: (usize, usize)) -> BiIncRef {
    let (n1, n2) = grid.shape();
    let size = n1.pow(arity.0 as u32) * n2.pow(arity.1 as u32);
    let vals: Vec<f64> = (0..size).map(|_| rng.gen_range(-1.0..1.0)).collect();
    FnField::new(grid.clone(), arity, move |s: &[usize], t: &[usize]| {
        let mut k = 0;
        for &i in s {
            k = k * n1 + i;
        }
        for &j in t {
            k = k * n2 + j;
        }
        vals[k]
    })
}

/// Max |a - b| over all nondecreasing index tuples.
pub fn max_diff(a: &BiIncRef, b: &BiIncRef) -> f64 {
    assert_eq!(a.arity(), b.arity());
    let (n1, n2) = a.grid().shape();
    let (k, l) = a.arity();
    let mut worst = 0.0f64;
    for_each_nondecreasing(n1, k, &mut |s| {
        for_each_nondecreasing(n2, l, &mut |t| worst = worst.max((a.eval(s, t) - b.eval(s, t)).abs()));
    });
    worst
}

pub fn max_abs(a: &BiIncRef) -> f64 {
    let (n1, n2) = a.grid().shape();
    let (k, l) = a.arity();
    let mut worst = 0.0f64;
    for_each_nondecreasing(n1, k, &mut |s| {
        for_each_nondecreasing(n2, l, &mut |t| worst = worst.max(a.eval(s, t).abs()));
    });
    worst
}

pub fn for_each_nondecreasing(n: usize, k: usize, f: &mut dyn FnMut(&[usize])) {
    fn rec(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(n, k, i, cur, f);
            cur.pop();
        }
    }
    rec(n, k, 0, &mut Vec::new(), f)
}
