mod common;

use proptest::prelude::*;
use rand::Rng;
use roughsheet::grid::Grid1D;
use roughsheet::phi::Phi;
use roughsheet::sewing1d::*;
use roughsheet::stats::convergence_order;
use roughsheet::Error;

fn unit(level: u32) -> Grid1D {
    Grid1D::dyadic(level, 1.0).unwrap()
}

fn func(g: &Grid1D, f: impl Fn(f64) -> f64) -> Inc {
    Inc::function(g.clone(), g.points().iter().map(|&t| f(t)).collect()).unwrap()
}

fn pair(g: &Grid1D, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Inc {
    let p = g.points().to_vec();
    Inc::from_fn(g.clone(), 2, move |i| f(p[i[0]], p[i[1]])).unwrap()
}

#[test]
fn coboundary_examples() {
    let g = unit(1);
    let df = delta1d(&func(&g, |t| t)).unwrap();
    assert_eq!(df.eval2(1, 2), 0.5);
    assert_eq!(df.eval2(0, 2), 1.0);
    let ddf = delta1d(&df).unwrap();
    assert_eq!(ddf.eval(&[0, 1, 2]), 0.0);
    // d of (t - s)^2 is 2 (u - s)(t - u).
    let g = unit(3);
    let h = pair(&g, |s, t| (t - s).powi(2));
    let dh = delta1d(&h).unwrap();
    let p = g.points();
    roughsheet::grid::for_each_increasing(p.len(), 3, |i| {
        let want = 2.0 * (p[i[1]] - p[i[0]]) * (p[i[2]] - p[i[1]]);
        assert!((dh.eval(i) - want).abs() < 1e-15);
    });
    assert!(matches!(delta1d(&dh), Err(Error::Arity(_))));
}

#[test]
fn holder_norm_examples() {
    let g = unit(4);
    let df = delta1d(&func(&g, |t| t)).unwrap();
    assert!((holder_norm_1d(&df, 1.0).unwrap().norm - 1.0).abs() < 1e-15);
    assert_eq!(holder_norm_1d(&Inc::zeros(g.clone(), 2).unwrap(), 0.5).unwrap().norm, 0.0);
    let h = pair(&g, |s, t| (t - s).powf(1.5));
    // (t - s)^{1/2} is largest on the whole interval.
    let rep = holder_norm_1d(&h, 1.0).unwrap();
    assert!((rep.norm - 1.0).abs() < 1e-15);
    assert_eq!(rep.argmax, vec![0, 16]);
    let cells = holder_norm_1d_filtered(&h, 1.0, |s, t| t == s + 1).unwrap();
    assert!((cells.norm - g.max_spacing().sqrt()).abs() < 1e-15);
    assert!(holder_norm_1d(&h, 0.0).is_err());
}

#[test]
fn holder_c3_examples() {
    let g = unit(3);
    assert_eq!(holder_norm_c3(&Inc::zeros(g.clone(), 3).unwrap(), 1.0, 1.0).unwrap().norm, 0.0);
    let df = delta1d(&func(&g, |t| t)).unwrap();
    let h = product_22(&df, &df).unwrap();
    assert!((holder_norm_c3(&h, 1.0, 1.0).unwrap().norm - 1.0).abs() < 1e-14);
    // Random 2-increment: the reported sup matches an exhaustive scan.
    let mut r = common::rng(4);
    let vals: Vec<f64> = (0..81).map(|_| r.gen_range(-1.0..1.0)).collect();
    let a = Inc::from_fn(g.clone(), 2, move |i| vals[i[0] * 9 + i[1]]).unwrap();
    let da = delta1d(&a).unwrap();
    let rep = holder_norm_c3(&da, 0.6, 0.7).unwrap();
    let p = g.points();
    let mut best = 0.0f64;
    roughsheet::grid::for_each_increasing(9, 3, |i| {
        best = best.max(da.eval(i).abs() / ((p[i[1]] - p[i[0]]).powf(0.6) * (p[i[2]] - p[i[1]]).powf(0.7)));
    });
    assert_eq!(rep.norm, best);
}

#[test]
fn sewing_sum_examples() {
    let g = unit(8);
    let f = func(&g, |t| (3.0 * t).sin());
    let df = delta1d(&f).unwrap();
    assert_eq!(sewing_sum_1d(&df, 3, 200).unwrap(), df.eval2(3, 200));
    let a = pair(&g, |s, t| s * (t - s));
    let v = sewing_sum_1d(&a, 0, 256).unwrap();
    assert!((v - 0.5).abs() <= 0.5 / 256.0 + 1e-14);
    assert_eq!(sewing_sum_1d(&Inc::zeros(g.clone(), 2).unwrap(), 0, 256).unwrap(), 0.0);
    assert!(matches!(sewing_sum_1d(&a, 5, 2), Err(Error::IndexOrder(_))));
    // Additive under concatenation.
    let (x, y) = (sewing_sum_1d(&a, 10, 90).unwrap(), sewing_sum_1d(&a, 90, 200).unwrap());
    assert!((x + y - sewing_sum_1d(&a, 10, 200).unwrap()).abs() < 1e-14);
}

#[test]
fn lambda_delta_examples() {
    let g = unit(5);
    let df = delta1d(&func(&g, |t| t * t)).unwrap();
    let r = lambda_delta_1d(&df).unwrap();
    assert_eq!(holder_norm_1d(&r.residual, 1.0).unwrap().norm, 0.0);
    let a = pair(&g, |s, t| s * s * (t - s));
    let r = lambda_delta_1d(&a).unwrap();
    let p = g.points().to_vec();
    for (s, t) in [(0, 32), (5, 17), (4, 5)] {
        let left: f64 = (s..t).map(|i| p[i] * p[i] * (p[i + 1] - p[i])).sum();
        assert!((r.residual.eval2(s, t) - (a.eval2(s, t) - left)).abs() < 1e-14);
    }
    assert!(r.warning.is_none());
}

#[test]
fn contraction_on_random_increments() {
    let mut r = common::rng(6);
    for case in 0..100 {
        let level = 3 + case % 3;
        let g = unit(level as u32);
        let n = g.len();
        let mu = r.gen_range(1.01..=2.0);
        let vals: Vec<f64> = (0..n * n).map(|_| r.gen_range(-1.0..1.0)).collect();
        let p = g.points().to_vec();
        let c = r.gen_range(0.1..2.0);
        let a = Inc::from_fn(g.clone(), 2, move |i| vals[i[0] * n + i[1]] * (p[i[1]] - p[i[0]]).powf(c)).unwrap();
        let rep = contraction_1d(&a, mu).unwrap();
        assert!(rep.ratio <= 1.05, "case {case}: mu {mu}, ratio {}", rep.ratio);
    }
    let g = unit(3);
    assert!(contraction_1d(&Inc::zeros(g, 2).unwrap(), 1.0).is_err());
}

#[test]
fn young_integral_examples() {
    for (level, tol) in [(8, 1e-2), (12, 1e-3)] {
        let g = unit(level);
        let t = g.points().to_vec();
        let v = young_integral_1d(&g, &t, &t, 0, g.len() - 1).unwrap();
        assert!((v - 0.5).abs() < tol);
    }
    let g = unit(6);
    let t = g.points().to_vec();
    let sq: Vec<f64> = t.iter().map(|x| x * x).collect();
    let c = vec![2.5; g.len()];
    assert!((young_integral_1d(&g, &c, &sq, 4, 40).unwrap() - 2.5 * (sq[40] - sq[4])).abs() < 1e-14);
    let v = young_integral_1d(&g, &sq, &t, 0, 64).unwrap();
    assert!((v - 1.0 / 3.0).abs() < 1.0 / 64.0);
    assert!(young_integral_1d(&g, &sq[..10], &t, 0, 5).is_err());
}

#[test]
fn young_integral_converges_at_first_order() {
    let (mut hs, mut errs) = (Vec::new(), Vec::new());
    for level in 5..=8 {
        let g = unit(level);
        let f: Vec<f64> = g.points().iter().map(|t| (2.0 * t).cos()).collect();
        let h: Vec<f64> = g.points().iter().map(|t| t * t * t).collect();
        // int_0^1 cos(2t) 3t^2 dt
        let exact = 3.0 * (2.0f64.sin() / 4.0 + 2.0f64.cos() / 2.0);
        errs.push((young_integral_1d(&g, &f, &h, 0, g.len() - 1).unwrap() - exact).abs());
        hs.push(g.max_spacing());
    }
    assert!(convergence_order(&hs, &errs, 1e-14).at_least(0.95), "{errs:?}");
}

#[test]
fn step2_rough_integral_examples() {
    let g = unit(10);
    let x = g.points().to_vec();
    let xs = x.clone();
    let area = Inc::from_fn(g.clone(), 2, move |i| (xs[i[1]] - xs[i[0]]).powi(2) / 2.0).unwrap();
    let v = rough_integral_step2_1d(&Phi::Id, &g, &x, &area, 0, 1024).unwrap();
    assert!((v - 0.5).abs() < 1e-4);
    let one = rough_integral_step2_1d(&Phi::Const(1.0), &g, &x, &area, 3, 700).unwrap();
    assert!((one - (x[700] - x[3])).abs() < 1e-14);
    let g = unit(6);
    let y: Vec<f64> = g.points().iter().map(|t| t * t).collect();
    let ys = y.clone();
    let area = Inc::from_fn(g.clone(), 2, move |i| (ys[i[1]] - ys[i[0]]).powi(2) / 2.0).unwrap();
    assert!((rough_integral_step2_1d(&Phi::Id, &g, &y, &area, 0, 64).unwrap() - 0.5).abs() < 1e-12);
    let bad = Inc::zeros(g.clone(), 2).unwrap();
    assert!(matches!(rough_integral_step2_1d(&Phi::Id, &g, &y, &bad, 0, 64), Err(Error::Relation(_))));
}

proptest! {
    #[test]
    fn double_coboundary_is_exactly_zero(seed in 0u64..10_000, n in 3usize..9) {
        let mut r = common::rng(seed);
        let g = common::jitter_grid(&mut r, n, 1.0);
        let vals: Vec<f64> = (0..n * n).map(|_| r.gen_range(-1.0..1.0)).collect();
        let a = Inc::from_fn(g.clone(), 2, move |i| vals[i[0] * n + i[1]]).unwrap();
        let f = Inc::function(g, (0..n).map(|_| r.gen_range(-1.0..1.0)).collect()).unwrap();
        let ddf = delta1d(&delta1d(&f).unwrap()).unwrap();
        let da = delta1d(&a).unwrap();
        let mut ok = true;
        roughsheet::grid::for_each_increasing(n, 3, |i| ok &= ddf.eval(i) == 0.0 && da.eval(i).is_finite());
        prop_assert!(ok);
    }

    #[test]
    fn sewing_of_coboundary_telescopes_bit_exactly(seed in 0u64..10_000, s in 0usize..10, len in 0usize..10) {
        let mut r = common::rng(seed);
        let g = common::jitter_grid(&mut r, 20, 1.0);
        let f = Inc::function(g, (0..20).map(|_| r.gen_range(-5.0..5.0)).collect()).unwrap();
        let v = f.function_values().unwrap();
        let df = delta1d(&f).unwrap();
        prop_assert_eq!(sewing_sum_1d(&df, s, s + len).unwrap().to_bits(), (v[s + len] - v[s]).to_bits());
    }
}
