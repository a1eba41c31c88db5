mod common;

use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;
use roughsheet::enhance::{FieldId, Sig};
use roughsheet::error::Error;
use roughsheet::fbs::*;
use roughsheet::grid::{make_dyadic_grid, sample_sheet, FnField, Grid1D};
use roughsheet::phi::Phi;
use roughsheet::sewing1d::Inc;
use statrs::function::gamma::gamma;

fn params(alpha: f64, beta: f64, cutoff: f64) -> FbsParams {
    FbsParams::new(alpha, beta, cutoff, 11).unwrap()
}

#[test]
fn covariance_examples() {
    let b = params(0.5, 0.5, 16.0);
    assert_eq!(fbs_covariance(&b, (1.0, 1.0), (1.0, 1.0)).unwrap(), 1.0);
    let mut rng = common::rng(1);
    for _ in 0..200 {
        let (s, t, s2, t2): (f64, f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen(), rng.gen());
        let r = fbs_covariance(&b, (s, t), (s2, t2)).unwrap();
        assert!((r - s.min(s2) * t.min(t2)).abs() < 1e-14);
        let p = params(0.45, 0.4, 16.0);
        let d = fbs_covariance(&p, (s, t), (s, t)).unwrap();
        assert!((d - s.powf(0.9) * t.powf(0.8)).abs() < 1e-14);
        assert_eq!(fbs_covariance(&p, (s, t), (s2, t2)).unwrap(), fbs_covariance(&p, (s2, t2), (s, t)).unwrap());
    }
    assert!(matches!(fbs_covariance(&b, (1.5, 0.0), (0.0, 0.0)), Err(Error::Param(_))));
}

#[test]
fn covariance_is_psd() {
    let p = params(0.36, 0.45, 16.0);
    let pts: Vec<(f64, f64)> = (1..=5).flat_map(|i| (1..=5).map(move |j| (i as f64 / 5.0, j as f64 / 5.0))).collect();
    let m = nalgebra::DMatrix::from_fn(pts.len(), pts.len(), |a, b| fbs_covariance(&p, pts[a], pts[b]).unwrap());
    let ev = m.symmetric_eigen().eigenvalues;
    assert!(ev.iter().all(|&e| e > -1e-12), "{ev}");
}

#[test]
fn params_validation() {
    assert!(FbsParams::new(0.3, 0.4, 16.0, 0).is_err());
    assert!(FbsParams::new(0.4, 0.55, 16.0, 0).is_err());
    assert!(FbsParams::new(0.4, 0.4, 0.0, 0).is_err());
    let p = params(0.4, 0.4, 1.0);
    assert_eq!(p.modes, 16);
    let p = params(0.4, 0.4, 64.0);
    assert_eq!(p.modes, 512);
    assert_eq!(p.with_cutoff(16.0).unwrap().modes, 128);
    assert!(p.with_cutoff(16.01).is_err());
}

#[test]
fn spectral_constant_closed_form() {
    // int |e^{i xi} - 1|^2 |xi|^{-2h-1} = 2 pi / (Gamma(2h + 1) sin(pi h)).
    for h in [0.34, 0.4, 0.45, 0.5] {
        let exact = 2.0 * PI / (gamma(2.0 * h + 1.0) * (PI * h).sin());
        let c = spectral_constant(h).unwrap();
        assert!((c - exact).abs() < 1e-6 * exact, "h = {h}: {c} vs {exact}");
    }
    assert!((spectral_constant(0.5).unwrap() - 2.0 * PI).abs() < 1e-6);
}

#[test]
fn paths_vanish_on_axes_and_are_reproducible() {
    let g = make_dyadic_grid(4, 1.0, 1.0).unwrap();
    let p = params(0.45, 0.4, 8.0);
    let x = synthesize_xN(&p, &g).unwrap();
    assert_eq!(x, synthesize_xN(&p, &g).unwrap());
    let sampler = FbsSampler::new(&p, &g).unwrap();
    let y = sampler.sample(3).unwrap();
    assert_eq!(y, sampler.sample(3).unwrap());
    assert_ne!(y, sampler.sample(4).unwrap());
    for z in [&x, &y] {
        for k in 0..17 {
            assert_eq!(z.get(0, k), 0.0);
            assert_eq!(z.get(k, 0), 0.0);
        }
        assert!(z.values().iter().all(|v| v.is_finite()));
    }
    let other = FbsParams { seed: 12, ..p };
    assert_ne!(x, synthesize_xN(&other, &g).unwrap());
}

#[test]
fn spectral_and_factored_laws_agree() {
    let g = make_dyadic_grid(3, 1.0, 1.0).unwrap();
    let p = params(0.4, 0.45, 6.0);
    let model = SpectralSheetModel::new(&p, &g).unwrap();
    let sampler = FbsSampler::new(&p, &g).unwrap();
    assert_eq!(model.frequencies().len(), p.modes);
    for a in [(0, 0), (1, 3), (8, 8), (4, 7)] {
        for b in [(2, 5), (8, 8), (6, 1)] {
            let (u, v) = (model.covariance(a, b), sampler.covariance(a, b));
            assert!((u - v).abs() < 1e-12, "{u} {v}");
        }
    }
    // Empirical variance of the spectral synthesis at (1, 1).
    let n = 3000;
    let vals: Vec<f64> = (0..n).map(|k| model.synthesize(k).unwrap().get(8, 8).powi(2)).collect();
    let m = roughsheet::stats::mean_std(&vals);
    let exact = model.covariance((8, 8), (8, 8));
    assert!((m.mean - exact).abs() < 4.0 * m.std_err, "{} vs {exact}", m.mean);
}

#[test]
fn truncated_covariance_approaches_the_sheet() {
    let g = make_dyadic_grid(2, 1.0, 1.0).unwrap();
    let (pts, n) = (g.g1.points().to_vec(), 5);
    let mut prev = f64::INFINITY;
    for cutoff in [8.0, 32.0, 128.0] {
        let p = params(0.45, 0.4, cutoff);
        let s = FbsSampler::new(&p, &g).unwrap();
        let mut err = 0.0f64;
        for a in 0..n * n {
            for b in 0..n * n {
                let (i, j, k, l) = (a / n, a % n, b / n, b % n);
                let exact = fbs_covariance(&p, (pts[i], pts[j]), (pts[k], pts[l])).unwrap();
                err = err.max((s.covariance((i, j), (k, l)) - exact).abs());
            }
        }
        assert!(err < prev);
        prev = err;
    }
    assert!(prev < 0.03, "{prev}");
}

#[test]
fn brownian_unit_variance_large_cutoff() {
    let g = make_dyadic_grid(2, 1.0, 1.0).unwrap();
    let p = params(0.5, 0.5, 256.0);
    let s = FbsSampler::new(&p, &g).unwrap();
    let vals: Vec<f64> = (0..10_000).map(|k| s.sample(k).unwrap().get(4, 4).powi(2)).collect();
    let m = roughsheet::stats::mean_std(&vals);
    assert!((m.mean - 1.0).abs() < 3.0 * m.std_err, "{} +- {}", m.mean, m.std_err);
}

#[test]
fn brownian_sheet_cells() {
    let g = make_dyadic_grid(3, 1.0, 1.0).unwrap();
    let x = brownian_sheet(&g, 5, 0).unwrap();
    assert_eq!(x, brownian_sheet(&g, 5, 0).unwrap());
    assert_eq!(x.get(0, 4), 0.0);
    let vals: Vec<f64> = (0..4000).map(|k| brownian_sheet(&g, 5, k).unwrap().get(8, 4).powi(2)).collect();
    let m = roughsheet::stats::mean_std(&vals);
    assert!((m.mean - 0.5).abs() < 4.0 * m.std_err);
}

#[test]
fn coupled_truncations() {
    let g = make_dyadic_grid(3, 1.0, 1.0).unwrap();
    let p = params(0.45, 0.45, 32.0);
    let same = CoupledSampler::new(&p, &[16.0, 16.0], &g).unwrap().sample(0).unwrap();
    assert_eq!(same[0], same[1]);
    let c = CoupledSampler::new(&p, &[8.0, 16.0, 32.0], &g).unwrap();
    let xs = c.sample(2).unwrap();
    assert_eq!(xs.len(), 3);
    assert!(CoupledSampler::new(&p, &[16.0, 8.0], &g).is_err());
    // Marginal law at each cutoff is the truncated law.
    let n = 3000;
    for (k, cut) in [8.0, 32.0].into_iter().enumerate() {
        let idx = 2 * k;
        let vals: Vec<f64> = (0..n).map(|t| c.sample(t).unwrap()[idx].get(8, 8).powi(2)).collect();
        let m = roughsheet::stats::mean_std(&vals);
        let exact = FbsSampler::new(&p.with_cutoff(cut).unwrap(), &g).unwrap().covariance((8, 8), (8, 8));
        assert!((m.mean - exact).abs() < 4.0 * m.std_err, "cutoff {cut}: {} vs {exact}", m.mean);
    }
}

fn q_direct(xi: f64) -> Complex64 {
    // Q(xi, xi) by integrating the inner integral in closed form.
    let i = Complex64::i();
    let e = |a: f64| (i * a).exp();
    ((e(2.0 * xi) - 1.0) / (2.0 * i * xi) - (e(xi) - 1.0) / (i * xi)) / (i * xi)
}

#[test]
fn q_kernel_examples() {
    assert!((q_kernel(0.0, 0.0) - Complex64::new(0.5, 0.0)).norm() < 1e-15);
    for xi in [1.0, 2.5, -4.0] {
        let expect = Complex64::new(1.0 - f64::cos(xi), xi - f64::sin(xi)) / (xi * xi);
        assert!((q_kernel(xi, -xi) - expect).norm() < 1e-12, "xi = {xi}");
    }
    for xi in [1.0, -0.3, 7.0, 0.05] {
        assert!((q_kernel(xi, xi) - q_direct(xi)).norm() < 1e-12, "xi = {xi}");
    }
    // Near-coincident nodes go through the series.
    assert!((q_kernel(1e-9, 1e-9) - Complex64::new(0.5, 0.0)).norm() < 1e-8);
    assert!((q_kernel(5.0, -5.0 + 1e-12) - q_kernel(5.0, -5.0)).norm() < 1e-10);
}

#[test]
fn q_kernel_matches_quadrature() {
    let mut rng = common::rng(9);
    for _ in 0..100 {
        let (xi, eta) = (rng.gen_range(-12.0..12.0), rng.gen_range(-12.0..12.0));
        let (a, b) = (q_kernel(xi, eta), q_kernel_quadrature(xi, eta, 1e-13));
        assert!((a - b).norm() < 1e-10, "({xi}, {eta}): {a} vs {b}");
    }
}

proptest! {
    #[test]
    fn q_kernel_bounds(xi in -200.0f64..200.0, eta in -200.0f64..200.0) {
        let q = q_kernel(xi, eta).norm();
        prop_assert!(q <= q_bound(xi, eta) * (1.0 + 1e-12));
    }

    #[test]
    fn q_kernel_conjugate_symmetry(xi in -50.0f64..50.0, eta in -50.0f64..50.0) {
        prop_assert!((q_kernel(-xi, -eta) - q_kernel(xi, eta).conj()).norm() < 1e-13);
    }
}

#[test]
fn q_weighted_mass_converges() {
    // Each doubling of the square adds geometrically less mass.
    let r = q_weighted_mass(0.4, &[4, 8, 16, 32]).unwrap();
    let inc = r.increments();
    assert!(inc.iter().all(|&d| d > 0.0));
    assert!(inc.windows(2).all(|w| w[1] < 0.8 * w[0]), "{inc:?}");
    assert!(q_weighted_mass(0.2, &[2]).is_err());
    assert!(q_weighted_mass(0.4, &[4, 2]).is_err());
}

#[test]
fn grr_zero_field() {
    let g = make_dyadic_grid(3, 1.0, 1.0).unwrap();
    let f = FnField::new(g, (2, 2), |_, _| 0.0);
    let r = grr_functional(f.as_ref(), (0.7, 0.7), 4.0).unwrap();
    assert_eq!((r.u, r.holder, r.ratio), (0.0, Some(0.0), Some(0.0)));
    assert!(r.flagged.is_none());
}

fn st_field(level: u32) -> roughsheet::grid::BiIncRef {
    let g = make_dyadic_grid(level, 1.0, 1.0).unwrap();
    let p = g.g1.points().to_vec();
    let q = g.g2.points().to_vec();
    FnField::new(g, (2, 2), move |s: &[usize], t: &[usize]| (p[s[1]] - p[s[0]]) * (q[t[1]] - q[t[0]]))
}

#[test]
fn grr_of_st() {
    // iint |u - v|^g du dv = 2 / ((g + 1)(g + 2)), g = p (1 - a).
    let (a, p): (f64, f64) = (0.7, 4.0);
    let gam = p * (1.0 - a);
    let one = 2.0 / ((gam + 1.0) * (gam + 2.0));
    let exact = (one * one).powf(1.0 / p);
    let r = grr_functional(st_field(6).as_ref(), (a, a), p).unwrap();
    assert!((r.u - exact).abs() < 0.01 * exact, "{} vs {exact}", r.u);
    assert!(r.holder.unwrap() > 0.0 && r.ratio.unwrap() > 0.0);
    let low = grr_functional(st_field(4).as_ref(), (0.6, 0.6), 2.0).unwrap();
    assert!(low.u > 0.0 && low.holder.is_none());
    assert!(r.flagged.is_none());
    let coarse = grr_functional(st_field(5).as_ref(), (a, a), p).unwrap();
    assert!((coarse.u - r.u).abs() < 0.05 * r.u);
}

#[test]
fn grr_flags_non_summable_weights() {
    let r = grr_functional(st_field(4).as_ref(), (1.9, 1.9), 2.0).unwrap();
    assert!(r.flagged.is_some());
    let g = make_dyadic_grid(2, 1.0, 1.0).unwrap();
    assert!(grr_functional(FnField::new(g, (1, 1), |_, _| 0.0).as_ref(), (0.5, 0.5), 2.0).is_err());
    assert!(grr_functional(st_field(2).as_ref(), (0.5, 0.5), 1.0).is_err());
}

#[test]
fn grr_one_parameter() {
    let g = Grid1D::new((0..=64).map(|k| k as f64 / 64.0).collect()).unwrap();
    let pts = g.points().to_vec();
    let inc = Inc::from_fn(g, 2, move |i: &[usize]| pts[i[1]] - pts[i[0]]).unwrap();
    let (a, p): (f64, f64) = (0.75, 2.0);
    let gam = p * (1.0 - a);
    let exact = (2.0 / ((gam + 1.0) * (gam + 2.0))).powf(1.0 / p);
    let r = grr_functional_1d(&inc, a, p).unwrap();
    assert!((r.u - exact).abs() < 0.01 * exact, "{} vs {exact}", r.u);
}

#[test]
fn variance_scaling_small() {
    let p = params(0.45, 0.4, 64.0);
    let r = variance_scaling(&p, &VarianceOptions { samples: 800, ..Default::default() }).unwrap();
    assert_eq!(r.sides, vec![0.25, 0.5, 1.0]);
    for d in 0..2 {
        for (e, m) in r.empirical[d].iter().zip(&r.model[d]) {
            assert!((e.mean - m).abs() < 4.0 * e.std_err, "{} vs {m}", e.mean);
        }
        assert!((r.model_slopes[d] - r.expected[d]).abs() < 0.05);
    }
    assert!(r.to_csv().unwrap().lines().count() == 7);
    let few = VarianceOptions { min_cycles: 100.0, ..Default::default() };
    assert!(variance_scaling(&p, &few).is_err());
}

#[test]
fn convergence_study_small() {
    let p = params(0.45, 0.45, 32.0);
    let opts = ConvergenceOptions { level: 3, ..Default::default() };
    let r = convergence_study(&p, &[8.0, 8.0, 16.0, 32.0], 20, &opts).unwrap();
    assert!(r.warning.is_none());
    for f in &opts.fields {
        let s = r.series(*f);
        assert_eq!(s.len(), 3);
        assert_eq!(s[0].moment.mean, 0.0);
    }
    assert!(r.decreasing(FieldId::A(Sig::X)) || r.series(FieldId::A(Sig::X))[1].moment.mean > 0.0);
    let hot = ConvergenceOptions { level: 3, exponents: (0.45, 0.4), ..Default::default() };
    assert!(convergence_study(&p, &[8.0, 16.0], 2, &hot).unwrap().warning.is_some());
    assert!(r.to_csv().unwrap().starts_with("cutoff_lo"));
}

#[test]
fn stratonovich_residuals() {
    let g = make_dyadic_grid(5, 1.0, 1.0).unwrap();
    let x = sample_sheet(|s, t| s * t, &g).unwrap();
    assert!(stratonovich_residual(&Phi::Square, &x, 4).unwrap().abs() < 1e-3);
    let p = params(0.45, 0.45, 64.0);
    let x = FbsSampler::new(&p, &g).unwrap().sample(0).unwrap();
    assert!(stratonovich_residual(&Phi::Affine(2.0, -1.0), &x, 4).unwrap().abs() < 1e-12);
    let r = stratonovich_mc_check(&Phi::Cos, &p, &StratoOptions { levels: vec![4, 5], trials: 4, ..Default::default() }).unwrap();
    assert_eq!((r.accepted, r.rejected), (4, 0));
    assert!(r.row(5).unwrap().residual.mean < r.row(4).unwrap().residual.mean);
    let tight = StratoOptions { levels: vec![4], trials: 10, range: 1e-3, ..Default::default() };
    assert!(matches!(stratonovich_mc_check(&Phi::Cos, &p, &tight), Err(Error::Rejection { .. })));
}

#[test]
fn ito_constant_and_identity() {
    let one = ito_compare(&ItoOptions { level: 4, trials: 10, phi: Phi::Const(1.0), ..Default::default() }).unwrap();
    assert!(one.mean_square_difference.mean < 1e-28);
    let id = ito_compare(&ItoOptions { level: 4, trials: 30, ..Default::default() }).unwrap();
    assert!(id.difference_vanishes());
    assert!(id.c_ratio > 0.0 && id.c_ratio <= 4.0);
    assert!(ito_compare(&ItoOptions { trials: 1, ..Default::default() }).is_err());
}
