mod common;

use std::sync::Arc;

use proptest::prelude::*;
use roughsheet::enhance::*;
use roughsheet::grid::{make_dyadic_grid, sample_sheet, Dir, Rect, SheetSample};
use roughsheet::Error;

fn st(level: u32) -> SheetSample {
    let g = make_dyadic_grid(level, 1.0, 1.0).unwrap();
    sample_sheet(|s, t| s * t, &g).unwrap()
}

fn smooth(level: u32) -> SheetSample {
    let g = make_dyadic_grid(level, 1.0, 1.0).unwrap();
    sample_sheet(|s, t| (1.3 * s + 0.2).sin() * (1.0 + t * t) + 0.4 * s * s * t, &g).unwrap()
}

#[test]
fn closed_forms_for_st() {
    let x = st(6);
    let b = enhance_smooth(&x).unwrap();
    let full = x.grid().full_box();
    assert!((b.a(Sig::W, &full) - 0.25).abs() < 1e-12);
    assert!((b.c(Sig::X, Sig::X, &full) - 0.25).abs() < 1e-12);
    assert!((b.a(Sig::X, &full) - 1.0).abs() < 1e-12);
    let upper = Rect::new(0, 64, 32, 64).unwrap();
    assert!((b.b(Dir::One, Sig::X, &upper) - 0.125).abs() < 1e-12);
    assert!((b.get(FieldId::G(Dir::One), &upper) - 0.25).abs() < 1e-12);
}

#[test]
fn closed_forms_on_sub_boxes() {
    let x = st(8);
    let b = enhance_smooth(&x).unwrap();
    let h = 1.0 / 256.0;
    let r = Rect::new(40, 200, 17, 230).unwrap();
    let (s1, s2, t1, t2) = (40.0 * h, 200.0 * h, 17.0 * h, 230.0 * h);
    // G_1 = int (x(s,t2) - x(s,t1)) d_s x(s,t2)
    let g1 = (t2 - t1) * t2 * (s2 * s2 - s1 * s1) / 2.0;
    assert!((b.get(FieldId::G(Dir::One), &r) - g1).abs() < 1e-12);
    // H_1 = int (x(s,t1) - x(s1,t1)) (x(s,t2) - x(s,t1)) d_s x(s,t2)
    let prim = |s: f64| t1 * (t2 - t1) * t2 * (s * s * s / 3.0 - s1 * s * s / 2.0);
    let h1 = prim(s2) - prim(s1);
    assert!((b.get(FieldId::H(Dir::One), &r) - h1).abs() < 1e-5);
    // P_2(s; t1, t2) = int (x(s,t) - x(s,t1)) d_t x(s,t)
    let p2 = s1 * s1 * (t2 - t1) * (t2 - t1) / 2.0;
    assert!((b.p(Dir::Two, 40, [17, 230]) - p2).abs() < 1e-12);
    // L_2 is half the difference of squared column increments.
    let l2 = 0.5 * (s2 - s1) * (s2 - s1) * (t2 * t2 - t1 * t1);
    assert!((b.get(FieldId::L(Dir::Two), &r) - l2).abs() < 1e-12);
}

#[test]
fn grid_too_coarse() {
    let g = make_dyadic_grid(2, 1.0, 1.0).unwrap();
    let x = sample_sheet(|s, t| s * t, &g).unwrap();
    assert!(matches!(enhance_smooth(&x), Err(Error::Grid(_))));
    assert!(enhance_smooth(&st(3)).is_ok());
}

#[test]
fn bad_exponents_rejected() {
    let opts = EnhanceOptions { alpha: 0.3, ..Default::default() };
    assert!(matches!(enhance_smooth_with(&st(4), &opts), Err(Error::Param(_))));
}

#[test]
fn every_relation_holds_for_st() {
    let x = st(5);
    let b = enhance_smooth(&x).unwrap();
    let rep = verify_chen(&b, &x, 1e-12).unwrap();
    assert!(rep.pass, "{:?}", rep.failures().map(|r| (r.id(), r.max_residual)).collect::<Vec<_>>());
    // Both orientations of every numbered item.
    assert_eq!(rep.relations.len(), 2 * (1 + 1 + 4 + 4 * 6 + 8 + 5 + 5));
    for r in &rep.relations {
        assert!(r.samples > 0);
    }
}

#[test]
fn every_relation_holds_for_rough_random_data_on_jittered_grids() {
    let mut r = common::rng(11);
    let g = common::grid2(&mut r, 10, 12);
    let x = common::random_sheet(&mut r, &g);
    let b = enhance_smooth(&x).unwrap();
    let rep = verify_chen(&b, &x, 1e-11).unwrap();
    assert!(rep.pass, "{:?}", rep.failures().map(|r| (r.id(), r.max_residual)).collect::<Vec<_>>());
}

#[test]
fn ito_convention_keeps_algebraic_but_not_geometric_relations() {
    let mut r = common::rng(12);
    let g = common::grid2(&mut r, 9, 10);
    let x = common::random_sheet(&mut r, &g);
    let opts = EnhanceOptions { convention: Convention::Ito, ..Default::default() };
    let b = enhance_smooth_with(&x, &opts).unwrap();
    let rep = verify_chen(&b, &x, 1e-11).unwrap();
    let failed: Vec<String> = rep.failures().map(|r| format!("{}.{}", r.group, r.item)).collect();
    for f in &failed {
        assert!(["ghij.5a", "ghij.5b", "ghij.6"].contains(&f.as_str()), "{f}");
    }
    assert!(failed.iter().any(|f| f == "ghij.5b"));
}

#[test]
fn zeroed_area_breaks_the_area_relation() {
    // Small enough that every rectangle is scanned.
    let x = st(3);
    let mut b = enhance_smooth(&x).unwrap();
    let full = x.grid().full_box();
    let gi = b.get(FieldId::G(Dir::One), &full) - b.get(FieldId::I(Dir::Two), &full);
    b.zero_field(FieldId::A(Sig::W));
    assert_eq!(b.a(Sig::W, &full), 0.0);
    let rep = verify_chen(&b, &x, 1e-10).unwrap();
    assert!(!rep.pass);
    let r5 = rep.find("ghij", "5b", Dir::One).unwrap();
    assert!(!r5.pass);
    // The largest violation is the full box, where it equals |G - I| = 1/4.
    assert!((r5.max_residual - gi.abs()).abs() < 1e-12, "{} vs {gi}", r5.max_residual);
    assert!(rep.find("ghij", "5a", Dir::Two).map_or(false, |r| !r.pass));
    assert!(rep.find("chen", "2a", Dir::One).unwrap().pass);
    assert!(matches!(rep.into_result(), Err(Error::Relation(_))));
}

#[test]
fn zero_sheet_has_zero_fields_and_exact_relations() {
    let g = make_dyadic_grid(4, 1.0, 2.0).unwrap();
    let x = SheetSample::zeros(g);
    let b = enhance_smooth(&x).unwrap();
    let rep = verify_chen(&b, &x, 0.0).unwrap();
    assert!(rep.pass);
    assert_eq!(rep.max_residual(), 0.0);
    assert_eq!(roughsheet_norm(&b).total, 0.0);
}

#[test]
fn quadrature_error_decays_at_first_order_or_better() {
    let mut errs = Vec::new();
    for level in 4..=7 {
        errs.push(quadrature_error(&smooth(level), &EnhanceOptions::default()).unwrap());
    }
    for w in errs.windows(2) {
        assert!(w[1] < w[0] / 1.9, "{errs:?}");
    }
}

#[test]
fn transposed_sheet_swaps_directions() {
    let mut r = common::rng(5);
    let g = common::grid2(&mut r, 9, 11);
    let x = common::random_sheet(&mut r, &g);
    let b = enhance_smooth(&x).unwrap();
    let bt = enhance_smooth(&x.transpose()).unwrap();
    let rect = Rect::new(1, 7, 2, 10).unwrap();
    let rt = rect.transpose();
    let pairs = [
        (FieldId::A(Sig::W), FieldId::A(Sig::W)),
        (FieldId::B(Dir::One, Sig::X), FieldId::B(Dir::Two, Sig::X)),
        (FieldId::B(Dir::Two, Sig::W), FieldId::B(Dir::One, Sig::W)),
        (FieldId::C(Sig::W, Sig::X), FieldId::C(Sig::W, Sig::X)),
        (FieldId::G(Dir::One), FieldId::G(Dir::Two)),
        (FieldId::J(Dir::Two), FieldId::J(Dir::One)),
        (FieldId::K(Dir::One), FieldId::K(Dir::Two)),
        (FieldId::T(Dir::Two), FieldId::T(Dir::One)),
    ];
    for (f, ft) in pairs {
        let (u, v) = (b.get(f, &rect), bt.get(ft, &rt));
        assert!((u - v).abs() < 1e-12, "{f}: {u} vs {v}");
    }
}

#[test]
fn field_views_match_accessors() {
    let x = smooth(4);
    let b = Arc::new(enhance_smooth(&x).unwrap());
    let c = b.field(FieldId::C(Sig::X, Sig::W)).unwrap();
    assert_eq!(c.arity(), (2, 2));
    let r = Rect::new(2, 11, 3, 16).unwrap();
    assert_eq!(c.eval(&r.s(), &r.t()), b.c(Sig::X, Sig::W, &r));
    // Coinciding indices give an exact zero.
    assert_eq!(c.eval(&[4, 4], &[1, 9]), 0.0);
    let p = b.field(FieldId::P(Dir::One)).unwrap();
    assert_eq!(p.arity(), (2, 1));
    assert_eq!(p.eval(&[1, 9], &[5]), b.p(Dir::One, 5, [1, 9]));
    assert!(matches!(b.field(FieldId::D(Dir::One, Sig::X, Sig::X)), Err(Error::Arity(_))));
    assert!(b.eval22(FieldId::P(Dir::Two), &r).is_err());
}

#[test]
fn norm_examples() {
    let x = st(4);
    let b = enhance_smooth(&x).unwrap();
    let n = roughsheet_norm(&b);
    assert!(n.total.is_finite() && n.total > 0.0);
    assert!((n.component(FieldId::A(Sig::X)).unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(n.components.len(), FieldId::all().len());
    // Scaling x by lambda >= 1 scales every field by a power >= 1 of lambda.
    for lambda in [1.0, 1.5, 3.0] {
        let y = x.map(|u| lambda * u).unwrap();
        let m = roughsheet_norm(&enhance_smooth(&y).unwrap());
        assert!(m.total >= n.total * lambda - 1e-9);
    }
}

#[test]
fn distance_is_zero_on_self_and_symmetric() {
    let x = smooth(4);
    let y = x.map(|u| u + 0.01 * u * u).unwrap();
    let (bx, by) = (enhance_smooth(&x).unwrap(), enhance_smooth(&y).unwrap());
    let o = NormOptions::default();
    assert_eq!(roughsheet_distance(&bx, &bx, &o).unwrap().total, 0.0);
    let d1 = roughsheet_distance(&bx, &by, &o).unwrap().total;
    let d2 = roughsheet_distance(&by, &bx, &o).unwrap().total;
    assert!(d1 > 0.0 && (d1 - d2).abs() <= 1e-12 * d1);
    let other = enhance_smooth(&smooth(5)).unwrap();
    assert!(roughsheet_distance(&bx, &other, &o).is_err());
}

#[test]
fn rsh_round_trip_and_failures() {
    let mut x = enhance_smooth(&smooth(4)).unwrap();
    x.zero_field(FieldId::K(Dir::Two));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.rsh");
    save_roughsheet(&x, &path).unwrap();
    let y = load_roughsheet(&path).unwrap();
    assert_eq!(x, y);
    let r = Rect::new(1, 12, 0, 15).unwrap();
    for id in [FieldId::C(Sig::W, Sig::W), FieldId::K(Dir::Two), FieldId::O(Dir::One)] {
        assert_eq!(x.get(id, &r).to_bits(), y.get(id, &r).to_bits());
    }

    let bytes = std::fs::read(&path).unwrap();
    let cut = &bytes[..bytes.len() - 13];
    assert!(matches!(read_roughsheet(&mut &cut[..]), Err(Error::Corrupt(_))));

    let mut flipped = bytes.clone();
    let k = flipped.len() - 100;
    flipped[k] ^= 0x10;
    assert!(matches!(read_roughsheet(&mut &flipped[..]), Err(Error::Corrupt(_))));

    let text = String::from_utf8_lossy(&bytes[8..]).to_string();
    let needle = format!("\"version\":{RSH_VERSION}");
    assert!(text.contains(&needle));
    let mut bumped = bytes.clone();
    let pos = 8 + text.find(&needle).unwrap() + needle.len() - 1;
    bumped[pos] = b'9';
    assert!(matches!(read_roughsheet(&mut &bumped[..]), Err(Error::Version { found: 9, .. })));
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn midpoint_relations_hold_on_random_sheets(seed in any::<u64>(), n1 in 9usize..12, n2 in 9usize..12) {
        let mut r = common::rng(seed);
        let g = common::grid2(&mut r, n1, n2);
        let x = common::random_sheet(&mut r, &g);
        let b = enhance_smooth(&x).unwrap();
        let opts = VerifyOptions { max_exhaustive: 200, samples: 40, seed };
        let rep = verify_chen_with(&b, &x, 1e-11, &opts).unwrap();
        prop_assert!(rep.pass, "{:?}", rep.failures().map(|r| r.id()).collect::<Vec<_>>());
    }

    #[test]
    fn area_is_additive(seed in any::<u64>(), i in 1usize..8, j in 1usize..8) {
        let mut r = common::rng(seed);
        let g = common::grid2(&mut r, 9, 9);
        let x = common::random_sheet(&mut r, &g);
        let b = enhance_smooth(&x).unwrap();
        let whole = b.a(Sig::W, &Rect::new(0, 8, 0, 8).unwrap());
        let parts = b.a(Sig::W, &Rect::new(0, i, 0, j).unwrap())
            + b.a(Sig::W, &Rect::new(i, 8, 0, j).unwrap())
            + b.a(Sig::W, &Rect::new(0, i, j, 8).unwrap())
            + b.a(Sig::W, &Rect::new(i, 8, j, 8).unwrap());
        prop_assert!((whole - parts).abs() < 1e-12);
    }
}
