// Copyright 2026 The coherent-bridge Authors
// SPDX-License-Identifier: Apache-2.0

use coherent_bridge::dsl::{parse, parse_with_constants, promote, Constants, OrderingRule};
use coherent_bridge::operators::{Generator, OperatorSet, PhysicalParams, C64};
use coherent_bridge::{Error, Family, PhasePoint};
use proptest::prelude::*;

fn consts() -> Constants {
    Constants::from_params(&PhysicalParams::default())
}

fn max_diff(a: &coherent_bridge::operators::CMatrix, b: &coherent_bridge::operators::CMatrix, block: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..block {
        for j in 0..block {
            worst = worst.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    worst
}

#[test]
fn oscillator_parses_and_evaluates() {
    let h = parse("(p^2/m + m*w^2*q^2)/2", Family::Canonical).unwrap();
    let v = h.eval_classical(&PhasePoint::canonical(1.0, 2.0), &consts()).unwrap();
    assert_eq!(v, 2.5);
    let v32 = h.eval_classical(&PhasePoint::<f32>::canonical(1.0, 2.0), &consts()).unwrap();
    assert_eq!(v32, 2.5f32);
}

#[test]
fn affine_kinetic_term() {
    let h = parse("d^2/(2*m)", Family::Affine).unwrap();
    assert!((h.eval_classical(&PhasePoint::affine(2.0f64, 3.0), &consts()).unwrap() - 18.0).abs() < 1e-15);
    let h = parse("d^2", Family::Affine).unwrap();
    assert_eq!(h.eval_classical(&PhasePoint::affine(2.0, 3.0), &consts()).unwrap(), 36.0);
}

#[test]
fn spin_component_symbol_form() {
    let c = consts().with("s", 1.5).with("hbar", 2.0);
    let h = parse("s3", Family::Spin).unwrap();
    assert_eq!(h.eval_classical(&PhasePoint::spin(0.0, 0.3), &c).unwrap(), 3.0);
    let h = parse("s*hbar*cos(theta)", Family::Spin).unwrap();
    assert!((h.eval_classical(&PhasePoint::spin(1.0, 0.3), &c).unwrap() - 3.0 * 1f64.cos()).abs() < 1e-15);
}

#[test]
fn parse_errors() {
    match parse("p*z", Family::Canonical) {
        Err(Error::UnknownIdentifier { name, offset }) => {
            assert_eq!(name, "z");
            assert_eq!(offset, 2);
        }
        other => panic!("{other:?}"),
    }
    assert!(matches!(parse("d*q", Family::Canonical), Err(Error::WrongFamilyVariable { .. })));
    assert!(matches!(parse("p*q", Family::Affine), Err(Error::WrongFamilyVariable { .. })));
    assert!(matches!(parse("1/q", Family::Canonical), Err(Error::NonPolynomial { offset: 1, .. })));
    assert!(matches!(parse("q^-1", Family::Canonical), Err(Error::NonPolynomial { .. })));
    assert!(parse("q^-2 + d", Family::Affine).is_ok());
    assert!(matches!(parse("q^0.5", Family::Canonical), Err(Error::NonPolynomial { .. })));
    assert!(matches!(parse("cos(q)", Family::Canonical), Err(Error::NonPolynomial { .. })));
    assert!(matches!(parse("(p + q", Family::Canonical), Err(Error::Syntax { offset: 6, .. })));
    assert!(matches!(parse("   ", Family::Canonical), Err(Error::Syntax { .. })));
    assert!(matches!(parse("p q", Family::Canonical), Err(Error::Syntax { offset: 2, .. })));
    assert!(matches!(parse("p # q", Family::Canonical), Err(Error::Syntax { offset: 2, .. })));
}

#[test]
fn user_constants_are_late_bound() {
    let h = parse_with_constants("k*q^2", Family::Canonical, &["k"]).unwrap();
    let pt = PhasePoint::canonical(0.0, 3.0);
    assert!(matches!(h.eval_classical(&pt, &consts()), Err(Error::UnboundConstant(_))));
    assert_eq!(h.eval_classical(&pt, &consts().with("k", 2.0)).unwrap(), 18.0);
}

#[test]
fn derivatives_match_finite_differences() {
    let cases = [
        (Family::Canonical, "p^4/4 - 3*p*q^3 + q^2*w", [0.7f64, -1.1]),
        (Family::Affine, "d^2*q^-2/2 + q^3 - d*q", [0.4, 1.7]),
        (Family::Spin, "s1*s2 + s3^2/3 - s1 + cos(theta)*sin(phi)", [1.1, 0.4]),
    ];
    let c = consts().with("s", 2.0);
    for (family, src, x) in cases {
        let h = parse(src, family).unwrap();
        for k in 0..2 {
            let dh = h.derivative(k);
            let exact: f64 = dh.eval_classical(&PhasePoint::new(family, x), &c).unwrap();
            let step = 1e-5;
            let mut xp = x;
            let mut xm = x;
            xp[k] += step;
            xm[k] -= step;
            let fd = (h.eval_classical(&PhasePoint::new(family, xp), &c).unwrap()
                - h.eval_classical(&PhasePoint::new(family, xm), &c).unwrap())
                / (2.0 * step);
            assert!((exact - fd).abs() < 1e-7 * (1.0 + exact.abs()), "{src} d{k}: {exact} vs {fd}");
        }
    }
}

#[test]
fn weyl_two_factor_symmetrization() {
    let set = OperatorSet::canonical(12, PhysicalParams::default()).unwrap();
    let pq = promote(&parse("p*q", Family::Canonical).unwrap(), &set, &consts(), OrderingRule::SymmetricWeyl).unwrap();
    let p = set.get(Generator::P).unwrap().to_dense();
    let q = set.get(Generator::Q).unwrap().to_dense();
    let expect = (&p * &q + &q * &p) * C64::new(0.5, 0.0);
    assert!(max_diff(&pq.to_dense(), &expect, 12) < 1e-14);
}

#[test]
fn oscillator_matches_hand_assembly() {
    let params = PhysicalParams { omega: 1.7, hbar: 0.6, ..Default::default() };
    let set = OperatorSet::canonical(40, params).unwrap();
    let h = promote(&parse("(p^2+w^2*q^2)/2", Family::Canonical).unwrap(), &set, &Constants::from_params(&params), OrderingRule::SymmetricWeyl).unwrap();
    let p = set.get(Generator::P).unwrap().to_dense();
    let q = set.get(Generator::Q).unwrap().to_dense();
    let expect = (&p * &p + &q * &q * C64::new(params.omega * params.omega, 0.0)) * C64::new(0.5, 0.0);
    assert!(max_diff(&h.to_dense(), &expect, 40) < 1e-12);
}

#[test]
fn weyl_minus_normal_for_p2q() {
    // Weyl(p^2 q) = N(p^2 q) + (hbar w/2) Q, from re-ordering a^dagger a products
    for (hbar, omega) in [(1.0, 1.0), (0.5, 1.0), (0.25, 2.0)] {
        let params = PhysicalParams { hbar, omega, ..Default::default() };
        let set = OperatorSet::canonical(30, params).unwrap();
        let c = Constants::from_params(&params);
        let e = parse("p^2*q", Family::Canonical).unwrap();
        let w = promote(&e, &set, &c, OrderingRule::SymmetricWeyl).unwrap().to_dense();
        let n = promote(&e, &set, &c, OrderingRule::Normal).unwrap().to_dense();
        let q = set.get(Generator::Q).unwrap().to_dense();
        let oracle = q * C64::new(hbar * omega / 2.0, 0.0);
        let diff = &w - &n;
        assert!(max_diff(&diff, &oracle, 26) < 1e-12, "hbar={hbar}");
        assert!(max_diff(&diff, &(diff.clone() * C64::new(0.0, 0.0)), 26) > 1e-3 * hbar);
    }
}

#[test]
fn as_written_affine_sandwich_is_staggered_form() {
    let grid = coherent_bridge::operators::GridSpec { n: 128, x_min: 0.01, x_max: 20.0 };
    let set = OperatorSet::affine(&grid, PhysicalParams::default()).unwrap();
    let h = promote(&parse("d*q^-2*d", Family::Affine).unwrap(), &set, &consts(), OrderingRule::AsWritten).unwrap();
    // S: nodes -> midpoints u_k + du/2 for k = -2..n, weights (1, -27, 27, -1)/(24 du) on k-1..k+2
    let g = set.rep.grid().unwrap();
    let n = g.len();
    let mut s = nalgebra::DMatrix::<f64>::zeros(n + 2, n);
    let mut f = nalgebra::DVector::<f64>::zeros(n + 2);
    for r in 0..n + 2 {
        let k = r as isize - 2;
        f[r] = (-2.0 * (g.u_min + (k as f64 + 0.5) * g.du)).exp();
        for (o, c) in [(-1isize, 1.0), (0, -27.0), (1, 27.0), (2, -1.0)] {
            let j = k + o;
            if j >= 0 && (j as usize) < n {
                s[(r, j as usize)] = c / (24.0 * g.du);
            }
        }
    }
    let expect = s.transpose() * nalgebra::DMatrix::from_diagonal(&f) * &s;
    let expect = expect.map(|v| C64::new(v, 0.0));
    let scale = expect.iter().map(|v| v.norm()).fold(0.0, f64::max);
    assert!(max_diff(&h.to_dense(), &expect, n) < 1e-12 * scale);
    // other words keep the plain matrix product
    let h = promote(&parse("q*d*q", Family::Affine).unwrap(), &set, &consts(), OrderingRule::AsWritten).unwrap();
    let d = set.get(Generator::D).unwrap().to_dense();
    let q = set.get(Generator::Q).unwrap().to_dense();
    let expect = &q * &d * &q;
    let scale = expect.iter().map(|v| v.norm()).fold(0.0, f64::max);
    assert!(max_diff(&h.to_dense(), &expect, n) < 1e-12 * scale);
}

#[test]
fn spin_cos_theta_promotes_to_s3() {
    let set = OperatorSet::spin(1.5, 1.0).unwrap();
    let c = consts().with("s", 1.5);
    let a = promote(&parse("s*hbar*cos(theta)", Family::Spin).unwrap(), &set, &c, OrderingRule::SymmetricWeyl).unwrap();
    assert!(max_diff(&a.to_dense(), &set.get(Generator::S3).unwrap().to_dense(), 4) < 1e-14);
    assert!(promote(&parse("sin(theta)", Family::Spin).unwrap(), &set, &c, OrderingRule::SymmetricWeyl).is_err());
}

#[test]
fn family_mismatch_rejected() {
    let set = OperatorSet::spin(0.5, 1.0).unwrap();
    let e = parse("p", Family::Canonical).unwrap();
    assert!(matches!(promote(&e, &set, &consts(), OrderingRule::Normal), Err(Error::FamilyMismatch { .. })));
}

fn canonical_poly() -> impl Strategy<Value = String> {
    let mono = (-3i32..=3, 0u32..=3, 0u32..=3, any::<bool>()).prop_map(|(c, a, b, flip)| {
        if flip {
            format!("{c}*q^{b}*p^{a}")
        } else {
            format!("{c}*p^{a}*q^{b}")
        }
    });
    prop::collection::vec(mono, 1..4).prop_map(|v| v.join(" + "))
}

fn spin_poly() -> impl Strategy<Value = String> {
    let var = prop::sample::select(vec!["s1", "s2", "s3"]);
    let mono = (-3i32..=3, prop::collection::vec(var, 0..4))
        .prop_map(|(c, vs)| std::iter::once(c.to_string()).chain(vs.into_iter().map(String::from)).collect::<Vec<_>>().join("*"));
    prop::collection::vec(mono, 1..4).prop_map(|v| v.join(" + "))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn promotion_is_hermitian(src in canonical_poly(), spin_src in spin_poly()) {
        let set = OperatorSet::canonical(10, PhysicalParams::default()).unwrap();
        let e = parse(&src, Family::Canonical).unwrap();
        let sset = OperatorSet::spin(1.0, 1.0).unwrap();
        let se = parse(&spin_src, Family::Spin).unwrap();
        let c = consts().with("s", 1.0);
        for rule in [OrderingRule::SymmetricWeyl, OrderingRule::Normal, OrderingRule::AsWritten] {
            let a = promote(&e, &set, &c, rule).unwrap();
            prop_assert!(a.is_hermitian());
            prop_assert!(a.hermitian_defect() <= 1e-12 * a.to_dense().iter().map(|v| v.norm()).fold(1.0, f64::max));
            let b = promote(&se, &sset, &c, rule).unwrap();
            prop_assert!(b.hermitian_defect() <= 1e-12 * b.to_dense().iter().map(|v| v.norm()).fold(1.0, f64::max));
        }
    }

    #[test]
    fn linear_expressions_ignore_ordering(a in -5.0f64..5.0, b in -5.0f64..5.0, c0 in -5.0f64..5.0) {
        let src = format!("{a}*p + {b}*q + {c0}");
        let e = parse(&src, Family::Canonical).unwrap();
        let set = OperatorSet::canonical(12, PhysicalParams::default()).unwrap();
        let c = consts();
        let w = promote(&e, &set, &c, OrderingRule::SymmetricWeyl).unwrap().to_dense();
        for rule in [OrderingRule::Normal, OrderingRule::AsWritten] {
            let o = promote(&e, &set, &c, rule).unwrap().to_dense();
            prop_assert!(max_diff(&w, &o, 12) < 1e-12);
        }
        let se = parse(&format!("{a}*s1 + {b}*s3 - {c0}*s2"), Family::Spin).unwrap();
        let sset = OperatorSet::spin(1.5, 1.0).unwrap();
        let sc = c.clone().with("s", 1.5);
        let w = promote(&se, &sset, &sc, OrderingRule::SymmetricWeyl).unwrap().to_dense();
        for rule in [OrderingRule::Normal, OrderingRule::AsWritten] {
            let o = promote(&se, &sset, &sc, rule).unwrap().to_dense();
            prop_assert!(max_diff(&w, &o, 4) < 1e-12);
        }
    }
}
