// Copyright 2026 The coherent-bridge Authors
// SPDX-License-Identifier: Apache-2.0

use std::f64::consts::PI;

use coherent_bridge::families::{
    affine_fiducial, canonical_fiducial, identity_defect, spin_fiducial, CoherentFamily, PhaseFunction,
    AFFINE_IDENTITY_GRID,
};
use coherent_bridge::operators::{
    expectation, mat_exp, Generator, GridSpec, OperatorSet, PhysicalParams, StateVector, C64,
};
use coherent_bridge::quadrature::{AxisSpec, QuadratureSpec};
use coherent_bridge::{Error, PhasePoint};
use proptest::prelude::*;

fn params(hbar: f64, omega: f64) -> PhysicalParams {
    PhysicalParams { hbar, omega, ..Default::default() }
}

#[test]
fn canonical_fiducial_is_fock_ground_state() {
    let set = OperatorSet::canonical(64, PhysicalParams::default()).unwrap();
    let (psi, residual) = canonical_fiducial(&set).unwrap();
    assert!(residual <= 1e-10);
    assert_eq!(psi.amplitudes()[0], C64::new(1.0, 0.0));
    assert!(psi.amplitudes().iter().skip(1).all(|z| *z == C64::new(0.0, 0.0)));
    for g in [Generator::P, Generator::Q] {
        assert!(expectation(set.get(g).unwrap(), &psi).unwrap().norm() < 1e-15);
    }
}

#[test]
fn canonical_fiducial_has_gaussian_profile() {
    // |psi(x)|^2 proportional to exp(-w x^2/hbar) has characteristic
    // function exp(-k^2 hbar/(4w)).
    for (hbar, omega) in [(1.0, 1.0), (0.5, 2.0), (2.0, 0.7)] {
        let set = OperatorSet::canonical(64, params(hbar, omega)).unwrap();
        let (psi, _) = canonical_fiducial(&set).unwrap();
        for k in [0.3, 1.0, 2.0] {
            let u = mat_exp(set.get(Generator::Q).unwrap(), C64::new(0.0, k)).unwrap();
            let got = expectation(&u, &psi).unwrap();
            let exact = (-k * k * hbar / (4.0 * omega)).exp();
            assert!((got - C64::new(exact, 0.0)).norm() < 1e-10, "hbar={hbar} w={omega} k={k}");
        }
    }
}

#[test]
fn spin_fiducial_moments() {
    for s in [0.5, 1.0, 2.5, 7.0] {
        let hbar = 0.8;
        let set = OperatorSet::spin(s, hbar).unwrap();
        let psi = spin_fiducial(&set).unwrap();
        let s3 = set.get(Generator::S3).unwrap();
        let applied = s3.apply(&psi).unwrap();
        let diff = applied.add_scaled(&psi, C64::new(-s * hbar, 0.0)).unwrap();
        assert!(diff.norm() < 1e-14);
        assert!((expectation(s3, &psi).unwrap().re - s * hbar).abs() < 1e-14);
        for g in [Generator::S1, Generator::S2] {
            assert!(expectation(set.get(g).unwrap(), &psi).unwrap().norm() < 1e-15);
        }
    }
}

#[test]
fn affine_fiducial_moments_on_default_grid() {
    for beta in [0.6, 1.0, 5.0] {
        let set = OperatorSet::affine(&GridSpec::default(), PhysicalParams { beta, ..Default::default() }).unwrap();
        let (psi, residual) = affine_fiducial(&set).unwrap();
        assert!(residual <= 1e-6, "beta={beta} residual={residual:e}");
        assert!((psi.norm() - 1.0).abs() < 1e-12);
        let q = expectation(set.get(Generator::Q).unwrap(), &psi).unwrap();
        let d = expectation(set.get(Generator::D).unwrap(), &psi).unwrap();
        assert!((q.re - 1.0).abs() <= 1e-6 && q.im.abs() < 1e-12, "beta={beta} <Q>={q}");
        assert!(d.norm() <= 1e-6, "beta={beta} <D>={d}");
    }
}

/// RK4 for `psi' = -[kappa (x - 1) + 1/2] psi / x`, in `ln psi` over `ln x`.
fn fiducial_ode_ratio(kappa: f64, x0: f64, x1: f64) -> f64 {
    let rhs = |u: f64| -(kappa * (u.exp() - 1.0) + 0.5);
    let steps = 20_000;
    let h = (x1.ln() - x0.ln()) / steps as f64;
    let mut u = x0.ln();
    let mut y = 0.0;
    for _ in 0..steps {
        let k1 = rhs(u);
        let k2 = rhs(u + h / 2.0);
        let k4 = rhs(u + h);
        y += h * (k1 + 4.0 * k2 + k4) / 6.0;
        u += h;
    }
    y.exp()
}

#[test]
fn affine_fiducial_matches_ode_oracle() {
    for beta in [0.6, 1.0, 5.0] {
        let set = OperatorSet::affine(&GridSpec::default(), PhysicalParams { beta, ..Default::default() }).unwrap();
        let (psi, _) = affine_fiducial(&set).unwrap();
        let values = psi.grid_values().unwrap();
        let nodes = &set.rep.grid().unwrap().nodes;
        let r = nodes.iter().position(|x| *x >= 1.0).unwrap();
        for (i, x) in nodes.iter().enumerate().filter(|(_, x)| **x > 0.2 && **x < 5.0).step_by(37) {
            let oracle = fiducial_ode_ratio(beta, nodes[r], *x);
            let got = values[i].re / values[r].re;
            assert!(((got - oracle) / oracle).abs() < 1e-6, "beta={beta} x={x} got={got} oracle={oracle}");
            assert!(values[i].im == 0.0);
        }
    }
}

#[test]
fn affine_fiducial_rejects_truncating_grid() {
    let grid = GridSpec { n: 2048, x_min: 1e-2, x_max: 60.0 };
    let err = CoherentFamily::affine(&grid, PhysicalParams { beta: 0.6, ..Default::default() }).unwrap_err();
    assert!(matches!(err, Error::Tolerance { .. }), "{err}");
}

#[test]
fn identity_displacements_give_fiducials() {
    let c = CoherentFamily::canonical(32, PhysicalParams::default()).unwrap();
    let s = CoherentFamily::spin(1.5, 1.0).unwrap();
    let a = CoherentFamily::affine(&GridSpec::default(), PhysicalParams::default()).unwrap();
    for (fam, pt) in [
        (&c, PhasePoint::canonical(0.0, 0.0)),
        (&s, PhasePoint::spin(0.0, 0.0)),
        (&a, PhasePoint::affine(0.0, 1.0)),
    ] {
        let st = fam.coherent_state(&pt, None).unwrap();
        let diff = st.add_scaled(fam.fiducial(), C64::new(-1.0, 0.0)).unwrap();
        assert!(diff.norm() < 1e-13, "{:?}", fam.family());
    }
}

#[test]
fn invalid_points_are_rejected() {
    let a = CoherentFamily::affine(&GridSpec::default(), PhysicalParams::default()).unwrap();
    assert!(matches!(a.coherent_state(&PhasePoint::affine(0.0, 0.0), None), Err(Error::InvalidPoint(_))));
    assert!(matches!(a.coherent_state(&PhasePoint::affine(0.0, -1.0), None), Err(Error::InvalidPoint(_))));
    let s = CoherentFamily::spin(0.5, 1.0).unwrap();
    assert!(s.coherent_state(&PhasePoint::spin(3.5, 0.0), None).is_err());
    assert!(s.coherent_state(&PhasePoint::spin(1.0, -3.5), None).is_err());
    assert!(matches!(
        s.overlap(&PhasePoint::canonical(0.0, 0.0), &PhasePoint::spin(0.0, 0.0)),
        Err(Error::FamilyMismatch { .. })
    ));
}

#[test]
fn affine_displacement_agrees_with_matrix_exponentials() {
    let grid = GridSpec { n: 640, x_min: 1e-6, x_max: 30.0 };
    let prm = PhysicalParams { beta: 2.0, hbar: 1.0, ..Default::default() };
    let fam = CoherentFamily::affine(&grid, prm).unwrap();
    let set = fam.operators();
    let q = 1.3;
    let dil = mat_exp(set.get(Generator::D).unwrap(), C64::new(0.0, -f64::ln(q))).unwrap();
    let dilated = dil.apply(fam.fiducial()).unwrap();
    let nodes = &set.rep.grid().unwrap().nodes;
    for p in [0.0, 0.7, -1.2] {
        // Q is diagonal, so exp(ipQ) is a pointwise phase
        let amps = dilated.amplitudes().iter().zip(nodes).map(|(a, x)| a * C64::from_polar(1.0, p * x));
        let oracle = StateVector::new(set.rep.clone(), amps.collect::<Vec<_>>().into()).unwrap();
        let got = fam.coherent_state(&PhasePoint::affine(p, q), None).unwrap();
        let diff = got.add_scaled(&oracle, C64::new(-1.0, 0.0)).unwrap().norm();
        assert!(diff < 1e-4, "p={p} q={q} diff={diff:e}");
    }
}

#[test]
fn spin_half_overlap_oracle() {
    let fam = CoherentFamily::spin(0.5, 1.0).unwrap();
    for k in 0..=16 {
        let theta = PI * k as f64 / 16.0;
        let ov = fam.overlap(&PhasePoint::spin(theta, 0.0), &PhasePoint::spin(0.0, 0.0)).unwrap();
        assert!((ov.norm_sqr() - (theta / 2.0).cos().powi(2)).abs() < 1e-14);
        // explicit 2x2 rotation: exp(-i theta sigma_y / 2)|up> = (cos, sin)
        let st = fam.coherent_state(&PhasePoint::spin(theta, 0.0), None).unwrap();
        let a = st.amplitudes();
        assert!((a[0] - C64::new((theta / 2.0).cos(), 0.0)).norm() < 1e-14);
        assert!((a[1] - C64::new((theta / 2.0).sin(), 0.0)).norm() < 1e-14);
    }
}

#[test]
fn measure_weights() {
    let c = CoherentFamily::canonical(8, params(0.5, 1.0)).unwrap();
    assert!((c.measure_weight(&PhasePoint::canonical(1.0, 2.0)) - 1.0 / PI).abs() < 1e-15);
    let s = CoherentFamily::spin(1.5, 1.0).unwrap();
    assert!((s.measure_weight(&PhasePoint::spin(PI / 2.0, 0.3)) - 1.0 / PI).abs() < 1e-15);
    let a = CoherentFamily::affine(&GridSpec::default(), PhysicalParams { beta: 2.0, ..Default::default() }).unwrap();
    assert!((a.measure_weight(&PhasePoint::affine(0.0, 3.0)) - 0.75 / (2.0 * PI)).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn canonical_overlap_is_gaussian(
        p1 in -3.0f64..3.0, q1 in -3.0f64..3.0, p2 in -3.0f64..3.0, q2 in -3.0f64..3.0,
        omega in 0.5f64..2.0,
    ) {
        let fam = CoherentFamily::canonical(64, params(1.0, omega)).unwrap();
        let ov = fam.overlap(&PhasePoint::canonical(p1, q1), &PhasePoint::canonical(p2, q2)).unwrap();
        let exact = (-((q1 - q2).powi(2) * omega + (p1 - p2).powi(2) / omega) / 2.0).exp();
        prop_assert!((ov.norm_sqr() - exact).abs() < 1e-10);
        prop_assert!(ov.norm() <= 1.0 + 1e-10);
    }

    #[test]
    fn phase_functions_do_not_change_overlap_moduli(
        a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0, d in -2.0f64..2.0, bp in -5.0f64..5.0,
    ) {
        let fam = CoherentFamily::canonical(48, PhysicalParams::default()).unwrap();
        let f = PhaseFunction::new(|p, q, b| b * (p * p - q.sin()) + p * q, bp);
        let x = PhasePoint::canonical(a, b);
        let y = PhasePoint::canonical(c, d);
        let with = fam.coherent_state(&x, Some(&f)).unwrap().inner(&fam.coherent_state(&y, Some(&f)).unwrap()).unwrap();
        let without = fam.overlap(&x, &y).unwrap();
        prop_assert!((with.norm() - without.norm()).abs() < 1e-12);
    }

    #[test]
    fn coherent_states_are_normalized(theta in 0.0f64..PI, phi in -3.1f64..3.1, p in -2.0f64..2.0, lq in -1.5f64..1.5) {
        let s = CoherentFamily::spin(2.5, 1.0).unwrap();
        prop_assert!((s.coherent_state(&PhasePoint::spin(theta, phi), None).unwrap().norm() - 1.0).abs() < 1e-12);
        let a = CoherentFamily::affine(&GridSpec { n: 1024, x_min: 1e-9, x_max: 40.0 }, PhysicalParams { beta: 3.0, ..Default::default() }).unwrap();
        prop_assert!((a.coherent_state(&PhasePoint::affine(p, lq.exp()), None).unwrap().norm() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn spin_identity_is_exact() {
    for s in [0.5, 1.0, 1.5] {
        let fam = CoherentFamily::spin(s, 1.0).unwrap();
        let r = identity_defect(&fam, &fam.default_quadrature(), None).unwrap();
        assert_eq!(r.probe_dim, (2.0 * s) as usize + 1);
        assert!(r.max_defect <= 1e-10, "s={s} defect={:e}", r.max_defect);
    }
}

#[test]
fn canonical_identity_default_box() {
    let fam = CoherentFamily::canonical(64, PhysicalParams::default()).unwrap();
    let quad = fam.default_quadrature();
    assert_eq!(quad, QuadratureSpec::new(AxisSpec::gauss(-8.0, 8.0, 161), AxisSpec::gauss(-8.0, 8.0, 161)));
    let r = identity_defect(&fam, &quad, None).unwrap();
    assert_eq!(r.probe_dim, 8);
    assert!(r.max_defect <= 1e-6, "{:e}", r.max_defect);
    let json = serde_json::to_value(&r).unwrap();
    for key in ["family", "quad", "probe_dim", "max_defect", "per_entry"] {
        assert!(json.get(key).is_some(), "{key}");
    }
    assert_eq!(json["family"], "canonical");
}

#[test]
fn canonical_identity_small_box_reports_large_defect() {
    let fam = CoherentFamily::canonical(64, PhysicalParams::default()).unwrap();
    let quad = QuadratureSpec::new(AxisSpec::gauss(-1.0, 1.0, 40), AxisSpec::gauss(-1.0, 1.0, 40));
    let r = identity_defect(&fam, &quad, None).unwrap();
    assert!(r.max_defect > 0.1, "{:e}", r.max_defect);
}

#[test]
fn quadrature_prechecks() {
    let fam = CoherentFamily::canonical(64, PhysicalParams::default()).unwrap();
    let narrow = QuadratureSpec::new(AxisSpec::gauss(-0.3, 0.3, 16), AxisSpec::gauss(-8.0, 8.0, 16));
    assert!(matches!(identity_defect(&fam, &narrow, None), Err(Error::Quadrature(_))));
    let sparse = QuadratureSpec::new(AxisSpec::gauss(-8.0, 8.0, 4), AxisSpec::gauss(-8.0, 8.0, 16));
    assert!(matches!(identity_defect(&fam, &sparse, None), Err(Error::Quadrature(_))));
}

#[test]
fn canonical_defect_decreases_with_resolution() {
    let fam = CoherentFamily::canonical(64, PhysicalParams::default()).unwrap();
    let mut last = f64::INFINITY;
    for nodes in [10, 20, 40, 80, 160] {
        let quad = QuadratureSpec::new(AxisSpec::gauss(-8.0, 8.0, nodes), AxisSpec::gauss(-8.0, 8.0, nodes));
        let d = identity_defect(&fam, &quad, None).unwrap().max_defect;
        assert!(d < last || d < 1e-7, "nodes={nodes} defect={d:e} previous={last:e}");
        last = d;
    }
}

#[test]
fn affine_identity_rejects_beta_below_threshold() {
    let wide = GridSpec { n: 4096, x_min: 1e-30, x_max: 80.0 };
    for beta in [0.4, 0.5] {
        let prm = PhysicalParams { beta, ..Default::default() };
        assert!(matches!(prm.check_affine_identity(), Err(Error::BetaBelowThreshold { .. })));
        let fam = CoherentFamily::affine(&wide, prm).unwrap();
        let err = identity_defect(&fam, &fam.default_quadrature(), None).unwrap_err();
        assert!(err.to_string().contains("beta must exceed hbar/2"), "{err}");
    }
}

#[test]
fn affine_identity_converges_on_both_sides_of_the_threshold() {
    for beta in [0.6, 5.0] {
        let fam = CoherentFamily::affine(&AFFINE_IDENTITY_GRID, PhysicalParams { beta, ..Default::default() }).unwrap();
        let r = identity_defect(&fam, &fam.default_quadrature(), None).unwrap();
        assert!(r.max_defect <= 1e-4, "beta={beta} defect={:e}", r.max_defect);
    }
}

#[test]
fn custom_probe_dimension() {
    let fam = CoherentFamily::canonical(32, PhysicalParams::default()).unwrap();
    let probe = coherent_bridge::operators::CMatrix::identity(32, 3);
    let r = identity_defect(&fam, &fam.default_quadrature(), Some(&probe)).unwrap();
    assert_eq!(r.probe_dim, 3);
    assert_eq!(r.per_entry.len(), 3);
}
