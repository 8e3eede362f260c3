// Copyright 2026 The coherent-bridge Authors
// SPDX-License-Identifier: Apache-2.0

use coherent_bridge::dsl::{parse, promote, Constants, OrderingRule};
use coherent_bridge::operators::{GridSpec, OperatorSet, PhysicalParams};
use coherent_bridge::spectrum::{affine_spectrum, dirichlet_wall_spectrum, GapReport};
use coherent_bridge::{Error, Family};
use proptest::prelude::*;

const HALF_OSC: &str = "(d*q^-2*d + q^2)/2";

fn half_grid(n: usize) -> GridSpec {
    GridSpec {
        n,
        x_min: (-6.0f64).exp(),
        x_max: 2.5f64.exp(),
    }
}

// D Q^-2 D = P^2 + (3/4) hbar^2 Q^-2, a radial problem with l = 1/2:
// E_n = hbar w (2n + 2).
fn affine_exact(hbar: f64, n: usize) -> f64 {
    hbar * (2.0 * n as f64 + 2.0)
}

// odd oscillator states: E_n = hbar w (2n + 3/2)
fn wall_exact(hbar: f64, omega: f64, n: usize) -> f64 {
    hbar * omega * (2.0 * n as f64 + 1.5)
}

#[test]
fn wall_spectrum_matches_odd_oscillator_levels() {
    let params = PhysicalParams::default();
    let r = dirichlet_wall_spectrum(params, 12.0, 4096, 6).unwrap();
    assert_eq!(r.eigenvalues.len(), 7);
    for (n, e) in r.eigenvalues.iter().enumerate() {
        assert!((e - wall_exact(1.0, 1.0, n)).abs() < 1e-4, "level {n}: {e}");
    }
    assert!(r.relative_spread <= 1e-3, "spread {}", r.relative_spread);
    for g in &r.gaps {
        assert!((g - 2.0).abs() < 1e-4);
    }
}

#[test]
fn wall_spectrum_scales_with_omega_and_hbar() {
    let params = PhysicalParams {
        omega: 2.0,
        hbar: 0.5,
        ..PhysicalParams::default()
    };
    let r = dirichlet_wall_spectrum(params, 8.0, 4096, 4).unwrap();
    for (n, e) in r.eigenvalues.iter().enumerate() {
        assert!((e - wall_exact(0.5, 2.0, n)).abs() < 1e-4, "level {n}: {e}");
    }
}

#[test]
fn affine_half_oscillator_is_equally_spaced() {
    let expr = parse(HALF_OSC, Family::Affine).unwrap();
    let params = PhysicalParams::default();
    let c = Constants::from_params(&params);
    let r = affine_spectrum(&expr, &half_grid(4096), params, &c, OrderingRule::AsWritten, 6).unwrap();
    for (n, e) in r.eigenvalues.iter().enumerate() {
        assert!((e - affine_exact(1.0, n)).abs() < 1e-3, "level {n}: {e}");
    }
    assert!(r.relative_spread <= 1e-3, "spread {}", r.relative_spread);
}

#[test]
fn affine_half_oscillator_levels_scale_with_hbar() {
    let expr = parse(HALF_OSC, Family::Affine).unwrap();
    let params = PhysicalParams {
        hbar: 0.5,
        ..PhysicalParams::default()
    };
    let c = Constants::from_params(&params);
    let grid = GridSpec {
        n: 2048,
        x_min: (-7.0f64).exp(),
        x_max: 2.2f64.exp(),
    };
    let r = affine_spectrum(&expr, &grid, params, &c, OrderingRule::AsWritten, 3).unwrap();
    for (n, e) in r.eigenvalues.iter().enumerate() {
        assert!((e - affine_exact(0.5, n)).abs() < 2e-3, "level {n}: {e}");
    }
}

#[test]
fn banded_bisection_agrees_with_dense_eigensolver() {
    let expr = parse(HALF_OSC, Family::Affine).unwrap();
    let params = PhysicalParams::default();
    let c = Constants::from_params(&params);
    let grid = half_grid(256);
    let r = affine_spectrum(&expr, &grid, params, &c, OrderingRule::AsWritten, 4).unwrap();
    let set = OperatorSet::affine(&grid, params).unwrap();
    let h = promote(&expr, &set, &c, OrderingRule::AsWritten).unwrap();
    let dense = h.to_dense();
    // both solvers are backward stable: errors scale with eps * |H|
    let norm = dense.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let tol = 64.0 * f64::EPSILON * norm;
    let eig = nalgebra::SymmetricEigen::new(dense);
    let mut vals: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for (a, b) in r.eigenvalues.iter().zip(&vals) {
        assert!((a - b).abs() < tol, "{a} vs {b}, tol {tol}");
    }
}

#[test]
fn wall_bisection_agrees_with_tridiagonal_dense() {
    let params = PhysicalParams::default();
    let n = 200;
    let len = 10.0;
    let r = dirichlet_wall_spectrum(params, len, n, 5).unwrap();
    let h = len / (n + 1) as f64;
    let m = nalgebra::DMatrix::<f64>::from_fn(n, n, |i, j| {
        let x = (i + 1) as f64 * h;
        if i == j {
            1.0 / (h * h) + 0.5 * x * x
        } else if i.abs_diff(j) == 1 {
            -0.5 / (h * h)
        } else {
            0.0
        }
    });
    let mut vals: Vec<f64> = m.symmetric_eigenvalues().iter().cloned().collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for (a, b) in r.eigenvalues.iter().zip(&vals) {
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
}

#[test]
fn input_errors() {
    let params = PhysicalParams::default();
    let c = Constants::from_params(&params);
    let canon = parse("p^2/2 + q^2/2", Family::Canonical).unwrap();
    assert!(matches!(
        affine_spectrum(&canon, &half_grid(128), params, &c, OrderingRule::AsWritten, 3),
        Err(Error::FamilyMismatch { .. })
    ));
    let aff = parse(HALF_OSC, Family::Affine).unwrap();
    assert!(affine_spectrum(&aff, &half_grid(128), params, &c, OrderingRule::AsWritten, 0).is_err());
    assert!(matches!(
        affine_spectrum(&aff, &half_grid(16), params, &c, OrderingRule::AsWritten, 2),
        Err(Error::RepresentationTooSmall(_))
    ));
    assert!(dirichlet_wall_spectrum(params, -1.0, 128, 2).is_err());
    assert!(dirichlet_wall_spectrum(params, 5.0, 8, 2).is_err());
    assert!(GapReport::from_eigenvalues("x", vec![1.0]).is_err());
    assert!(GapReport::from_eigenvalues("x", vec![1.0, f64::NAN]).is_err());
}

#[test]
fn gap_report_of_arithmetic_sequence() {
    let r = GapReport::from_eigenvalues("x", vec![1.0, 3.0, 5.0, 7.0]).unwrap();
    assert_eq!(r.gaps, vec![2.0, 2.0, 2.0]);
    assert_eq!(r.mean_gap, 2.0);
    assert_eq!(r.relative_spread, 0.0);
    let r = GapReport::from_eigenvalues("x", vec![0.0, 1.0, 3.0]).unwrap();
    assert!((r.relative_spread - 2.0 / 3.0).abs() < 1e-15);
}

proptest! {
    #[test]
    fn spread_is_invariant_under_affine_maps(
        mut levels in prop::collection::vec(-10.0f64..10.0, 3..10),
        a in 0.1f64..10.0,
        b in -5.0f64..5.0,
    ) {
        levels.sort_by(|x, y| x.partial_cmp(y).unwrap());
        levels.dedup();
        prop_assume!(levels.len() >= 3 && levels.windows(2).all(|w| w[1] - w[0] > 1e-3));
        let r = GapReport::from_eigenvalues("x", levels.clone()).unwrap();
        let mapped: Vec<f64> = levels.iter().map(|e| a * e + b).collect();
        let s = GapReport::from_eigenvalues("x", mapped).unwrap();
        prop_assert!(r.relative_spread >= 0.0);
        prop_assert!((r.relative_spread - s.relative_spread).abs() <= 1e-9 * r.relative_spread.max(1.0));
        prop_assert!((s.mean_gap - a * r.mean_gap).abs() <= 1e-9 * s.mean_gap.abs().max(1.0));
    }
}

#[test]
fn sandwich_matches_matrix_product_on_smooth_states() {
    use coherent_bridge::operators::{expectation, Generator, StateVector, C64};
    let params = PhysicalParams::default();
    let c = Constants::from_params(&params);
    let expr = parse("d*q^-2*d", Family::Affine).unwrap();
    let rel = |n: usize| {
        let set = OperatorSet::affine(&half_grid(n), params).unwrap();
        let h = promote(&expr, &set, &c, OrderingRule::AsWritten).unwrap();
        let d = set.get(Generator::D).unwrap();
        let qi = set.get(Generator::QInv).unwrap();
        // a smooth bump well inside the grid, in ln x
        let psi = StateVector::from_grid_function(&set.rep, |x: f64| {
            let u = x.ln();
            C64::new((-(u - 0.5).powi(2) / 0.18).exp() / x.sqrt(), 0.0)
        })
        .unwrap()
        .normalized();
        let staggered = expectation(&h, &psi).unwrap().re;
        let dpsi = d.apply(&psi).unwrap();
        let product = expectation(&qi.matmul(qi).unwrap(), &dpsi).unwrap().re;
        (staggered - product).abs() / product.abs()
    };
    let (coarse, fine) = (rel(1024), rel(2048));
    assert!(fine <= 1e-6, "{fine}");
    // fourth order in the grid step
    let ratio = coarse / fine;
    assert!((13.0..=19.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn sandwich_penalizes_the_alternating_mode() {
    use coherent_bridge::operators::{expectation, StateVector, C64};
    let params = PhysicalParams::default();
    let c = Constants::from_params(&params);
    let set = OperatorSet::affine(&half_grid(256), params).unwrap();
    let expr = parse("d*d", Family::Affine).unwrap();
    let staggered = promote(&expr, &set, &c, OrderingRule::AsWritten).unwrap();
    let weyl = promote(&expr, &set, &c, OrderingRule::SymmetricWeyl).unwrap();
    let n = set.rep.dim;
    let amps = nalgebra::DVector::from_fn(n, |i, _| C64::new(if i % 2 == 0 { 1.0 } else { -1.0 }, 0.0));
    let alt = StateVector::new(set.rep.clone(), amps).unwrap().normalized();
    let du = set.rep.grid().unwrap().du;
    // central differences see frequency pi as zero; the staggered form sees 4/du^2
    assert!(expectation(&weyl, &alt).unwrap().re < 1e-2 / (du * du));
    assert!(expectation(&staggered, &alt).unwrap().re > 3.9 / (du * du));
}
