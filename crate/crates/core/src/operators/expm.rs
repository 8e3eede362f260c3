// Copyright 2026 The coherent-bridge Authors
// SPDX-License-Identifier: Apache-2.0

//! Matrix exponential via scaling-and-squaring with a Padé(13) approximant.

use super::{C64, CMatrix, OperatorMatrix, Storage};
use crate::error::{Error, Result};

const THETA_13: f64 = 5.371920351148152;

const PADE_13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// `exp(scale * A)`, returned as a dense operator on the same representation.
pub fn mat_exp(a: &OperatorMatrix, scale: C64) -> Result<OperatorMatrix> {
    let m = a.to_dense() * scale;
    let e = mat_exp_dense(&m)?;
    Ok(OperatorMatrix::from_parts_unchecked(
        a.rep().clone(),
        Storage::Dense(e),
    ))
}

pub fn mat_exp_dense(a: &CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "mat_exp needs a square matrix");
    if a.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::NonFinite("matrix exponential input".into()));
    }
    if n == 0 {
        return Ok(a.clone());
    }
    let norm = one_norm(a);
    let squarings = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    let a = a * C64::new(0.5f64.powi(squarings), 0.0);
    let mut r = pade13(&a)?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    Ok(r)
}

fn one_norm(a: &CMatrix) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn pade13(a: &CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    let b = |k: usize| C64::new(PADE_13[k], 0.0);
    let id = CMatrix::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * (&a6 * b(13) + &a4 * b(11) + &a2 * b(9))
        + &a6 * b(7)
        + &a4 * b(5)
        + &a2 * b(3)
        + &id * b(1);
    let u = a * u_inner;
    let v = &a6 * (&a6 * b(12) + &a4 * b(10) + &a2 * b(8))
        + &a6 * b(6)
        + &a4 * b(4)
        + &a2 * b(2)
        + &id * b(0);
    let num = &v + &u;
    let den = &v - &u;
    den.lu().solve(&num).ok_or_else(|| Error::NonFinite("Pade denominator solve".into()))
}
