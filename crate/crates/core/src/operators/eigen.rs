// Copyright 2026 The coherent-bridge Authors
// SPDX-License-Identifier: Apache-2.0

use nalgebra::DVector;

use super::{BandMatrix, C64, CMatrix, CVector, OperatorMatrix};
use crate::error::{Error, Result};

/// Spectral form of a Hermitian operator, for repeatedly applying
/// `exp(i t A)` to vectors without forming the exponential.
#[derive(Clone, Debug)]
pub struct HermitianExp {
    vectors: CMatrix,
    values: DVector<f64>,
}

impl HermitianExp {
    pub fn new(a: &OperatorMatrix) -> Result<Self> {
        if !a.is_hermitian() {
            return Err(Error::NotHermitian(a.hermitian_defect()));
        }
        let eig = a.to_dense().symmetric_eigen();
        Ok(Self {
            vectors: eig.eigenvectors,
            values: eig.eigenvalues,
        })
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    /// `exp(i t A) v`.
    pub fn apply(&self, t: f64, v: &CVector) -> CVector {
        let mut coeffs = self.vectors.ad_mul(v);
        for (c, lam) in coeffs.iter_mut().zip(self.values.iter()) {
            *c *= C64::from_polar(1.0, t * lam);
        }
        &self.vectors * coeffs
    }

    /// Coefficients `V^dagger v` in the eigenbasis, for reuse with [`Self::apply_coeffs`].
    pub fn coeffs(&self, v: &CVector) -> CVector {
        self.vectors.ad_mul(v)
    }

    pub fn apply_coeffs(&self, t: f64, coeffs: &CVector) -> CVector {
        let scaled = CVector::from_iterator(
            coeffs.len(),
            coeffs
                .iter()
                .zip(self.values.iter())
                .map(|(c, lam)| c * C64::from_polar(1.0, t * lam)),
        );
        &self.vectors * scaled
    }
}

/// Number of eigenvalues of the real symmetric band matrix below `sigma`,
/// from the signs of an `LDL^T` factorization of `A - sigma I`.
fn count_below(n: usize, bw: usize, rows: &[f64], sigma: f64, scale: f64) -> usize {
    let width = 2 * bw + 1;
    let a = |i: usize, j: usize| rows[i * width + (j as isize - i as isize + bw as isize) as usize];
    // l[i][k] holds L(i, i-bw+k) for k < bw
    let mut l = vec![0.0f64; n * bw.max(1)];
    let mut d = vec![0.0f64; n];
    let tiny = f64::EPSILON * scale;
    let mut negatives = 0;
    for i in 0..n {
        let lo = i.saturating_sub(bw);
        // L(i, j) for j in lo..i
        for j in lo..i {
            let mut s = a(i, j);
            let klo = lo.max(j.saturating_sub(bw));
            for k in klo..j {
                s -= l[i * bw + (k + bw - i)] * l[j * bw + (k + bw - j)] * d[k];
            }
            l[i * bw + (j + bw - i)] = s / d[j];
        }
        let mut s = a(i, i) - sigma;
        for k in lo..i {
            let lik = l[i * bw + (k + bw - i)];
            s -= lik * lik * d[k];
        }
        if s.abs() < tiny {
            s = -tiny;
        }
        if s < 0.0 {
            negatives += 1;
        }
        d[i] = s;
    }
    negatives
}

/// The `count` smallest eigenvalues of a real symmetric band matrix, by
/// bisection on the inertia count. Imaginary parts of the band are ignored;
/// callers pass real symmetric operators.
pub fn lowest_eigenvalues_banded(m: &BandMatrix, count: usize, rel_tol: f64) -> Vec<f64> {
    let n = m.dim();
    let (bw, rows) = m.real_rows();
    let width = 2 * bw + 1;
    // Gershgorin bounds
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut scale: f64 = 0.0;
    for i in 0..n {
        let row = &rows[i * width..(i + 1) * width];
        let diag = row[bw];
        let off: f64 = row.iter().enumerate().filter(|(k, _)| *k != bw).map(|(_, v)| v.abs()).sum();
        lo = lo.min(diag - off);
        hi = hi.max(diag + off);
        scale = scale.max(diag.abs() + off);
    }
    let bw_eff = bw.max(1);
    let rows_eff;
    let rows_ref: &[f64] = if bw == 0 {
        // pad a diagonal matrix to bandwidth one
        rows_eff = (0..n).flat_map(|i| [0.0, rows[i], 0.0]).collect::<Vec<_>>();
        &rows_eff
    } else {
        &rows
    };
    let count = count.min(n);
    let mut out = Vec::with_capacity(count);
    let mut floor = lo;
    for k in 0..count {
        let (mut a, mut b) = (floor, hi);
        while b - a > rel_tol * a.abs().max(b.abs()).max(1e-300) && b - a > f64::EPSILON * scale {
            let mid = 0.5 * (a + b);
            if count_below(n, bw_eff, rows_ref, mid, scale) > k {
                b = mid;
            } else {
                a = mid;
            }
        }
        let lam = 0.5 * (a + b);
        out.push(lam);
        floor = a;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_laplacian_eigenvalues() {
        // eigenvalues of tridiag(-1, 2, -1) are 2 - 2 cos(k pi/(n+1))
        let n = 50;
        let mut m = BandMatrix::zeros(n, 1);
        for i in 0..n {
            m.set(i, i, C64::new(2.0, 0.0));
            if i + 1 < n {
                m.set(i, i + 1, C64::new(-1.0, 0.0));
                m.set(i + 1, i, C64::new(-1.0, 0.0));
            }
        }
        let got = lowest_eigenvalues_banded(&m, 5, 1e-14);
        for (k, g) in got.iter().enumerate() {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((g - exact).abs() < 1e-12, "{g} vs {exact}");
        }
    }

    #[test]
    fn pentadiagonal_matches_dense_solver() {
        let n = 40;
        let mut m = BandMatrix::zeros(n, 2);
        for i in 0..n {
            m.set(i, i, C64::new((i as f64 * 0.37).sin() * 3.0, 0.0));
            for off in 1..=2 {
                if i + off < n {
                    let v = C64::new(0.5 / off as f64 + 0.1 * (i as f64).cos(), 0.0);
                    m.set(i, i + off, v);
                    m.set(i + off, i, v);
                }
            }
        }
        let mut dense: Vec<f64> = m.to_dense().map(|v| v.re).symmetric_eigen().eigenvalues.iter().copied().collect();
        dense.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let got = lowest_eigenvalues_banded(&m, 6, 1e-14);
        for (g, d) in got.iter().zip(&dense) {
            assert!((g - d).abs() < 1e-10, "{g} vs {d}");
        }
    }
}
