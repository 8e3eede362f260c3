// Copyright 2026 The coherent-bridge Authors
// SPDX-License-Identifier: Apache-2.0

//! Square complex band matrices with equal lower and upper bandwidth.

use nalgebra::{DMatrix, DVector};

use super::C64;

#[derive(Clone, Debug, PartialEq)]
pub struct BandMatrix {
    n: usize,
    bw: usize,
    // row-major, row i holds columns i-bw ..= i+bw
    data: Vec<C64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bw: usize) -> Self {
        let bw = bw.min(n.saturating_sub(1));
        Self {
            n,
            bw,
            data: vec![C64::new(0.0, 0.0); n * (2 * bw + 1)],
        }
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len(), 0);
        for (i, d) in diag.iter().enumerate() {
            m.set(i, i, *d);
        }
        m
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![C64::new(1.0, 0.0); n])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.n || j >= self.n {
            return None;
        }
        let d = j as isize - i as isize;
        if d.unsigned_abs() > self.bw {
            return None;
        }
        Some(i * (2 * self.bw + 1) + (d + self.bw as isize) as usize)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.offset(i, j)
            .map(|k| self.data[k])
            .unwrap_or(C64::new(0.0, 0.0))
    }

    /// Panics when `(i, j)` lies outside the band.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        let k = self.offset(i, j).expect("entry outside band");
        self.data[k] = v;
    }

    fn col_range(&self, i: usize) -> std::ops::Range<usize> {
        i.saturating_sub(self.bw)..(i + self.bw + 1).min(self.n)
    }

    pub fn widen(&self, bw: usize) -> Self {
        if bw <= self.bw {
            return self.clone();
        }
        let mut out = Self::zeros(self.n, bw);
        for i in 0..self.n {
            for j in self.col_range(i) {
                out.set(i, j, self.get(i, j));
            }
        }
        out
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.n, rhs.n);
        let mut out = Self::zeros(self.n, self.bw + rhs.bw);
        for i in 0..self.n {
            for k in self.col_range(i) {
                let a = self.get(i, k);
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in rhs.col_range(k) {
                    let idx = out.offset(i, j).expect("product band");
                    out.data[idx] += a * rhs.get(k, j);
                }
            }
        }
        out
    }

    pub fn add_scaled(&self, rhs: &Self, scale: C64) -> Self {
        let bw = self.bw.max(rhs.bw);
        let mut out = self.widen(bw);
        for i in 0..self.n {
            for j in rhs.col_range(i) {
                let idx = out.offset(i, j).expect("sum band");
                out.data[idx] += scale * rhs.get(i, j);
            }
        }
        out
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            n: self.n,
            bw: self.bw,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.n, self.bw);
        for i in 0..self.n {
            for j in self.col_range(i) {
                out.set(j, i, self.get(i, j).conj());
            }
        }
        out
    }

    pub fn apply(&self, v: &DVector<C64>) -> DVector<C64> {
        assert_eq!(v.len(), self.n);
        DVector::from_iterator(
            self.n,
            (0..self.n).map(|i| self.col_range(i).map(|j| self.get(i, j) * v[j]).sum()),
        )
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for j in self.col_range(i) {
                m[(i, j)] = self.get(i, j);
            }
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in self.col_range(i) {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Real parts of the band, for the real symmetric eigensolver.
    pub(crate) fn real_rows(&self) -> (usize, Vec<f64>) {
        (self.bw, self.data.iter().map(|v| v.re).collect())
    }
}
