// Copyright 2026 The coherent-bridge Authors
// SPDX-License-Identifier: Apache-2.0

use rayon::prelude::*;
use serde::Serialize;

use super::CoherentFamily;
use crate::error::{Error, Result};
use std::ops::Range;

use nalgebra::DVectorView;

use crate::operators::{CMatrix, CVector, C64};
use crate::phase::Family;
use crate::quadrature::QuadratureSpec;

/// Deviation of a quadrature resolution of identity from `1` on a probe subspace.
#[derive(Clone, Debug, Serialize)]
pub struct DefectReport {
    pub family: Family,
    pub quad: QuadratureSpec,
    pub probe_dim: usize,
    pub max_defect: f64,
    /// Integral value matrix `V^dagger (sum w |x><x|) V` as `[re, im]` pairs.
    pub per_entry: Vec<Vec<[f64; 2]>>,
}

/// Default probe: the lowest 8 Fock states, the full spin space, or the
/// orthonormalized `x^(k+2) exp(-x)`, `k < 8`, on the half-line grid.
pub fn default_probe(family: &CoherentFamily) -> Result<CMatrix> {
    let dim = family.rep().dim;
    match family.family() {
        Family::Canonical => Ok(CMatrix::identity(dim, 8.min(dim))),
        Family::Spin => Ok(CMatrix::identity(dim, dim)),
        Family::Affine => affine_probe(family, 8),
    }
}

pub fn affine_probe(family: &CoherentFamily, count: usize) -> Result<CMatrix> {
    let grid = family.rep().grid()?;
    let n = grid.len();
    let mut cols = CMatrix::from_fn(n, count, |i, k| {
        let x = grid.nodes[i];
        C64::new((grid.weights[i]).sqrt() * x.powi(k as i32 + 2) * (-x).exp(), 0.0)
    });
    // modified Gram–Schmidt, done twice for stability
    for _ in 0..2 {
        for k in 0..count {
            for j in 0..k {
                let proj = cols.column(j).dotc(&cols.column(k));
                let cj = cols.column(j).into_owned();
                cols.column_mut(k).axpy(-proj, &cj, C64::new(1.0, 0.0));
            }
            let nrm = cols.column(k).norm();
            if !(nrm > 1e-300) {
                return Err(Error::RepresentationTooSmall("affine probe functions are not independent on this grid".into()));
            }
            cols.column_mut(k).unscale_mut(nrm);
        }
    }
    Ok(cols)
}

/// Integrates `V^dagger |x><x| V` against the family measure over `quad`.
/// Rows are evaluated in parallel and summed in row order.
/// Index range outside which every probe column is negligible.
pub(crate) fn probe_support(probe: &CMatrix) -> Range<usize> {
    let tol = 1e-16 * probe.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let live = |i: usize| probe.row(i).iter().any(|z| z.norm() > tol);
    let n = probe.nrows();
    let lo = (0..n).find(|&i| live(i)).unwrap_or(0);
    let hi = (0..n).rev().find(|&i| live(i)).map_or(0, |i| i + 1);
    lo..hi.max(lo)
}

/// Integrates `V^dagger |x><x| V` against the family measure over `quad`.
/// Rows are evaluated in parallel and summed in row order.
pub(crate) fn projected_integral(family: &CoherentFamily, quad: &QuadratureSpec, probe: &CMatrix) -> Result<CMatrix> {
    let row_axis = family.row_axis();
    let (rows, row_w) = quad.axes[row_axis].nodes_weights();
    let (cols, col_w) = quad.axes[1 - row_axis].nodes_weights();
    let k = probe.ncols();
    let support = probe_support(probe);
    let window = probe.view((support.start, 0), (support.len(), k));
    let partials: Vec<Result<CMatrix>> = rows
        .par_iter()
        .zip(row_w.par_iter())
        .map(|(r, rw)| {
            let mut acc = CMatrix::zeros(k, k);
            let mut proj = CVector::zeros(k);
            family.visit_row(*r, *rw, &cols, &col_w, support.clone(), &mut |w, v| {
                let v = DVectorView::from_slice(v, v.len());
                window.ad_mul_to(&v, &mut proj);
                acc.gerc(C64::new(w, 0.0), &proj, &proj, C64::new(1.0, 0.0));
            })?;
            Ok(acc)
        })
        .collect();
    let mut total = CMatrix::zeros(k, k);
    for p in partials {
        total += p?;
    }
    Ok(total)
}

/// `max |V^dagger (sum w |x><x|) V - 1|` over the probe columns of `probe`
/// (default [`default_probe`]).
pub fn identity_defect(family: &CoherentFamily, quad: &QuadratureSpec, probe: Option<&CMatrix>) -> Result<DefectReport> {
    if family.family() == Family::Affine {
        family.params().check_affine_identity()?;
    }
    family.check_quadrature(quad)?;
    let owned;
    let probe = match probe {
        Some(p) => p,
        None => {
            owned = default_probe(family)?;
            &owned
        }
    };
    if probe.nrows() != family.rep().dim {
        return Err(Error::RepresentationMismatch(format!(
            "probe has {} rows on a dimension {} representation",
            probe.nrows(),
            family.rep().dim
        )));
    }
    let m = projected_integral(family, quad, probe)?;
    let k = m.nrows();
    let mut max_defect = 0.0f64;
    let mut per_entry = Vec::with_capacity(k);
    for i in 0..k {
        let mut row = Vec::with_capacity(k);
        for j in 0..k {
            let target = if i == j { 1.0 } else { 0.0 };
            let z = m[(i, j)];
            max_defect = max_defect.max((z - C64::new(target, 0.0)).norm());
            row.push([z.re, z.im]);
        }
        per_entry.push(row);
    }
    if !max_defect.is_finite() {
        return Err(Error::NonFinite("identity defect".into()));
    }
    Ok(DefectReport { family: family.family(), quad: *quad, probe_dim: k, max_defect, per_entry })
}

/// `sum_n w_n |x_n><x_n| V` for every column of `v`, rows in parallel and
/// summed in row order. Overlaps use the support of `v`; the output keeps
/// every row.
pub(crate) fn apply_projector(family: &CoherentFamily, quad: &QuadratureSpec, v: &CMatrix) -> Result<CMatrix> {
    let row_axis = family.row_axis();
    let (rows, row_w) = quad.axes[row_axis].nodes_weights();
    let (cols, col_w) = quad.axes[1 - row_axis].nodes_weights();
    let (dim, k) = v.shape();
    let support = probe_support(v);
    let window = v.view((support.start, 0), (support.len(), k));
    let partials: Vec<Result<CMatrix>> = rows
        .par_iter()
        .zip(row_w.par_iter())
        .map(|(r, rw)| {
            let mut acc = CMatrix::zeros(dim, k);
            let mut proj = CVector::zeros(k);
            family.visit_row(*r, *rw, &cols, &col_w, 0..dim, &mut |w, x| {
                let xs = DVectorView::from_slice(&x[support.clone()], support.len());
                window.ad_mul_to(&xs, &mut proj);
                // acc += w |x> <x|V>, with <x|V_j> = conj(proj_j)
                let x = DVectorView::from_slice(x, dim);
                acc.gerc(C64::new(w, 0.0), &x, &proj, C64::new(1.0, 0.0));
            })?;
            Ok(acc)
        })
        .collect();
    let mut total = CMatrix::zeros(dim, k);
    for p in partials {
        total += p?;
    }
    Ok(total)
}
