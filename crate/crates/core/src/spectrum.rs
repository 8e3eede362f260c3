// Copyright 2026 The coherent-bridge Authors
// SPDX-License-Identifier: Apache-2.0

//! Low-lying spectra and gap statistics for half-line Hamiltonians.

use serde::Serialize;

use crate::dsl::{promote, Constants, HamiltonianExpr, OrderingRule};
use crate::error::{Error, Result};
use crate::operators::{lowest_eigenvalues_banded, BandMatrix, GridSpec, OperatorSet, PhysicalParams, Storage, C64};
use crate::phase::Family;

/// Bisection tolerance, relative to the eigenvalue.
pub const EIGEN_REL_TOL: f64 = 1e-13;

/// Eigenvalues in increasing order with their consecutive gaps.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapReport {
    pub label: String,
    pub eigenvalues: Vec<f64>,
    pub gaps: Vec<f64>,
    pub mean_gap: f64,
    /// `(max gap - min gap) / mean gap`.
    pub relative_spread: f64,
}

impl GapReport {
    pub fn from_eigenvalues(label: impl Into<String>, eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.len() < 2 {
            return Err(Error::InvalidParameter("gap statistics need at least two levels".into()));
        }
        if eigenvalues.iter().any(|e| !e.is_finite()) {
            return Err(Error::NonFinite("eigenvalues".into()));
        }
        let gaps: Vec<f64> = eigenvalues.windows(2).map(|w| w[1] - w[0]).collect();
        let mean_gap = gaps.iter().sum::<f64>() / gaps.len() as f64;
        let lo = gaps.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = gaps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            label: label.into(),
            eigenvalues,
            gaps,
            mean_gap,
            relative_spread: (hi - lo) / mean_gap.abs(),
        })
    }
}

/// Lowest `gaps + 1` levels of an affine expression promoted on the half-line grid.
pub fn affine_spectrum(
    expr: &HamiltonianExpr,
    grid: &GridSpec,
    params: PhysicalParams,
    constants: &Constants,
    rule: OrderingRule,
    gaps: usize,
) -> Result<GapReport> {
    if expr.family != Family::Affine {
        return Err(Error::FamilyMismatch {
            expected: Family::Affine.to_string(),
            got: expr.family.to_string(),
        });
    }
    if gaps == 0 {
        return Err(Error::InvalidParameter("at least one gap is required".into()));
    }
    params.validate()?;
    let set = OperatorSet::affine(grid, params)?;
    let h = promote(expr, &set, constants, rule)?;
    let band = match h.storage() {
        Storage::Banded(b) => b.clone(),
        Storage::Dense(_) => {
            return Err(Error::InvalidParameter(
                "half-line Hamiltonian is not banded; trigonometric terms are not supported here".into(),
            ))
        }
    };
    let levels = lowest_eigenvalues_banded(&band, gaps + 1, EIGEN_REL_TOL);
    GapReport::from_eigenvalues("affine", levels)
}

/// Oscillator `p^2/2m + m w^2 x^2/2` on `(0, length)` with a hard wall at
/// the origin, by second-order finite differences on `nodes` interior points.
pub fn dirichlet_wall_spectrum(params: PhysicalParams, length: f64, nodes: usize, gaps: usize) -> Result<GapReport> {
    params.validate()?;
    if !(length.is_finite() && length > 0.0) {
        return Err(Error::InvalidParameter(format!("wall box length must be positive, got {length}")));
    }
    if nodes < GridSpec::MIN_NODES {
        return Err(Error::RepresentationTooSmall(format!(
            "wall grid needs at least {} nodes, got {nodes}",
            GridSpec::MIN_NODES
        )));
    }
    if gaps == 0 {
        return Err(Error::InvalidParameter("at least one gap is required".into()));
    }
    let h = length / (nodes + 1) as f64;
    let kinetic = params.hbar * params.hbar / (2.0 * params.mass * h * h);
    let spring = 0.5 * params.mass * params.omega * params.omega;
    let mut band = BandMatrix::zeros(nodes, 1);
    for i in 0..nodes {
        let x = (i + 1) as f64 * h;
        band.set(i, i, C64::new(2.0 * kinetic + spring * x * x, 0.0));
        if i + 1 < nodes {
            band.set(i, i + 1, C64::new(-kinetic, 0.0));
            band.set(i + 1, i, C64::new(-kinetic, 0.0));
        }
    }
    let levels = lowest_eigenvalues_banded(&band, gaps + 1, EIGEN_REL_TOL);
    GapReport::from_eigenvalues("dirichlet_wall", levels)
}
