// Copyright 2026 The coherent-bridge Authors
// SPDX-License-Identifier: Apache-2.0

//! Finite-dimensional realizations of the canonical, spin and affine
//! operator algebras.
//!
//! * canonical: truncated Fock space, `Q` and `P` from ladder operators;
//! * spin: the exact `2s+1` dimensional weight basis, ordered `m = s, ..., -s`;
//! * affine: a half-line grid, `Q` diagonal and `D` a symmetrized finite
//!   difference dilation generator.
//!
//! The half-line grid is uniform in `u = ln x`. Amplitudes are stored as
//! `c_i = sqrt(w_i) psi(x_i)` with `w_i = x_i du`, so the grid inner product
//! is the plain Euclidean one and `D = -i hbar (x d/dx + 1/2)` becomes
//! `-i hbar d/du` on the stored amplitudes.

mod band;
mod eigen;
mod expm;
mod set;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use band::BandMatrix;
pub use eigen::{lowest_eigenvalues_banded, HermitianExp};
pub use expm::{mat_exp, mat_exp_dense};
pub use set::{Generator, OperatorSet};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub(crate) const I: C64 = C64 { re: 0.0, im: 1.0 };
pub(crate) const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub(crate) const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Entry-wise Hermiticity tolerance, relative to `max(1, max |A_ij|)`.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhysicalParams {
    pub hbar: f64,
    pub omega: f64,
    pub mass: f64,
    /// Spin weight, a positive half-integer.
    pub s: f64,
    pub beta: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            hbar: 1.0,
            omega: 1.0,
            mass: 1.0,
            s: 0.5,
            beta: 1.0,
        }
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("hbar", self.hbar),
            ("omega", self.omega),
            ("mass", self.mass),
            ("s", self.s),
            ("beta", self.beta),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// `beta > hbar/2`, the condition for the affine resolution of identity.
    pub fn check_affine_identity(&self) -> Result<()> {
        if self.beta <= self.hbar / 2.0 {
            return Err(Error::BetaBelowThreshold {
                beta: self.beta,
                hbar: self.hbar,
            });
        }
        Ok(())
    }

    pub fn with_hbar(mut self, hbar: f64) -> Self {
        self.hbar = hbar;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RepresentationKind {
    FockTruncated,
    /// Stores `2s`.
    SpinWeight { two_s: u32 },
    HalfLineGrid,
}

/// Log-uniform half-line grid: `x_i = exp(u_min + i du)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfLineGrid {
    pub u_min: f64,
    pub du: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl HalfLineGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn x_min(&self) -> f64 {
        self.nodes[0]
    }

    pub fn x_max(&self) -> f64 {
        *self.nodes.last().expect("non-empty grid")
    }

    pub fn u(&self, i: usize) -> f64 {
        self.u_min + i as f64 * self.du
    }
}

/// Requested half-line discretization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub x_min: f64,
    pub x_max: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            n: 2048,
            x_min: 1e-13,
            x_max: 60.0,
        }
    }
}

impl GridSpec {
    pub const MIN_NODES: usize = 64;

    pub fn build(&self) -> Result<HalfLineGrid> {
        if self.n < Self::MIN_NODES {
            return Err(Error::RepresentationTooSmall(format!(
                "half-line grid needs at least {} nodes, got {}",
                Self::MIN_NODES,
                self.n
            )));
        }
        if !(self.x_min > 0.0) || !self.x_min.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "grid nodes must be strictly positive, got x_min = {}",
                self.x_min
            )));
        }
        if !(self.x_max > self.x_min) || !self.x_max.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "grid needs x_max > x_min, got [{}, {}]",
                self.x_min, self.x_max
            )));
        }
        let u_min = self.x_min.ln();
        let du = (self.x_max.ln() - u_min) / (self.n - 1) as f64;
        let nodes: Vec<f64> = (0..self.n).map(|i| (u_min + i as f64 * du).exp()).collect();
        let weights = nodes.iter().map(|x| x * du).collect();
        Ok(HalfLineGrid {
            u_min,
            du,
            nodes,
            weights,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Representation {
    pub kind: RepresentationKind,
    pub dim: usize,
    pub params: PhysicalParams,
    pub grid: Option<HalfLineGrid>,
}

impl Representation {
    pub fn spin_weight(&self) -> Option<f64> {
        match self.kind {
            RepresentationKind::SpinWeight { two_s } => Some(two_s as f64 / 2.0),
            _ => None,
        }
    }

    pub fn grid(&self) -> Result<&HalfLineGrid> {
        self.grid
            .as_ref()
            .ok_or_else(|| Error::RepresentationMismatch("not a half-line grid".into()))
    }
}

pub(crate) fn same_rep(a: &Arc<Representation>, b: &Arc<Representation>) -> Result<()> {
    if Arc::ptr_eq(a, b) || a == b {
        Ok(())
    } else {
        Err(Error::RepresentationMismatch(format!(
            "{:?}(dim {}) vs {:?}(dim {})",
            a.kind, a.dim, b.kind, b.dim
        )))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Storage {
    Dense(CMatrix),
    Banded(BandMatrix),
}

impl Storage {
    pub fn dim(&self) -> usize {
        match self {
            Storage::Dense(m) => m.nrows(),
            Storage::Banded(b) => b.dim(),
        }
    }

    pub fn to_dense(&self) -> CMatrix {
        match self {
            Storage::Dense(m) => m.clone(),
            Storage::Banded(b) => b.to_dense(),
        }
    }

    fn max_abs(&self) -> f64 {
        match self {
            Storage::Dense(m) => m.iter().map(|v| v.norm()).fold(0.0, f64::max),
            Storage::Banded(b) => b.max_abs(),
        }
    }

    fn hermitian_defect(&self) -> f64 {
        match self {
            Storage::Dense(m) => (m - m.adjoint()).iter().map(|v| v.norm()).fold(0.0, f64::max),
            Storage::Banded(b) => b.hermitian_defect(),
        }
    }

    fn is_finite(&self) -> bool {
        match self {
            Storage::Dense(m) => m.iter().all(|v| v.re.is_finite() && v.im.is_finite()),
            Storage::Banded(b) => b.is_finite(),
        }
    }

    fn matmul(&self, rhs: &Storage) -> Storage {
        match (self, rhs) {
            (Storage::Banded(a), Storage::Banded(b)) => Storage::Banded(a.matmul(b)),
            _ => Storage::Dense(self.to_dense() * rhs.to_dense()),
        }
    }

    fn add_scaled(&self, rhs: &Storage, s: C64) -> Storage {
        match (self, rhs) {
            (Storage::Banded(a), Storage::Banded(b)) => Storage::Banded(a.add_scaled(b, s)),
            _ => Storage::Dense(self.to_dense() + rhs.to_dense() * s),
        }
    }

    fn scale(&self, s: C64) -> Storage {
        match self {
            Storage::Dense(m) => Storage::Dense(m * s),
            Storage::Banded(b) => Storage::Banded(b.scale(s)),
        }
    }

    fn adjoint(&self) -> Storage {
        match self {
            Storage::Dense(m) => Storage::Dense(m.adjoint()),
            Storage::Banded(b) => Storage::Banded(b.adjoint()),
        }
    }

    fn apply(&self, v: &CVector) -> CVector {
        match self {
            Storage::Dense(m) => m * v,
            Storage::Banded(b) => b.apply(v),
        }
    }
}

/// An operator on a representation. The `hermitian` flag is checked when set.
#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    rep: Arc<Representation>,
    storage: Storage,
    hermitian: bool,
}

impl OperatorMatrix {
    pub fn new(rep: Arc<Representation>, storage: Storage) -> Result<Self> {
        if storage.dim() != rep.dim {
            return Err(Error::RepresentationMismatch(format!(
                "matrix dimension {} on a dimension {} representation",
                storage.dim(),
                rep.dim
            )));
        }
        if !storage.is_finite() {
            return Err(Error::NonFinite("matrix entries".into()));
        }
        Ok(Self {
            rep,
            storage,
            hermitian: false,
        })
    }

    /// Constructs and verifies a Hermitian operator.
    pub fn hermitian(rep: Arc<Representation>, storage: Storage) -> Result<Self> {
        let mut op = Self::new(rep, storage)?;
        let defect = op.hermitian_defect();
        if defect > HERMITIAN_TOL * op.storage.max_abs().max(1.0) {
            return Err(Error::NotHermitian(defect));
        }
        op.hermitian = true;
        Ok(op)
    }

    pub(crate) fn from_parts_unchecked(rep: Arc<Representation>, storage: Storage) -> Self {
        Self {
            rep,
            storage,
            hermitian: false,
        }
    }

    pub fn identity(rep: &Arc<Representation>) -> Self {
        let storage = match rep.kind {
            RepresentationKind::HalfLineGrid => Storage::Banded(BandMatrix::identity(rep.dim)),
            _ => Storage::Dense(CMatrix::identity(rep.dim, rep.dim)),
        };
        Self {
            rep: rep.clone(),
            storage,
            hermitian: true,
        }
    }

    pub fn rep(&self) -> &Arc<Representation> {
        &self.rep
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    pub fn dim(&self) -> usize {
        self.rep.dim
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn hermitian_defect(&self) -> f64 {
        self.storage.hermitian_defect()
    }

    pub fn to_dense(&self) -> CMatrix {
        self.storage.to_dense()
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        match &self.storage {
            Storage::Dense(m) => m[(i, j)],
            Storage::Banded(b) => b.get(i, j),
        }
    }

    pub fn matmul(&self, rhs: &OperatorMatrix) -> Result<OperatorMatrix> {
        same_rep(&self.rep, &rhs.rep)?;
        Ok(Self::from_parts_unchecked(
            self.rep.clone(),
            self.storage.matmul(&rhs.storage),
        ))
    }

    pub fn add_scaled(&self, rhs: &OperatorMatrix, s: C64) -> Result<OperatorMatrix> {
        same_rep(&self.rep, &rhs.rep)?;
        Ok(Self::from_parts_unchecked(
            self.rep.clone(),
            self.storage.add_scaled(&rhs.storage, s),
        ))
    }

    pub fn scale(&self, s: C64) -> OperatorMatrix {
        let mut out = Self::from_parts_unchecked(self.rep.clone(), self.storage.scale(s));
        out.hermitian = self.hermitian && s.im == 0.0;
        out
    }

    pub fn adjoint(&self) -> OperatorMatrix {
        let mut out = Self::from_parts_unchecked(self.rep.clone(), self.storage.adjoint());
        out.hermitian = self.hermitian;
        out
    }

    pub fn commutator(&self, rhs: &OperatorMatrix) -> Result<OperatorMatrix> {
        self.matmul(rhs)?.add_scaled(&rhs.matmul(self)?, -ONE)
    }

    /// `(A + A^dagger)/2`, flagged Hermitian.
    pub fn hermitian_part(&self) -> OperatorMatrix {
        let sym = self
            .storage
            .add_scaled(&self.storage.adjoint(), ONE)
            .scale(C64::new(0.5, 0.0));
        Self {
            rep: self.rep.clone(),
            storage: sym,
            hermitian: true,
        }
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        same_rep(&self.rep, &psi.rep)?;
        Ok(StateVector {
            rep: self.rep.clone(),
            amps: self.storage.apply(&psi.amps),
        })
    }

    pub fn apply_vec(&self, v: &CVector) -> CVector {
        self.storage.apply(v)
    }

    /// Marks an operator Hermitian after verification.
    pub fn into_hermitian(self) -> Result<OperatorMatrix> {
        Self::hermitian(self.rep, self.storage)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    rep: Arc<Representation>,
    amps: CVector,
}

impl StateVector {
    pub fn new(rep: Arc<Representation>, amps: CVector) -> Result<Self> {
        if amps.len() != rep.dim {
            return Err(Error::RepresentationMismatch(format!(
                "{} amplitudes on a dimension {} representation",
                amps.len(),
                rep.dim
            )));
        }
        Ok(Self { rep, amps })
    }

    pub fn basis(rep: &Arc<Representation>, k: usize) -> Self {
        let mut amps = CVector::zeros(rep.dim);
        amps[k] = ONE;
        Self {
            rep: rep.clone(),
            amps,
        }
    }

    /// Samples a wave function on a half-line grid.
    pub fn from_grid_function(rep: &Arc<Representation>, f: impl Fn(f64) -> C64) -> Result<Self> {
        let grid = rep.grid()?;
        let amps = CVector::from_iterator(
            grid.len(),
            grid.nodes
                .iter()
                .zip(&grid.weights)
                .map(|(x, w)| f(*x) * w.sqrt()),
        );
        Ok(Self {
            rep: rep.clone(),
            amps,
        })
    }

    /// Wave function values `psi(x_i)` on a half-line grid.
    pub fn grid_values(&self) -> Result<Vec<C64>> {
        let grid = self.rep.grid()?;
        Ok(self
            .amps
            .iter()
            .zip(&grid.weights)
            .map(|(a, w)| a / w.sqrt())
            .collect())
    }

    pub fn rep(&self) -> &Arc<Representation> {
        &self.rep
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amps
    }

    pub fn into_amplitudes(self) -> CVector {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    pub fn normalized(mut self) -> Self {
        let n = self.amps.norm();
        if n > 0.0 {
            self.amps /= C64::new(n, 0.0);
        }
        self
    }

    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        same_rep(&self.rep, &other.rep)?;
        Ok(self.amps.dotc(&other.amps))
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rep: self.rep.clone(),
            amps: &self.amps * s,
        }
    }

    pub fn add_scaled(&self, other: &StateVector, s: C64) -> Result<Self> {
        same_rep(&self.rep, &other.rep)?;
        Ok(Self {
            rep: self.rep.clone(),
            amps: &self.amps + &other.amps * s,
        })
    }
}

/// `<psi|A|psi>`.
pub fn expectation(a: &OperatorMatrix, psi: &StateVector) -> Result<C64> {
    same_rep(&a.rep, &psi.rep)?;
    Ok(psi.amps.dotc(&a.storage.apply(&psi.amps)))
}

/// `<chi|A|psi>`.
pub fn matrix_element(chi: &StateVector, a: &OperatorMatrix, psi: &StateVector) -> Result<C64> {
    same_rep(&a.rep, &psi.rep)?;
    same_rep(&chi.rep, &psi.rep)?;
    Ok(chi.amps.dotc(&a.storage.apply(&psi.amps)))
}

/// Truncated Fock representation with `Q = sqrt(hbar/2w)(a + a^dagger)` and
/// `P = i sqrt(hbar w/2)(a^dagger - a)`. The mass enters only through
/// Hamiltonians; the fiducial is annihilated by `Q + iP/w`.
pub fn build_canonical(
    rep_dim: usize,
    params: PhysicalParams,
) -> Result<(Arc<Representation>, OperatorMatrix, OperatorMatrix)> {
    if rep_dim < 2 {
        return Err(Error::RepresentationTooSmall(format!(
            "Fock truncation needs dim >= 2, got {rep_dim}"
        )));
    }
    params.validate()?;
    let rep = Arc::new(Representation {
        kind: RepresentationKind::FockTruncated,
        dim: rep_dim,
        params,
        grid: None,
    });
    let lower = ladder_lowering(rep_dim);
    let raise = lower.adjoint();
    let xq = (params.hbar / (2.0 * params.omega)).sqrt();
    let xp = (params.hbar * params.omega / 2.0).sqrt();
    let q = (&lower + &raise) * C64::new(xq, 0.0);
    let p = (&raise - &lower) * C64::new(0.0, xp);
    Ok((
        rep.clone(),
        OperatorMatrix::hermitian(rep.clone(), Storage::Dense(q))?,
        OperatorMatrix::hermitian(rep, Storage::Dense(p))?,
    ))
}

pub(crate) fn ladder_lowering(dim: usize) -> CMatrix {
    let mut a = CMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// Spin-`s` generators in the weight basis ordered `m = s, s-1, ..., -s`.
pub fn build_spin(
    s: f64,
    hbar: f64,
) -> Result<(
    Arc<Representation>,
    OperatorMatrix,
    OperatorMatrix,
    OperatorMatrix,
)> {
    let two_s = (2.0 * s).round();
    if !(s > 0.0) || (2.0 * s - two_s).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "spin weight must be a positive half-integer, got {s}"
        )));
    }
    if !(hbar > 0.0) || !hbar.is_finite() {
        return Err(Error::InvalidParameter(format!("hbar must be positive, got {hbar}")));
    }
    let two_s = two_s as u32;
    let s = two_s as f64 / 2.0;
    let dim = two_s as usize + 1;
    let params = PhysicalParams {
        hbar,
        s,
        ..PhysicalParams::default()
    };
    let rep = Arc::new(Representation {
        kind: RepresentationKind::SpinWeight { two_s },
        dim,
        params,
        grid: None,
    });
    let weight = |k: usize| s - k as f64;
    let mut raise = CMatrix::zeros(dim, dim);
    for k in 1..dim {
        let m = weight(k);
        // S+ |m> = hbar sqrt(s(s+1) - m(m+1)) |m+1>, and m+1 sits at index k-1
        raise[(k - 1, k)] = C64::new(hbar * (s * (s + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
    }
    let lower = raise.adjoint();
    let s1 = (&raise + &lower) * C64::new(0.5, 0.0);
    let s2 = (&raise - &lower) * C64::new(0.0, -0.5);
    let s3 = CMatrix::from_diagonal(&DVector::from_iterator(
        dim,
        (0..dim).map(|k| C64::new(hbar * weight(k), 0.0)),
    ));
    Ok((
        rep.clone(),
        OperatorMatrix::hermitian(rep.clone(), Storage::Dense(s1))?,
        OperatorMatrix::hermitian(rep.clone(), Storage::Dense(s2))?,
        OperatorMatrix::hermitian(rep, Storage::Dense(s3))?,
    ))
}

/// Result of [`build_affine`].
#[derive(Clone, Debug)]
pub struct AffineOperators {
    pub rep: Arc<Representation>,
    pub q: OperatorMatrix,
    pub d: OperatorMatrix,
    pub q_inv: OperatorMatrix,
    /// `max |A - A^dagger|` of the raw difference stencil before symmetrization.
    pub symmetrization_defect: f64,
}

/// Maximum allowed symmetrization defect for the dilation stencil.
pub const SYMMETRIZATION_TOL: f64 = 1e-8;

/// Half-line grid with `Q` diagonal and `D` the symmetrized fourth-order
/// central difference of `-i hbar d/du`.
pub fn build_affine(grid_spec: &GridSpec, params: PhysicalParams) -> Result<AffineOperators> {
    params.validate()?;
    let grid = grid_spec.build()?;
    let n = grid.len();
    let hbar = params.hbar;
    let inv = 1.0 / (12.0 * grid.du);
    let mut stencil = BandMatrix::zeros(n, 2);
    for i in 0..n {
        for (off, c) in [(-2isize, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0)] {
            let j = i as isize + off;
            if j >= 0 && (j as usize) < n {
                // -i hbar * c/(12 du)
                stencil.set(i, j as usize, C64::new(0.0, -hbar * c * inv));
            }
        }
    }
    let symmetrization_defect = stencil.hermitian_defect();
    if symmetrization_defect > SYMMETRIZATION_TOL {
        return Err(Error::Tolerance {
            what: "dilation stencil symmetrization defect".into(),
            achieved: symmetrization_defect,
            required: SYMMETRIZATION_TOL,
        });
    }
    let d = stencil
        .add_scaled(&stencil.adjoint(), ONE)
        .scale(C64::new(0.5, 0.0));
    let q = BandMatrix::from_diagonal(
        &grid.nodes.iter().map(|x| C64::new(*x, 0.0)).collect::<Vec<_>>(),
    );
    let q_inv = BandMatrix::from_diagonal(
        &grid
            .nodes
            .iter()
            .map(|x| C64::new(1.0 / x, 0.0))
            .collect::<Vec<_>>(),
    );
    let rep = Arc::new(Representation {
        kind: RepresentationKind::HalfLineGrid,
        dim: n,
        params,
        grid: Some(grid),
    });
    Ok(AffineOperators {
        q: OperatorMatrix::hermitian(rep.clone(), Storage::Banded(q))?,
        d: OperatorMatrix::hermitian(rep.clone(), Storage::Banded(d))?,
        q_inv: OperatorMatrix::hermitian(rep.clone(), Storage::Banded(q_inv))?,
        rep,
        symmetrization_defect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_entry(m: &CMatrix) -> f64 {
        m.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn canonical_dim_two_matches_ladder_by_hand() {
        let (_, q, p) = build_canonical(2, PhysicalParams::default()).unwrap();
        let h = 0.5f64.sqrt();
        let q_expect = CMatrix::from_row_slice(2, 2, &[ZERO, C64::new(h, 0.0), C64::new(h, 0.0), ZERO]);
        let p_expect = CMatrix::from_row_slice(2, 2, &[ZERO, C64::new(0.0, -h), C64::new(0.0, h), ZERO]);
        assert!(max_entry(&(q.to_dense() - q_expect)) < 1e-15);
        assert!(max_entry(&(p.to_dense() - p_expect)) < 1e-15);
    }

    #[test]
    fn canonical_commutator_truncation_law() {
        for dim in [2usize, 5, 16, 64] {
            let params = PhysicalParams { hbar: 0.7, omega: 1.3, ..Default::default() };
            let (_, q, p) = build_canonical(dim, params).unwrap();
            let c = q.commutator(&p).unwrap().to_dense();
            let mut expect = CMatrix::identity(dim, dim) * C64::new(0.0, params.hbar);
            expect[(dim - 1, dim - 1)] -= C64::new(0.0, params.hbar * dim as f64);
            assert!(max_entry(&(&c - &expect)) < 1e-10, "dim {dim}");
            // low block is canonical
            for i in 0..dim - 1 {
                for j in 0..dim - 1 {
                    let target = if i == j { C64::new(0.0, params.hbar) } else { ZERO };
                    assert!((c[(i, j)] - target).norm() < 1e-10);
                }
            }
            let top = c[(dim - 1, dim - 1)] - C64::new(0.0, params.hbar);
            assert!((top.norm() - params.hbar * dim as f64).abs() < 1e-8 * params.hbar * dim as f64);
        }
    }

    #[test]
    fn canonical_moments_scale_with_hbar() {
        let base = PhysicalParams::default();
        let ground = |params: PhysicalParams| {
            let (rep, q, p) = build_canonical(16, params).unwrap();
            let g = StateVector::basis(&rep, 0);
            let q2 = expectation(&q.matmul(&q).unwrap(), &g).unwrap().re;
            let p2 = expectation(&p.matmul(&p).unwrap(), &g).unwrap().re;
            (q2, p2)
        };
        let (q1, p1) = ground(base);
        let (q2, p2) = ground(base.with_hbar(2.0));
        assert!((q2 / q1 - 2.0).abs() < 1e-12 && (p2 / p1 - 2.0).abs() < 1e-12);
        assert!((q1 - 0.5).abs() < 1e-14);
    }

    #[test]
    fn canonical_rejects_tiny_dimension() {
        assert!(matches!(
            build_canonical(1, PhysicalParams::default()),
            Err(Error::RepresentationTooSmall(_))
        ));
    }

    #[test]
    fn expectation_basics_and_mismatch() {
        let (rep, q, _) = build_canonical(8, PhysicalParams::default()).unwrap();
        let g = StateVector::basis(&rep, 0);
        let id = OperatorMatrix::identity(&rep);
        assert!((expectation(&id, &g).unwrap() - ONE).norm() < 1e-15);
        assert!(expectation(&q, &g).unwrap().norm() < 1e-15);
        let (rep2, _, _) = build_canonical(9, PhysicalParams::default()).unwrap();
        let g2 = StateVector::basis(&rep2, 0);
        assert!(matches!(expectation(&q, &g2), Err(Error::RepresentationMismatch(_))));
    }

    #[test]
    fn spin_half_is_pauli() {
        let (_, s1, s2, s3) = build_spin(0.5, 1.0).unwrap();
        let half = |re: f64, im: f64| C64::new(re * 0.5, im * 0.5);
        let x = CMatrix::from_row_slice(2, 2, &[ZERO, half(1.0, 0.0), half(1.0, 0.0), ZERO]);
        let y = CMatrix::from_row_slice(2, 2, &[ZERO, half(0.0, -1.0), half(0.0, 1.0), ZERO]);
        let z = CMatrix::from_row_slice(2, 2, &[half(1.0, 0.0), ZERO, ZERO, half(-1.0, 0.0)]);
        assert!(max_entry(&(s1.to_dense() - x)) < 1e-15);
        assert!(max_entry(&(s2.to_dense() - y)) < 1e-15);
        assert!(max_entry(&(s3.to_dense() - z)) < 1e-15);
    }

    #[test]
    fn spin_one_weight_diagonal() {
        let (_, _, _, s3) = build_spin(1.0, 1.0).unwrap();
        let d: Vec<f64> = (0..3).map(|k| s3.entry(k, k).re).collect();
        assert_eq!(d, vec![1.0, 0.0, -1.0]);
    }

    #[test]
    fn spin_algebra_is_exact() {
        for two_s in 1..=50u32 {
            let s = two_s as f64 / 2.0;
            let hbar = 1.0;
            let (rep, s1, s2, s3) = build_spin(s, hbar).unwrap();
            let ops = [&s1, &s2, &s3];
            for k in 0..3 {
                let (a, b, c) = (ops[k], ops[(k + 1) % 3], ops[(k + 2) % 3]);
                let defect = a.commutator(b).unwrap().to_dense() - c.to_dense() * C64::new(0.0, hbar);
                assert!(max_entry(&defect) <= 1e-12, "s={s}");
            }
            let cas = s1.matmul(&s1).unwrap().to_dense()
                + s2.matmul(&s2).unwrap().to_dense()
                + s3.matmul(&s3).unwrap().to_dense();
            let expect = CMatrix::identity(rep.dim, rep.dim) * C64::new(hbar * hbar * s * (s + 1.0), 0.0);
            assert!(max_entry(&(cas - expect)) <= 1e-12, "s={s}");
        }
    }

    #[test]
    fn spin_rejects_non_half_integer() {
        assert!(build_spin(0.3, 1.0).is_err());
        assert!(build_spin(0.0, 1.0).is_err());
    }

    fn affine(n: usize) -> AffineOperators {
        build_affine(&GridSpec { n, x_min: 1e-6, x_max: 40.0 }, PhysicalParams::default()).unwrap()
    }

    #[test]
    fn affine_rejects_bad_grids() {
        let p = PhysicalParams::default();
        assert!(matches!(
            build_affine(&GridSpec { n: 32, x_min: 0.1, x_max: 10.0 }, p),
            Err(Error::RepresentationTooSmall(_))
        ));
        assert!(build_affine(&GridSpec { n: 128, x_min: 0.0, x_max: 10.0 }, p).is_err());
        assert!(build_affine(&GridSpec { n: 128, x_min: -1.0, x_max: 10.0 }, p).is_err());
    }

    #[test]
    fn affine_nodes_are_positive_increasing() {
        let ops = affine(256);
        let g = ops.rep.grid().unwrap();
        assert!(g.nodes[0] > 0.0);
        assert!(g.nodes.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(ops.symmetrization_defect, 0.0);
    }

    #[test]
    fn dilation_acts_pointwise_on_closed_form() {
        let ops = affine(4096);
        let psi = StateVector::from_grid_function(&ops.rep, |x| C64::new(x * (-x).exp(), 0.0)).unwrap();
        let dpsi = ops.d.apply(&psi).unwrap().grid_values().unwrap();
        let g = ops.rep.grid().unwrap();
        for i in (200..g.len() - 200).step_by(97) {
            let x = g.nodes[i];
            let f = x * (-x).exp();
            let fp = (1.0 - x) * (-x).exp();
            let expect = C64::new(0.0, -1.0) * (x * fp + f / 2.0);
            assert!((dpsi[i] - expect).norm() < 1e-6, "x={x}");
        }
    }

    #[test]
    fn dilation_commutator_on_interior_bump() {
        let ops = affine(2048);
        let bump = StateVector::from_grid_function(&ops.rep, |x| {
            let u = x.ln() - 0.5;
            C64::new((-2.0 * u * u).exp() / x.sqrt(), 0.0)
        })
        .unwrap();
        let lhs = ops.q.commutator(&ops.d).unwrap().apply(&bump).unwrap();
        let rhs = ops.q.apply(&bump).unwrap().scale(I);
        let resid = lhs.add_scaled(&rhs, -ONE).unwrap().norm() / bump.norm();
        assert!(resid <= 1e-6, "residual {resid:e}");
    }

    #[test]
    fn dilation_expectation_is_real() {
        let ops = affine(512);
        let psi = StateVector::from_grid_function(&ops.rep, |x| {
            C64::new(x * (-x).exp(), 0.3 * x * x * (-x).exp()) * C64::from_polar(1.0, x)
        })
        .unwrap();
        assert!(expectation(&ops.d, &psi).unwrap().im.abs() < 1e-10 * psi.norm().powi(2));
    }
}
