// Copyright 2026 The coherent-bridge Authors
// SPDX-License-Identifier: Apache-2.0

//! Canonical `|p,q>`, spin `|theta,phi>` and affine `|p;q>` coherent states
//! behind one interface.

mod identity;

use std::f64::consts::PI;
use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{
    expectation, CVector, Generator, GridSpec, HermitianExp, OperatorMatrix, OperatorSet,
    PhysicalParams, Representation, StateVector, C64, I, ONE,
};
use crate::phase::{Family, PhasePoint};
use crate::quadrature::{AxisSpec, QuadratureSpec};

pub use identity::{affine_probe, default_probe, identity_defect, DefectReport};
pub(crate) use identity::apply_projector;

/// Canonical fiducial tolerance on `||(Q + iP/w)|w>||`.
pub const CANONICAL_FIDUCIAL_TOL: f64 = 1e-10;
/// Affine fiducial tolerance on the grid residual and first moments.
pub const AFFINE_FIDUCIAL_TOL: f64 = 1e-6;
/// Smallest retained grid norm accepted for a dilated affine state.
pub const AFFINE_COVERAGE: f64 = 1.0 - 1e-10;
/// Half-line grid size used for affine identity checks; the scaled
/// momentum box needs `k x du` small across the probe support.
pub const AFFINE_IDENTITY_GRID: GridSpec = GridSpec { n: 4096, x_min: 1e-13, x_max: 60.0 };
/// Grid amplitudes below this are skipped in quadrature sums.
const AFFINE_NEGLIGIBLE: f64 = 1e-18;

/// A real phase `F(p, q, b)` applied as `exp(iF)` to a coherent state.
#[derive(Clone)]
pub struct PhaseFunction {
    f: Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>,
    pub b: f64,
}

impl PhaseFunction {
    pub fn new(f: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static, b: f64) -> Self {
        Self { f: Arc::new(f), b }
    }

    /// `F = b p q`.
    pub fn bpq(b: f64) -> Self {
        Self::new(|p, q, b| b * p * q, b)
    }

    pub fn eval(&self, point: &PhasePoint) -> f64 {
        (self.f)(point.coords[0], point.coords[1], self.b)
    }
}

impl fmt::Debug for PhaseFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PhaseFunction").field("b", &self.b).finish_non_exhaustive()
    }
}

#[derive(Clone, Debug)]
enum Displacement {
    Canonical { exp_q: HermitianExp, exp_p: HermitianExp },
    Spin { exp_s2: HermitianExp, weights: Vec<f64> },
    /// Dilations act exactly on the closed-form fiducial: on the log grid
    /// `exp(-i ln(q) D/hbar)` is the shift `u -> u - ln q`.
    Affine { kappa: f64, log_norm: f64 },
}

/// Which representation to build a family on; physical parameters are
/// supplied separately so sweeps can rebuild at each `hbar`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum RepresentationSpec {
    Canonical { dim: usize },
    /// Spin weight is taken from `PhysicalParams::s`.
    Spin,
    Affine { grid: GridSpec },
}

impl RepresentationSpec {
    pub fn family(&self) -> Family {
        match self {
            RepresentationSpec::Canonical { .. } => Family::Canonical,
            RepresentationSpec::Spin => Family::Spin,
            RepresentationSpec::Affine { .. } => Family::Affine,
        }
    }

    pub fn build(&self, params: PhysicalParams) -> Result<CoherentFamily> {
        match self {
            RepresentationSpec::Canonical { dim } => CoherentFamily::canonical(*dim, params),
            RepresentationSpec::Spin => CoherentFamily::spin(params.s, params.hbar),
            RepresentationSpec::Affine { grid } => CoherentFamily::affine(grid, params),
        }
    }
}

/// A fiducial vector, its displacement rule and the measure density
/// making the resolution of identity hold.
#[derive(Clone, Debug)]
pub struct CoherentFamily {
    set: OperatorSet,
    fiducial: StateVector,
    fiducial_residual: f64,
    disp: Displacement,
}

impl CoherentFamily {
    pub fn canonical(dim: usize, params: PhysicalParams) -> Result<Self> {
        let set = OperatorSet::canonical(dim, params)?;
        let (fiducial, fiducial_residual) = canonical_fiducial(&set)?;
        let disp = Displacement::Canonical {
            exp_q: HermitianExp::new(set.get(Generator::Q)?)?,
            exp_p: HermitianExp::new(set.get(Generator::P)?)?,
        };
        Ok(Self { set, fiducial, fiducial_residual, disp })
    }

    pub fn spin(s: f64, hbar: f64) -> Result<Self> {
        let set = OperatorSet::spin(s, hbar)?;
        let fiducial = spin_fiducial(&set)?;
        let s = set.params().s;
        let disp = Displacement::Spin {
            exp_s2: HermitianExp::new(set.get(Generator::S2)?)?,
            weights: (0..set.rep.dim).map(|k| s - k as f64).collect(),
        };
        Ok(Self { set, fiducial, fiducial_residual: 0.0, disp })
    }

    pub fn affine(grid: &GridSpec, params: PhysicalParams) -> Result<Self> {
        let set = OperatorSet::affine(grid, params)?;
        let kappa = params.beta / params.hbar;
        let log_norm = affine_log_norm(&set.rep, kappa)?;
        let fiducial = affine_state(&set.rep, kappa, log_norm, 0.0, 1.0);
        let fiducial_residual = affine_fiducial_check(&set, &fiducial)?;
        Ok(Self { set, fiducial, fiducial_residual, disp: Displacement::Affine { kappa, log_norm } })
    }

    pub fn family(&self) -> Family {
        self.set.family
    }

    pub fn rep(&self) -> &Arc<Representation> {
        &self.set.rep
    }

    pub fn operators(&self) -> &OperatorSet {
        &self.set
    }

    pub fn params(&self) -> &PhysicalParams {
        self.set.params()
    }

    pub fn fiducial(&self) -> &StateVector {
        &self.fiducial
    }

    /// Norm of the defining-condition residual achieved by the fiducial.
    pub fn fiducial_residual(&self) -> f64 {
        self.fiducial_residual
    }

    /// Displacement generators in the order they appear in the exponentials:
    /// `(P, Q)`, `(S3, S2)` or `(Q, D)`.
    pub fn generators(&self) -> Result<[&OperatorMatrix; 2]> {
        let (a, b) = match self.family() {
            Family::Canonical => (Generator::P, Generator::Q),
            Family::Spin => (Generator::S3, Generator::S2),
            Family::Affine => (Generator::Q, Generator::D),
        };
        Ok([self.set.get(a)?, self.set.get(b)?])
    }

    /// Density of the resolution of identity with respect to the
    /// coordinate measure `dp dq` or `dtheta dphi`.
    pub fn measure_weight(&self, point: &PhasePoint) -> f64 {
        let prm = self.params();
        match self.family() {
            Family::Canonical => 1.0 / (2.0 * PI * prm.hbar),
            Family::Spin => (2.0 * prm.s + 1.0) * point.coords[0].sin() / (4.0 * PI),
            Family::Affine => (1.0 - prm.hbar / (2.0 * prm.beta)) / (2.0 * PI * prm.hbar),
        }
    }

    fn check_point(&self, point: &PhasePoint) -> Result<()> {
        point.expect_family(self.family())?;
        point.validate()
    }

    pub fn coherent_state(&self, point: &PhasePoint, phase: Option<&PhaseFunction>) -> Result<StateVector> {
        self.check_point(point)?;
        let mut state = StateVector::new(self.set.rep.clone(), self.displaced(point.coords)?)?;
        if let Some(f) = phase {
            state = state.scale(C64::from_polar(1.0, f.eval(point)));
        }
        Ok(state)
    }

    /// Displaced fiducial amplitudes without range checks on the angles,
    /// for difference stencils that step across `phi = pi` or `theta = 0`.
    pub(crate) fn displaced(&self, coords: [f64; 2]) -> Result<CVector> {
        let [a, b] = coords;
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidPoint(format!("non-finite coordinates {a}, {b}")));
        }
        let hbar = self.params().hbar;
        Ok(match &self.disp {
            Displacement::Canonical { exp_q, exp_p } => {
                // exp(-iqP/hbar) exp(ipQ/hbar)|w>
                let v = exp_q.apply(a / hbar, self.fiducial.amplitudes());
                exp_p.apply(-b / hbar, &v)
            }
            Displacement::Spin { exp_s2, weights } => {
                // exp(-i phi S3/hbar) exp(-i theta S2/hbar)|s,s>
                let mut v = exp_s2.apply(-a / hbar, self.fiducial.amplitudes());
                apply_s3_phase(&mut v, weights, b);
                v
            }
            Displacement::Affine { kappa, log_norm } => {
                if !(b > 0.0) {
                    return Err(Error::InvalidPoint(format!("affine q must be positive, got {b}")));
                }
                let mut v = affine_state(&self.set.rep, *kappa, *log_norm, 0.0, b).into_amplitudes();
                let n = v.norm();
                if !(n >= AFFINE_COVERAGE) {
                    return Err(Error::InvalidPoint(format!(
                        "affine q = {b} moves the state off the grid (retained norm {n:.3e})"
                    )));
                }
                v /= C64::new(n, 0.0);
                apply_momentum_phase(&mut v, &self.set.rep.grid()?.nodes, a / hbar);
                v
            }
        })
    }

    /// `<a|b>`.
    pub fn overlap(&self, a: &PhasePoint, b: &PhasePoint) -> Result<C64> {
        self.coherent_state(a, None)?.inner(&self.coherent_state(b, None)?)
    }

    /// Natural widths of the coherent overlap along each quadrature axis.
    /// Affine axes are `k = p min(q, 1)` and `ln q`.
    pub fn natural_widths(&self) -> [f64; 2] {
        let prm = self.params();
        match self.family() {
            Family::Canonical => [(prm.hbar * prm.omega).sqrt(), (prm.hbar / prm.omega).sqrt()],
            Family::Spin => [PI, 2.0 * PI],
            Family::Affine => {
                let kappa = prm.beta / prm.hbar;
                [prm.hbar * kappa.sqrt(), 1.0 / kappa.sqrt()]
            }
        }
    }

    /// Product Gauss–Legendre box of `half_widths` natural widths around
    /// `center`, or the full sphere for spin. Affine boxes are in `(k, ln q)` with `k = p min(q, 1)`.
    pub fn quadrature_around(&self, center: &PhasePoint, half_widths: f64, nodes: usize) -> Result<QuadratureSpec> {
        self.check_point(center)?;
        let w = self.natural_widths();
        let [c0, c1] = center.coords;
        Ok(match self.family() {
            Family::Spin => QuadratureSpec::new(AxisSpec::gauss(0.0, PI, nodes), AxisSpec::periodic(-PI, PI, nodes)),
            Family::Canonical => QuadratureSpec::new(
                AxisSpec::gauss(c0 - half_widths * w[0], c0 + half_widths * w[0], nodes),
                AxisSpec::gauss(c1 - half_widths * w[1], c1 + half_widths * w[1], nodes),
            ),
            Family::Affine => QuadratureSpec::new(
                AxisSpec::gauss(c0 * c1.min(1.0) - half_widths * w[0], c0 * c1.min(1.0) + half_widths * w[0], nodes),
                AxisSpec::gauss(c1.ln() - half_widths * w[1], c1.ln() + half_widths * w[1], nodes),
            ),
        })
    }

    /// Quadrature meeting the identity-defect targets on the default probe:
    /// 8 natural widths with 161 nodes per axis for canonical, 64 x 64 for
    /// spin. The affine `ln q` box widens as `beta -> hbar/2` to capture the
    /// `q^(1 - 2 beta/hbar)` tail of the dilation integral.
    pub fn default_quadrature(&self) -> QuadratureSpec {
        let prm = self.params();
        match self.family() {
            Family::Canonical => {
                let w = self.natural_widths();
                QuadratureSpec::new(AxisSpec::gauss(-8.0 * w[0], 8.0 * w[0], 161), AxisSpec::gauss(-8.0 * w[1], 8.0 * w[1], 161))
            }
            Family::Spin => QuadratureSpec::new(AxisSpec::gauss(0.0, PI, 64), AxisSpec::periodic(-PI, PI, 64)),
            Family::Affine => {
                let kappa = prm.beta / prm.hbar;
                let k_max = prm.hbar * 20f64.max(8.0 * kappa.sqrt());
                let k_nodes = (24.0 * k_max / prm.hbar).ceil() as usize | 1;
                let l = 6f64.max(4.0 + 12.0 / (2.0 * kappa - 1.0).max(1e-3)).min(200.0);
                let l_nodes = ((8.0 * l * kappa.sqrt()).ceil() as usize).max(64) | 1;
                QuadratureSpec::new(AxisSpec::gauss(-k_max, k_max, k_nodes), AxisSpec::gauss(-l, l, l_nodes))
            }
        }
    }

    /// Rejects boxes narrower than the fiducial spread.
    pub(crate) fn check_quadrature(&self, quad: &QuadratureSpec) -> Result<()> {
        quad.validate()?;
        if self.family() == Family::Spin {
            return Ok(());
        }
        let prm = self.params();
        let spread = match self.family() {
            Family::Canonical => [(prm.hbar * prm.omega / 2.0).sqrt(), (prm.hbar / (2.0 * prm.omega)).sqrt()],
            _ => [0.5 * (prm.hbar * prm.beta).sqrt(), (prm.hbar / (2.0 * prm.beta)).sqrt()],
        };
        for (k, ax) in quad.axes.iter().enumerate() {
            if ax.half_width() < spread[k] {
                return Err(Error::Quadrature(format!(
                    "warning: axis {k} half-width {} is below the fiducial width {}",
                    ax.half_width(),
                    spread[k]
                )));
            }
        }
        Ok(())
    }

    /// The axis whose node fixes the expensive part of the displacement.
    pub(crate) fn row_axis(&self) -> usize {
        match self.family() {
            Family::Affine => 1,
            _ => 0,
        }
    }

    /// Calls `f(weight, amplitudes)` for every node with row coordinate
    /// `row`, where `weight` includes the measure density and Jacobian.
    /// Only amplitudes with index in `support` are produced; the slice
    /// passed to `f` starts at `support.start`.
    pub(crate) fn visit_row(
        &self,
        row: f64,
        row_weight: f64,
        cols: &[f64],
        col_weights: &[f64],
        support: Range<usize>,
        f: &mut dyn FnMut(f64, &[C64]),
    ) -> Result<()> {
        let hbar = self.params().hbar;
        match &self.disp {
            Displacement::Canonical { exp_q, exp_p } => {
                let density = self.measure_weight(&PhasePoint::canonical(0.0, 0.0));
                let coeffs = exp_p.coeffs(&exp_q.apply(row / hbar, self.fiducial.amplitudes()));
                for (q, w) in cols.iter().zip(col_weights) {
                    let v = exp_p.apply_coeffs(-q / hbar, &coeffs);
                    f(row_weight * w * density, &v.as_slice()[support.clone()]);
                }
            }
            Displacement::Spin { exp_s2, weights } => {
                let density = self.measure_weight(&PhasePoint::spin(row, 0.0));
                let base = exp_s2.apply(-row / hbar, self.fiducial.amplitudes());
                for (phi, w) in cols.iter().zip(col_weights) {
                    let mut v = base.clone();
                    apply_s3_phase(&mut v, weights, *phi);
                    f(row_weight * w * density, &v.as_slice()[support.clone()]);
                }
            }
            Displacement::Affine { kappa, log_norm } => {
                // (k, ln q) with p = k / min(q, 1): dp dq = max(q, 1) dk d(ln q).
                // States are left unnormalized so that dilations pushing
                // weight off the grid lose it, as they would in the integral.
                let q = row.exp();
                let density = self.measure_weight(&PhasePoint::affine(0.0, 1.0)) * q.max(1.0);
                let grid = self.set.rep.grid()?;
                let ln_q = q.ln();
                let mut lo = usize::MAX;
                let mut hi = 0;
                let base: Vec<C64> = support
                    .clone()
                    .map(|i| {
                        let a = (log_norm + affine_log_profile(*kappa, grid.u(i), ln_q)).exp();
                        if a > AFFINE_NEGLIGIBLE {
                            lo = lo.min(i);
                            hi = i + 1;
                        }
                        C64::new(a, 0.0)
                    })
                    .collect();
                if lo >= hi {
                    return Ok(());
                }
                let nodes = &grid.nodes[lo..hi];
                let base = &base[lo - support.start..hi - support.start];
                let scale = 1.0 / (q.min(1.0) * hbar);
                let mut v = vec![C64::new(0.0, 0.0); support.len()];
                let mut vm = v.clone();
                let off = lo - support.start;
                let n = cols.len();
                let symmetric = is_symmetric(cols);
                let first = if symmetric { n.div_ceil(2) } else { n };
                for j in 0..first {
                    let mirror = n - 1 - j;
                    let paired = symmetric && mirror != j;
                    let k = cols[j] * scale;
                    for (i, (x, b)) in nodes.iter().zip(base).enumerate() {
                        let e = C64::from_polar(1.0, k * x);
                        v[off + i] = b * e;
                        if paired {
                            vm[off + i] = b * e.conj();
                        }
                    }
                    f(row_weight * col_weights[j] * density, &v);
                    if paired {
                        f(row_weight * col_weights[mirror] * density, &vm);
                    }
                }
            }
        }
        Ok(())
    }
}

fn is_symmetric(cols: &[f64]) -> bool {
    let n = cols.len();
    (0..n / 2).all(|j| (cols[n - 1 - j] + cols[j]).abs() <= 1e-14 * cols[j].abs().max(1.0))
}

fn apply_s3_phase(v: &mut CVector, weights: &[f64], phi: f64) {
    for (c, m) in v.iter_mut().zip(weights) {
        *c *= C64::from_polar(1.0, -phi * m);
    }
}

fn apply_momentum_phase(v: &mut CVector, nodes: &[f64], k: f64) {
    if k == 0.0 {
        return;
    }
    for (c, x) in v.iter_mut().zip(nodes) {
        *c *= C64::from_polar(1.0, k * x);
    }
}

/// `ln` of the grid amplitude `sqrt(du) phi_beta(u - ln q)` up to `log_norm`.
fn affine_log_profile(kappa: f64, u: f64, ln_q: f64) -> f64 {
    let v = u - ln_q;
    kappa * v - kappa * v.exp()
}

fn affine_log_norm(rep: &Representation, kappa: f64) -> Result<f64> {
    let grid = rep.grid()?;
    let logs: Vec<f64> = (0..grid.len()).map(|i| 2.0 * affine_log_profile(kappa, grid.u(i), 0.0)).collect();
    let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logs.iter().map(|l| (l - m).exp()).sum();
    let log_norm = -0.5 * (m + sum.ln());
    if !log_norm.is_finite() {
        return Err(Error::NonFinite("affine fiducial normalization".into()));
    }
    Ok(log_norm)
}

fn affine_state(rep: &Arc<Representation>, kappa: f64, log_norm: f64, p_over_hbar: f64, q: f64) -> StateVector {
    let grid = rep.grid().expect("affine representation");
    let ln_q = q.ln();
    let mut amps = CVector::from_iterator(
        grid.len(),
        (0..grid.len()).map(|i| C64::new((log_norm + affine_log_profile(kappa, grid.u(i), ln_q)).exp(), 0.0)),
    );
    apply_momentum_phase(&mut amps, &grid.nodes, p_over_hbar);
    StateVector::new(rep.clone(), amps).expect("grid length")
}

/// Fock ground state and its residual `||(Q + iP/w)|w>||`.
pub fn canonical_fiducial(set: &OperatorSet) -> Result<(StateVector, f64)> {
    set.family_check(Family::Canonical)?;
    let psi = StateVector::basis(&set.rep, 0);
    let omega = set.params().omega;
    let q = set.get(Generator::Q)?;
    let p = set.get(Generator::P)?;
    let ann = q.add_scaled(p, I / omega)?;
    let residual = ann.apply(&psi)?.norm();
    if residual > CANONICAL_FIDUCIAL_TOL {
        return Err(Error::Tolerance {
            what: "canonical fiducial residual".into(),
            achieved: residual,
            required: CANONICAL_FIDUCIAL_TOL,
        });
    }
    Ok((psi, residual))
}

/// `|s,s>`, the top weight vector.
pub fn spin_fiducial(set: &OperatorSet) -> Result<StateVector> {
    set.family_check(Family::Spin)?;
    Ok(StateVector::basis(&set.rep, 0))
}

/// Closed-form `|beta>` proportional to `x^(beta/hbar - 1/2) exp(-beta x/hbar)`,
/// normalized on the grid, with its residual.
pub fn affine_fiducial(set: &OperatorSet) -> Result<(StateVector, f64)> {
    set.family_check(Family::Affine)?;
    let kappa = set.params().beta / set.params().hbar;
    let log_norm = affine_log_norm(&set.rep, kappa)?;
    let psi = affine_state(&set.rep, kappa, log_norm, 0.0, 1.0);
    let residual = affine_fiducial_check(set, &psi)?;
    Ok((psi, residual))
}

/// Residual `||[(Q - 1) + iD/beta]psi||`, with `<Q> = 1` and `<D> = 0` enforced.
fn affine_fiducial_check(set: &OperatorSet, psi: &StateVector) -> Result<f64> {
    let beta = set.params().beta;
    let q = set.get(Generator::Q)?;
    let d = set.get(Generator::D)?;
    let cond = q
        .add_scaled(&OperatorMatrix::identity(&set.rep), -ONE)?
        .add_scaled(d, I / beta)?;
    let residual = cond.apply(psi)?.norm();
    let mean_q = expectation(q, psi)?.re;
    let mean_d = expectation(d, psi)?.re;
    for (what, achieved) in [
        ("affine fiducial residual", residual),
        ("affine fiducial <Q> - 1", (mean_q - 1.0).abs()),
        ("affine fiducial <D>", mean_d.abs()),
    ] {
        if !(achieved <= AFFINE_FIDUCIAL_TOL) {
            return Err(Error::Tolerance { what: what.into(), achieved, required: AFFINE_FIDUCIAL_TOL });
        }
    }
    Ok(residual)
}
