// Copyright 2026 The coherent-bridge Authors
// SPDX-License-Identifier: Apache-2.0

//! Double phase-space quadrature of the kernel `<x|[i hbar d/dt - H]|x'>`,
//! rebuilding the classical-land integrand from a coherent path and the
//! quantum-land integrand from a Schrodinger path.
//!
//! Canonical runs are the reference; spin and affine runs share the same
//! interface and are experimental.

use serde::Serialize;

use crate::dynamics::{trapezoid, Trajectory};
use crate::error::{Error, Result};
use crate::families::{apply_projector, default_probe, CoherentFamily};
use crate::operators::{expectation, CMatrix, CVector, Generator, OperatorMatrix, StateVector, C64};
use crate::phase::{Family, PhasePoint};
use crate::quadrature::{AxisSpec, QuadratureSpec};

/// Identity defect both quadratures must meet before a bridge value is used.
pub const BRIDGE_PROBE_TOL: f64 = 1e-4;
/// Coordinate step for tangents of coherent paths.
pub const TANGENT_STEP: f64 = 1e-4;

/// The unprimed and primed phase-space grids of one bridge evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BridgeQuadrature {
    pub family: Family,
    pub unprimed: QuadratureSpec,
    pub primed: QuadratureSpec,
    pub probe_tol: f64,
}

/// How boxes are placed around a center.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BridgeOptions {
    /// Box half-width in natural widths (canonical).
    pub half_widths: f64,
    /// Canonical nodes per axis; spin and affine use their default counts.
    pub nodes: usize,
    /// Multiplies every node count.
    pub node_scale: f64,
    pub probe_tol: f64,
}

impl Default for BridgeOptions {
    fn default() -> Self {
        Self { half_widths: 8.0, nodes: 61, node_scale: 1.0, probe_tol: BRIDGE_PROBE_TOL }
    }
}

impl BridgeQuadrature {
    pub fn new(family: Family, unprimed: QuadratureSpec, primed: QuadratureSpec, probe_tol: f64) -> Self {
        Self { family, unprimed, primed, probe_tol }
    }

    /// Both grids centered on `center`: a canonical box of `half_widths`
    /// natural widths, the full sphere for spin, and the default affine
    /// `(k, ln q)` box translated to the center.
    pub fn around(family: &CoherentFamily, center: &PhasePoint, opts: &BridgeOptions) -> Result<Self> {
        let quad = match family.family() {
            Family::Canonical => family.quadrature_around(center, opts.half_widths, opts.nodes)?,
            Family::Spin => family.default_quadrature(),
            Family::Affine => {
                center.expect_family(Family::Affine)?;
                center.validate()?;
                let base = family.default_quadrature();
                let [p, q] = center.coords;
                let shift = |ax: AxisSpec, c: f64| AxisSpec { lo: ax.lo + c, hi: ax.hi + c, ..ax };
                QuadratureSpec::new(shift(base.axes[0], p * q.min(1.0)), shift(base.axes[1], q.ln()))
            }
        };
        let quad = if opts.node_scale == 1.0 { quad } else { quad.with_node_scale(opts.node_scale) };
        Ok(Self::new(family.family(), quad, quad, opts.probe_tol))
    }
}

/// Applies both projectors to the requested columns, checking the identity
/// defect on the family's default probe in the same pass.
struct Projected {
    left: CMatrix,
    right: CMatrix,
    defects: [f64; 2],
}

fn project(family: &CoherentFamily, bq: &BridgeQuadrature, left: &[&CVector], right: &[&CVector]) -> Result<Projected> {
    if bq.family != family.family() {
        return Err(Error::FamilyMismatch { expected: family.family().to_string(), got: bq.family.to_string() });
    }
    if family.family() == Family::Affine {
        family.params().check_affine_identity()?;
    }
    let probe = default_probe(family)?;
    let k = probe.ncols();
    let dim = family.rep().dim;
    let stack = |cols: &[&CVector]| {
        let mut m = CMatrix::zeros(dim, k + cols.len());
        m.view_mut((0, 0), (dim, k)).copy_from(&probe);
        for (j, c) in cols.iter().enumerate() {
            m.set_column(k + j, c);
        }
        m
    };
    let defect = |m: &CMatrix| {
        let g = probe.adjoint() * m.columns(0, k);
        let mut worst = 0.0f64;
        for i in 0..k {
            for j in 0..k {
                let t = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - C64::new(t, 0.0)).norm());
            }
        }
        worst
    };
    let run = |quad: &QuadratureSpec, cols: &[&CVector]| -> Result<(CMatrix, f64)> {
        family.check_quadrature(quad)?;
        let out = apply_projector(family, quad, &stack(cols))?;
        let d = defect(&out);
        if !(d <= bq.probe_tol) {
            return Err(Error::Tolerance { what: "bridge quadrature identity defect".into(), achieved: d, required: bq.probe_tol });
        }
        Ok((out.columns(k, cols.len()).into_owned(), d))
    };
    if bq.unprimed == bq.primed {
        let all: Vec<&CVector> = left.iter().chain(right).copied().collect();
        let (out, d) = run(&bq.unprimed, &all)?;
        Ok(Projected {
            left: out.columns(0, left.len()).into_owned(),
            right: out.columns(left.len(), right.len()).into_owned(),
            defects: [d, d],
        })
    } else {
        let (l, dl) = run(&bq.unprimed, left)?;
        let (r, dr) = run(&bq.primed, right)?;
        Ok(Projected { left: l, right: r, defects: [dl, dr] })
    }
}

/// `sum sum <chi|x><x|A|x'><x'|psi>` over the two grids.
pub fn reconstruct_matrix_element(
    family: &CoherentFamily,
    a: &OperatorMatrix,
    chi: &StateVector,
    psi: &StateVector,
    bq: &BridgeQuadrature,
) -> Result<C64> {
    let pr = project(family, bq, &[chi.amplitudes()], &[psi.amplitudes()])?;
    let l = pr.left.column(0).into_owned();
    let r = pr.right.column(0).into_owned();
    Ok(l.dotc(&a.apply_vec(&r)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Land {
    Classical,
    Quantum,
}

/// One bridge evaluation next to its direct counterpart.
#[derive(Clone, Debug, Serialize)]
pub struct BridgeSample {
    pub t: Option<f64>,
    pub land: Land,
    pub bridge_value: f64,
    pub bridge_imag: f64,
    pub direct_value: f64,
    pub abs_diff: f64,
    pub quad: BridgeQuadrature,
    pub defects: [f64; 2],
}

/// `i hbar <L|R_dot> - <L|H|R>` from projected columns.
fn kernel_value(hbar: f64, h_op: &OperatorMatrix, pr: &Projected) -> C64 {
    let l = pr.left.column(0).into_owned();
    let r = pr.right.column(0).into_owned();
    let rd = pr.right.column(1).into_owned();
    C64::new(0.0, hbar) * l.dotc(&rd) - l.dotc(&h_op.apply_vec(&r))
}

/// Kinetic term of the family's natural symplectic form.
fn natural_kinetic(family: &CoherentFamily, point: &PhasePoint, v: [f64; 2]) -> f64 {
    let prm = family.params();
    let [a, b] = point.coords;
    match family.family() {
        Family::Canonical => a * v[1],
        Family::Spin => prm.s * prm.hbar * a.cos() * v[1],
        Family::Affine => -v[0] * b,
    }
}

/// Tangent `sum_k v_k d_k|x>` of the coherent path by fourth-order central
/// differences in the coordinates.
fn path_tangent(family: &CoherentFamily, point: &PhasePoint, v: [f64; 2]) -> Result<CVector> {
    let h = TANGENT_STEP;
    let mut out = CVector::zeros(family.rep().dim);
    for k in 0..2 {
        if v[k] == 0.0 {
            continue;
        }
        let at = |t: f64| {
            let mut c = point.coords;
            c[k] += t;
            family.displaced(c)
        };
        let d = (at(-2.0 * h)? - at(-h)? * C64::new(8.0, 0.0) + at(h)? * C64::new(8.0, 0.0) - at(2.0 * h)?)
            / C64::new(12.0 * h, 0.0);
        out += d * C64::new(v[k], 0.0);
    }
    Ok(out)
}

/// Classical-land integrand at a path sample: the kernel between the bra
/// `<point|` and the moving ket `|point(t)>`, `d/dt` acting on the ket.
/// The direct value is the natural-form `p q' - <point|H|point>`.
pub fn classical_land_integrand(
    family: &CoherentFamily,
    h_op: &OperatorMatrix,
    point: &PhasePoint,
    velocity: Option<[f64; 2]>,
    bq: &BridgeQuadrature,
) -> Result<BridgeSample> {
    let v = velocity.ok_or_else(|| Error::MissingSamples("classical-land integrand needs the path velocity".into()))?;
    let psi = family.coherent_state(point, None)?;
    let dpsi = path_tangent(family, point, v)?;
    let pr = project(family, bq, &[psi.amplitudes()], &[psi.amplitudes(), &dpsi])?;
    let z = kernel_value(family.params().hbar, h_op, &pr);
    let direct = natural_kinetic(family, point, v) - expectation(h_op, &psi)?.re;
    Ok(BridgeSample {
        t: None,
        land: Land::Classical,
        bridge_value: z.re,
        bridge_imag: z.im,
        direct_value: direct,
        abs_diff: (z.re - direct).abs(),
        quad: *bq,
        defects: pr.defects,
    })
}

/// Phase-space centroid of a state: `(<P>, <Q>)`, the direction of `<S>`,
/// or `(<D>/<Q>, <Q>)`.
pub fn centroid(family: &CoherentFamily, psi: &StateVector) -> Result<PhasePoint> {
    let ops = family.operators();
    let ev = |g: Generator| -> Result<f64> { Ok(expectation(ops.get(g)?, psi)?.re) };
    Ok(match family.family() {
        Family::Canonical => PhasePoint::canonical(ev(Generator::P)?, ev(Generator::Q)?),
        Family::Spin => {
            let (x, y, z) = (ev(Generator::S1)?, ev(Generator::S2)?, ev(Generator::S3)?);
            let r = (x * x + y * y + z * z).sqrt();
            if r < 1e-12 {
                PhasePoint::spin(std::f64::consts::FRAC_PI_2, 0.0)
            } else {
                PhasePoint::spin((z / r).clamp(-1.0, 1.0).acos(), y.atan2(x))
            }
        }
        Family::Affine => {
            let q = ev(Generator::Q)?;
            PhasePoint::affine(ev(Generator::D)? / q, q)
        }
    })
}

fn quantum_land_with_tangent(
    family: &CoherentFamily,
    h_op: &OperatorMatrix,
    psi: &StateVector,
    dpsi: &CVector,
    opts: &BridgeOptions,
) -> Result<BridgeSample> {
    let bq = BridgeQuadrature::around(family, &centroid(family, psi)?, opts)?;
    let pr = project(family, &bq, &[psi.amplitudes()], &[psi.amplitudes(), dpsi])?;
    let hbar = family.params().hbar;
    let z = kernel_value(hbar, h_op, &pr);
    let a = psi.amplitudes();
    let direct = (C64::new(0.0, hbar) * a.dotc(dpsi) - a.dotc(&h_op.apply_vec(a))).re;
    Ok(BridgeSample {
        t: None,
        land: Land::Quantum,
        bridge_value: z.re,
        bridge_imag: z.im,
        direct_value: direct,
        abs_diff: (z.re - direct).abs(),
        quad: bq,
        defects: pr.defects,
    })
}

/// Quantum-land integrand at sample `index` of a Schrodinger path, `d/dt`
/// by the central difference of its neighbours; boxes are centered on the
/// state's centroid.
pub fn quantum_land_integrand(
    family: &CoherentFamily,
    h_op: &OperatorMatrix,
    path: &Trajectory,
    index: usize,
    opts: &BridgeOptions,
) -> Result<BridgeSample> {
    if index == 0 || index + 1 >= path.states.len() {
        return Err(Error::MissingSamples(format!("state {index} lacks a neighbour on each side")));
    }
    let (t0, t2) = (path.times[index - 1], path.times[index + 1]);
    let d = (path.states[index + 1].amplitudes() - path.states[index - 1].amplitudes()) / C64::new(t2 - t0, 0.0);
    let mut s = quantum_land_with_tangent(family, h_op, &path.states[index], &d, opts)?;
    s.t = Some(path.times[index]);
    Ok(s)
}

/// Bridge action over a Schrodinger path against the directly computed one.
#[derive(Clone, Debug, Serialize)]
pub struct ActionReport {
    /// Trapezoid of the bridge integrand on the sampled times.
    pub bridge_action: f64,
    /// Trapezoid of the direct integrand on the same times.
    pub sampled_direct_action: f64,
    /// Action of the full path from its own integrand.
    pub path_action: f64,
    pub abs_diff: f64,
    /// `abs_diff / |path_action|`.
    pub rel_diff: f64,
    /// `|bridge_action - sampled_direct_action|`: quadrature error alone.
    pub quadrature_discrepancy: f64,
    pub samples: Vec<BridgeSample>,
}

/// Integrates the quantum-land integrand at `samples + 1` evenly strided
/// states of `path` (second-order one-sided differences at the ends).
pub fn action_reconstruction_report(
    family: &CoherentFamily,
    h_op: &OperatorMatrix,
    path: &Trajectory,
    samples: usize,
    opts: &BridgeOptions,
) -> Result<ActionReport> {
    let n = path.states.len();
    if n < 3 || samples < 2 || !(n - 1).is_multiple_of(samples) {
        return Err(Error::MissingSamples(format!(
            "{samples} bridge samples do not evenly stride a path of {n} states"
        )));
    }
    let stride = (n - 1) / samples;
    let full = path
        .integrand
        .clone()
        .map_or_else(|| crate::dynamics::quantum_integrand(path, h_op), Ok)?;
    let path_action = trapezoid(&path.times, &full);
    let mut rows = Vec::with_capacity(samples + 1);
    for k in (0..n).step_by(stride) {
        let row = if k == 0 || k + 1 == n {
            let (i, j, l) = if k == 0 { (0, 1, 2) } else { (n - 3, n - 2, n - 1) };
            let t = &path.times;
            let a = |m: usize| path.states[m].amplitudes();
            let lag = |x: usize, y: usize, z: usize| {
                ((t[k] - t[y]) + (t[k] - t[z])) / ((t[x] - t[y]) * (t[x] - t[z]))
            };
            let d = a(i) * C64::new(lag(i, j, l), 0.0) + a(j) * C64::new(lag(j, i, l), 0.0) + a(l) * C64::new(lag(l, i, j), 0.0);
            let mut s = quantum_land_with_tangent(family, h_op, &path.states[k], &d, opts)?;
            s.t = Some(path.times[k]);
            s
        } else {
            quantum_land_integrand(family, h_op, path, k, opts)?
        };
        rows.push(row);
    }
    let times: Vec<f64> = rows.iter().map(|r| r.t.expect("sample time")).collect();
    let bridge: Vec<f64> = rows.iter().map(|r| r.bridge_value).collect();
    let direct: Vec<f64> = rows.iter().map(|r| r.direct_value).collect();
    let bridge_action = trapezoid(&times, &bridge);
    let sampled_direct_action = trapezoid(&times, &direct);
    let abs_diff = (bridge_action - path_action).abs();
    Ok(ActionReport {
        bridge_action,
        sampled_direct_action,
        path_action,
        abs_diff,
        rel_diff: abs_diff / path_action.abs(),
        quadrature_discrepancy: (bridge_action - sampled_direct_action).abs(),
        samples: rows,
    })
}

/// The coherent-state path `|p(t), q(t)>` along a phase-space trajectory,
/// as a state trajectory without dynamical phase.
pub fn coherent_path(family: &CoherentFamily, traj: &Trajectory) -> Result<Trajectory> {
    if traj.points.is_empty() {
        return Err(Error::MissingSamples("trajectory has no phase-space points".into()));
    }
    let states = traj.points.iter().map(|p| family.coherent_state(p, None)).collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        kind: crate::dynamics::TrajectoryKind::Quantum,
        points: Vec::new(),
        velocities: Vec::new(),
        states,
        integrand: None,
        ..traj.clone()
    })
}
