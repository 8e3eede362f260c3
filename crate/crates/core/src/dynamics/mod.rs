// Copyright 2026 The coherent-bridge Authors
// SPDX-License-Identifier: Apache-2.0

//! Classical and semi-classical Hamilton flows, unitary Schrodinger steps,
//! and the action functionals evaluated along them.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};

use crate::analysis::{csv_err, SymbolExpansion};
use crate::dsl::{Constants, HamiltonianExpr, OrderingRule};
use crate::error::{Error, Result};
use crate::families::{CoherentFamily, RepresentationSpec};
use crate::operators::{expectation, mat_exp, OperatorMatrix, PhysicalParams, RepresentationKind, StateVector, C64};
use crate::phase::{wrap_angle, Family, PhasePoint};
use crate::scalar::Real;

/// Below this `|sin theta|` the spin flow has no coordinate expression.
const POLE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Rk4,
    UnitaryStep,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolveSpec {
    pub total_time: f64,
    pub dt: f64,
    #[serde(default)]
    pub method: Method,
    #[serde(default)]
    pub record_action: bool,
}

impl EvolveSpec {
    pub fn new(total_time: f64, dt: f64) -> Self {
        Self { total_time, dt, method: Method::Rk4, record_action: true }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.total_time >= self.dt && self.total_time.is_finite()) {
            return Err(Error::Config(format!("total time {} shorter than dt {}", self.total_time, self.dt)));
        }
        Ok(())
    }

    /// Sample times `0, dt, 2 dt, ...` ending exactly at the total time; the
    /// last step is shortened when `dt` does not divide it.
    pub fn times(&self) -> Vec<f64> {
        let (t, dt) = (self.total_time, self.dt);
        let n = (t / dt).round();
        let full = if (n * dt - t).abs() <= 1e-9 * t { n as usize } else { (t / dt).floor() as usize + 1 };
        let mut out: Vec<f64> = (0..full).map(|k| k as f64 * dt).collect();
        out.push(t);
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryKind {
    Classical,
    Semiclassical,
    Quantum,
}

/// Sampled evolution. Phase-space runs fill `points` and `velocities`;
/// quantum runs fill `states`. Spin `phi` is wrapped into `(-pi, pi]`.
#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub family: Family,
    pub kind: TrajectoryKind,
    pub hbar: f64,
    /// `s hbar` for spin runs, zero otherwise.
    pub s_hbar: f64,
    pub times: Vec<f64>,
    pub points: Vec<PhasePoint>,
    pub velocities: Vec<[f64; 2]>,
    #[serde(serialize_with = "serialize_states")]
    pub states: Vec<StateVector>,
    /// Driving Hamiltonian along the run: classical value, lower symbol or `<H>`.
    pub energies: Vec<f64>,
    pub integrand: Option<Vec<f64>>,
}

fn serialize_states<S: Serializer>(states: &[StateVector], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(states.iter().map(|v| v.amplitudes().iter().map(|z| [z.re, z.im]).collect::<Vec<_>>()))
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `<psi(t)|A|psi(t)>` for every recorded state.
    pub fn expectations(&self, a: &OperatorMatrix) -> Result<Vec<C64>> {
        if self.states.is_empty() {
            return Err(Error::MissingSamples("trajectory has no quantum states".into()));
        }
        self.states.iter().map(|s| expectation(a, s)).collect()
    }
}

/// Coordinates, velocities and energies of an integrated flow.
#[derive(Clone, Debug)]
pub struct FlowSamples<T> {
    pub coords: Vec<[T; 2]>,
    pub velocities: Vec<[T; 2]>,
    pub energies: Vec<T>,
}

/// Hamilton's equations for the family's symplectic form, from the gradient
/// `g` of the Hamiltonian. `s_hbar` only enters the spin flow.
fn hamilton_field<T: Real>(family: Family, s_hbar: T, c: [T; 2], g: [T; 2]) -> Result<[T; 2]> {
    match family {
        // p' = -dH/dq, q' = dH/dp
        Family::Canonical | Family::Affine => Ok([-g[1], g[0]]),
        Family::Spin => {
            // from s hbar cos(theta) phi' - G
            let st = c[0].sin();
            if st.abs() < T::lit(POLE_TOL) {
                return Err(Error::InvalidPoint(format!("spin flow singular at theta = {}", c[0])));
            }
            let k = s_hbar * st;
            Ok([g[1] / k, -g[0] / k])
        }
    }
}

/// Fixed-step RK4 of the Hamilton flow of `hamiltonian` (value and gradient)
/// over `times`. Affine runs abort once any stage reaches `q <= 0`.
pub fn hamilton_flow<T: Real>(
    family: Family,
    s_hbar: T,
    point0: PhasePoint<T>,
    times: &[f64],
    hamiltonian: &dyn Fn([T; 2]) -> Result<(T, [T; 2])>,
) -> Result<FlowSamples<T>> {
    point0.expect_family(family)?;
    point0.validate()?;
    let field = |c: [T; 2], t: f64| -> Result<(T, [T; 2])> {
        if family == Family::Affine && !(c[1] > T::zero()) {
            return Err(Error::PositivityViolated { time: t });
        }
        let (h, g) = hamiltonian(c)?;
        Ok((h, hamilton_field(family, s_hbar, c, g)?))
    };
    let mut out = FlowSamples {
        coords: Vec::with_capacity(times.len()),
        velocities: Vec::with_capacity(times.len()),
        energies: Vec::with_capacity(times.len()),
    };
    let mut x = point0.coords;
    let (mut h, mut v) = field(x, times[0])?;
    let half = T::lit(0.5);
    let sixth = T::lit(1.0 / 6.0);
    let two = T::lit(2.0);
    for k in 0..times.len() {
        out.coords.push(x);
        out.velocities.push(v);
        out.energies.push(h);
        if k + 1 == times.len() {
            break;
        }
        let (t, dt_f) = (times[k], times[k + 1] - times[k]);
        let dt = T::lit(dt_f);
        let at = |base: [T; 2], d: [T; 2], s: T| [base[0] + s * d[0], base[1] + s * d[1]];
        let k1 = v;
        let k2 = field(at(x, k1, half * dt), t + 0.5 * dt_f)?.1;
        let k3 = field(at(x, k2, half * dt), t + 0.5 * dt_f)?.1;
        let k4 = field(at(x, k3, dt), t + dt_f)?.1;
        for i in 0..2 {
            x[i] += dt * sixth * (k1[i] + two * k2[i] + two * k3[i] + k4[i]);
        }
        (h, v) = field(x, times[k + 1])?;
    }
    Ok(out)
}

fn s_hbar(family: Family, constants: &Constants) -> Result<f64> {
    Ok(match family {
        Family::Spin => constants.get("s")? * constants.get("hbar")?,
        _ => 0.0,
    })
}

/// Classical flow of `expr` in any precision, gradients by exact AST
/// differentiation.
pub fn classical_flow<T: Real>(
    expr: &HamiltonianExpr,
    point0: PhasePoint<T>,
    times: &[f64],
    constants: &Constants,
) -> Result<FlowSamples<T>> {
    let grad = expr.gradient();
    let family = expr.family;
    let ham = |c: [T; 2]| -> Result<(T, [T; 2])> {
        let pt = PhasePoint::new(family, c);
        Ok((
            expr.eval_classical(&pt, constants)?,
            [grad[0].eval_classical(&pt, constants)?, grad[1].eval_classical(&pt, constants)?],
        ))
    };
    hamilton_flow(family, T::lit(s_hbar(family, constants)?), point0, times, &ham)
}

fn into_trajectory(
    family: Family,
    kind: TrajectoryKind,
    hbar: f64,
    s_hbar: f64,
    times: Vec<f64>,
    flow: FlowSamples<f64>,
    record: bool,
) -> Trajectory {
    let points: Vec<PhasePoint> = flow
        .coords
        .iter()
        .map(|c| match family {
            Family::Spin => PhasePoint::spin(c[0], wrap_angle(c[1])),
            _ => PhasePoint::new(family, *c),
        })
        .collect();
    let mut traj = Trajectory {
        family,
        kind,
        hbar,
        s_hbar,
        times,
        points,
        velocities: flow.velocities,
        states: Vec::new(),
        energies: flow.energies,
        integrand: None,
    };
    if record {
        traj.integrand = Some(form_integrand(&traj, ActionForm::Natural).expect("natural form fits the family"));
    }
    traj
}

/// Hamilton flow of the classical `expr`.
pub fn classical_evolve(
    expr: &HamiltonianExpr,
    point0: &PhasePoint,
    spec: &EvolveSpec,
    constants: &Constants,
) -> Result<Trajectory> {
    spec.validate()?;
    let times = spec.times();
    let flow = classical_flow(expr, *point0, &times, constants)?;
    let sh = s_hbar(expr.family, constants)?;
    Ok(into_trajectory(expr.family, TrajectoryKind::Classical, constants.get("hbar")?, sh, times, flow, spec.record_action))
}

/// Hamilton flow of the lower symbol of `promote(expr)` on `family`, the
/// `O(hbar)` terms included.
pub fn semiclassical_evolve(
    family: &CoherentFamily,
    expr: &HamiltonianExpr,
    point0: &PhasePoint,
    spec: &EvolveSpec,
    constants: &Constants,
    rule: OrderingRule,
) -> Result<Trajectory> {
    spec.validate()?;
    let symbol = SymbolExpansion::new(expr, family, constants, rule)?;
    semiclassical_evolve_symbol(family, &symbol, point0, spec)
}

/// As [`semiclassical_evolve`] with a prebuilt symbol.
pub fn semiclassical_evolve_symbol(
    family: &CoherentFamily,
    symbol: &SymbolExpansion,
    point0: &PhasePoint,
    spec: &EvolveSpec,
) -> Result<Trajectory> {
    spec.validate()?;
    let times = spec.times();
    let fam = family.family();
    let params = family.params();
    let sh = if fam == Family::Spin { params.s * params.hbar } else { 0.0 };
    let ham = |c: [f64; 2]| Ok(symbol.value_and_gradient(c));
    let flow = hamilton_flow(fam, sh, *point0, &times, &ham)?;
    Ok(into_trajectory(fam, TrajectoryKind::Semiclassical, params.hbar, sh, times, flow, spec.record_action))
}

fn kind_family(kind: RepresentationKind) -> Family {
    match kind {
        RepresentationKind::FockTruncated => Family::Canonical,
        RepresentationKind::SpinWeight { .. } => Family::Spin,
        RepresentationKind::HalfLineGrid => Family::Affine,
    }
}

/// `psi(t + dt) = exp(-i dt H/hbar) psi(t)` with the step unitary built once
/// (a second one for a shortened final step).
pub fn quantum_evolve(h_op: &OperatorMatrix, psi0: &StateVector, spec: &EvolveSpec) -> Result<Trajectory> {
    spec.validate()?;
    if !h_op.is_hermitian() {
        return Err(Error::NotHermitian(h_op.hermitian_defect()));
    }
    let norm = psi0.norm();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidParameter(format!("initial state norm {norm} differs from 1")));
    }
    let hbar = h_op.rep().params.hbar;
    let times = spec.times();
    let step = |dt: f64| mat_exp(h_op, C64::new(0.0, -dt / hbar));
    let dt = times[1] - times[0];
    let u = step(dt)?;
    let last = times[times.len() - 1] - times[times.len() - 2];
    let u_last = if (last - dt).abs() > 1e-12 * dt { Some(step(last)?) } else { None };
    let mut states = Vec::with_capacity(times.len());
    let mut energies = Vec::with_capacity(times.len());
    let mut psi = psi0.clone();
    for k in 0..times.len() {
        energies.push(expectation(h_op, &psi)?.re);
        let next = if k + 2 == times.len() { u_last.as_ref().unwrap_or(&u) } else { &u };
        let n = next.apply(&psi)?;
        states.push(std::mem::replace(&mut psi, n));
    }
    let mut traj = Trajectory {
        family: kind_family(h_op.rep().kind),
        kind: TrajectoryKind::Quantum,
        hbar,
        s_hbar: h_op.rep().spin_weight().map_or(0.0, |s| s * hbar),
        times,
        points: Vec::new(),
        velocities: Vec::new(),
        states,
        energies,
        integrand: None,
    };
    if spec.record_action {
        traj.integrand = Some(quantum_integrand(&traj, h_op)?);
    }
    Ok(traj)
}

/// Kinetic term of a phase-space action.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionForm {
    /// `p q'` canonical, `s hbar cos(theta) phi'` spin, `-p' q` affine.
    #[default]
    Natural,
    PQdot,
    MinusPdotQ,
}

fn form_integrand(traj: &Trajectory, form: ActionForm) -> Result<Vec<f64>> {
    let form = match (traj.family, form) {
        (Family::Spin, ActionForm::Natural) => return Ok(spin_integrand(traj)),
        (Family::Spin, f) => return Err(Error::Config(format!("action form {f:?} does not apply to spin"))),
        (Family::Canonical, ActionForm::Natural) => ActionForm::PQdot,
        (Family::Affine, ActionForm::Natural) => ActionForm::MinusPdotQ,
        (_, f) => f,
    };
    Ok(traj
        .points
        .iter()
        .zip(&traj.velocities)
        .zip(&traj.energies)
        .map(|((pt, v), h)| {
            let [p, q] = pt.coords;
            match form {
                ActionForm::PQdot => p * v[1] - h,
                _ => -v[0] * q - h,
            }
        })
        .collect())
}

fn spin_integrand(traj: &Trajectory) -> Vec<f64> {
    traj.points
        .iter()
        .zip(&traj.velocities)
        .zip(&traj.energies)
        .map(|((pt, v), g)| traj.s_hbar * pt.coords[0].cos() * v[1] - g)
        .collect()
}

/// Second-order time derivative on possibly uneven samples, one-sided at
/// the ends.
fn time_derivatives(times: &[f64], states: &[StateVector]) -> Vec<crate::operators::CVector> {
    let n = times.len();
    let a = |k: usize| states[k].amplitudes();
    let three = |i: usize, j: usize, k: usize, at: usize| {
        // Lagrange derivative through (t_i, t_j, t_k) evaluated at t_at
        let (ti, tj, tk, t) = (times[i], times[j], times[k], times[at]);
        let wi = ((t - tj) + (t - tk)) / ((ti - tj) * (ti - tk));
        let wj = ((t - ti) + (t - tk)) / ((tj - ti) * (tj - tk));
        let wk = ((t - ti) + (t - tj)) / ((tk - ti) * (tk - tj));
        a(i) * C64::new(wi, 0.0) + a(j) * C64::new(wj, 0.0) + a(k) * C64::new(wk, 0.0)
    };
    (0..n)
        .map(|k| match k {
            0 => three(0, 1, 2, 0),
            k if k + 1 == n => three(n - 3, n - 2, n - 1, k),
            k => three(k - 1, k, k + 1, k),
        })
        .collect()
}

/// `Re <psi|i hbar d/dt - H|psi>` at every sample.
pub fn quantum_integrand(traj: &Trajectory, h_op: &OperatorMatrix) -> Result<Vec<f64>> {
    if traj.states.len() < 3 {
        return Err(Error::MissingSamples("quantum action needs at least three states".into()));
    }
    let hbar = h_op.rep().params.hbar;
    let dpsi = time_derivatives(&traj.times, &traj.states);
    traj.states
        .iter()
        .zip(&dpsi)
        .map(|(s, d)| {
            let kin = C64::new(0.0, hbar) * s.amplitudes().dotc(d);
            Ok((kin - expectation(h_op, s)?).re)
        })
        .collect()
}

/// Hamiltonian used to evaluate an action along a stored trajectory.
pub enum ActionHamiltonian<'a> {
    /// The integrand recorded during evolution.
    Recorded,
    Classical(&'a HamiltonianExpr, &'a Constants),
    Symbol(&'a SymbolExpansion),
    Operator(&'a OperatorMatrix),
}

/// Trapezoid rule on the sample times.
pub fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times.windows(2).zip(values.windows(2)).map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1])).sum()
}

/// Action integrand of `traj` under `h`; `form` applies to phase-space paths.
pub fn action_integrand(traj: &Trajectory, h: ActionHamiltonian<'_>, form: ActionForm) -> Result<Vec<f64>> {
    let path = |energy: &dyn Fn(&PhasePoint) -> Result<f64>| -> Result<Vec<f64>> {
        if traj.points.is_empty() {
            return Err(Error::MissingSamples("trajectory has no phase-space points".into()));
        }
        let mut t = traj.clone();
        t.energies = traj.points.iter().map(energy).collect::<Result<_>>()?;
        form_integrand(&t, form)
    };
    match h {
        ActionHamiltonian::Recorded => {
            traj.integrand.clone().ok_or_else(|| Error::MissingSamples("no recorded action integrand".into()))
        }
        ActionHamiltonian::Classical(expr, c) => path(&|pt| expr.eval_classical(pt, c)),
        ActionHamiltonian::Symbol(sym) => path(&|pt| Ok(sym.value(pt.coords))),
        ActionHamiltonian::Operator(op) => quantum_integrand(traj, op),
    }
}

/// Time integral of [`action_integrand`].
pub fn action_functional(traj: &Trajectory, h: ActionHamiltonian<'_>, form: ActionForm) -> Result<f64> {
    Ok(trapezoid(&traj.times, &action_integrand(traj, h, form)?))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SweepRow {
    pub hbar: f64,
    /// Largest coordinate difference between the semi-classical and
    /// classical runs over all samples.
    pub max_deviation: f64,
}

/// Semi-classical versus classical trajectories across decreasing `hbar`.
#[allow(clippy::too_many_arguments)]
pub fn hbar_sweep(
    rep: &RepresentationSpec,
    base: PhysicalParams,
    expr: &HamiltonianExpr,
    point0: &PhasePoint,
    spec: &EvolveSpec,
    hbar_list: &[f64],
    rule: OrderingRule,
    user_constants: &[(String, f64)],
) -> Result<Vec<SweepRow>> {
    if hbar_list.is_empty() || hbar_list.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
        return Err(Error::InvalidParameter("hbar list must be non-empty and positive".into()));
    }
    if hbar_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("hbar list must be strictly decreasing".into()));
    }
    let spec = EvolveSpec { record_action: false, ..*spec };
    hbar_list
        .par_iter()
        .map(|&hbar| {
            let family = rep.build(base.with_hbar(hbar))?;
            let mut c = Constants::from_params(family.params());
            for (k, v) in user_constants {
                c.set(k, *v);
            }
            let cl = classical_evolve(expr, point0, &spec, &c)?;
            let sc = semiclassical_evolve(&family, expr, point0, &spec, &c, rule)?;
            let spin = expr.family == Family::Spin;
            let dev = cl
                .points
                .iter()
                .zip(&sc.points)
                .map(|(a, b)| {
                    let d0 = (a.coords[0] - b.coords[0]).abs();
                    let d1 = a.coords[1] - b.coords[1];
                    d0.max(if spin { wrap_angle(d1).abs() } else { d1.abs() })
                })
                .fold(0.0, f64::max);
            Ok(SweepRow { hbar, max_deviation: dev })
        })
        .collect()
}

/// CSV of a trajectory: `t,<c0>,<c1>,energy,integrand` for phase-space runs,
/// `t,norm,energy,integrand` for quantum runs.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let quantum = traj.points.is_empty();
    let names = traj.family.coordinate_names();
    if quantum {
        w.write_record(["t", "norm", "energy", "integrand"]).map_err(csv_err)?;
    } else {
        w.write_record(["t", names[0], names[1], "energy", "integrand"]).map_err(csv_err)?;
    }
    for k in 0..traj.len() {
        let integ = traj.integrand.as_ref().map_or(String::new(), |v| v[k].to_string());
        let mut row = vec![traj.times[k].to_string()];
        if quantum {
            row.push(traj.states[k].norm().to_string());
        } else {
            row.push(traj.points[k].coords[0].to_string());
            row.push(traj.points[k].coords[1].to_string());
        }
        row.push(traj.energies[k].to_string());
        row.push(integ);
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trajectory_json<W: Write>(traj: &Trajectory, out: W) -> Result<()> {
    serde_json::to_writer(out, traj).map_err(|e| Error::Io(std::io::Error::other(e)))
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["hbar", "max_deviation"]).map_err(csv_err)?;
    for r in rows {
        w.write_record([r.hbar.to_string(), r.max_deviation.to_string()]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
