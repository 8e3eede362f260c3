// Copyright 2026 The coherent-bridge Authors
// SPDX-License-Identifier: Apache-2.0

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::{CoherentFamily, PhaseFunction};
use crate::operators::{CVector, OperatorMatrix, C64};
use crate::phase::PhasePoint;

pub const DEFAULT_METRIC_STEP: f64 = 1e-4;
/// Agreement required between steps `h` and `h/2` before a sample is trusted.
pub const RICHARDSON_TOL: f64 = 1e-6;

/// Fubini–Study metric components at one point.
#[derive(Clone, Debug, Serialize)]
pub struct MetricSample {
    pub point: PhasePoint,
    pub g: [[f64; 2]; 2],
    pub step: f64,
    /// `max |g(h) - g(h/2)|`.
    pub richardson_delta: f64,
    pub flagged: bool,
}

fn state(family: &CoherentFamily, coords: [f64; 2], phase: Option<&PhaseFunction>) -> Result<CVector> {
    let mut v = family.displaced(coords)?;
    if let Some(f) = phase {
        let pt = PhasePoint::new(family.family(), coords);
        v *= C64::from_polar(1.0, f.eval(&pt));
    }
    Ok(v)
}

/// Fourth-order central differences of the state along both coordinates.
fn derivatives(
    family: &CoherentFamily,
    point: &PhasePoint,
    h: f64,
    phase: Option<&PhaseFunction>,
) -> Result<[CVector; 2]> {
    let mut out = [CVector::zeros(0), CVector::zeros(0)];
    for (k, slot) in out.iter_mut().enumerate() {
        let at = |t: f64| {
            let mut c = point.coords;
            c[k] += t;
            state(family, c, phase)
        };
        let (m2, m1, p1, p2) = (at(-2.0 * h)?, at(-h)?, at(h)?, at(2.0 * h)?);
        let spread = (&p1 - &m1).norm();
        if !(spread > 1e-12) {
            return Err(Error::StepUnderflow(format!(
                "step {h:e} along coordinate {k} moves the state by {spread:e}, below representation noise"
            )));
        }
        *slot = (&m2 - &m1 * C64::new(8.0, 0.0) + &p1 * C64::new(8.0, 0.0) - &p2) / C64::new(12.0 * h, 0.0);
    }
    Ok(out)
}

fn metric_at(family: &CoherentFamily, point: &PhasePoint, h: f64, phase: Option<&PhaseFunction>) -> Result<[[f64; 2]; 2]> {
    let psi = state(family, point.coords, phase)?;
    let d = derivatives(family, point, h, phase)?;
    let hbar = family.params().hbar;
    let mut g = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let raw = d[i].dotc(&d[j]) - d[i].dotc(&psi) * psi.dotc(&d[j]);
            g[i][j] = 2.0 * hbar * raw.re;
        }
    }
    Ok(g)
}

/// `2 hbar [<dx|dx> - |<x|dx>|^2]` from finite differences of coherent states,
/// with a Richardson comparison at `step / 2`.
pub fn fs_metric(
    family: &CoherentFamily,
    point: &PhasePoint,
    step: f64,
    phase: Option<&PhaseFunction>,
) -> Result<MetricSample> {
    point.expect_family(family.family())?;
    point.validate()?;
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::StepUnderflow(format!("step must be positive, got {step}")));
    }
    let g = metric_at(family, point, step, phase)?;
    let half = metric_at(family, point, step / 2.0, phase)?;
    let mut delta = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            delta = delta.max((g[i][j] - half[i][j]).abs());
        }
    }
    Ok(MetricSample { point: *point, g, step, richardson_delta: delta, flagged: !(delta <= RICHARDSON_TOL) })
}

/// CSV with columns `c0,c1,g11,g12,g22,flagged`.
pub fn write_metric_csv<W: Write>(samples: &[MetricSample], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let names = samples.first().map_or(["p", "q"], |s| s.point.family.coordinate_names());
    w.write_record([names[0], names[1], "g11", "g12", "g22", "flagged"]).map_err(csv_err)?;
    for s in samples {
        w.write_record([
            s.point.coords[0].to_string(),
            s.point.coords[1].to_string(),
            s.g[0][0].to_string(),
            s.g[0][1].to_string(),
            s.g[1][1].to_string(),
            s.flagged.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

/// `<x|i hbar d/dt - H|x>` along a coherent-state path through `point` with
/// coordinate velocity `velocity`, the time derivative taken as
/// `sum_k v_k d_k|x>` with fourth-order differences of step `step`.
pub fn tangent_bracket(
    family: &CoherentFamily,
    h_op: &OperatorMatrix,
    point: &PhasePoint,
    velocity: [f64; 2],
    step: f64,
) -> Result<C64> {
    point.expect_family(family.family())?;
    point.validate()?;
    let psi = state(family, point.coords, None)?;
    let d = derivatives(family, point, step, None)?;
    let dt = &d[0] * C64::new(velocity[0], 0.0) + &d[1] * C64::new(velocity[1], 0.0);
    let hbar = family.params().hbar;
    let kinetic = C64::new(0.0, hbar) * psi.dotc(&dt);
    Ok(kinetic - psi.dotc(&h_op.apply_vec(&psi)))
}
