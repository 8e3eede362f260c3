// Copyright 2026 The coherent-bridge Authors
// SPDX-License-Identifier: Apache-2.0

//! Command implementations behind the `coherent-bridge` binary.
//!
//! Each command reads a validated [`RunConfig`], writes its artifacts
//! atomically under the output directory and returns an [`Outcome`]; the
//! binary maps outcomes and errors to exit codes with [`exit_code`].

mod config;

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

pub use config::{
    default_hamiltonian, period, AffineConfig, BridgeConfig, CanonicalConfig, EvolveConfig, EvolveMode, IdentityConfig,
    MetricConfig, ParamsConfig, PointGrid, RunConfig, SpectrumConfig, SweepConfig, SymbolConfig, SWEEP_HAMILTONIAN,
};

use crate::analysis::{fs_metric, hbar_correction_scan, lower_symbol, write_correction_csv, write_metric_csv, write_symbol_csv};
use crate::bridge::{
    action_reconstruction_report, classical_land_integrand, coherent_path, BridgeOptions, BridgeQuadrature, BridgeSample,
};
use crate::dsl::promote;
use crate::dynamics::{
    classical_evolve, hbar_sweep, quantum_evolve, semiclassical_evolve, write_sweep_csv, write_trajectory_csv,
    EvolveSpec, Trajectory,
};
use crate::error::{Error, ErrorClass, Result};
use crate::families::{identity_defect, CoherentFamily, PhaseFunction};
use crate::operators::{Generator, GridSpec};
use crate::phase::Family;
use crate::spectrum::{affine_spectrum, dirichlet_wall_spectrum};

/// Version of every JSON artifact layout.
pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_TOLERANCE: i32 = 1;
pub const EXIT_DOMAIN: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    CheckIdentity,
    Metric,
    Symbol,
    Evolve,
    Sweep,
    Bridge,
    Spectrum,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::CheckIdentity => "check-identity",
            Command::Metric => "metric",
            Command::Symbol => "symbol",
            Command::Evolve => "evolve",
            Command::Sweep => "sweep",
            Command::Bridge => "bridge",
            Command::Spectrum => "spectrum",
        }
    }
}

/// Result of a command that ran to completion.
#[derive(Clone, Debug)]
pub struct Outcome {
    /// False when a configured tolerance was missed.
    pub passed: bool,
    pub summary: Vec<String>,
    pub artifacts: Vec<PathBuf>,
}

/// Process exit code for a command result.
pub fn exit_code(result: &Result<Outcome>) -> i32 {
    match result {
        Ok(o) if o.passed => EXIT_OK,
        Ok(_) => EXIT_TOLERANCE,
        Err(e) => error_exit_code(e),
    }
}

pub fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::Tolerance { .. } => EXIT_TOLERANCE,
        Error::Context { source, .. } => error_exit_code(source),
        _ => match e.class() {
            ErrorClass::Domain => EXIT_DOMAIN,
            ErrorClass::Numeric => EXIT_NUMERIC,
        },
    }
}

/// Writes through a sibling temporary file renamed into place.
pub fn write_atomic(path: &Path, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("not a file path: {}", path.display())))?
        .to_string_lossy()
        .into_owned();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    let file = fs::File::create(&tmp)?;
    let mut w = BufWriter::new(file);
    let res = body(&mut w).and_then(|_| {
        w.flush()?;
        w.get_ref().sync_all()?;
        Ok(())
    });
    drop(w);
    match res {
        Ok(()) => {
            fs::rename(&tmp, path)?;
            Ok(())
        }
        Err(e) => {
            let _ = fs::remove_file(&tmp);
            Err(e)
        }
    }
}

struct Sink<'a> {
    dir: &'a Path,
    written: Vec<PathBuf>,
}

impl Sink<'_> {
    fn file(&mut self, name: &str, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
        let path = self.dir.join(name);
        write_atomic(&path, body)?;
        self.written.push(path);
        Ok(())
    }

    fn json(&mut self, name: &str, cmd: Command, cfg: &RunConfig, result: Value) -> Result<()> {
        let doc = json!({
            "schema_version": SCHEMA_VERSION,
            "command": cmd.name(),
            "config": cfg,
            "result": result,
        });
        self.file(name, |w| {
            serde_json::to_writer_pretty(&mut *w, &doc).map_err(json_err)?;
            w.write_all(b"\n")?;
            Ok(())
        })
    }
}

fn json_err(e: serde_json::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(json_err)
}

/// Runs `cmd`, writing artifacts into `out_dir` (created if missing).
pub fn run(cmd: Command, cfg: &RunConfig, out_dir: &Path) -> Result<Outcome> {
    cfg.validate()?;
    fs::create_dir_all(out_dir)?;
    let mut sink = Sink { dir: out_dir, written: Vec::new() };
    let (passed, summary) = match cmd {
        Command::CheckIdentity => check_identity(cfg, &mut sink)?,
        Command::Metric => metric(cfg, &mut sink)?,
        Command::Symbol => symbol(cfg, &mut sink)?,
        Command::Evolve => evolve(cfg, &mut sink)?,
        Command::Sweep => sweep(cfg, &mut sink)?,
        Command::Bridge => bridge(cfg, &mut sink)?,
        Command::Spectrum => spectrum(cfg, &mut sink)?,
    };
    Ok(Outcome { passed, summary, artifacts: sink.written })
}

type Step = Result<(bool, Vec<String>)>;

fn family(cfg: &RunConfig) -> Result<CoherentFamily> {
    let params = cfg.physical();
    if cfg.family == Family::Affine {
        params.check_affine_identity()?;
    }
    cfg.representation().build(params)
}

pub fn default_identity_threshold(family: Family) -> f64 {
    match family {
        Family::Canonical => 1e-6,
        Family::Spin => 1e-10,
        Family::Affine => 1e-4,
    }
}

fn check_identity(cfg: &RunConfig, sink: &mut Sink) -> Step {
    let fam = family(cfg)?;
    let quad = fam.default_quadrature().with_node_scale(cfg.identity.node_scale);
    let report = identity_defect(&fam, &quad, None)?;
    let threshold = cfg.identity.threshold.unwrap_or(default_identity_threshold(cfg.family));
    let passed = report.max_defect <= threshold;
    sink.json(
        "identity.json",
        Command::CheckIdentity,
        cfg,
        json!({ "report": to_value(&report)?, "threshold": threshold, "passed": passed }),
    )?;
    Ok((
        passed,
        vec![format!(
            "{} identity defect {:.3e} on {} probe states ({} nodes), threshold {:.1e}",
            cfg.family,
            report.max_defect,
            report.probe_dim,
            quad.node_count(),
            threshold
        )],
    ))
}

fn metric(cfg: &RunConfig, sink: &mut Sink) -> Step {
    let fam = family(cfg)?;
    let phase = cfg.metric.phase_b.map(PhaseFunction::bpq);
    let points = cfg.lattice(&cfg.metric.points);
    let samples = points
        .par_iter()
        .map(|pt| fs_metric(&fam, pt, cfg.metric.step, phase.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    sink.file("metric.csv", |w| write_metric_csv(&samples, w))?;
    let flagged = samples.iter().filter(|s| s.flagged).count();
    let mut summary = vec![format!("{} metric samples, {flagged} flagged by the step-halving check", samples.len())];
    let mut flat_dev = None;
    if cfg.family == Family::Canonical {
        let w = cfg.params.omega;
        let dev = samples
            .iter()
            .map(|s| {
                (s.g[0][0] - 1.0 / w).abs().max((s.g[1][1] - w).abs()).max(s.g[0][1].abs()).max(s.g[1][0].abs())
            })
            .fold(0.0, f64::max);
        summary.push(format!("max |g - diag(1/omega, omega)| = {dev:.3e}"));
        flat_dev = Some(dev);
    }
    sink.json(
        "metric.json",
        Command::Metric,
        cfg,
        json!({ "samples": to_value(&samples)?, "flagged": flagged, "flat_deviation": flat_dev }),
    )?;
    Ok((flagged == 0, summary))
}

fn symbol(cfg: &RunConfig, sink: &mut Sink) -> Step {
    let fam = family(cfg)?;
    let params = cfg.physical();
    let c = cfg.constants_at(&params);
    let text = cfg.hamiltonian_text();
    let expr = cfg.parse_expr("hamiltonian", &text, cfg.family)?;
    let op = promote(&expr, fam.operators(), &c, cfg.ordering)?;
    let points = cfg.lattice(&cfg.symbol.points);
    let reports = points
        .par_iter()
        .map(|pt| lower_symbol(&fam, &op, pt, Some((&expr, &c)), None))
        .collect::<Result<Vec<_>>>()?;
    sink.file("symbol.csv", |w| write_symbol_csv(&reports, w))?;
    let corr: Vec<f64> = reports.iter().filter_map(|r| r.correction).collect();
    let lo = corr.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = corr.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut summary = vec![format!("{} lower-symbol samples of `{text}`; correction in [{lo:.12}, {hi:.12}]", reports.len())];
    let mut scan = Value::Null;
    if !cfg.symbol.hbar_list.is_empty() {
        let rows = hbar_correction_scan(
            &cfg.representation(),
            params,
            &expr,
            &points,
            &cfg.symbol.hbar_list,
            cfg.ordering,
            &cfg.user_constants(),
        )?;
        sink.file("corrections.csv", |w| write_correction_csv(&rows, w))?;
        summary.push(format!("correction scan over {} hbar values", cfg.symbol.hbar_list.len()));
        scan = to_value(&rows)?;
    }
    sink.json(
        "symbol.json",
        Command::Symbol,
        cfg,
        json!({ "samples": to_value(&reports)?, "correction_range": [lo, hi], "hbar_scan": scan }),
    )?;
    Ok((true, summary))
}

fn expectation_columns(family: Family) -> &'static [Generator] {
    match family {
        Family::Canonical => &[Generator::Q, Generator::P],
        Family::Spin => &[Generator::S1, Generator::S2, Generator::S3],
        Family::Affine => &[Generator::Q, Generator::D],
    }
}

fn generator_name(g: Generator) -> &'static str {
    match g {
        Generator::Q => "Q",
        Generator::P => "P",
        Generator::D => "D",
        Generator::QInv => "Qinv",
        Generator::S1 => "S1",
        Generator::S2 => "S2",
        Generator::S3 => "S3",
    }
}

fn energy_drift(tr: &Trajectory) -> f64 {
    let e0 = tr.energies.first().copied().unwrap_or(0.0);
    tr.energies.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max)
}

fn evolve(cfg: &RunConfig, sink: &mut Sink) -> Step {
    let params = cfg.physical();
    let c = cfg.constants_at(&params);
    let text = cfg.hamiltonian_text();
    let expr = cfg.parse_expr("hamiltonian", &text, cfg.family)?;
    let start = cfg.start_point("evolve.start", cfg.evolve.start)?;
    let spec = cfg.evolve_spec();
    let mut result = json!({});
    let tr = match cfg.evolve.mode {
        EvolveMode::Classical => classical_evolve(&expr, &start, &spec, &c)?,
        EvolveMode::Semiclassical => {
            let fam = family(cfg)?;
            semiclassical_evolve(&fam, &expr, &start, &spec, &c, cfg.ordering)?
        }
        EvolveMode::Quantum => {
            let fam = family(cfg)?;
            let op = promote(&expr, fam.operators(), &c, cfg.ordering)?;
            let psi0 = fam.coherent_state(&start, None)?;
            let tr = quantum_evolve(&op, &psi0, &spec)?;
            let gens = expectation_columns(cfg.family);
            let cols = gens
                .iter()
                .map(|g| Ok(tr.expectations(fam.operators().get(*g)?)?.into_iter().map(|z| z.re).collect::<Vec<_>>()))
                .collect::<Result<Vec<_>>>()?;
            sink.file("expectations.csv", |w| {
                let mut out = csv::Writer::from_writer(w);
                let mut header = vec!["t".to_string()];
                header.extend(gens.iter().map(|g| generator_name(*g).to_string()));
                out.write_record(&header).map_err(crate::analysis::csv_err)?;
                for (k, t) in tr.times.iter().enumerate() {
                    let mut row = vec![t.to_string()];
                    row.extend(cols.iter().map(|c| c[k].to_string()));
                    out.write_record(&row).map_err(crate::analysis::csv_err)?;
                }
                out.flush()?;
                Ok(())
            })?;
            let finals: serde_json::Map<String, Value> =
                gens.iter().zip(&cols).map(|(g, c)| (generator_name(*g).to_string(), json!(c[c.len() - 1]))).collect();
            result["final_expectations"] = Value::Object(finals);
            tr
        }
    };
    sink.file("trajectory.csv", |w| write_trajectory_csv(&tr, w))?;
    let drift = energy_drift(&tr);
    let t_end = *tr.times.last().expect("non-empty trajectory");
    let mut summary = vec![format!("{:?} run of `{text}` to t = {t_end}, {} samples", tr.kind, tr.len())];
    if let Some(pt) = tr.points.last().filter(|_| cfg.evolve.mode != EvolveMode::Quantum) {
        let n = cfg.family.coordinate_names();
        summary.push(format!("final {} = {:.12}, {} = {:.12}", n[0], pt.coords[0], n[1], pt.coords[1]));
        result["final_point"] = to_value(pt)?;
    }
    summary.push(format!("max energy drift {drift:.3e}"));
    result["kind"] = to_value(&tr.kind)?;
    result["samples"] = json!(tr.len());
    result["final_time"] = json!(t_end);
    result["energy_drift"] = json!(drift);
    sink.json("evolve.json", Command::Evolve, cfg, result)?;
    Ok((true, summary))
}

fn sweep(cfg: &RunConfig, sink: &mut Sink) -> Step {
    let text = cfg.sweep.hamiltonian.clone().or_else(|| cfg.hamiltonian.clone()).unwrap_or_else(|| match cfg.family {
        Family::Canonical => SWEEP_HAMILTONIAN.to_string(),
        f => default_hamiltonian(f).to_string(),
    });
    let expr = cfg.parse_expr("sweep.hamiltonian", &text, cfg.family)?;
    let start = cfg.start_point("sweep.start", cfg.sweep.start)?;
    let spec = EvolveSpec::new(cfg.sweep.total_time, cfg.sweep.dt);
    let params = cfg.physical();
    if cfg.family == Family::Affine {
        params.check_affine_identity()?;
    }
    let rows = hbar_sweep(
        &cfg.representation(),
        params,
        &expr,
        &start,
        &spec,
        &cfg.sweep.hbar_list,
        cfg.ordering,
        &cfg.user_constants(),
    )?;
    sink.file("sweep.csv", |w| write_sweep_csv(&rows, w))?;
    let ratios: Vec<f64> = rows.windows(2).map(|w| w[1].max_deviation / w[0].max_deviation).collect();
    let [lo, hi] = cfg.sweep.ratio_window;
    let passed = ratios.iter().all(|r| (lo..=hi).contains(r));
    let mut summary: Vec<String> =
        rows.iter().map(|r| format!("hbar {:<8} max deviation {:.6e}", r.hbar, r.max_deviation)).collect();
    summary.push(format!("ratios {:?}, window [{lo}, {hi}]", ratios.iter().map(|r| (r * 1e4).round() / 1e4).collect::<Vec<_>>()));
    sink.json(
        "sweep.json",
        Command::Sweep,
        cfg,
        json!({ "hamiltonian": text, "rows": to_value(&rows)?, "ratios": ratios, "passed": passed }),
    )?;
    Ok((passed, summary))
}

fn bridge_csv(samples: &[&BridgeSample], w: &mut dyn Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", "land", "bridge", "direct", "abs_diff"]).map_err(crate::analysis::csv_err)?;
    for s in samples {
        out.write_record([
            s.t.map_or(String::new(), |t| t.to_string()),
            format!("{:?}", s.land).to_lowercase(),
            s.bridge_value.to_string(),
            s.direct_value.to_string(),
            s.abs_diff.to_string(),
        ])
        .map_err(crate::analysis::csv_err)?;
    }
    out.flush()?;
    Ok(())
}

fn bridge(cfg: &RunConfig, sink: &mut Sink) -> Step {
    let b = &cfg.bridge;
    let fam = family(cfg)?;
    let params = cfg.physical();
    let c = cfg.constants_at(&params);
    let text = cfg.hamiltonian_text();
    let expr = cfg.parse_expr("hamiltonian", &text, cfg.family)?;
    let op = promote(&expr, fam.operators(), &c, cfg.ordering)?;
    let start = cfg.start_point(
        "bridge.start",
        b.start.or(if cfg.family == Family::Canonical { Some([1.0, 0.5]) } else { None }),
    )?;
    let total = b.periods * period(&params);
    let spec = EvolveSpec::new(total, total / b.steps as f64);
    let cl = classical_evolve(&expr, &start, &spec, &c)?;
    let path = coherent_path(&fam, &cl)?;
    let opts = BridgeOptions { half_widths: b.half_widths, nodes: b.nodes, ..BridgeOptions::default() };
    let report = action_reconstruction_report(&fam, &op, &path, b.samples, &opts)?;
    let stride = (cl.len() - 1) / b.samples;
    let classical = (0..=b.samples)
        .into_par_iter()
        .map(|i| {
            let k = i * stride;
            let bq = BridgeQuadrature::around(&fam, &cl.points[k], &opts)?;
            let mut s = classical_land_integrand(&fam, &op, &cl.points[k], Some(cl.velocities[k]), &bq)?;
            s.t = Some(cl.times[k]);
            Ok(s)
        })
        .collect::<Result<Vec<_>>>()?;
    let worst = |v: &[BridgeSample]| v.iter().map(|s| s.abs_diff).fold(0.0, f64::max);
    let (cl_worst, q_worst) = (worst(&classical), worst(&report.samples));
    let passed = cl_worst <= b.sample_tol && q_worst <= b.sample_tol && report.rel_diff <= b.action_rel_tol;
    let all: Vec<&BridgeSample> = classical.iter().chain(&report.samples).collect();
    sink.file("bridge.csv", |w| bridge_csv(&all, w))?;
    sink.json(
        "bridge.json",
        Command::Bridge,
        cfg,
        json!({
            "action": to_value(&report)?,
            "classical_land": to_value(&classical)?,
            "max_classical_land_diff": cl_worst,
            "max_quantum_land_diff": q_worst,
            "passed": passed,
        }),
    )?;
    Ok((
        passed,
        vec![
            format!("classical land: max |bridge - direct| = {cl_worst:.3e} over {} samples", classical.len()),
            format!("quantum land:   max |bridge - direct| = {q_worst:.3e} over {} samples", report.samples.len()),
            format!(
                "action: bridge {:.9}, path {:.9}, relative difference {:.3e}",
                report.bridge_action, report.path_action, report.rel_diff
            ),
        ],
    ))
}

fn spectrum(cfg: &RunConfig, sink: &mut Sink) -> Step {
    let sp = &cfg.spectrum;
    let params = cfg.physical();
    let c = cfg.constants_at(&params);
    let expr = cfg.parse_expr("spectrum.hamiltonian", &sp.hamiltonian, Family::Affine)?;
    let grid = GridSpec { n: sp.n, x_min: sp.u_range[0].exp(), x_max: sp.u_range[1].exp() };
    let (aff, wall) = rayon::join(
        || affine_spectrum(&expr, &grid, params, &c, sp.ordering, sp.gaps),
        || dirichlet_wall_spectrum(params, sp.wall_length, sp.wall_nodes, sp.gaps),
    );
    let (aff, wall) = (aff?, wall?);
    sink.file("spectrum.csv", |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["level", "affine", "affine_gap", "wall", "wall_gap"]).map_err(crate::analysis::csv_err)?;
        let gap = |g: &[f64], k: usize| g.get(k).map_or(String::new(), |v| v.to_string());
        for k in 0..aff.eigenvalues.len() {
            out.write_record([
                k.to_string(),
                aff.eigenvalues[k].to_string(),
                gap(&aff.gaps, k),
                wall.eigenvalues[k].to_string(),
                gap(&wall.gaps, k),
            ])
            .map_err(crate::analysis::csv_err)?;
        }
        out.flush()?;
        Ok(())
    })?;
    let passed = aff.relative_spread <= sp.threshold && wall.relative_spread <= sp.threshold;
    sink.json(
        "spectrum.json",
        Command::Spectrum,
        cfg,
        json!({ "affine": to_value(&aff)?, "dirichlet_wall": to_value(&wall)?, "threshold": sp.threshold, "passed": passed }),
    )?;
    Ok((
        passed,
        vec![
            format!(
                "affine `{}`: mean gap {:.9}, relative spread {:.3e}",
                sp.hamiltonian, aff.mean_gap, aff.relative_spread
            ),
            format!("dirichlet wall: mean gap {:.9}, relative spread {:.3e}", wall.mean_gap, wall.relative_spread),
            format!("threshold {:.1e}", sp.threshold),
        ],
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_errors_map_to_one() {
        let e = Error::Tolerance { what: "x".into(), achieved: 1.0, required: 0.1 };
        assert_eq!(error_exit_code(&e), EXIT_TOLERANCE);
        assert_eq!(error_exit_code(&e.context("wrapped")), EXIT_TOLERANCE);
        assert_eq!(error_exit_code(&Error::BetaBelowThreshold { beta: 0.4, hbar: 1.0 }), EXIT_DOMAIN);
        assert_eq!(error_exit_code(&Error::Config("x".into())), EXIT_DOMAIN);
        assert_eq!(error_exit_code(&Error::NonFinite("x".into())), EXIT_NUMERIC);
    }

    #[test]
    fn atomic_write_leaves_no_temporary() {
        let dir = std::env::temp_dir().join(format!("cb-atomic-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("a.txt");
        write_atomic(&path, |w| Ok(w.write_all(b"hello")?)).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "hello");
        let failing = write_atomic(&dir.join("b.txt"), |_| Err(Error::Config("boom".into())));
        assert!(failing.is_err());
        let names: Vec<_> = fs::read_dir(&dir).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names.len(), 1, "{names:?}");
        fs::remove_dir_all(&dir).unwrap();
    }
}
