// Copyright 2026 The coherent-bridge Authors
// SPDX-License-Identifier: Apache-2.0

//! Run configuration. Every default reproduces the reference checks, so an
//! empty file (or no file) is a valid configuration.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dsl::{parse_with_constants, Constants, HamiltonianExpr, OrderingRule};
use crate::dynamics::EvolveSpec;
use crate::error::{Error, Result};
use crate::families::{RepresentationSpec, AFFINE_IDENTITY_GRID};
use crate::operators::{GridSpec, PhysicalParams};
use crate::phase::{Family, PhasePoint};

fn config_err(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{field}: {msg}"))
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(config_err(field, format!("must be finite and positive, got {v}")))
    }
}

fn finite(field: &str, v: &[f64]) -> Result<()> {
    match v.iter().find(|x| !x.is_finite()) {
        Some(x) => Err(config_err(field, format!("must be finite, got {x}"))),
        None => Ok(()),
    }
}

fn range(field: &str, r: [f64; 2]) -> Result<()> {
    finite(field, &r)?;
    if r[0] > r[1] {
        return Err(config_err(field, format!("lower bound {} exceeds upper bound {}", r[0], r[1])));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsConfig {
    pub hbar: f64,
    pub omega: f64,
    pub mass: f64,
    pub s: f64,
    pub beta: f64,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        let p = PhysicalParams::default();
        Self { hbar: p.hbar, omega: p.omega, mass: p.mass, s: p.s, beta: p.beta }
    }
}

impl From<ParamsConfig> for PhysicalParams {
    fn from(c: ParamsConfig) -> Self {
        PhysicalParams { hbar: c.hbar, omega: c.omega, mass: c.mass, s: c.s, beta: c.beta }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CanonicalConfig {
    pub dim: usize,
}

impl Default for CanonicalConfig {
    fn default() -> Self {
        Self { dim: 64 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AffineConfig {
    pub n: usize,
    pub x_min: f64,
    pub x_max: f64,
}

impl Default for AffineConfig {
    fn default() -> Self {
        let g = AFFINE_IDENTITY_GRID;
        Self { n: g.n, x_min: g.x_min, x_max: g.x_max }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IdentityConfig {
    /// Pass threshold; per-family default when absent.
    pub threshold: Option<f64>,
    /// Multiplies the node counts of the family's default rule.
    pub node_scale: f64,
}

impl Default for IdentityConfig {
    fn default() -> Self {
        Self { threshold: None, node_scale: 1.0 }
    }
}

/// A rectangular lattice of sample points; per-family ranges when absent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PointGrid {
    pub first: Option<[f64; 2]>,
    pub second: Option<[f64; 2]>,
    pub per_axis: usize,
}

impl Default for PointGrid {
    fn default() -> Self {
        Self { first: None, second: None, per_axis: 5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricConfig {
    pub points: PointGrid,
    pub step: f64,
    /// Coefficient `b` of the phase `b p q` applied to every state.
    pub phase_b: Option<f64>,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self { points: PointGrid::default(), step: crate::analysis::DEFAULT_METRIC_STEP, phase_b: None }
    }
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SymbolConfig {
    pub points: PointGrid,
    /// When non-empty, also writes the correction table across these values.
    pub hbar_list: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvolveMode {
    Classical,
    Semiclassical,
    Quantum,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveConfig {
    pub mode: EvolveMode,
    pub total_time: f64,
    pub dt: f64,
    /// Initial phase point; per-family default when absent.
    pub start: Option<[f64; 2]>,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self { mode: EvolveMode::Classical, total_time: 10.0, dt: 1e-3, start: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub hamiltonian: Option<String>,
    pub hbar_list: Vec<f64>,
    pub total_time: f64,
    pub dt: f64,
    pub start: Option<[f64; 2]>,
    /// Accepted range of consecutive deviation ratios.
    pub ratio_window: [f64; 2],
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            hamiltonian: None,
            hbar_list: vec![1.0, 0.5, 0.25, 0.125],
            total_time: 0.5,
            dt: 1e-3,
            start: None,
            ratio_window: [0.4, 0.6],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BridgeConfig {
    pub start: Option<[f64; 2]>,
    /// Path length in oscillator periods `2 pi / omega`.
    pub periods: f64,
    pub steps: usize,
    /// Bridge evaluations along the path (must divide `steps`).
    pub samples: usize,
    pub half_widths: f64,
    pub nodes: usize,
    pub sample_tol: f64,
    pub action_rel_tol: f64,
}

impl Default for BridgeConfig {
    fn default() -> Self {
        Self {
            start: None,
            periods: 1.0,
            steps: 3200,
            samples: 32,
            half_widths: 8.0,
            nodes: 61,
            sample_tol: 1e-4,
            action_rel_tol: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    pub hamiltonian: String,
    pub ordering: OrderingRule,
    pub n: usize,
    /// `ln x` range of the half-line grid.
    pub u_range: [f64; 2],
    pub gaps: usize,
    pub wall_length: f64,
    pub wall_nodes: usize,
    pub threshold: f64,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            hamiltonian: "(d*q^-2*d/m + m*omega^2*q^2)/2".into(),
            ordering: OrderingRule::AsWritten,
            n: 4096,
            u_range: [-6.0, 2.5],
            gaps: 6,
            wall_length: 12.0,
            wall_nodes: 4096,
            threshold: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub family: Family,
    /// Hamiltonian for metric-free commands; per-family default when absent.
    pub hamiltonian: Option<String>,
    pub ordering: OrderingRule,
    /// User constants available to every expression.
    pub constants: BTreeMap<String, f64>,
    pub params: ParamsConfig,
    pub canonical: CanonicalConfig,
    pub affine: AffineConfig,
    pub identity: IdentityConfig,
    pub metric: MetricConfig,
    pub symbol: SymbolConfig,
    pub evolve: EvolveConfig,
    pub sweep: SweepConfig,
    pub bridge: BridgeConfig,
    pub spectrum: SpectrumConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            family: Family::Canonical,
            hamiltonian: None,
            ordering: OrderingRule::SymmetricWeyl,
            constants: BTreeMap::new(),
            params: ParamsConfig::default(),
            canonical: CanonicalConfig::default(),
            affine: AffineConfig::default(),
            identity: IdentityConfig::default(),
            metric: MetricConfig::default(),
            symbol: SymbolConfig::default(),
            evolve: EvolveConfig::default(),
            sweep: SweepConfig::default(),
            bridge: BridgeConfig::default(),
            spectrum: SpectrumConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            Error::Config(match e.span() {
                Some(s) => format!("{} (bytes {}..{})", e.message(), s.start, s.end),
                None => e.message().to_string(),
            })
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Checks every field that can be checked without building operators.
    pub fn validate(&self) -> Result<()> {
        let p = &self.params;
        for (name, v) in [("hbar", p.hbar), ("omega", p.omega), ("mass", p.mass), ("s", p.s), ("beta", p.beta)] {
            positive(&format!("params.{name}"), v)?;
        }
        if self.family == Family::Spin && ((2.0 * p.s).fract() != 0.0 || p.s > 512.0) {
            return Err(config_err("params.s", format!("must be a positive half-integer, got {}", p.s)));
        }
        if self.canonical.dim < 2 {
            return Err(config_err("canonical.dim", format!("must be at least 2, got {}", self.canonical.dim)));
        }
        let a = &self.affine;
        if a.n < GridSpec::MIN_NODES {
            return Err(config_err("affine.n", format!("must be at least {}, got {}", GridSpec::MIN_NODES, a.n)));
        }
        positive("affine.x_min", a.x_min)?;
        if !(a.x_max > a.x_min && a.x_max.is_finite()) {
            return Err(config_err("affine.x_max", format!("must exceed affine.x_min, got {}", a.x_max)));
        }
        for (k, v) in &self.constants {
            if crate::dsl::BUILTIN_CONSTANTS.contains(&k.as_str()) {
                return Err(config_err(&format!("constants.{k}"), "shadows a built-in constant; set it under [params]"));
            }
            finite(&format!("constants.{k}"), &[*v])?;
        }
        if let Some(t) = self.identity.threshold {
            positive("identity.threshold", t)?;
        }
        positive("identity.node_scale", self.identity.node_scale)?;
        for (name, g) in [("metric.points", &self.metric.points), ("symbol.points", &self.symbol.points)] {
            if g.per_axis == 0 {
                return Err(config_err(&format!("{name}.per_axis"), "must be at least 1"));
            }
            if let Some(r) = g.first {
                range(&format!("{name}.first"), r)?;
            }
            if let Some(r) = g.second {
                range(&format!("{name}.second"), r)?;
            }
        }
        positive("metric.step", self.metric.step)?;
        if let Some(b) = self.metric.phase_b {
            finite("metric.phase_b", &[b])?;
        }
        for (i, h) in self.symbol.hbar_list.iter().enumerate() {
            positive(&format!("symbol.hbar_list[{i}]"), *h)?;
        }
        let e = &self.evolve;
        positive("evolve.total_time", e.total_time)?;
        positive("evolve.dt", e.dt)?;
        if e.dt > e.total_time {
            return Err(config_err("evolve.dt", "exceeds evolve.total_time"));
        }
        if let Some(s) = e.start {
            finite("evolve.start", &s)?;
        }
        let s = &self.sweep;
        if s.hbar_list.is_empty() {
            return Err(config_err("sweep.hbar_list", "must not be empty"));
        }
        for (i, h) in s.hbar_list.iter().enumerate() {
            positive(&format!("sweep.hbar_list[{i}]"), *h)?;
        }
        if s.hbar_list.windows(2).any(|w| w[1] >= w[0]) {
            return Err(config_err("sweep.hbar_list", "must be strictly decreasing"));
        }
        positive("sweep.total_time", s.total_time)?;
        positive("sweep.dt", s.dt)?;
        if s.dt > s.total_time {
            return Err(config_err("sweep.dt", "exceeds sweep.total_time"));
        }
        range("sweep.ratio_window", s.ratio_window)?;
        if let Some(st) = s.start {
            finite("sweep.start", &st)?;
        }
        let b = &self.bridge;
        positive("bridge.periods", b.periods)?;
        if b.samples < 2 {
            return Err(config_err("bridge.samples", "must be at least 2"));
        }
        if b.steps < 2 || !b.steps.is_multiple_of(b.samples) {
            return Err(config_err("bridge.steps", format!("must be a multiple of bridge.samples ({})", b.samples)));
        }
        positive("bridge.half_widths", b.half_widths)?;
        if b.nodes < 2 {
            return Err(config_err("bridge.nodes", "must be at least 2"));
        }
        positive("bridge.sample_tol", b.sample_tol)?;
        positive("bridge.action_rel_tol", b.action_rel_tol)?;
        if let Some(st) = b.start {
            finite("bridge.start", &st)?;
        }
        let sp = &self.spectrum;
        if sp.n < GridSpec::MIN_NODES {
            return Err(config_err("spectrum.n", format!("must be at least {}, got {}", GridSpec::MIN_NODES, sp.n)));
        }
        if sp.wall_nodes < GridSpec::MIN_NODES {
            return Err(config_err(
                "spectrum.wall_nodes",
                format!("must be at least {}, got {}", GridSpec::MIN_NODES, sp.wall_nodes),
            ));
        }
        range("spectrum.u_range", sp.u_range)?;
        if sp.u_range[0] == sp.u_range[1] {
            return Err(config_err("spectrum.u_range", "must have positive width"));
        }
        if sp.gaps == 0 {
            return Err(config_err("spectrum.gaps", "must be at least 1"));
        }
        positive("spectrum.wall_length", sp.wall_length)?;
        positive("spectrum.threshold", sp.threshold)?;
        Ok(())
    }

    pub fn physical(&self) -> PhysicalParams {
        self.params.into()
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec { n: self.affine.n, x_min: self.affine.x_min, x_max: self.affine.x_max }
    }

    pub fn representation(&self) -> RepresentationSpec {
        match self.family {
            Family::Canonical => RepresentationSpec::Canonical { dim: self.canonical.dim },
            Family::Spin => RepresentationSpec::Spin,
            Family::Affine => RepresentationSpec::Affine { grid: self.grid() },
        }
    }

    pub fn user_constants(&self) -> Vec<(String, f64)> {
        self.constants.iter().map(|(k, v)| (k.clone(), *v)).collect()
    }

    pub fn constants_at(&self, params: &PhysicalParams) -> Constants {
        let mut c = Constants::from_params(params);
        for (k, v) in &self.constants {
            c.set(k, *v);
        }
        c
    }

    pub fn parse_expr(&self, field: &str, text: &str, family: Family) -> Result<HamiltonianExpr> {
        let names: Vec<&str> = self.constants.keys().map(String::as_str).collect();
        parse_with_constants(text, family, &names).map_err(|e| e.context(field.to_string()))
    }

    /// The top-level Hamiltonian, or the family's oscillator-like default.
    pub fn hamiltonian_text(&self) -> String {
        self.hamiltonian.clone().unwrap_or_else(|| default_hamiltonian(self.family).to_string())
    }

    pub fn start_point(&self, field: &str, start: Option<[f64; 2]>) -> Result<PhasePoint> {
        let c = start.unwrap_or(match self.family {
            Family::Canonical | Family::Affine => [0.0, 1.0],
            Family::Spin => [1.0, 0.0],
        });
        let pt = PhasePoint::new(self.family, c);
        pt.validate().map_err(|e| e.context(field.to_string()))?;
        Ok(pt)
    }

    pub fn evolve_spec(&self) -> EvolveSpec {
        EvolveSpec::new(self.evolve.total_time, self.evolve.dt)
    }

    /// Sample lattice over per-family default ranges.
    pub fn lattice(&self, g: &PointGrid) -> Vec<PhasePoint> {
        let (d0, d1) = match self.family {
            Family::Canonical => ([-1.0, 1.0], [-1.0, 1.0]),
            Family::Spin => ([0.5, 2.5], [-2.0, 2.0]),
            Family::Affine => ([-1.0, 1.0], [0.5, 2.0]),
        };
        let (r0, r1) = (g.first.unwrap_or(d0), g.second.unwrap_or(d1));
        let at = |r: [f64; 2], i: usize| {
            if g.per_axis == 1 {
                0.5 * (r[0] + r[1])
            } else {
                r[0] + (r[1] - r[0]) * i as f64 / (g.per_axis - 1) as f64
            }
        };
        let mut out = Vec::with_capacity(g.per_axis * g.per_axis);
        for i in 0..g.per_axis {
            for j in 0..g.per_axis {
                out.push(PhasePoint::new(self.family, [at(r0, i), at(r1, j)]));
            }
        }
        out
    }
}

pub fn default_hamiltonian(family: Family) -> &'static str {
    match family {
        Family::Canonical => "p^2/(2*m) + m*omega^2*q^2/2",
        Family::Spin => "omega*s3",
        Family::Affine => "(d*q^-2*d/m + m*omega^2*q^2)/2",
    }
}

/// Default sweep Hamiltonian: the quartic oscillator.
pub const SWEEP_HAMILTONIAN: &str = "q^4/4 + p^2/2";

/// One oscillator period.
pub fn period(params: &PhysicalParams) -> f64 {
    2.0 * PI / params.omega
}
