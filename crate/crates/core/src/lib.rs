// Copyright 2026 The coherent-bridge Authors
// SPDX-License-Identifier: Apache-2.0

//! Canonical, spin and affine coherent states on finite-dimensional
//! representations, with classical, semi-classical and quantum dynamics
//! driven by one Hamiltonian expression, and the phase-space "bridge"
//! quadrature that rebuilds both action integrands from a single kernel.

// `!(x <= tol)` is kept deliberately: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod bridge;
pub mod cli;
pub mod dsl;
pub mod dynamics;
pub mod error;
pub mod families;
pub mod operators;
pub mod phase;
pub mod quadrature;
pub mod scalar;
pub mod spectrum;

pub use error::{Error, ErrorClass, Result};
pub use scalar::Real;
pub use phase::{Family, PhasePoint};
pub use operators::{CMatrix, CVector, C64};

/// Double-precision phase point.
pub type Point = PhasePoint<f64>;
/// Single-precision phase point for the classical integrators.
pub type Point32 = PhasePoint<f32>;
/// Double-precision integrated flow.
pub type Flow = dynamics::FlowSamples<f64>;
/// Single-precision integrated flow.
pub type Flow32 = dynamics::FlowSamples<f32>;
