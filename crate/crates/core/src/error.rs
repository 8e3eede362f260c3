// Copyright 2026 The coherent-bridge Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Broad failure classes, used by the command line to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Invalid input, configuration or out-of-domain request.
    Domain,
    /// A numeric procedure could not reach its accuracy contract.
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("representation too small: {0}")]
    RepresentationTooSmall(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("representation mismatch: {0}")]
    RepresentationMismatch(String),
    #[error("non-finite values in {0}")]
    NonFinite(String),
    #[error("operator is not Hermitian (max |A - A^dagger| = {0:.3e})")]
    NotHermitian(f64),
    #[error("invalid phase point: {0}")]
    InvalidPoint(String),
    #[error("family mismatch: expected {expected}, got {got}")]
    FamilyMismatch { expected: String, got: String },
    #[error("beta must exceed hbar/2 (beta = {beta}, hbar = {hbar})")]
    BetaBelowThreshold { beta: f64, hbar: f64 },
    #[error("quadrature rejected: {0}")]
    Quadrature(String),
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("non-polynomial construct at byte {offset}: {message}")]
    NonPolynomial { offset: usize, message: String },
    #[error("variable `{name}` is not a {family} variable")]
    WrongFamilyVariable { name: String, family: String },
    #[error("unbound constant `{0}`")]
    UnboundConstant(String),
    #[error("affine trajectory left q > 0 at t = {time}")]
    PositivityViolated { time: f64 },
    #[error("missing samples: {0}")]
    MissingSamples(String),
    #[error("tolerance not reached: {what} (achieved {achieved:.3e}, required {required:.3e})")]
    Tolerance {
        what: String,
        achieved: f64,
        required: f64,
    },
    #[error("finite-difference step underflow: {0}")]
    StepUnderflow(String),
    #[error("config: {0}")]
    Config(String),
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Tolerance { .. }
            | Error::StepUnderflow(_)
            | Error::NonFinite(_)
            | Error::Io(_) => ErrorClass::Numeric,
            Error::Context { source, .. } => source.class(),
            _ => ErrorClass::Domain,
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
