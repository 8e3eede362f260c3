// Copyright 2026 The coherent-bridge Authors
// SPDX-License-Identifier: Apache-2.0

//! Polynomial Hamiltonians in a family's favored variables: parsing,
//! classical evaluation, exact differentiation and operator promotion.
//!
//! Variables: `p`, `q` (canonical); `d` (= p q), `q` (affine, `q` may carry a
//! negative integer power); `s1`, `s2`, `s3` with classical values
//! `s hbar (sin(theta)cos(phi), sin(theta)sin(phi), cos(theta))` (spin).

mod expr;
mod parse;
mod promote;

pub use expr::{Angle, Constants, HamiltonianExpr, Node, TrigFn, Variable, BUILTIN_CONSTANTS};
pub use parse::{parse, parse_with_constants};
pub use promote::{expand, promote, ordered_terms, Letter, OrderedTerm, OrderingRule, WordSum};
