// Copyright 2026 The coherent-bridge Authors
// SPDX-License-Identifier: Apache-2.0

//! Fubini–Study metric, lower symbols and their `hbar` corrections.

mod metric;
mod symbol;

pub(crate) use metric::csv_err;
pub use metric::{fs_metric, write_metric_csv, MetricSample, tangent_bracket, DEFAULT_METRIC_STEP, RICHARDSON_TOL};
pub use symbol::{
    hbar_correction_scan, lower_symbol, write_correction_csv, write_symbol_csv, CorrectionRow, SymbolExpansion,
    SymbolReport,
};
