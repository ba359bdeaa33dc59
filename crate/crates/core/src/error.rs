// Copyright 2026 lindsector Contributors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("sector k={k} is empty for cutoff n_max={n_max} (need |k| <= n_max)")]
    EmptySector { k: i64, n_max: usize },

    #[error("full superoperator refused for n_max={n_max} (oracle limit {limit}, override required)")]
    OracleGuard { n_max: usize, limit: usize },

    #[error("eigensolver failed on sector k={k} (dim {dim}): {detail}")]
    Eigensolver { k: i64, dim: usize, detail: String },

    #[error("steady-state tail weight {tail_weight:.3e} at n_max={n_max} exceeds {limit:.1e}; raise the cutoff")]
    Truncation {
        tail_weight: f64,
        n_max: usize,
        limit: f64,
    },

    #[error("steady state has negative occupation {min_entry:.3e} below clamp threshold")]
    NegativeOccupation { min_entry: f64 },

    #[error("propagation produced non-finite values on the {path} path (sector k={k})")]
    Propagation { path: &'static str, k: i64 },

    #[error("dominant frequency undefined: only {crossings} zero crossings (need at least 4)")]
    UndefinedFrequency { crossings: usize },

    #[error("cutoff n_max={n_max} too small: {detail}")]
    Cutoff { n_max: usize, detail: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
