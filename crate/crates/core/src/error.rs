// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use crate::array::CellAddress;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("rejected input `{name}` = {value}: {reason}")]
    RejectedInput {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("branch solver found no sign change on [{lo}, {hi}] (residuals {f_lo:e}, {f_hi:e} A)")]
    NoBracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("{quantity} = {value} V lies outside the dynamic range [{lo}, {hi}] V")]
    OutOfDynamicRange {
        quantity: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("target conductance {target:e} S outside achievable range [{g_min:e}, {g_max:e}] S")]
    TargetOutOfRange { target: f64, g_min: f64, g_max: f64 },

    #[error("LUT fingerprint {table} does not match live parameters {live}")]
    FingerprintMismatch { table: String, live: String },

    #[error("LUT build produced no usable entries ({trimmed} grid points trimmed)")]
    EmptyLut { trimmed: usize },

    #[error("LUT grid must be non-empty and strictly increasing within [{lo}, {hi}] V")]
    BadGrid { lo: f64, hi: f64 },

    #[error("invalid control levels: CTRL0 and CTRL1 both high (rail contention)")]
    InvalidControl,

    #[error("programming circuit busy with {busy}, cannot address {requested}")]
    Contention {
        busy: CellAddress,
        requested: CellAddress,
    },

    #[error("cell address {0} outside the array")]
    BadAddress(CellAddress),

    #[error("cell ({row}, {col}) shows {intervals} match intervals over the sweep")]
    NonMonotoneMatch {
        row: usize,
        col: usize,
        intervals: usize,
    },

    #[error("cell ({row}, {col}) never matches over the sweep")]
    EmptyWindow { row: usize, col: usize },

    #[error("unknown {kind} `{name}` (known: {known})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        known: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("config parse error: {0}")]
    Config(#[from] toml::de::Error),

    #[error("{0}")]
    Format(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn ensure_finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::RejectedInput {
            name,
            value,
            reason: "not finite",
        })
    }
}
