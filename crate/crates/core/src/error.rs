use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::modes::ModeIndex;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UnitError {
    #[error("cannot parse number `{0}`")]
    BadNumber(String),
    #[error("missing unit suffix (expected a unit convertible to {expected})")]
    MissingUnit { expected: &'static str },
    #[error("unrecognised unit `{unit}` (expected a unit convertible to {expected})")]
    UnknownUnit { unit: String, expected: &'static str },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{0}` given more than once")]
    DuplicateKey(String),
    #[error("{field}: {source}")]
    Unit { field: String, source: UnitError },
    #[error("{field}: {reason}")]
    Invalid { field: String, reason: String },
    #[error("exactly one of {0} must be given")]
    Exclusive(String),
}

impl ConfigError {
    pub(crate) fn invalid(field: &str, reason: impl Into<String>) -> Self {
        ConfigError::Invalid { field: field.to_string(), reason: reason.into() }
    }

    /// Name of the offending field, when the error concerns one.
    pub fn field(&self) -> Option<&str> {
        match self {
            ConfigError::Unit { field, .. } | ConfigError::Invalid { field, .. } => Some(field),
            ConfigError::UnknownKey(k) | ConfigError::DuplicateKey(k) => Some(k),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("quadrature for {quantity}{} did not converge (last relative change {achieved:.3e})", mode_suffix(.mode))]
    Convergence { quantity: &'static str, mode: Option<ModeIndex>, achieved: f64 },
    #[error("r = {r} lies outside the condensate (Thomas-Fermi radius {radius})")]
    Domain { r: f64, radius: f64 },
    #[error("truncated state dimension {dim} exceeds the cap of {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("{0}")]
    Invalid(String),
}

fn mode_suffix(mode: &Option<ModeIndex>) -> String {
    match mode {
        Some(m) => format!(" of mode {m}"),
        None => String::new(),
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("table: {0}")]
    Table(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        if e.is_io_error() {
            if let csv::ErrorKind::Io(io) = e.into_kind() {
                return Error::Io(io);
            }
            unreachable!("is_io_error implies an Io kind");
        }
        Error::Table(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Non-fatal diagnostics. Computations carry on and hand these back to the
/// caller alongside their results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    /// N·a_b/a_ho below the Thomas–Fermi threshold.
    ThomasFermi { parameter: f64 },
    /// Tweezer not much stiffer than the condensate trap.
    TrapRatio { ratio: f64 },
    /// ω_gap·τ too small.
    BlockadeTime { gap_times_tau: f64 },
    /// Ω_eff not small against ω_gap.
    BlockadeRabi { rabi_over_gap: f64 },
    /// g above the perturbative-validity threshold.
    Perturbative { g: f64, threshold: f64 },
    /// P(g_ab) pre-scan was not unimodal; grid argmax used.
    NotUnimodal,
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::ThomasFermi { parameter } => {
                write!(f, "N a_b / a_ho = {parameter:.3} < 10: Thomas-Fermi profile unreliable")
            }
            Warning::TrapRatio { ratio } => {
                write!(f, "omega_a / omega_b = {ratio:.1} < 100: tweezer not well separated from the condensate trap")
            }
            Warning::BlockadeTime { gap_times_tau } => {
                write!(f, "omega_gap * tau = {gap_times_tau:.3}: pulse too short to resolve the blockade gap")
            }
            Warning::BlockadeRabi { rabi_over_gap } => {
                write!(f, "Omega_eff / omega_gap = {rabi_over_gap:.3}: drive not small against the blockade gap")
            }
            Warning::Perturbative { g, threshold } => {
                write!(f, "g = {g:.4e} exceeds {threshold}: second-order result outside its validity range")
            }
            Warning::NotUnimodal => write!(f, "P(g_ab) not unimodal on the bracket; using the grid argmax"),
        }
    }
}
