use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid too coarse: spacing {spacing} exceeds pi/L = {limit}")]
    GridTooCoarse { spacing: f64, limit: f64 },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("point ({q}, {p}) lies outside the sampled grid")]
    OutOfGrid { q: f64, p: f64 },
    #[error("invalid Fock dimension {0} (need at least 2)")]
    InvalidDimension(usize),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("operator is not Hermitian (defect {defect:e})")]
    NotHermitian { defect: f64 },
    #[error("truncation: {0}")]
    Truncation(String),
    #[error("certification failed: {0}")]
    Certification(String),
    #[error("bad covariance: {0}")]
    BadCovariance(String),
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error("invalid sample set: {0}")]
    InvalidSampleSet(String),
    #[error("invalid quadrature: {0}")]
    InvalidQuadrature(String),
    #[error("invalid value: {0}")]
    InvalidValue(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Non-fatal diagnostics. The computation still produced a value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    /// The field does not decay on the outermost grid ring.
    Decay { boundary_max: f64, threshold: f64 },
    /// A displacement amplitude left the truncation comfort zone.
    Truncation { alpha_sq: f64, limit: f64 },
    /// Trace had to be renormalized by more than the nominal budget.
    TraceDrift { drift: f64, budget: f64 },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::Decay { boundary_max, threshold } => write!(
                f,
                "field magnitude {boundary_max:e} on the grid boundary exceeds {threshold:e}"
            ),
            Warning::Truncation { alpha_sq, limit } => {
                write!(f, "|alpha|^2 = {alpha_sq} exceeds truncation comfort {limit}")
            }
            Warning::TraceDrift { drift, budget } => {
                write!(f, "trace drift {drift:e} exceeds budget {budget:e}")
            }
        }
    }
}

/// A value together with the warnings raised while computing it.
#[derive(Debug, Clone)]
pub struct Checked<T> {
    pub value: T,
    pub warnings: Vec<Warning>,
}

impl<T> Checked<T> {
    pub fn new(value: T) -> Self {
        Self { value, warnings: Vec::new() }
    }

    pub fn with_warnings(value: T, warnings: Vec<Warning>) -> Self {
        Self { value, warnings }
    }

    pub fn is_clean(&self) -> bool {
        self.warnings.is_empty()
    }

    /// Drops the warnings after logging them.
    pub fn into_value(self) -> T {
        for w in &self.warnings {
            log::warn!("{w}");
        }
        self.value
    }

    pub fn map<U>(self, f: impl FnOnce(T) -> U) -> Checked<U> {
        Checked { value: f(self.value), warnings: self.warnings }
    }

    /// Moves this value's warnings into `sink` and returns the bare value.
    pub fn drain_into(self, sink: &mut Vec<Warning>) -> T {
        sink.extend(self.warnings);
        self.value
    }
}
