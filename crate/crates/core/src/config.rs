//! Run configuration: a flat JSON object whose keys mirror the CLI flags.
//!
//! Layers, later ones winning: built-in defaults, the file named by
//! `PHASECONE_CONFIG`, an explicit `--config` file, then individual flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::phase::PhaseGrid;
use crate::positivity::{STANDARD_SEED, TOL_ANALYTIC, TOL_GRID};
use crate::semigroup::TwirlingQuadrature;

pub const CONFIG_ENV: &str = "PHASECONE_CONFIG";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureScheme {
    GaussHermite,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub fock_dim: usize,
    pub half_extent: f64,
    pub points: usize,
    pub psd_tol_analytic: f64,
    pub psd_tol_grid: f64,
    pub quadrature: QuadratureScheme,
    pub quadrature_order: usize,
    pub mc_samples: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            fock_dim: 64,
            half_extent: 10.0,
            points: 128,
            psd_tol_analytic: TOL_ANALYTIC,
            psd_tol_grid: TOL_GRID,
            quadrature: QuadratureScheme::GaussHermite,
            quadrature_order: 20,
            mc_samples: 100_000,
            seed: STANDARD_SEED,
            output_dir: PathBuf::from("out"),
            threads: None,
        }
    }
}

impl RunConfig {
    /// Defaults overlaid with the environment file (if set) and then with
    /// `explicit` (if given). Not yet validated: flags may still follow.
    pub fn layered(explicit: Option<&Path>) -> Result<Self> {
        let mut layers = Vec::new();
        if let Some(env) = std::env::var_os(CONFIG_ENV).filter(|v| !v.is_empty()) {
            layers.push(read_object(Path::new(&env))?);
        }
        if let Some(path) = explicit {
            layers.push(read_object(path)?);
        }
        Self::from_layers(layers)
    }

    pub fn from_layers(layers: impl IntoIterator<Item = Map<String, Value>>) -> Result<Self> {
        let mut merged = match serde_json::to_value(Self::default())? {
            Value::Object(m) => m,
            _ => unreachable!("config serializes to an object"),
        };
        for layer in layers {
            merged.extend(layer);
        }
        Ok(serde_json::from_value(Value::Object(merged))?)
    }

    /// Checks everything that does not depend on the command.
    pub fn validate(&self) -> Result<()> {
        if self.fock_dim < 2 {
            return Err(Error::InvalidDimension(self.fock_dim));
        }
        let grid = self.grid()?;
        let needed = 2.0 * self.half_extent * self.half_extent / std::f64::consts::PI;
        if (self.points as f64) < needed {
            return Err(Error::GridTooCoarse { spacing: grid.spacing(), limit: std::f64::consts::PI / self.half_extent });
        }
        for (name, tol) in [("psd_tol_analytic", self.psd_tol_analytic), ("psd_tol_grid", self.psd_tol_grid)] {
            if !(tol.is_finite() && tol >= 0.0) {
                return Err(Error::InvalidValue(format!("{name} = {tol}")));
            }
        }
        self.quadrature()?;
        if self.threads == Some(0) {
            return Err(Error::InvalidValue("threads must be positive".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<PhaseGrid> {
        PhaseGrid::new(self.half_extent, self.points)
    }

    pub fn quadrature(&self) -> Result<TwirlingQuadrature> {
        match self.quadrature {
            QuadratureScheme::GaussHermite => TwirlingQuadrature::gauss_hermite(self.quadrature_order),
            QuadratureScheme::MonteCarlo => TwirlingQuadrature::monte_carlo(self.mc_samples, self.seed),
        }
    }
}

fn read_object(path: &Path) -> Result<Map<String, Value>> {
    let text = std::fs::read_to_string(path)?;
    match serde_json::from_str(&text)? {
        Value::Object(m) => Ok(m),
        _ => Err(Error::Parse(format!("{}: config must be a JSON object", path.display()))),
    }
}
