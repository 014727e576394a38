//! JSON problem specification.
//!
//! ```json
//! {
//!   "kind": "wave-frac-space",
//!   "grid": { "lower": [0, 0, 0], "upper": [1, 1, 1], "nodes": [17, 17, 17] },
//!   "alpha": [0.75, 0.75, 0.75],
//!   "rho": 1.0, "k": 1.0,
//!   "source": "zero",
//!   "dirichlet": "manufactured:cosine",
//!   "tol": 1e-10, "max_iter": 10000, "method": "auto"
//! }
//! ```
//!
//! `file:` paths are resolved relative to the spec file.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use fracvar_core::solver::{manufacture_source, Method};
use fracvar_core::{Field, FracOrder, Grid, LinearProblem, MaterialParams, ProblemKind};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::io::{read_field, GridSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Alpha {
    Uniform(f64),
    PerAxis(Vec<f64>),
}

fn default_source() -> String {
    "zero".into()
}

fn default_tol() -> f64 {
    1e-10
}

fn default_max_iter() -> usize {
    10_000
}

fn default_method() -> String {
    "auto".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub kind: String,
    pub grid: GridSpec,
    pub alpha: Alpha,
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default)]
    pub k: Option<f64>,
    #[serde(default = "default_source")]
    pub source: String,
    #[serde(default = "default_source")]
    pub dirichlet: String,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_method")]
    pub method: String,
}

/// A spec resolved into library objects.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub spec: ProblemSpec,
    pub problem: LinearProblem,
    pub method: Method,
}

impl ProblemSpec {
    pub fn load(path: &Path) -> CliResult<(Self, PathBuf)> {
        let text = fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        let spec: ProblemSpec =
            serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((spec, base))
    }

    pub fn kind(&self) -> CliResult<ProblemKind> {
        ProblemKind::parse(&self.kind).ok_or_else(|| CliError::usage(format!("unknown problem kind '{}'", self.kind)))
    }

    pub fn order(&self, dims: usize) -> CliResult<FracOrder> {
        let alpha = match &self.alpha {
            Alpha::Uniform(a) => vec![*a; dims],
            Alpha::PerAxis(v) => v.clone(),
        };
        Ok(FracOrder::new(alpha)?)
    }

    pub fn params(&self) -> CliResult<Option<MaterialParams>> {
        match (self.rho, self.k) {
            (None, None) => Ok(None),
            (rho, k) => Ok(Some(MaterialParams::new(rho.unwrap_or(1.0), k.unwrap_or(1.0))?)),
        }
    }

    pub fn resolve(self, base: &Path) -> CliResult<Resolved> {
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(CliError::usage(format!("tol must be positive, got {}", self.tol)));
        }
        let method =
            Method::parse(&self.method).ok_or_else(|| CliError::usage(format!("unknown method '{}'", self.method)))?;
        let kind = self.kind()?;
        let grid = self.grid.build()?;
        let order = self.order(grid.dims())?;
        let params = match (kind.is_wave(), self.params()?) {
            (true, None) => Some(MaterialParams::new(1.0, 1.0)?),
            (_, p) => p,
        };

        let source = match self.source.as_str() {
            "zero" => Field::zeros(&grid, 1),
            "manufactured:sine" => manufacture_source(kind, &order, params, &sine(&grid)?)?,
            s => load_on(s, base, &grid, "source")?,
        };
        let dirichlet = match self.dirichlet.as_str() {
            "zero" => Field::zeros(&grid, 1),
            "manufactured:cosine" => cosine(&grid)?,
            "manufactured:sine" => sine(&grid)?,
            s => load_on(s, base, &grid, "dirichlet")?,
        };
        let problem = match kind {
            ProblemKind::Poisson => LinearProblem::poisson(order, source, dirichlet)?,
            _ => LinearProblem::wave(kind, order, params.expect("wave params"), dirichlet)?.with_source(source)?,
        };
        Ok(Resolved { spec: self, problem, method })
    }
}

fn load_on(s: &str, base: &Path, grid: &Grid, what: &str) -> CliResult<Field> {
    let Some(rel) = s.strip_prefix("file:") else {
        return Err(CliError::usage(format!("unrecognized {what} '{s}'")));
    };
    let field = read_field(&base.join(rel))?;
    if field.grid() != grid {
        return Err(CliError::usage(format!("{what} file {rel} is on a different grid")));
    }
    Ok(field)
}

/// `prod_i sin(pi (x_i - a_i) / (b_i - a_i))`, zero on the boundary.
pub fn sine(grid: &Grid) -> CliResult<Field> {
    let (lo, hi) = (grid.lower().to_vec(), grid.upper().to_vec());
    Ok(Field::sample_scalar(grid, |x| {
        x.iter().enumerate().map(|(i, t)| (PI * (t - lo[i]) / (hi[i] - lo[i])).sin()).product()
    })?)
}

/// `1 + 0.5 sum_i cos(pi (x_i - a_i) / (b_i - a_i))`, nonzero on the boundary.
pub fn cosine(grid: &Grid) -> CliResult<Field> {
    let (lo, hi) = (grid.lower().to_vec(), grid.upper().to_vec());
    Ok(Field::sample_scalar(grid, |x| {
        1.0 + 0.5 * x.iter().enumerate().map(|(i, t)| (PI * (t - lo[i]) / (hi[i] - lo[i])).cos()).sum::<f64>()
    })?)
}
