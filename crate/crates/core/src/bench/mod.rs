//! Experiment configuration, the train/evaluate pipeline, and per-strategy
//! reports over held-out disturbances.

mod pipeline;
mod report;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::active::{ActiveError, Metric};
use crate::cstr::{CaseConfig, CstrError};
use crate::gbd::{GbdConfig, GbdError};
use crate::policy::PolicyError;
use crate::surrogate::{ModelKind, ModelOptions, SurrogateError};

pub use pipeline::{Experiment, Trained};
pub use report::{
    read_results_csv, write_report_csv, write_results_csv, BenchReport, InstanceResult, ReportRow, LEARNED, NO_CUTS,
};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Case(#[from] CstrError),
    #[error(transparent)]
    Gbd(#[from] GbdError),
    #[error(transparent)]
    Active(#[from] ActiveError),
    #[error(transparent)]
    Surrogate(#[from] SurrogateError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("csv: {0}")]
    Csv(String),
}

impl BenchError {
    /// Configuration problems as opposed to solver failures.
    pub fn is_config(&self) -> bool {
        matches!(self, BenchError::Config(_) | BenchError::Csv(_))
            || matches!(self, BenchError::Case(CstrError::BadParams(_)))
            || matches!(self, BenchError::Gbd(GbdError::Config(_)))
    }
}

impl From<csv::Error> for BenchError {
    fn from(e: csv::Error) -> Self {
        BenchError::Csv(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    #[default]
    Al,
    Random,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Al => "al",
            Strategy::Random => "random",
        })
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "al" => Ok(Strategy::Al),
            "random" => Ok(Strategy::Random),
            _ => Err(format!("unknown strategy {s:?} (al, random)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Relative gap in percent.
    pub tol: f64,
    pub max_iterations: usize,
    pub beta_sub: f64,
    pub warm_start: bool,
    pub metric: Metric,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let g = GbdConfig::default();
        Self {
            tol: g.tol,
            max_iterations: g.max_iterations,
            beta_sub: g.beta_sub,
            warm_start: g.warm_start,
            metric: Metric::Work,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearningConfig {
    pub model: ModelKind,
    pub strategy: Strategy,
    pub n_max: usize,
    /// Feasible instances in the pool.
    pub pool_instances: usize,
    pub n_initial: usize,
    pub budget: usize,
    pub n_test: usize,
    pub seed: u64,
    pub models: ModelOptions,
}

impl Default for LearningConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::Gp,
            strategy: Strategy::Al,
            n_max: 6,
            pool_instances: 300,
            n_initial: 10,
            budget: 100,
            n_test: 100,
            seed: 0,
            models: ModelOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathsConfig {
    /// Parent of the per-run output directories.
    pub runs_dir: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        Self {
            runs_dir: PathBuf::from("runs"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct ExperimentConfig {
    pub case: CaseConfig,
    pub solver: SolverConfig,
    pub learning: LearningConfig,
    pub paths: PathsConfig,
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self, BenchError> {
        let c: Self = serde_json::from_str(s).map_err(|e| BenchError::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let l = &self.learning;
        if l.n_max < 2 {
            return Err(BenchError::Config(format!("n_max must be at least 2, got {}", l.n_max)));
        }
        if l.pool_instances == 0 || l.n_test == 0 {
            return Err(BenchError::Config("pool_instances and n_test must be positive".into()));
        }
        if l.strategy == Strategy::Al && (l.n_initial < 2 || l.budget == 0) {
            return Err(BenchError::Config("active learning needs n_initial >= 2 and budget >= 1".into()));
        }
        self.gbd_config().validate()?;
        Ok(())
    }

    pub fn gbd_config(&self) -> GbdConfig {
        GbdConfig {
            tol: self.solver.tol,
            max_iterations: self.solver.max_iterations,
            beta_sub: self.solver.beta_sub,
            warm_start: self.solver.warm_start,
            ..GbdConfig::default()
        }
    }

    /// First 12 hex digits of the SHA-256 of the compact JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().take(6).map(|b| format!("{b:02x}")).collect()
    }
}
