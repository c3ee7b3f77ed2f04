//! Regression models of solve cost: Matérn GP, CART tree, bagged forest
//! and a tanh MLP, behind one serializable [`Surrogate`] type.

mod gp;
mod kernel;
mod mlp;
mod scale;
mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use gp::{GpHyper, GpModel, GpOptions};
pub use kernel::{matern_kernel, Nu};
pub use mlp::{Layer, MlpModel, MlpOptions};
pub use scale::Standardizer;
pub use tree::{ForestModel, ForestOptions, Node, TreeModel, TreeOptions};

pub const SURROGATE_SCHEMA: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurrogateError {
    #[error("bad hyperparameter: {0}")]
    BadHyperparameter(String),
    #[error("kernel matrix not positive definite at the largest jitter")]
    SingularKernel,
    #[error("expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("empty dataset")]
    EmptyDataset,
    #[error("non-finite feature or label")]
    NonFinite,
    #[error("model file: {0}")]
    Format(String),
}

pub(crate) fn check_dataset(x: &[Vec<f64>], y: &[f64]) -> Result<(), SurrogateError> {
    if x.is_empty() {
        return Err(SurrogateError::EmptyDataset);
    }
    if x.len() != y.len() {
        return Err(SurrogateError::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    let d = x[0].len();
    for r in x {
        if r.len() != d {
            return Err(SurrogateError::DimensionMismatch {
                expected: d,
                got: r.len(),
            });
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(SurrogateError::NonFinite);
        }
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(SurrogateError::NonFinite);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Gp,
    Dt,
    Rf,
    Mlp,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Gp => "gp",
            ModelKind::Dt => "dt",
            ModelKind::Rf => "rf",
            ModelKind::Mlp => "mlp",
        })
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "gp" => Ok(ModelKind::Gp),
            "dt" => Ok(ModelKind::Dt),
            "rf" => Ok(ModelKind::Rf),
            "mlp" => Ok(ModelKind::Mlp),
            _ => Err(format!("unknown model kind {s:?} (gp, dt, rf, mlp)")),
        }
    }
}

/// Hyperparameters for every model kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct ModelOptions {
    pub gp: GpOptions,
    pub tree: TreeOptions,
    pub forest: ForestOptions,
    pub mlp: MlpOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "model", rename_all = "lowercase")]
pub enum Surrogate {
    Gp(GpModel),
    Dt(TreeModel),
    Rf(ForestModel),
    Mlp(MlpModel),
}

#[derive(Serialize, Deserialize)]
struct SurrogateFile {
    schema: u32,
    #[serde(flatten)]
    model: Surrogate,
}

impl Surrogate {
    pub fn fit(kind: ModelKind, x: &[Vec<f64>], y: &[f64], opts: &ModelOptions) -> Result<Self, SurrogateError> {
        Ok(match kind {
            ModelKind::Gp => Surrogate::Gp(GpModel::fit(x, y, &opts.gp)?),
            ModelKind::Dt => Surrogate::Dt(TreeModel::fit(x, y, &opts.tree)?),
            ModelKind::Rf => Surrogate::Rf(ForestModel::fit(x, y, &opts.forest)?),
            ModelKind::Mlp => Surrogate::Mlp(MlpModel::fit(x, y, &opts.mlp)?),
        })
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Surrogate::Gp(_) => ModelKind::Gp,
            Surrogate::Dt(_) => ModelKind::Dt,
            Surrogate::Rf(_) => ModelKind::Rf,
            Surrogate::Mlp(_) => ModelKind::Mlp,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Surrogate::Gp(m) => m.dim(),
            Surrogate::Dt(m) => m.dim,
            Surrogate::Rf(m) => m.dim(),
            Surrogate::Mlp(m) => m.dim(),
        }
    }

    pub fn predict(&self, s: &[f64]) -> Result<f64, SurrogateError> {
        match self {
            Surrogate::Gp(m) => m.predict(s).map(|p| p.0),
            Surrogate::Dt(m) => m.predict(s),
            Surrogate::Rf(m) => m.predict(s),
            Surrogate::Mlp(m) => m.predict(s),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&SurrogateFile {
            schema: SURROGATE_SCHEMA,
            model: self.clone(),
        })
        .expect("surrogate serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, SurrogateError> {
        let v: serde_json::Value = serde_json::from_str(s).map_err(|e| SurrogateError::Format(e.to_string()))?;
        match v.get("schema").and_then(|x| x.as_u64()) {
            Some(k) if k == SURROGATE_SCHEMA as u64 => {}
            other => {
                return Err(SurrogateError::Format(format!(
                    "schema {other:?}, expected {SURROGATE_SCHEMA}"
                )))
            }
        }
        let f: SurrogateFile = serde_json::from_value(v).map_err(|e| SurrogateError::Format(e.to_string()))?;
        Ok(f.model)
    }
}
