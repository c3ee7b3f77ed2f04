//! Generalized Benders decomposition: optimality cuts, cut libraries over a
//! uniform discretization of the complicating-variable domain, and the
//! master/subproblem iteration with work accounting.
//!
//! Sign convention used everywhere: an oracle returns `(phi, lambda)` with
//! `lambda = -d(phi)/d(theta)`, so the cut anchored at `theta_bar` reads
//! `eta >= phi_bar - lambda_bar * (theta - theta_bar)`.

mod library;
mod run;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::LpError;

pub use library::{build_cut_library, select_initial_cuts, uniform_anchors, CutLibrary, LibraryEntry};
pub use run::{
    run_gbd, write_trace_csv, GbdConfig, GbdResult, MasterProblem, OracleSet, TraceRow,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GbdError {
    #[error("degenerate domain [{lb}, {ub}]")]
    DegenerateDomain { lb: f64, ub: f64 },
    #[error("at least two discretization points are required, got {0}")]
    TooFewPoints(usize),
    #[error("anchor {theta} outside domain [{lb}, {ub}]")]
    OutOfDomain { theta: f64, lb: f64, ub: f64 },
    #[error("{n} cuts requested but the library holds grids up to {n_max}")]
    NotInLibrary { n: usize, n_max: usize },
    #[error("master problem infeasible at iteration {iteration}")]
    MasterInfeasible { iteration: usize },
    #[error("master problem unbounded at iteration {iteration}")]
    MasterUnbounded { iteration: usize },
    #[error("no oracle for transition {0}")]
    MissingOracle(String),
    #[error("oracle failure: {0}")]
    Oracle(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Optimal value and copy-constraint multiplier of a subproblem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleValue {
    pub value: f64,
    pub multiplier: f64,
}

/// A subproblem whose value depends on one complicating variable.
///
/// `evaluate` must be deterministic and finite on the whole domain.
pub trait SubproblemOracle: Send + Sync {
    fn domain(&self) -> (f64, f64);
    fn evaluate(&self, theta: f64) -> Result<OracleValue, GbdError>;
}

impl SubproblemOracle for Box<dyn SubproblemOracle> {
    fn domain(&self) -> (f64, f64) {
        (**self).domain()
    }

    fn evaluate(&self, theta: f64) -> Result<OracleValue, GbdError> {
        (**self).evaluate(theta)
    }
}

/// Tangent under-estimator `eta >= value - multiplier * (theta - anchor)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BendersCut {
    pub anchor: f64,
    pub value: f64,
    pub multiplier: f64,
}

impl BendersCut {
    pub fn eval(&self, theta: f64) -> f64 {
        self.value - self.multiplier * (theta - self.anchor)
    }
}

/// Cuts grouped by transition key.
pub type CutSet<K> = std::collections::BTreeMap<K, Vec<BendersCut>>;

pub fn cut_count<K>(cuts: &CutSet<K>) -> usize {
    cuts.values().map(Vec::len).sum()
}

pub fn make_cut(oracle: &dyn SubproblemOracle, anchor: f64) -> Result<BendersCut, GbdError> {
    let (lb, ub) = oracle.domain();
    if !(anchor >= lb && anchor <= ub) {
        return Err(GbdError::OutOfDomain {
            theta: anchor,
            lb,
            ub,
        });
    }
    let v = oracle.evaluate(anchor)?;
    Ok(BendersCut {
        anchor,
        value: v.value,
        multiplier: v.multiplier,
    })
}

/// Closure-backed oracle, handy for analytic value functions.
pub struct FnOracle<F> {
    pub lb: f64,
    pub ub: f64,
    pub f: F,
}

impl<F> SubproblemOracle for FnOracle<F>
where
    F: Fn(f64) -> OracleValue + Send + Sync,
{
    fn domain(&self) -> (f64, f64) {
        (self.lb, self.ub)
    }

    fn evaluate(&self, theta: f64) -> Result<OracleValue, GbdError> {
        Ok((self.f)(theta))
    }
}
