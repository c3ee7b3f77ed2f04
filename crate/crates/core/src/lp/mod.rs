//! Dense bounded-variable simplex and branch-and-bound for small mixed binary
//! programs.
//!
//! Every master problem in the decomposition is a [`LinearModel`]. The solvers
//! are deterministic: the same model and options always give the same primal
//! values, node count and pivot count, which is what the work-unit metric
//! relies on.

mod dump;
mod milp;
mod simplex;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dump::write_lp_dump;
pub use milp::{solve_milp, solve_milp_warm, MilpOptions, MilpSolution, MilpStatus, RootBasis};
pub use simplex::{solve_lp, LpOptions, LpSolution, LpStatus};

/// Primal feasibility tolerance on rows.
pub const FEAS_TOL: f64 = 1e-7;
/// Integrality tolerance for binaries.
pub const INT_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("malformed model: {0}")]
    MalformedModel(String),
    #[error("pivot limit of {0} exceeded")]
    CycleLimit(usize),
}

/// Index of a declared variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub binary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub name: String,
    pub coeffs: Vec<(VarId, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// A linear (or mixed binary) program in row form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub sense: Sense,
    vars: Vec<Variable>,
    objective: Vec<f64>,
    /// Constant added to the reported objective value.
    pub objective_offset: f64,
    rows: Vec<Row>,
}

impl LinearModel {
    pub fn new(sense: Sense) -> Self {
        Self {
            sense,
            vars: Vec::new(),
            objective: Vec::new(),
            objective_offset: 0.0,
            rows: Vec::new(),
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> VarId {
        self.vars.push(Variable {
            name: name.into(),
            lower,
            upper,
            binary: false,
        });
        self.objective.push(0.0);
        VarId(self.vars.len() - 1)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> VarId {
        let id = self.add_var(name, 0.0, 1.0);
        self.vars[id.0].binary = true;
        id
    }

    pub fn set_objective(&mut self, var: VarId, coeff: f64) {
        self.objective[var.0] = coeff;
    }

    pub fn add_objective(&mut self, var: VarId, coeff: f64) {
        self.objective[var.0] += coeff;
    }

    pub fn set_bounds(&mut self, var: VarId, lower: f64, upper: f64) {
        self.vars[var.0].lower = lower;
        self.vars[var.0].upper = upper;
    }

    /// Appends a row. Repeated variables in `coeffs` are summed.
    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        coeffs: impl IntoIterator<Item = (VarId, f64)>,
        relation: Relation,
        rhs: f64,
    ) {
        let mut merged: Vec<(VarId, f64)> = Vec::new();
        for (v, c) in coeffs {
            match merged.iter_mut().find(|(w, _)| *w == v) {
                Some(slot) => slot.1 += c,
                None => merged.push((v, c)),
            }
        }
        merged.retain(|&(_, c)| c != 0.0);
        self.rows.push(Row {
            name: name.into(),
            coeffs: merged,
            relation,
            rhs,
        });
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn binaries(&self) -> impl Iterator<Item = VarId> + '_ {
        self.vars
            .iter()
            .enumerate()
            .filter(|(_, v)| v.binary)
            .map(|(i, _)| VarId(i))
    }

    pub fn num_binaries(&self) -> usize {
        self.vars.iter().filter(|v| v.binary).count()
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.vars.iter().position(|v| v.name == name).map(VarId)
    }

    /// Objective value of `x` in the model's own sense, offset included.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.objective_offset
            + self
                .objective
                .iter()
                .zip(x)
                .map(|(c, v)| c * v)
                .sum::<f64>()
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for row in &self.rows {
            let lhs: f64 = row.coeffs.iter().map(|&(v, c)| c * x[v.0]).sum();
            let viol = match row.relation {
                Relation::Le => lhs - row.rhs,
                Relation::Ge => row.rhs - lhs,
                Relation::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        for (v, &xv) in self.vars.iter().zip(x) {
            worst = worst.max(v.lower - xv).max(xv - v.upper);
        }
        worst
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.vars.len();
        for v in &self.vars {
            if v.lower.is_nan() || v.upper.is_nan() || v.lower > v.upper {
                return Err(LpError::MalformedModel(format!(
                    "variable {} has bounds [{}, {}]",
                    v.name, v.lower, v.upper
                )));
            }
            if v.binary && (v.lower < 0.0 || v.upper > 1.0) {
                return Err(LpError::MalformedModel(format!(
                    "binary {} has bounds outside [0, 1]",
                    v.name
                )));
            }
        }
        for row in &self.rows {
            if !row.rhs.is_finite() {
                return Err(LpError::MalformedModel(format!(
                    "row {} has non-finite rhs",
                    row.name
                )));
            }
            for &(v, c) in &row.coeffs {
                if v.0 >= n {
                    return Err(LpError::MalformedModel(format!(
                        "row {} references undeclared variable {}",
                        row.name, v.0
                    )));
                }
                if !c.is_finite() {
                    return Err(LpError::MalformedModel(format!(
                        "row {} has non-finite coefficient",
                        row.name
                    )));
                }
            }
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::MalformedModel("non-finite objective".into()));
        }
        Ok(())
    }
}
