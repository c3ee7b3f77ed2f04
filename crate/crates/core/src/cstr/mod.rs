//! Scheduling and transition control of a single reactor making several
//! products: plant model, transition subproblems, the scheduling master, and
//! instance generation around a disturbed nominal schedule.

mod case;
mod collocation;
mod instance;
mod master;
mod oracle;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use case::{
    instance_features, sample_disturbance, CaseConfig, CaseStudy, Disturbance, DisturbanceConfig,
    DisturbedState, NominalSchedule, NominalSlot,
};
pub use instance::{
    EconomicsParams, PlantState, ScheduleInstance, TransitionKey, INSTANCE_SCHEMA, THETA_HAT_FLOOR,
    THETA_SPAN,
};
pub use master::{build_master, build_master_with_layout, Formulation, MasterLayout, PairVars, ScheduleMaster};
pub use collocation::{radau_nodes, CollocationScheme};
pub use oracle::{
    intermediate_value, min_transition_time, transition_value, TransitionOracle, TransitionProblem,
    TransitionSolution,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CstrError {
    #[error("invalid parameters: {0}")]
    BadParams(String),
    #[error("malformed instance: {0}")]
    MalformedInstance(String),
    #[error("transition infeasible in {theta} h")]
    InfeasibleTransition { theta: f64 },
    #[error("state {x_to} unreachable from {x_from}")]
    Unreachable { x_from: f64, x_to: f64 },
    #[error("cut library rejected: {0}")]
    NonConvex(String),
}

/// Scalar plant `x' = (Q/V)(u - x) - k x` with inlet concentration `u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantParams {
    pub q_over_v: f64,
    pub k: f64,
    pub x_ss: Vec<f64>,
    pub u_ss: Vec<f64>,
    pub u_lb: f64,
    pub u_ub: f64,
    pub n_f: usize,
    pub n_c: usize,
    pub alpha_u: f64,
}

impl Default for PlantParams {
    fn default() -> Self {
        Self::with_states(vec![0.2, 0.5, 0.8])
    }
}

impl PlantParams {
    /// Default plant with the given product steady states.
    pub fn with_states(x_ss: Vec<f64>) -> Self {
        let mut p = Self {
            q_over_v: 1.0,
            k: 1.0,
            x_ss,
            u_ss: Vec::new(),
            u_lb: 0.0,
            u_ub: 2.0,
            n_f: 10,
            n_c: 3,
            alpha_u: 1e5,
        };
        p.u_ss = p.x_ss.iter().map(|&x| p.steady_input(x)).collect();
        p
    }

    pub fn num_products(&self) -> usize {
        self.x_ss.len()
    }

    pub(crate) fn decay(&self) -> f64 {
        self.q_over_v + self.k
    }

    pub fn steady_input(&self, x: f64) -> f64 {
        x * self.decay() / self.q_over_v
    }

    /// Equilibria reachable under the input bounds.
    pub fn reachable_interval(&self) -> (f64, f64) {
        let g = self.q_over_v / self.decay();
        (g * self.u_lb, g * self.u_ub)
    }

    pub fn scheme(&self) -> Result<CollocationScheme, CstrError> {
        CollocationScheme::radau(self.n_f, self.n_c)
    }

    pub fn validate(&self) -> Result<(), CstrError> {
        let bad = |m: String| Err(CstrError::BadParams(m));
        if !(self.q_over_v > 0.0 && self.k >= 0.0) {
            return bad(format!("rates must be positive: Q/V {}, k {}", self.q_over_v, self.k));
        }
        if self.x_ss.is_empty() || self.x_ss.len() != self.u_ss.len() {
            return bad("x_ss and u_ss must be nonempty and of equal length".into());
        }
        if !(self.u_lb < self.u_ub) {
            return bad(format!("input bounds [{}, {}]", self.u_lb, self.u_ub));
        }
        for (i, &u) in self.u_ss.iter().enumerate() {
            if u < self.u_lb || u > self.u_ub {
                return bad(format!("u_ss[{i}] = {u} outside input bounds"));
            }
        }
        if self.x_ss.windows(2).any(|w| w[1] <= w[0]) {
            return bad("x_ss must be strictly increasing".into());
        }
        if !(self.alpha_u >= 0.0) {
            return bad(format!("alpha_u = {}", self.alpha_u));
        }
        self.scheme().map(|_| ())
    }
}
