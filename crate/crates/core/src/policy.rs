//! Cut-count selection from a trained cost surrogate.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cstr::{instance_features, CaseStudy, ScheduleInstance, TransitionKey};
use crate::gbd::{select_initial_cuts, CutLibrary, GbdConfig, GbdError, GbdResult};
use crate::surrogate::{Surrogate, SurrogateError};

pub const POLICY_SCHEMA: u32 = 1;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("candidate set is empty")]
    NoCandidates,
    #[error("surrogate expects {expected} features, instance gives {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Surrogate(#[from] SurrogateError),
    #[error(transparent)]
    Gbd(#[from] GbdError),
    #[error("policy file: {0}")]
    Format(String),
}

/// Trained surrogate plus the cut counts it chooses from. The surrogate
/// carries its own feature standardization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitPolicy {
    pub schema: u32,
    pub candidates: Vec<usize>,
    pub model: Surrogate,
}

/// Index of the smallest score; the earliest wins ties.
pub fn argmin_first(scores: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &s) in scores.iter().enumerate() {
        if best.is_none_or(|(_, b)| s < b) {
            best = Some((i, s));
        }
    }
    best.map(|b| b.0)
}

/// Scores every candidate with `predict` and returns the minimizer, the
/// smallest `n` on ties. Calls `predict` once per candidate.
pub fn choose_cuts<F>(inst: &ScheduleInstance, candidates: &[usize], mut predict: F) -> Result<usize, PolicyError>
where
    F: FnMut(&[f64]) -> Result<f64, SurrogateError>,
{
    let mut sorted = candidates.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let scores = sorted
        .iter()
        .map(|&n| predict(&instance_features(inst, n)))
        .collect::<Result<Vec<_>, _>>()?;
    argmin_first(&scores).map(|i| sorted[i]).ok_or(PolicyError::NoCandidates)
}

#[derive(Debug, Clone)]
pub struct LearnedSolve {
    pub n_cuts: usize,
    pub result: GbdResult,
    /// Feature computation and surrogate argmin, excluded from `result`.
    pub overhead_seconds: f64,
}

impl InitPolicy {
    /// Candidates `2..=n_max`.
    pub fn new(model: Surrogate, n_max: usize) -> Result<Self, PolicyError> {
        if n_max < 2 {
            return Err(PolicyError::NoCandidates);
        }
        Ok(Self {
            schema: POLICY_SCHEMA,
            candidates: (2..=n_max).collect(),
            model,
        })
    }

    pub fn n_max(&self) -> usize {
        self.candidates.iter().copied().max().unwrap_or(0)
    }

    fn check_dim(&self, inst: &ScheduleInstance) -> Result<(), PolicyError> {
        let got = instance_features(inst, 0).len();
        if got != self.model.dim() {
            return Err(PolicyError::DimensionMismatch {
                expected: self.model.dim(),
                got,
            });
        }
        Ok(())
    }

    pub fn optimal_cuts(&self, inst: &ScheduleInstance) -> Result<usize, PolicyError> {
        self.check_dim(inst)?;
        choose_cuts(inst, &self.candidates, |f| self.model.predict(f))
    }

    /// Predicted cost for each candidate, in candidate order.
    pub fn scores(&self, inst: &ScheduleInstance) -> Result<Vec<(usize, f64)>, PolicyError> {
        self.check_dim(inst)?;
        self.candidates
            .iter()
            .map(|&n| Ok((n, self.model.predict(&instance_features(inst, n))?)))
            .collect()
    }

    pub fn solve_with_learned_init(
        &self,
        case: &CaseStudy,
        library: &CutLibrary<TransitionKey>,
        inst: &ScheduleInstance,
        config: &GbdConfig,
    ) -> Result<LearnedSolve, PolicyError> {
        let t = Instant::now();
        let n = self.optimal_cuts(inst)?;
        let overhead_seconds = t.elapsed().as_secs_f64();
        let cuts = select_initial_cuts(library, n)?;
        let result = case.solve(inst, &cuts, config)?;
        Ok(LearnedSolve {
            n_cuts: n,
            result,
            overhead_seconds,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("policy serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, PolicyError> {
        let p: Self = serde_json::from_str(s).map_err(|e| PolicyError::Format(e.to_string()))?;
        if p.schema != POLICY_SCHEMA {
            return Err(PolicyError::Format(format!(
                "schema {}, expected {POLICY_SCHEMA}",
                p.schema
            )));
        }
        if p.candidates.is_empty() {
            return Err(PolicyError::NoCandidates);
        }
        Ok(p)
    }
}
