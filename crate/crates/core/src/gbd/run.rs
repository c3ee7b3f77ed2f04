use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{cut_count, BendersCut, CutSet, GbdError, OracleValue, SubproblemOracle};
use crate::lp::{solve_milp_warm, LinearModel, MilpOptions, MilpStatus};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GbdConfig {
    /// Relative optimality gap in percent.
    pub tol: f64,
    pub max_iterations: usize,
    /// Pivot-equivalents charged per oracle call.
    pub beta_sub: f64,
    /// Start each master root relaxation from the previous iteration's root basis.
    #[serde(default = "yes")]
    pub warm_start: bool,
    #[serde(skip)]
    pub milp: MilpOptions,
}

impl Default for GbdConfig {
    fn default() -> Self {
        Self {
            tol: 0.1,
            max_iterations: 100,
            beta_sub: 50.0,
            warm_start: true,
            milp: MilpOptions::default(),
        }
    }
}

fn yes() -> bool {
    true
}

impl GbdConfig {
    pub fn validate(&self) -> Result<(), GbdError> {
        if !(self.tol > 0.0) {
            return Err(GbdError::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iterations < 1 {
            return Err(GbdError::Config("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// The master side of a decomposition, always posed as a minimization.
pub trait MasterProblem<K> {
    /// Master model containing every cut in `cuts`.
    fn build(&self, cuts: &CutSet<K>) -> Result<LinearModel, GbdError>;

    /// Complicating-variable values the master solution hands to the
    /// subproblems, one entry per active subproblem.
    fn proposals(&self, values: &[f64]) -> Vec<(K, f64)>;

    /// Master objective with every value-function estimate removed.
    fn first_stage_cost(&self, model: &LinearModel, values: &[f64]) -> f64;
}

/// Maps a transition key to its oracle.
pub trait OracleSet<K> {
    fn oracle(&self, key: &K) -> Option<&dyn SubproblemOracle>;
}

impl<K: Ord, O: SubproblemOracle> OracleSet<K> for std::collections::BTreeMap<K, O> {
    fn oracle(&self, key: &K) -> Option<&dyn SubproblemOracle> {
        self.get(key).map(|o| o as &dyn SubproblemOracle)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub lower: f64,
    pub upper: f64,
    pub gap_percent: f64,
    pub cuts_total: usize,
    pub work_units: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdResult {
    pub upper: f64,
    pub lower: f64,
    pub iterations: usize,
    pub converged: bool,
    pub wall_seconds: f64,
    pub work_units: f64,
    pub master_pivots: usize,
    pub master_nodes: usize,
    pub oracle_calls: usize,
    pub trace: Vec<TraceRow>,
    /// Master solution that produced the best upper bound.
    pub values: Vec<f64>,
}

impl GbdResult {
    pub fn gap_percent(&self) -> f64 {
        gap_percent(self.upper, self.lower)
    }
}

fn gap_percent(upper: f64, lower: f64) -> f64 {
    if !upper.is_finite() || !lower.is_finite() {
        return f64::INFINITY;
    }
    100.0 * (upper - lower) / lower.abs().max(1e-9)
}

/// Runs the multicut master/subproblem iteration starting from
/// `initial_cuts`. Initial cuts are treated as precomputed: their evaluation
/// is not charged to the work or time of this run.
pub fn run_gbd<K, M, O>(
    master: &M,
    oracles: &O,
    initial_cuts: &CutSet<K>,
    config: &GbdConfig,
) -> Result<GbdResult, GbdError>
where
    K: Ord + Clone + std::fmt::Debug + Send + Sync,
    M: MasterProblem<K>,
    O: OracleSet<K> + Sync,
{
    config.validate()?;
    let start = Instant::now();
    let mut cuts = initial_cuts.clone();
    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;
    let mut best_values = Vec::new();
    let mut pivots = 0usize;
    let mut nodes = 0usize;
    let mut calls = 0usize;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut root = None;

    for iteration in 1..=config.max_iterations {
        iterations = iteration;
        let model = master.build(&cuts)?;
        if config.warm_start && iteration == 1 && cut_count(&cuts) > 0 {
            // crash: optimal root of the cut-free master, then add the cuts
            let core = master.build(&CutSet::new())?;
            let opts = MilpOptions {
                node_limit: 1,
                ..config.milp.clone()
            };
            let probe = solve_milp_warm(&core, &opts, None)?;
            pivots += probe.pivots;
            root = probe.root_basis;
        }
        let warm = if config.warm_start { root.as_ref() } else { None };
        let mut sol = solve_milp_warm(&model, &config.milp, warm)?;
        if sol.root_basis.is_some() {
            root = sol.root_basis.take();
        }
        pivots += sol.pivots;
        nodes += sol.nodes;
        match sol.status {
            MilpStatus::Infeasible => return Err(GbdError::MasterInfeasible { iteration }),
            MilpStatus::Unbounded => return Err(GbdError::MasterUnbounded { iteration }),
            MilpStatus::NodeLimit if sol.values.is_empty() => {
                return Err(GbdError::MasterInfeasible { iteration })
            }
            _ => {}
        }
        lower = lower.max(sol.objective);

        let proposals = master.proposals(&sol.values);
        let evaluated: Vec<Result<(K, f64, OracleValue), GbdError>> = proposals
            .par_iter()
            .map(|(key, theta)| {
                let oracle = oracles
                    .oracle(key)
                    .ok_or_else(|| GbdError::MissingOracle(format!("{key:?}")))?;
                let (lb, ub) = oracle.domain();
                let t = theta.clamp(lb, ub);
                Ok((key.clone(), t, oracle.evaluate(t)?))
            })
            .collect();
        calls += evaluated.len();
        let mut second_stage = 0.0;
        let mut new_cuts = Vec::with_capacity(evaluated.len());
        for e in evaluated {
            let (key, theta, v) = e?;
            second_stage += v.value;
            new_cuts.push((
                key,
                BendersCut {
                    anchor: theta,
                    value: v.value,
                    multiplier: v.multiplier,
                },
            ));
        }
        let candidate = master.first_stage_cost(&model, &sol.values) + second_stage;
        if candidate < upper {
            upper = candidate;
            best_values = sol.values.clone();
        }
        let work = pivots as f64 + config.beta_sub * calls as f64;
        let gap = gap_percent(upper, lower);
        trace.push(TraceRow {
            iteration,
            lower,
            upper,
            gap_percent: gap,
            cuts_total: cut_count(&cuts),
            work_units: work,
        });
        if gap <= config.tol {
            converged = true;
            break;
        }
        let mut added = 0;
        for (key, cut) in new_cuts {
            let list = cuts.entry(key).or_default();
            if !list.iter().any(|c| c.anchor == cut.anchor) {
                list.push(cut);
                added += 1;
            }
        }
        if added == 0 {
            log::warn!("no new cuts at iteration {iteration}; gap {gap:.4}% remains");
            break;
        }
    }

    Ok(GbdResult {
        upper,
        lower,
        iterations,
        converged,
        wall_seconds: start.elapsed().as_secs_f64(),
        work_units: pivots as f64 + config.beta_sub * calls as f64,
        master_pivots: pivots,
        master_nodes: nodes,
        oracle_calls: calls,
        trace,
        values: best_values,
    })
}

/// Iteration trace as CSV: `iteration,LB,UB,gap_percent,cuts_total,work_units`.
pub fn write_trace_csv<W: Write>(trace: &[TraceRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "LB", "UB", "gap_percent", "cuts_total", "work_units"])?;
    for r in trace {
        w.write_record([
            r.iteration.to_string(),
            r.lower.to_string(),
            r.upper.to_string(),
            r.gap_percent.to_string(),
            r.cuts_total.to_string(),
            r.work_units.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
