use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};

use super::simplex::{Basis, Engine, LpOptions, LpStatus, VarStatus};
use super::{LinearModel, LpError, Sense, INT_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MilpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Node limit hit; the incumbent (if any) and its proven gap are reported.
    NodeLimit,
}

#[derive(Debug, Clone)]
pub struct MilpOptions {
    pub node_limit: usize,
    /// Relative optimality gap at which a node is pruned.
    pub gap: f64,
    pub lp: LpOptions,
}

impl Default for MilpOptions {
    fn default() -> Self {
        Self {
            node_limit: 20_000,
            gap: 1e-6,
            lp: LpOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpSolution {
    pub status: MilpStatus,
    /// Incumbent objective in the model's sense; NaN when there is none.
    pub objective: f64,
    pub values: Vec<f64>,
    pub nodes: usize,
    pub pivots: usize,
    /// Relative gap between incumbent and best remaining bound.
    pub gap: f64,
    /// (node index, incumbent objective) every time the incumbent improved.
    pub incumbent_trace: Vec<(usize, f64)>,
    /// Optimal basis of the root relaxation, reusable by a later model.
    pub root_basis: Option<RootBasis>,
}

/// Root LP basis keyed by column index and by row (name, occurrence), so it
/// can seed a model with the same columns and a superset of the rows. Rows
/// missing from the basis start with their slack basic.
#[derive(Debug, Clone, PartialEq)]
pub struct RootBasis {
    cols: Vec<VarStatus>,
    rows: HashMap<(String, usize), VarStatus>,
}

fn row_keys(model: &LinearModel) -> Vec<(String, usize)> {
    let mut seen: HashMap<&str, usize> = HashMap::new();
    model
        .rows()
        .iter()
        .map(|r| {
            let k = seen.entry(r.name.as_str()).or_insert(0);
            *k += 1;
            (r.name.clone(), *k - 1)
        })
        .collect()
}

impl RootBasis {
    fn capture(model: &LinearModel, basis: &Basis) -> Self {
        let n = model.num_vars();
        let st = basis.statuses();
        Self {
            cols: st[..n].to_vec(),
            rows: row_keys(model).into_iter().zip(st[n..].iter().copied()).collect(),
        }
    }

    fn seed(&self, model: &LinearModel) -> Option<Basis> {
        if self.cols.len() != model.num_vars() {
            return None;
        }
        let mut status = self.cols.clone();
        let mut matched = 0;
        for key in row_keys(model) {
            match self.rows.get(&key) {
                Some(&s) => {
                    matched += 1;
                    status.push(s);
                }
                None => status.push(VarStatus::Basic),
            }
        }
        let basic = status.iter().filter(|&&s| s == VarStatus::Basic).count();
        (matched == self.rows.len() && basic == model.num_rows()).then(|| Basis::from_statuses(status))
    }
}

impl MilpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == MilpStatus::Optimal
    }
}

struct Node {
    /// LP bound of the parent in internal minimization units.
    bound: f64,
    id: usize,
    fixings: Vec<(usize, f64)>,
    basis: Option<Basis>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // max-heap: smallest bound first, then oldest node
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

fn rel_gap(incumbent: f64, bound: f64) -> f64 {
    if !incumbent.is_finite() {
        return f64::INFINITY;
    }
    ((incumbent - bound) / incumbent.abs().max(1e-10)).max(0.0)
}

/// Best-bound branch-and-bound over the binaries of `model`.
///
/// Branches on the most fractional binary (ties: lowest id); each child warm
/// starts from its parent's optimal basis.
pub fn solve_milp(model: &LinearModel, opts: &MilpOptions) -> Result<MilpSolution, LpError> {
    solve_milp_warm(model, opts, None)
}

/// As [`solve_milp`], with the root relaxation started from `warm` when it
/// fits the model.
pub fn solve_milp_warm(
    model: &LinearModel,
    opts: &MilpOptions,
    warm: Option<&RootBasis>,
) -> Result<MilpSolution, LpError> {
    model.validate()?;
    let engine = Engine::new(model);
    let n = engine.num_structural();
    let (base_lb, base_ub) = engine.default_bounds_from(model);
    let binaries: Vec<usize> = model.binaries().map(|v| v.0).collect();
    let sign = match model.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };

    let mut heap = BinaryHeap::new();
    heap.push(Node {
        bound: f64::NEG_INFINITY,
        id: 0,
        fixings: Vec::new(),
        basis: warm.and_then(|w| w.seed(model)),
    });
    let mut root_basis = None;
    let mut next_id = 1usize;
    let mut nodes = 0usize;
    let mut pivots = 0usize;
    let mut incumbent = f64::INFINITY;
    let mut best_x: Option<Vec<f64>> = None;
    let mut trace = Vec::new();
    let mut lb = base_lb.clone();
    let mut ub = base_ub.clone();
    let mut hit_limit = false;

    while let Some(node) = heap.pop() {
        if rel_gap(incumbent, node.bound) <= opts.gap {
            // best-bound order: every remaining node is at least as bad
            heap.clear();
            break;
        }
        if nodes >= opts.node_limit {
            heap.push(node);
            hit_limit = true;
            break;
        }
        nodes += 1;
        lb.copy_from_slice(&base_lb);
        ub.copy_from_slice(&base_ub);
        for &(j, v) in &node.fixings {
            lb[j] = v;
            ub[j] = v;
        }
        let out = engine.solve(&lb, &ub, node.basis.as_ref(), &opts.lp)?;
        pivots += out.pivots;
        match out.status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                if node.id == 0 {
                    return Ok(MilpSolution {
                        status: MilpStatus::Unbounded,
                        objective: f64::NAN,
                        values: Vec::new(),
                        nodes,
                        pivots,
                        gap: f64::INFINITY,
                        incumbent_trace: trace,
                        root_basis: None,
                    });
                }
                continue;
            }
            LpStatus::Optimal => {}
        }
        if node.id == 0 {
            root_basis = Some(RootBasis::capture(model, &out.basis));
        }
        let obj = out.objective;
        if rel_gap(incumbent, obj) <= opts.gap {
            continue;
        }
        let mut branch: Option<(usize, f64)> = None;
        for &j in &binaries {
            let v = out.x[j];
            let frac = (v - v.floor()).min(v.ceil() - v);
            if frac > INT_TOL {
                let score = (v - v.floor() - 0.5).abs();
                match branch {
                    Some((_, s)) if score >= s => {}
                    _ => branch = Some((j, score)),
                }
            }
        }
        match branch {
            None => {
                if obj < incumbent {
                    incumbent = obj;
                    let mut x = out.x[..n].to_vec();
                    for &j in &binaries {
                        x[j] = x[j].round();
                    }
                    best_x = Some(x);
                    trace.push((nodes, sign * incumbent + model.objective_offset));
                }
            }
            Some((j, _)) => {
                for v in [0.0, 1.0] {
                    let mut fixings = node.fixings.clone();
                    fixings.push((j, v));
                    heap.push(Node {
                        bound: obj,
                        id: next_id,
                        fixings,
                        basis: Some(out.basis.clone()),
                    });
                    next_id += 1;
                }
            }
        }
    }

    let best_bound = heap
        .iter()
        .map(|nd| nd.bound)
        .fold(incumbent, f64::min);
    let status = match (&best_x, hit_limit) {
        (_, true) => MilpStatus::NodeLimit,
        (Some(_), false) => MilpStatus::Optimal,
        (None, false) => MilpStatus::Infeasible,
    };
    let gap = if best_x.is_some() {
        rel_gap(incumbent, best_bound)
    } else {
        f64::INFINITY
    };
    Ok(MilpSolution {
        status,
        objective: match best_x {
            Some(_) => sign * incumbent + model.objective_offset,
            None => f64::NAN,
        },
        values: best_x.unwrap_or_default(),
        nodes,
        pivots,
        gap: if status == MilpStatus::Optimal { gap.min(opts.gap) } else { gap },
        incumbent_trace: trace,
        root_basis,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{LinearModel, Relation, Sense};

    #[test]
    fn two_binaries_knapsack() {
        let mut m = LinearModel::new(Sense::Minimize);
        let a = m.add_binary("a");
        let b = m.add_binary("b");
        m.set_objective(a, -1.0);
        m.set_objective(b, -1.0);
        m.add_row("c", [(a, 1.0), (b, 1.0)], Relation::Le, 1.0);
        let s = solve_milp(&m, &MilpOptions::default()).unwrap();
        assert_eq!(s.status, MilpStatus::Optimal);
        assert!((s.objective + 1.0).abs() < 1e-9);
    }

    #[test]
    fn rounding_up_infeasible_forces_zero() {
        let mut m = LinearModel::new(Sense::Minimize);
        let x = m.add_binary("x");
        m.set_objective(x, -1.0);
        m.add_row("c", [(x, 1.0)], Relation::Le, 0.4);
        let s = solve_milp(&m, &MilpOptions::default()).unwrap();
        assert_eq!(s.status, MilpStatus::Optimal);
        assert!(s.objective.abs() < 1e-12);
        assert_eq!(s.values[0], 0.0);
    }

    #[test]
    fn infeasible_root() {
        let mut m = LinearModel::new(Sense::Minimize);
        let x = m.add_binary("x");
        m.add_row("c", [(x, 1.0)], Relation::Ge, 2.0);
        let s = solve_milp(&m, &MilpOptions::default()).unwrap();
        assert_eq!(s.status, MilpStatus::Infeasible);
    }

    #[test]
    fn node_limit_returns_incumbent_and_gap() {
        // equality knapsack with odd coefficients needs branching
        let mut m = LinearModel::new(Sense::Maximize);
        let w = [3.0, 5.0, 7.0, 9.0, 11.0, 13.0, 15.0, 17.0];
        let vars: Vec<_> = (0..w.len()).map(|i| m.add_binary(format!("x{i}"))).collect();
        for (v, wi) in vars.iter().zip(w) {
            m.set_objective(*v, wi + 0.5);
        }
        m.add_row("cap", vars.iter().zip(w).map(|(v, wi)| (*v, wi)), Relation::Le, 40.0);
        let opts = MilpOptions {
            node_limit: 3,
            ..MilpOptions::default()
        };
        let s = solve_milp(&m, &opts).unwrap();
        assert_eq!(s.status, MilpStatus::NodeLimit);
        assert_eq!(s.nodes, 3);
        let full = solve_milp(&m, &MilpOptions::default()).unwrap();
        assert_eq!(full.status, MilpStatus::Optimal);
        if s.objective.is_finite() {
            assert!(s.objective <= full.objective + 1e-9);
        }
    }
}
