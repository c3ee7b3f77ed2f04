//! Independent oracles shared by the integration and acceptance suites.
#![allow(dead_code)]

pub mod gbd_synth;
pub mod bessel;

use cutinit::lp::{solve_lp, LinearModel, LpOptions, LpSolution, LpStatus, Relation, Sense};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random mixed binary program with a known feasible point.
pub fn random_milp(seed: u64, max_bin: usize, max_cont: usize) -> LinearModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nb = rng.gen_range(2..=max_bin);
    let nc = rng.gen_range(1..=max_cont);
    let sense = if rng.gen_bool(0.5) {
        Sense::Minimize
    } else {
        Sense::Maximize
    };
    let mut m = LinearModel::new(sense);
    let mut point = Vec::new();
    let mut vars = Vec::new();
    for i in 0..nb {
        let v = m.add_binary(format!("b{i}"));
        vars.push(v);
        point.push(if rng.gen_bool(0.5) { 1.0 } else { 0.0 });
    }
    for i in 0..nc {
        let ub = rng.gen_range(1.0..10.0);
        let v = m.add_var(format!("x{i}"), 0.0, ub);
        vars.push(v);
        point.push(rng.gen_range(0.0..ub));
    }
    for &v in &vars {
        m.set_objective(v, rng.gen_range(-10.0..10.0));
    }
    let rows = rng.gen_range(2..=8);
    for r in 0..rows {
        let mut coeffs = Vec::new();
        for &v in &vars {
            if rng.gen_bool(0.5) {
                coeffs.push((v, rng.gen_range(-5.0..5.0)));
            }
        }
        if coeffs.is_empty() {
            coeffs.push((vars[0], 1.0));
        }
        let lhs: f64 = coeffs.iter().map(|&(v, c)| c * point[v.0]).sum();
        let (rel, rhs) = match rng.gen_range(0..5) {
            0 => (Relation::Ge, lhs - rng.gen_range(0.0..3.0)),
            1 => (Relation::Eq, lhs),
            _ => (Relation::Le, lhs + rng.gen_range(0.0..3.0)),
        };
        m.add_row(format!("r{r}"), coeffs, rel, rhs);
    }
    m
}

/// Enumerates every binary assignment and solves the remaining LP.
/// Returns the best objective in the model's sense, or None if infeasible.
pub fn brute_force_milp(model: &LinearModel) -> Option<f64> {
    let bins: Vec<_> = model.binaries().collect();
    let k = bins.len();
    let mut best: Option<f64> = None;
    for mask in 0u64..(1u64 << k) {
        let mut fixed = model.clone();
        for (bit, &v) in bins.iter().enumerate() {
            let val = ((mask >> bit) & 1) as f64;
            fixed.set_bounds(v, val, val);
        }
        let s = solve_lp(&fixed, &LpOptions::default()).expect("lp solve");
        if s.status != LpStatus::Optimal {
            continue;
        }
        let better = match (best, model.sense) {
            (None, _) => true,
            (Some(b), Sense::Minimize) => s.objective < b,
            (Some(b), Sense::Maximize) => s.objective > b,
        };
        if better {
            best = Some(s.objective);
        }
    }
    best
}

/// Largest violation of the optimality certificate (primal feasibility, dual
/// sign conditions on reduced costs and row duals, and zero duality gap).
pub fn certificate_violation(model: &LinearModel, sol: &LpSolution) -> f64 {
    let sgn = match model.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let x = &sol.values;
    let mut worst = model.max_violation(x);
    // reduced costs recomputed from the duals: d = c - A^T y
    let mut d: Vec<f64> = model.objective().to_vec();
    for (row, y) in model.rows().iter().zip(&sol.duals) {
        for &(v, a) in &row.coeffs {
            d[v.0] -= a * y;
        }
    }
    for (j, var) in model.vars().iter().enumerate() {
        let dj = sgn * d[j];
        let at_lo = (x[j] - var.lower).abs() < 1e-7;
        let at_hi = (x[j] - var.upper).abs() < 1e-7;
        let viol = if at_lo && at_hi {
            0.0
        } else if at_lo {
            (-dj).max(0.0)
        } else if at_hi {
            dj.max(0.0)
        } else {
            dj.abs()
        };
        worst = worst.max(viol);
    }
    for (row, y) in model.rows().iter().zip(&sol.duals) {
        let ym = sgn * y;
        let lhs: f64 = row.coeffs.iter().map(|&(v, c)| c * x[v.0]).sum();
        let active = (lhs - row.rhs).abs() < 1e-7;
        let viol = match row.relation {
            Relation::Eq => 0.0,
            Relation::Le if active => ym.max(0.0),
            Relation::Ge if active => (-ym).max(0.0),
            _ => ym.abs(),
        };
        worst = worst.max(viol);
    }
    // duality gap: c'x = y'b + sum_j d_j x_j
    let primal: f64 = model.objective().iter().zip(x).map(|(c, v)| c * v).sum();
    let dual: f64 = model
        .rows()
        .iter()
        .zip(&sol.duals)
        .map(|(r, y)| y * r.rhs)
        .sum::<f64>()
        + d.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    worst.max((primal - dual).abs() / (1.0 + primal.abs()))
}
