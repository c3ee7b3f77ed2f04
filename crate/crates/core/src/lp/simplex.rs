use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{LinearModel, LpError, Relation, Sense, FEAS_TOL};

const PIVOT_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpOptions {
    /// Hard cap on pivots; `None` means `50 * (rows + columns) + 1000`.
    pub max_pivots: Option<usize>,
    /// Consecutive degenerate pivots after which Bland's rule takes over.
    pub bland_after: usize,
    /// Basis inverse is recomputed from an LU factorization this often.
    pub refactor_every: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self {
            max_pivots: None,
            bland_after: 40,
            refactor_every: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Objective in the model's sense (offset included). Meaningful only when optimal.
    pub objective: f64,
    pub values: Vec<f64>,
    /// Row duals in the model's sense: d(objective)/d(rhs).
    pub duals: Vec<f64>,
    /// Reduced costs of the structural variables in the model's sense.
    pub reduced_costs: Vec<f64>,
    pub pivots: usize,
}

/// Solves the LP relaxation of `model` (integrality is ignored).
pub fn solve_lp(model: &LinearModel, opts: &LpOptions) -> Result<LpSolution, LpError> {
    model.validate()?;
    let engine = Engine::new(model);
    let (lb, ub) = engine.default_bounds_from(model);
    let out = engine.solve(&lb, &ub, None, opts)?;
    Ok(engine.to_solution(model, &out))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum VarStatus {
    Basic,
    Lower,
    Upper,
    Free,
}

#[derive(Debug, Clone)]
pub(crate) struct Basis {
    basic: Vec<usize>,
    status: Vec<VarStatus>,
    /// Inverse of the basis matrix at the time the basis was produced.
    inv: Option<Arc<Vec<f64>>>,
}

impl Basis {
    pub(crate) fn statuses(&self) -> &[VarStatus] {
        &self.status
    }

    /// Basis from column statuses alone; the inverse is rebuilt on first use.
    pub(crate) fn from_statuses(status: Vec<VarStatus>) -> Self {
        let basic = (0..status.len()).filter(|&j| status[j] == VarStatus::Basic).collect();
        Self {
            basic,
            status,
            inv: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum DualEnd {
    Feasible,
    Infeasible,
    GaveUp,
}

pub(crate) struct Outcome {
    pub status: LpStatus,
    /// Values of all columns, structural first then slacks.
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
    pub basis: Basis,
    pub y: Vec<f64>,
    pub d: Vec<f64>,
}

/// Standard form `A x + s = b` with bounds on every column; minimization.
pub(crate) struct Engine {
    m: usize,
    n: usize,
    cols: Vec<Vec<(usize, f64)>>,
    b: Vec<f64>,
    cost: Vec<f64>,
    slack_lb: Vec<f64>,
    slack_ub: Vec<f64>,
    /// Row scale factors: the engine works on `diag(scale) A`.
    scale: Vec<f64>,
    sign: f64,
}

impl Engine {
    pub fn new(model: &LinearModel) -> Self {
        let m = model.num_rows();
        let n = model.num_vars();
        let sign = match model.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n + m];
        let mut b = Vec::with_capacity(m);
        let mut slack_lb = Vec::with_capacity(m);
        let mut slack_ub = Vec::with_capacity(m);
        let mut scale = Vec::with_capacity(m);
        for (i, row) in model.rows().iter().enumerate() {
            let big = row.coeffs.iter().fold(0.0f64, |a, &(_, c)| a.max(c.abs()));
            let sc = if big > 0.0 { 1.0 / big } else { 1.0 };
            for &(v, c) in &row.coeffs {
                cols[v.0].push((i, c * sc));
            }
            cols[n + i].push((i, 1.0));
            b.push(row.rhs * sc);
            scale.push(sc);
            let (l, u) = match row.relation {
                Relation::Le => (0.0, f64::INFINITY),
                Relation::Ge => (f64::NEG_INFINITY, 0.0),
                Relation::Eq => (0.0, 0.0),
            };
            slack_lb.push(l);
            slack_ub.push(u);
        }
        let mut cost: Vec<f64> = model.objective().iter().map(|c| sign * c).collect();
        cost.extend(std::iter::repeat(0.0).take(m));
        Self {
            m,
            n,
            cols,
            b,
            cost,
            slack_lb,
            slack_ub,
            scale,
            sign,
        }
    }

    pub fn num_structural(&self) -> usize {
        self.n
    }

    /// Structural bounds from `model` followed by slack bounds.
    pub fn default_bounds_from(&self, model: &LinearModel) -> (Vec<f64>, Vec<f64>) {
        let mut lb: Vec<f64> = model.vars().iter().map(|v| v.lower).collect();
        let mut ub: Vec<f64> = model.vars().iter().map(|v| v.upper).collect();
        lb.extend_from_slice(&self.slack_lb);
        ub.extend_from_slice(&self.slack_ub);
        (lb, ub)
    }

    pub fn to_solution(&self, model: &LinearModel, out: &Outcome) -> LpSolution {
        LpSolution {
            status: out.status,
            objective: self.sign * out.objective + model.objective_offset,
            values: out.x[..self.n].to_vec(),
            duals: out.y.iter().zip(&self.scale).map(|(y, s)| self.sign * y * s).collect(),
            reduced_costs: out.d[..self.n].iter().map(|d| self.sign * d).collect(),
            pivots: out.pivots,
        }
    }

    fn slack_basis(&self, lb: &[f64], ub: &[f64]) -> Basis {
        let mut status = Vec::with_capacity(self.n + self.m);
        for j in 0..self.n + self.m {
            status.push(nonbasic_status(lb[j], ub[j], None));
        }
        let basic: Vec<usize> = (self.n..self.n + self.m).collect();
        for &j in &basic {
            status[j] = VarStatus::Basic;
        }
        Basis {
            basic,
            status,
            inv: None,
        }
    }

    pub fn solve(
        &self,
        lb: &[f64],
        ub: &[f64],
        warm: Option<&Basis>,
        opts: &LpOptions,
    ) -> Result<Outcome, LpError> {
        let total = self.n + self.m;
        let max_pivots = opts.max_pivots.unwrap_or(50 * total + 1000);
        let mut basis = match warm {
            Some(b) => b.clone(),
            None => self.slack_basis(lb, ub),
        };
        for j in 0..total {
            if basis.status[j] != VarStatus::Basic {
                basis.status[j] = nonbasic_status(lb[j], ub[j], Some(basis.status[j]));
            }
        }
        let mut x = vec![0.0; total];
        let mut binv = vec![0.0; self.m * self.m];
        let reuse = match basis.inv.take() {
            Some(inv) if inv.len() == binv.len() => {
                binv.copy_from_slice(&inv);
                self.basic_values(&basis, lb, ub, &mut x, &binv);
                true
            }
            _ => false,
        };
        if !reuse && !self.refactor(&basis, lb, ub, &mut x, &mut binv) {
            basis = self.slack_basis(lb, ub);
            let ok = self.refactor(&basis, lb, ub, &mut x, &mut binv);
            debug_assert!(ok);
        }

        let m = self.m;
        let mut pivots = 0usize;
        let mut resets = 0usize;
        let mut since_refactor = 0usize;
        if warm.is_some() {
            match self.dual_phase(&mut basis, lb, ub, &mut x, &mut binv, max_pivots, opts)? {
                (DualEnd::Infeasible, p) => {
                    pivots = p;
                    let y = vec![0.0; m];
                    let d = vec![0.0; total];
                    basis.inv = Some(Arc::new(binv));
                    return Ok(Outcome {
                        status: LpStatus::Infeasible,
                        x,
                        objective: f64::NAN,
                        pivots,
                        basis,
                        y,
                        d,
                    });
                }
                (_, p) => {
                    pivots = p;
                    since_refactor = p % opts.refactor_every.max(1);
                }
            }
        }
        let mut degenerate_streak = 0usize;
        let mut cb = vec![0.0; m];
        let mut y = vec![0.0; m];
        let mut alpha = vec![0.0; m];

        let status = loop {
            if since_refactor >= opts.refactor_every {
                if !self.refactor(&basis, lb, ub, &mut x, &mut binv) {
                    // numerically singular after updates: restart from slacks
                    resets += 1;
                    if resets > 3 {
                        return Err(LpError::MalformedModel("singular basis".into()));
                    }
                    basis = self.slack_basis(lb, ub);
                    self.refactor(&basis, lb, ub, &mut x, &mut binv);
                }
                since_refactor = 0;
            }
            let mut phase1 = false;
            for i in 0..m {
                let j = basis.basic[i];
                cb[i] = if x[j] < lb[j] - FEAS_TOL {
                    phase1 = true;
                    -1.0
                } else if x[j] > ub[j] + FEAS_TOL {
                    phase1 = true;
                    1.0
                } else {
                    0.0
                };
            }
            if !phase1 {
                for i in 0..m {
                    cb[i] = self.cost[basis.basic[i]];
                }
            }
            self.btran(&cb, &binv, &mut y);

            let bland = degenerate_streak >= opts.bland_after;
            let mut entering: Option<(usize, f64)> = None;
            for j in 0..total {
                let st = basis.status[j];
                if st == VarStatus::Basic || lb[j] == ub[j] {
                    continue;
                }
                let c = if phase1 { 0.0 } else { self.cost[j] };
                let dj = c - self.cols[j].iter().map(|&(r, a)| y[r] * a).sum::<f64>();
                let eligible = match st {
                    VarStatus::Lower => dj < -OPT_TOL,
                    VarStatus::Upper => dj > OPT_TOL,
                    VarStatus::Free => dj.abs() > OPT_TOL,
                    VarStatus::Basic => false,
                };
                if !eligible {
                    continue;
                }
                match entering {
                    None => entering = Some((j, dj)),
                    Some((_, best)) if !bland && dj.abs() > best.abs() => entering = Some((j, dj)),
                    _ => {}
                }
                if bland {
                    break;
                }
            }
            let Some((q, dq)) = entering else {
                break if phase1 {
                    LpStatus::Infeasible
                } else {
                    LpStatus::Optimal
                };
            };
            if pivots >= max_pivots {
                return Err(LpError::CycleLimit(max_pivots));
            }
            let dir = if dq < 0.0 { 1.0 } else { -1.0 };

            alpha.iter_mut().for_each(|a| *a = 0.0);
            for &(k, a) in &self.cols[q] {
                for i in 0..m {
                    alpha[i] += binv[i * m + k] * a;
                }
            }

            // ratio test; x_B changes by -dir * t * alpha
            let mut t_best = if lb[q].is_finite() && ub[q].is_finite() {
                ub[q] - lb[q]
            } else {
                f64::INFINITY
            };
            let mut leave: Option<(usize, f64, f64)> = None; // (row, bound value, |alpha|)
            for i in 0..m {
                let a = alpha[i];
                if a.abs() < PIVOT_TOL {
                    continue;
                }
                let j = basis.basic[i];
                let delta = -dir * a;
                let xi = x[j];
                let (t, bound) = if delta < 0.0 {
                    if xi > ub[j] + FEAS_TOL {
                        ((xi - ub[j]) / -delta, ub[j])
                    } else if xi >= lb[j] - FEAS_TOL && lb[j].is_finite() {
                        (((xi - lb[j]) / -delta).max(0.0), lb[j])
                    } else {
                        continue;
                    }
                } else if xi < lb[j] - FEAS_TOL {
                    ((lb[j] - xi) / delta, lb[j])
                } else if xi <= ub[j] + FEAS_TOL && ub[j].is_finite() {
                    (((ub[j] - xi) / delta).max(0.0), ub[j])
                } else {
                    continue;
                };
                let better = match leave {
                    None => t < t_best,
                    Some((r, _, amag)) => {
                        if t < t_best - 1e-12 {
                            true
                        } else if t <= t_best + 1e-12 {
                            if bland {
                                j < basis.basic[r]
                            } else {
                                a.abs() > amag
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    t_best = t;
                    leave = Some((i, bound, a.abs()));
                }
            }
            if t_best.is_infinite() {
                if phase1 {
                    // numerical trouble; a fresh factorization normally cures it
                    if since_refactor == 0 {
                        return Err(LpError::MalformedModel(
                            "unbounded phase-one direction".into(),
                        ));
                    }
                    since_refactor = opts.refactor_every;
                    continue;
                }
                break LpStatus::Unbounded;
            }

            pivots += 1;
            since_refactor += 1;
            if t_best < 1e-12 {
                degenerate_streak += 1;
            } else {
                degenerate_streak = 0;
            }
            x[q] += dir * t_best;
            for i in 0..m {
                x[basis.basic[i]] -= dir * t_best * alpha[i];
            }
            match leave {
                None => {
                    basis.status[q] = if dir > 0.0 {
                        x[q] = ub[q];
                        VarStatus::Upper
                    } else {
                        x[q] = lb[q];
                        VarStatus::Lower
                    };
                }
                Some((r, bound, _)) => {
                    let out = basis.basic[r];
                    x[out] = bound;
                    basis.status[out] = if bound == lb[out] {
                        VarStatus::Lower
                    } else {
                        VarStatus::Upper
                    };
                    basis.basic[r] = q;
                    basis.status[q] = VarStatus::Basic;
                    let piv = alpha[r];
                    for k in 0..m {
                        binv[r * m + k] /= piv;
                    }
                    for i in 0..m {
                        if i == r || alpha[i] == 0.0 {
                            continue;
                        }
                        let f = alpha[i];
                        for k in 0..m {
                            binv[i * m + k] -= f * binv[r * m + k];
                        }
                    }
                }
            }
        };

        if status == LpStatus::Optimal && since_refactor > 0 {
            self.refactor(&basis, lb, ub, &mut x, &mut binv);
        }
        for i in 0..m {
            cb[i] = self.cost[basis.basic[i]];
        }
        self.btran(&cb, &binv, &mut y);
        let d: Vec<f64> = (0..total)
            .map(|j| {
                if basis.status[j] == VarStatus::Basic {
                    0.0
                } else {
                    self.cost[j] - self.cols[j].iter().map(|&(r, a)| y[r] * a).sum::<f64>()
                }
            })
            .collect();
        let objective = (0..self.n).map(|j| self.cost[j] * x[j]).sum();
        basis.inv = Some(Arc::new(binv));
        Ok(Outcome {
            status,
            x,
            objective,
            pivots,
            basis,
            y,
            d,
        })
    }

    /// Bounded dual simplex from a dual feasible warm basis. Stops when the
    /// basis becomes primal feasible, when a row proves infeasibility, or when
    /// dual feasibility is lost (the primal loop then takes over).
    fn dual_phase(
        &self,
        basis: &mut Basis,
        lb: &[f64],
        ub: &[f64],
        x: &mut [f64],
        binv: &mut [f64],
        max_pivots: usize,
        opts: &LpOptions,
    ) -> Result<(DualEnd, usize), LpError> {
        let m = self.m;
        let total = self.n + m;
        let mut cb = vec![0.0; m];
        let mut y = vec![0.0; m];
        let mut d = vec![0.0; total];
        let mut alpha = vec![0.0; m];
        let mut pivots = 0usize;
        let mut since_refactor = 0usize;
        let mut verified = false;
        loop {
            if since_refactor >= opts.refactor_every {
                if !self.refactor(basis, lb, ub, x, binv) {
                    return Ok((DualEnd::GaveUp, pivots));
                }
                since_refactor = 0;
            }
            for i in 0..m {
                cb[i] = self.cost[basis.basic[i]];
            }
            self.btran(&cb, binv, &mut y);
            for j in 0..total {
                d[j] = match basis.status[j] {
                    VarStatus::Basic => 0.0,
                    _ => self.cost[j] - self.cols[j].iter().map(|&(r, a)| y[r] * a).sum::<f64>(),
                };
                if lb[j] == ub[j] {
                    continue;
                }
                let bad = match basis.status[j] {
                    VarStatus::Lower => d[j] < -1e-7,
                    VarStatus::Upper => d[j] > 1e-7,
                    VarStatus::Free => d[j].abs() > 1e-7,
                    VarStatus::Basic => false,
                };
                if bad {
                    return Ok((DualEnd::GaveUp, pivots));
                }
            }
            // leaving row: largest bound violation
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                let j = basis.basic[i];
                let v = if x[j] < lb[j] - FEAS_TOL {
                    lb[j] - x[j]
                } else if x[j] > ub[j] + FEAS_TOL {
                    x[j] - ub[j]
                } else {
                    continue;
                };
                if leave.map_or(true, |(_, best)| v > best) {
                    leave = Some((i, v));
                }
            }
            let Some((r, _)) = leave else {
                return Ok((DualEnd::Feasible, pivots));
            };
            let out = basis.basic[r];
            let up = x[out] < lb[out];
            let row = &binv[r * m..(r + 1) * m];
            let mut entering: Option<(usize, f64, f64)> = None; // (col, ratio, alpha_r)
            for j in 0..total {
                let st = basis.status[j];
                if st == VarStatus::Basic || lb[j] == ub[j] {
                    continue;
                }
                let a: f64 = self.cols[j].iter().map(|&(k, v)| row[k] * v).sum();
                if a.abs() < PIVOT_TOL {
                    continue;
                }
                // moving x_j by t shifts x_out by -a t
                let ok = match st {
                    VarStatus::Lower => (a < 0.0) == up,
                    VarStatus::Upper => (a > 0.0) == up,
                    VarStatus::Free => true,
                    VarStatus::Basic => false,
                };
                if !ok {
                    continue;
                }
                let ratio = d[j].abs() / a.abs();
                let better = match entering {
                    None => true,
                    Some((_, best, ba)) => {
                        ratio < best - 1e-12 || (ratio <= best + 1e-12 && a.abs() > ba.abs())
                    }
                };
                if better {
                    entering = Some((j, ratio, a));
                }
            }
            let Some((q, _, _)) = entering else {
                if since_refactor > 0 && !verified {
                    // confirm on a fresh factorization before giving the verdict
                    verified = true;
                    since_refactor = opts.refactor_every;
                    continue;
                }
                return Ok((DualEnd::Infeasible, pivots));
            };
            if pivots >= max_pivots {
                return Err(LpError::CycleLimit(max_pivots));
            }
            alpha.iter_mut().for_each(|a| *a = 0.0);
            for &(k, a) in &self.cols[q] {
                for i in 0..m {
                    alpha[i] += binv[i * m + k] * a;
                }
            }
            let piv = alpha[r];
            if piv.abs() < PIVOT_TOL {
                return Ok((DualEnd::GaveUp, pivots));
            }
            let bound = if up { lb[out] } else { ub[out] };
            let t = (x[out] - bound) / piv;
            x[q] += t;
            for i in 0..m {
                x[basis.basic[i]] -= t * alpha[i];
            }
            x[out] = bound;
            basis.status[out] = if up { VarStatus::Lower } else { VarStatus::Upper };
            basis.basic[r] = q;
            basis.status[q] = VarStatus::Basic;
            for k in 0..m {
                binv[r * m + k] /= piv;
            }
            for i in 0..m {
                if i == r || alpha[i] == 0.0 {
                    continue;
                }
                let f = alpha[i];
                for k in 0..m {
                    binv[i * m + k] -= f * binv[r * m + k];
                }
            }
            pivots += 1;
            since_refactor += 1;
            verified = false;
        }
    }

    fn btran(&self, cb: &[f64], binv: &[f64], y: &mut [f64]) {
        let m = self.m;
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..m {
            let c = cb[i];
            if c == 0.0 {
                continue;
            }
            let row = &binv[i * m..(i + 1) * m];
            for (yk, bk) in y.iter_mut().zip(row) {
                *yk += c * bk;
            }
        }
    }

    /// Recomputes the basis inverse and basic values. Returns false on a
    /// singular basis matrix.
    ///
    /// Basic slacks are unit columns, so only the block of basic structural
    /// columns restricted to rows without a basic slack needs inverting.
    fn refactor(
        &self,
        basis: &Basis,
        lb: &[f64],
        ub: &[f64],
        x: &mut [f64],
        binv: &mut [f64],
    ) -> bool {
        let m = self.m;
        let n = self.n;
        if m == 0 {
            self.basic_values(basis, lb, ub, x, binv);
            return true;
        }
        let mut slack_pos = vec![usize::MAX; m];
        let mut struct_pos = Vec::new();
        for (p, &j) in basis.basic.iter().enumerate() {
            if j >= n {
                slack_pos[j - n] = p;
            } else {
                struct_pos.push(p);
            }
        }
        let crow: Vec<usize> = (0..m).filter(|&r| slack_pos[r] == usize::MAX).collect();
        let k = struct_pos.len();
        if crow.len() != k {
            return false;
        }
        let mut cidx = vec![usize::MAX; m];
        for (a, &r) in crow.iter().enumerate() {
            cidx[r] = a;
        }
        let mut kinv = DMatrix::<f64>::zeros(0, 0);
        if k > 0 {
            let mut kmat = DMatrix::<f64>::zeros(k, k);
            for (c, &p) in struct_pos.iter().enumerate() {
                for &(r, a) in &self.cols[basis.basic[p]] {
                    if cidx[r] != usize::MAX {
                        kmat[(cidx[r], c)] = a;
                    }
                }
            }
            let Some(inv) = kmat.lu().try_inverse() else {
                return false;
            };
            if inv.iter().any(|v| !v.is_finite()) {
                return false;
            }
            kinv = inv;
        }
        binv.iter_mut().for_each(|v| *v = 0.0);
        if k > 0 {
            for (c, &p) in struct_pos.iter().enumerate() {
                for (a, &r) in crow.iter().enumerate() {
                    binv[p * m + r] = kinv[(c, a)];
                }
            }
        }
        for r in 0..m {
            if slack_pos[r] != usize::MAX {
                binv[slack_pos[r] * m + r] = 1.0;
            }
        }
        // slack row r: s_r = b_r - sum_c A[r, j_c] x_c over basic structurals
        for &p in &struct_pos {
            for &(r, a) in &self.cols[basis.basic[p]] {
                let sp = slack_pos[r];
                if sp == usize::MAX {
                    continue;
                }
                for &col in &crow {
                    binv[sp * m + col] -= a * binv[p * m + col];
                }
            }
        }
        self.basic_values(basis, lb, ub, x, binv);
        true
    }

    /// Nonbasic columns at their bounds, basic ones from `binv`.
    fn basic_values(&self, basis: &Basis, lb: &[f64], ub: &[f64], x: &mut [f64], binv: &[f64]) {
        let m = self.m;
        let total = self.n + self.m;
        for j in 0..total {
            x[j] = match basis.status[j] {
                VarStatus::Lower => lb[j],
                VarStatus::Upper => ub[j],
                VarStatus::Free => 0.0,
                VarStatus::Basic => 0.0,
            };
        }
        let mut rhs = self.b.clone();
        for j in 0..total {
            if basis.status[j] != VarStatus::Basic && x[j] != 0.0 {
                for &(r, a) in &self.cols[j] {
                    rhs[r] -= a * x[j];
                }
            }
        }
        for i in 0..m {
            let row = &binv[i * m..(i + 1) * m];
            x[basis.basic[i]] = row.iter().zip(&rhs).map(|(a, b)| a * b).sum();
        }
    }
}

fn nonbasic_status(lb: f64, ub: f64, prev: Option<VarStatus>) -> VarStatus {
    match prev {
        Some(VarStatus::Upper) if ub.is_finite() => VarStatus::Upper,
        Some(VarStatus::Lower) if lb.is_finite() => VarStatus::Lower,
        _ => {
            if lb.is_finite() {
                VarStatus::Lower
            } else if ub.is_finite() {
                VarStatus::Upper
            } else {
                VarStatus::Free
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{LinearModel, Relation, Sense};

    fn lp(model: &LinearModel) -> LpSolution {
        solve_lp(model, &LpOptions::default()).unwrap()
    }

    #[test]
    fn single_bound_optimum() {
        let mut m = LinearModel::new(Sense::Maximize);
        let x = m.add_var("x", 0.0, f64::INFINITY);
        m.set_objective(x, 1.0);
        m.add_row("cap", [(x, 1.0)], Relation::Le, 3.0);
        let s = lp(&m);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 3.0).abs() < 1e-12);
        assert!((s.values[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let mut m = LinearModel::new(Sense::Minimize);
        let x = m.add_var("x", f64::NEG_INFINITY, f64::INFINITY);
        m.add_row("lo", [(x, 1.0)], Relation::Ge, 2.0);
        m.add_row("hi", [(x, 1.0)], Relation::Le, 1.0);
        assert_eq!(lp(&m).status, LpStatus::Infeasible);
    }

    #[test]
    fn box_polytope_vertex() {
        // vertices of {x in [0,1]^2, x1 + x2 <= 1.5}: (0,0) (1,0) (0,1) (1,.5) (.5,1)
        let mut m = LinearModel::new(Sense::Minimize);
        let x1 = m.add_var("x1", 0.0, 1.0);
        let x2 = m.add_var("x2", 0.0, 1.0);
        m.set_objective(x1, -1.0);
        m.set_objective(x2, -1.0);
        m.add_row("c", [(x1, 1.0), (x2, 1.0)], Relation::Le, 1.5);
        let verts = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 0.5), (0.5, 1.0)];
        let best = verts
            .iter()
            .map(|(a, b)| -a - b)
            .fold(f64::INFINITY, f64::min);
        let s = lp(&m);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - best).abs() < 1e-12);
        assert!((best + 1.5).abs() < 1e-12);
    }

    #[test]
    fn unbounded_ray() {
        let mut m = LinearModel::new(Sense::Maximize);
        let x = m.add_var("x", 0.0, f64::INFINITY);
        let y = m.add_var("y", 0.0, f64::INFINITY);
        m.set_objective(x, 1.0);
        m.add_row("r", [(x, 1.0), (y, -1.0)], Relation::Le, 1.0);
        assert_eq!(lp(&m).status, LpStatus::Unbounded);
    }

    #[test]
    fn free_variables_and_equalities() {
        // min |shape|: x free, y free, x + y = 4, x - y = 2 -> (3, 1)
        let mut m = LinearModel::new(Sense::Minimize);
        let x = m.add_var("x", f64::NEG_INFINITY, f64::INFINITY);
        let y = m.add_var("y", f64::NEG_INFINITY, f64::INFINITY);
        m.set_objective(x, 1.0);
        m.add_row("a", [(x, 1.0), (y, 1.0)], Relation::Eq, 4.0);
        m.add_row("b", [(x, 1.0), (y, -1.0)], Relation::Eq, 2.0);
        let s = lp(&m);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.values[0] - 3.0).abs() < 1e-10);
        assert!((s.values[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn malformed_bounds_rejected() {
        let mut m = LinearModel::new(Sense::Minimize);
        m.add_var("x", 2.0, 1.0);
        assert!(matches!(
            solve_lp(&m, &LpOptions::default()),
            Err(LpError::MalformedModel(_))
        ));
    }

    #[test]
    fn undeclared_variable_rejected() {
        let mut m = LinearModel::new(Sense::Minimize);
        m.add_var("x", 0.0, 1.0);
        m.add_row("bad", [(crate::lp::VarId(7), 1.0)], Relation::Le, 1.0);
        assert!(matches!(
            solve_lp(&m, &LpOptions::default()),
            Err(LpError::MalformedModel(_))
        ));
    }

    #[test]
    fn pivot_cap_reports_cycle_limit() {
        let mut m = LinearModel::new(Sense::Maximize);
        let x = m.add_var("x", 0.0, f64::INFINITY);
        let y = m.add_var("y", 0.0, f64::INFINITY);
        m.set_objective(x, 1.0);
        m.set_objective(y, 1.0);
        m.add_row("a", [(x, 1.0), (y, 2.0)], Relation::Le, 4.0);
        m.add_row("b", [(x, 3.0), (y, 1.0)], Relation::Le, 6.0);
        let opts = LpOptions {
            max_pivots: Some(0),
            ..LpOptions::default()
        };
        assert_eq!(solve_lp(&m, &opts), Err(LpError::CycleLimit(0)));
    }

    #[test]
    fn degenerate_klee_minty_like_problem_terminates() {
        // many redundant constraints through the optimum vertex
        let mut m = LinearModel::new(Sense::Maximize);
        let x = m.add_var("x", 0.0, f64::INFINITY);
        let y = m.add_var("y", 0.0, f64::INFINITY);
        m.set_objective(x, 2.0);
        m.set_objective(y, 3.0);
        for k in 1..30 {
            let a = k as f64;
            m.add_row(format!("r{k}"), [(x, a), (y, a)], Relation::Le, 2.0 * a);
        }
        m.add_row("xx", [(x, 1.0)], Relation::Le, 1.0);
        let s = lp(&m);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 6.0).abs() < 1e-9);
    }
}
