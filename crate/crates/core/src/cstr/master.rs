//! Scheduling master problem: slot assignment, timing, inventories, and
//! epigraph variables for the transition costs.

use serde::{Deserialize, Serialize};

use super::instance::{EconomicsParams, ScheduleInstance, TransitionKey};
use super::CstrError;
use crate::gbd::{CutSet, GbdError, MasterProblem};
use crate::lp::{LinearModel, Relation, Sense, VarId};

/// How the product `Z * eta` of a transition indicator and its cost
/// estimate enters the master.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formulation {
    /// `w >= eta - M (1 - Z)` with `M` the value at the minimum time.
    BigM,
    /// Cuts written on `(Z, tau = Z theta)`: `eta >= (phi + lambda anchor) Z - lambda tau`.
    #[default]
    Perspective,
}

/// Variable handles of one transition `i -> j` in slot `k`. Under the
/// perspective formulation `theta` and `tau` coincide, as do `eta` and `w`.
#[derive(Debug, Clone, Copy)]
pub struct PairVars {
    pub theta: VarId,
    /// `Z * theta`, exact under the McCormick envelope for binary Z.
    pub tau: VarId,
    pub eta: VarId,
    /// `Z * eta`
    pub w: VarId,
}

#[derive(Debug, Clone)]
pub struct MasterLayout {
    pub n: usize,
    pub w_prod: Vec<Vec<VarId>>,
    /// z[i][j][k] for k < n - 1.
    pub z: Vec<Vec<Vec<VarId>>>,
    pub z_hat: Vec<VarId>,
    pub t_start: Vec<VarId>,
    pub t_end: Vec<VarId>,
    pub prod_time: Vec<Vec<VarId>>,
    pub theta_t: Vec<VarId>,
    /// pair[i][j][k], None on the diagonal.
    pub pair: Vec<Vec<Vec<Option<PairVars>>>>,
    pub hat: Vec<PairVars>,
    pub inventory: Vec<Vec<VarId>>,
    pub sales: Vec<Vec<VarId>>,
}

fn add_cut_rows(
    m: &mut LinearModel,
    form: Formulation,
    name: &str,
    pv: &PairVars,
    z: VarId,
    cuts: &[crate::gbd::BendersCut],
) {
    for c in cuts {
        let rhs = c.value + c.multiplier * c.anchor;
        match form {
            // eta + lambda theta >= phi + lambda anchor
            Formulation::BigM => {
                m.add_row(name.to_string(), [(pv.eta, 1.0), (pv.theta, c.multiplier)], Relation::Ge, rhs)
            }
            Formulation::Perspective => m.add_row(
                name.to_string(),
                [(pv.eta, 1.0), (pv.tau, c.multiplier), (z, -rhs)],
                Relation::Ge,
                0.0,
            ),
        }
    }
}

fn linked_pair(
    m: &mut LinearModel,
    form: Formulation,
    tag: &str,
    z: VarId,
    lo: f64,
    hi: f64,
    big_m: f64,
) -> PairVars {
    if form == Formulation::Perspective {
        let tau = m.add_var(format!("tau{tag}"), 0.0, hi);
        let eta = m.add_var(format!("eta{tag}"), 0.0, f64::INFINITY);
        m.add_row(format!("tlo{tag}"), [(tau, 1.0), (z, -lo)], Relation::Ge, 0.0);
        m.add_row(format!("thi{tag}"), [(tau, 1.0), (z, -hi)], Relation::Le, 0.0);
        return PairVars {
            theta: tau,
            tau,
            eta,
            w: eta,
        };
    }
    let theta = m.add_var(format!("theta{tag}"), lo, hi);
    let tau = m.add_var(format!("tau{tag}"), 0.0, hi);
    let eta = m.add_var(format!("eta{tag}"), 0.0, f64::INFINITY);
    let w = m.add_var(format!("w{tag}"), 0.0, f64::INFINITY);
    m.add_row(format!("mc1{tag}"), [(tau, 1.0), (z, -lo)], Relation::Ge, 0.0);
    m.add_row(format!("mc2{tag}"), [(tau, 1.0), (z, -hi)], Relation::Le, 0.0);
    m.add_row(format!("mc3{tag}"), [(tau, 1.0), (theta, -1.0), (z, -lo)], Relation::Le, -lo);
    m.add_row(format!("mc4{tag}"), [(tau, 1.0), (theta, -1.0), (z, -hi)], Relation::Ge, -hi);
    m.add_row(format!("bigm{tag}"), [(w, 1.0), (eta, -1.0), (z, -big_m)], Relation::Ge, -big_m);
    PairVars { theta, tau, eta, w }
}

/// Builds the master model and its layout. The objective is the negated
/// profit plus the linearized transition costs, as a minimization.
pub fn build_master_with_layout(
    inst: &ScheduleInstance,
    econ: &EconomicsParams,
    cuts: &CutSet<TransitionKey>,
    form: Formulation,
) -> Result<(LinearModel, MasterLayout), CstrError> {
    inst.validate()?;
    let n = inst.num_products();
    econ.validate(n)?;
    let slots = n;
    let h = inst.horizon;
    let rem = inst.remaining();
    let mut m = LinearModel::new(Sense::Minimize);

    let w_prod: Vec<Vec<VarId>> = (0..n)
        .map(|i| (0..slots).map(|k| m.add_binary(format!("W_{i}_{k}"))).collect())
        .collect();
    let z: Vec<Vec<Vec<VarId>>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..slots - 1).map(|k| m.add_binary(format!("Z_{i}_{j}_{k}"))).collect())
                .collect()
        })
        .collect();
    let z_hat: Vec<VarId> = (0..n).map(|i| m.add_binary(format!("Zh_{i}"))).collect();
    let t_start: Vec<VarId> = (0..slots).map(|k| m.add_var(format!("Ts_{k}"), 0.0, rem)).collect();
    let t_end: Vec<VarId> = (0..slots).map(|k| m.add_var(format!("Te_{k}"), 0.0, rem)).collect();
    let prod_time: Vec<Vec<VarId>> = (0..n)
        .map(|i| (0..slots).map(|k| m.add_var(format!("P_{i}_{k}"), 0.0, h)).collect())
        .collect();
    let theta_t: Vec<VarId> = (0..slots).map(|k| m.add_var(format!("tt_{k}"), 0.0, rem)).collect();

    // logic
    for k in 0..slots {
        m.add_row(format!("one_{k}"), (0..n).map(|i| (w_prod[i][k], 1.0)), Relation::Eq, 1.0);
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..slots - 1 {
                let (zz, a, b) = (z[i][j][k], w_prod[i][k], w_prod[j][k + 1]);
                m.add_row(format!("zl_{i}_{j}_{k}"), [(zz, 1.0), (a, -1.0), (b, -1.0)], Relation::Ge, -1.0);
                m.add_row(format!("za_{i}_{j}_{k}"), [(zz, 1.0), (a, -1.0)], Relation::Le, 0.0);
                m.add_row(format!("zb_{i}_{j}_{k}"), [(zz, 1.0), (b, -1.0)], Relation::Le, 0.0);
            }
        }
        m.add_row(format!("zh_{i}"), [(z_hat[i], 1.0), (w_prod[i][0], -1.0)], Relation::Eq, 0.0);
    }

    // transitions and their cost epigraphs
    let mut pair = vec![vec![vec![None; slots.saturating_sub(1)]; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let (lo, hi) = (inst.theta_min[i][j], inst.theta_max(i, j));
            let key = TransitionKey::Pair(i, j);
            let pc = cuts.get(&key).map(Vec::as_slice).unwrap_or(&[]);
            for k in 0..slots - 1 {
                let tag = format!("_{i}_{j}_{k}");
                let pv = linked_pair(&mut m, form, &tag, z[i][j][k], lo, hi, inst.phi_at_min[i][j]);
                add_cut_rows(&mut m, form, &format!("cut{tag}"), &pv, z[i][j][k], pc);
                pair[i][j][k] = Some(pv);
            }
        }
    }
    let mut hat = Vec::with_capacity(n);
    for i in 0..n {
        let tag = format!("h_{i}");
        let pv = linked_pair(
            &mut m,
            form,
            &tag,
            z_hat[i],
            inst.theta_hat_min[i],
            inst.theta_hat_max[i],
            inst.phi_hat_at_min[i],
        );
        let key = TransitionKey::Intermediate(i);
        let hc = cuts.get(&key).map(Vec::as_slice).unwrap_or(&[]);
        add_cut_rows(&mut m, form, &format!("cut{tag}"), &pv, z_hat[i], hc);
        hat.push(pv);
    }

    // timing
    for k in 0..slots {
        let mut row = vec![(t_end[k], 1.0), (t_start[k], -1.0), (theta_t[k], -1.0)];
        row.extend((0..n).map(|i| (prod_time[i][k], -1.0)));
        m.add_row(format!("slot_{k}"), row, Relation::Eq, 0.0);
        if k + 1 < slots {
            m.add_row(format!("chain_{k}"), [(t_start[k + 1], 1.0), (t_end[k], -1.0)], Relation::Eq, 0.0);
        }
        for i in 0..n {
            m.add_row(format!("pmax_{i}_{k}"), [(prod_time[i][k], 1.0), (w_prod[i][k], -h)], Relation::Le, 0.0);
        }
        let mut tr = vec![(theta_t[k], 1.0)];
        if k + 1 < slots {
            for (i, row) in pair.iter().enumerate() {
                for (j, slots_ij) in row.iter().enumerate() {
                    if i != j {
                        tr.push((slots_ij[k].unwrap().tau, -1.0));
                    }
                }
            }
        }
        if k == 0 {
            tr.extend(hat.iter().map(|pv| (pv.tau, -1.0)));
        }
        m.add_row(format!("ttime_{k}"), tr, Relation::Eq, 0.0);
    }
    m.add_row("start", [(t_start[0], 1.0)], Relation::Eq, 0.0);
    m.add_row("end", [(t_end[slots - 1], 1.0)], Relation::Eq, rem);

    // inventories and demand
    let inventory: Vec<Vec<VarId>> = (0..n)
        .map(|i| (0..slots).map(|k| m.add_var(format!("I_{i}_{k}"), 0.0, f64::INFINITY)).collect())
        .collect();
    let sales: Vec<Vec<VarId>> = (0..n)
        .map(|i| (0..slots).map(|k| m.add_var(format!("S_{i}_{k}"), 0.0, f64::INFINITY)).collect())
        .collect();
    for i in 0..n {
        let r = inst.rates[i];
        for k in 0..slots {
            let mut row = vec![(inventory[i][k], 1.0), (prod_time[i][k], -r), (sales[i][k], 1.0)];
            let rhs = if k == 0 {
                inst.init_inventory[i]
            } else {
                row.push((inventory[i][k - 1], -1.0));
                0.0
            };
            m.add_row(format!("inv_{i}_{k}"), row, Relation::Eq, rhs);
        }
        m.add_row(format!("dem_{i}"), [(sales[i][slots - 1], 1.0)], Relation::Ge, inst.demand[i]);
    }

    // objective: -profit + transition costs
    for i in 0..n {
        for k in 0..slots {
            m.set_objective(sales[i][k], -econ.price[i]);
            m.set_objective(prod_time[i][k], econ.oper_cost[i] * inst.rates[i]);
            m.set_objective(inventory[i][k], econ.inv_cost);
        }
        for j in 0..n {
            if i == j {
                continue;
            }
            for k in 0..slots - 1 {
                m.set_objective(z[i][j][k], econ.trans_cost[i][j]);
                m.add_objective(pair[i][j][k].unwrap().w, 1.0);
            }
        }
        m.add_objective(hat[i].w, 1.0);
    }

    let layout = MasterLayout {
        n,
        w_prod,
        z,
        z_hat,
        t_start,
        t_end,
        prod_time,
        theta_t,
        pair,
        hat,
        inventory,
        sales,
    };
    Ok((m, layout))
}

pub fn build_master(
    inst: &ScheduleInstance,
    econ: &EconomicsParams,
    cuts: &CutSet<TransitionKey>,
    form: Formulation,
) -> Result<LinearModel, CstrError> {
    build_master_with_layout(inst, econ, cuts, form).map(|(m, _)| m)
}

/// Master problem of one instance, ready for the decomposition loop.
pub struct ScheduleMaster<'a> {
    pub inst: &'a ScheduleInstance,
    pub econ: &'a EconomicsParams,
    pub form: Formulation,
    pub layout: MasterLayout,
}

impl<'a> ScheduleMaster<'a> {
    pub fn new(
        inst: &'a ScheduleInstance,
        econ: &'a EconomicsParams,
        form: Formulation,
    ) -> Result<Self, CstrError> {
        let (_, layout) = build_master_with_layout(inst, econ, &CutSet::new(), form)?;
        Ok(Self {
            inst,
            econ,
            form,
            layout,
        })
    }

    fn epigraph_vars(&self) -> impl Iterator<Item = VarId> + '_ {
        let pairs = self.layout.pair.iter().flatten().flatten().flatten().flat_map(|p| [p.eta, p.w]);
        pairs.chain(self.layout.hat.iter().flat_map(|p| [p.eta, p.w]))
    }
}

impl MasterProblem<TransitionKey> for ScheduleMaster<'_> {
    fn build(&self, cuts: &CutSet<TransitionKey>) -> Result<LinearModel, GbdError> {
        build_master(self.inst, self.econ, cuts, self.form).map_err(|e| GbdError::Config(e.to_string()))
    }

    fn proposals(&self, values: &[f64]) -> Vec<(TransitionKey, f64)> {
        let l = &self.layout;
        let mut out = Vec::new();
        for i in 0..l.n {
            if values[l.z_hat[i].0] > 0.5 {
                out.push((TransitionKey::Intermediate(i), values[l.hat[i].theta.0]));
            }
        }
        for k in 0..l.n.saturating_sub(1) {
            for i in 0..l.n {
                for j in 0..l.n {
                    if i != j && values[l.z[i][j][k].0] > 0.5 {
                        let pv = l.pair[i][j][k].unwrap();
                        out.push((TransitionKey::Pair(i, j), values[pv.theta.0]));
                    }
                }
            }
        }
        out
    }

    fn first_stage_cost(&self, model: &LinearModel, values: &[f64]) -> f64 {
        let mut v = values.to_vec();
        for id in self.epigraph_vars() {
            v[id.0] = 0.0;
        }
        model.evaluate(&v)
    }
}
