//! The case-study context: plant-level transition data shared by every
//! instance, the nominal schedule, disturbances, and features.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::instance::{
    EconomicsParams, PlantState, ScheduleInstance, TransitionKey, INSTANCE_SCHEMA, THETA_HAT_FLOOR,
    THETA_SPAN,
};
use super::master::{build_master, build_master_with_layout, Formulation, ScheduleMaster};
use super::oracle::{min_transition_time, TransitionOracle, TransitionProblem};
use super::{CollocationScheme, CstrError, PlantParams};
use crate::gbd::{
    build_cut_library, run_gbd, CutLibrary, CutSet, GbdConfig, GbdError, GbdResult, SubproblemOracle,
};
use crate::lp::{solve_milp, MilpOptions};

/// Demand and inlet disturbance distributions: `d_i = nominal_i + U(low_i, high_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceConfig {
    pub nominal_demand: Vec<f64>,
    pub demand_low: Vec<f64>,
    pub demand_high: Vec<f64>,
    pub c0_range: [f64; 2],
    /// Hours the inlet disturbance acts on the reactor before rescheduling.
    #[serde(default = "default_delay")]
    pub detection_delay: f64,
}

fn default_delay() -> f64 {
    0.15
}

impl DisturbanceConfig {
    /// Five-product demand table, truncated to `n` products.
    pub fn table(n: usize) -> Self {
        let nominal = [600.0, 550.0, 600.0, 1200.0, 2000.0];
        let half = [100.0, 15.0, 30.0, 20.0, 400.0];
        assert!(n <= nominal.len(), "demand table covers at most 5 products");
        Self {
            nominal_demand: nominal[..n].to_vec(),
            demand_low: half[..n].iter().map(|h| -h).collect(),
            demand_high: half[..n].to_vec(),
            c0_range: [0.8, 1.2],
            detection_delay: default_delay(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseConfig {
    pub plant: PlantParams,
    pub economics: EconomicsParams,
    pub disturbance: DisturbanceConfig,
    pub horizon: f64,
    /// Share of the horizon the nominal demands occupy at the common rate.
    pub fill: f64,
    #[serde(default)]
    pub formulation: Formulation,
}

impl Default for CaseConfig {
    fn default() -> Self {
        Self::with_products(3)
    }
}

impl CaseConfig {
    pub fn with_products(n: usize) -> Self {
        let x_ss: Vec<f64> = match n {
            3 => vec![0.2, 0.5, 0.8],
            _ => (0..n).map(|i| 0.15 + 0.7 * i as f64 / (n.max(2) - 1) as f64).collect(),
        };
        Self {
            plant: PlantParams::with_states(x_ss),
            economics: EconomicsParams::defaults(n),
            disturbance: DisturbanceConfig::table(n),
            horizon: 48.0,
            fill: 0.7,
            formulation: Formulation::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Disturbance {
    pub t0: f64,
    pub demand: Vec<f64>,
    pub c0: f64,
}

pub fn sample_disturbance(seed: u64, dist: &DisturbanceConfig, horizon: f64) -> Disturbance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t0 = rng.gen_range(0.0..horizon);
    let demand = (0..dist.nominal_demand.len())
        .map(|i| {
            let (lo, hi) = (dist.demand_low[i], dist.demand_high[i]);
            let off = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
            (dist.nominal_demand[i] + off).max(0.0)
        })
        .collect();
    let [c_lo, c_hi] = dist.c0_range;
    let c0 = if c_hi > c_lo { rng.gen_range(c_lo..=c_hi) } else { c_lo };
    Disturbance { t0, demand, c0 }
}

/// One slot of the nominal plan, in order: optional entry transition (first
/// slot only), production, optional transition to the next slot's product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NominalSlot {
    pub product: usize,
    pub start: f64,
    pub entry: f64,
    pub production: f64,
    pub transition: Option<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NominalSchedule {
    pub x_initial: f64,
    pub init_inventory: Vec<f64>,
    pub slots: Vec<NominalSlot>,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisturbedState {
    pub inventory: Vec<f64>,
    pub x: f64,
    pub state: PlantState,
}

/// Plant-level data shared by every instance of the case study.
#[derive(Debug, Clone)]
pub struct CaseStudy {
    pub config: CaseConfig,
    pub scheme: CollocationScheme,
    pub theta_min: Vec<Vec<f64>>,
    pub phi_at_min: Vec<Vec<f64>>,
    pair_oracles: BTreeMap<TransitionKey, TransitionOracle>,
}

impl CaseStudy {
    pub fn new(mut config: CaseConfig) -> Result<Self, CstrError> {
        config.plant.validate()?;
        let n = config.plant.num_products();
        if config.disturbance.nominal_demand.len() != n {
            return Err(CstrError::BadParams("one nominal demand per product required".into()));
        }
        if !(config.horizon > 0.0 && config.fill > 0.0) {
            return Err(CstrError::BadParams("horizon and fill must be positive".into()));
        }
        if config.economics.rates.is_empty() {
            let d = config.disturbance.nominal_demand.clone();
            config.economics.fill_rates(&d, config.horizon, config.fill);
        }
        config.economics.validate(n)?;
        let plant = &config.plant;
        let scheme = plant.scheme()?;
        let mut theta_min = vec![vec![0.0; n]; n];
        let mut phi_at_min = vec![vec![0.0; n]; n];
        let mut pair_oracles = BTreeMap::new();
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let tmin = min_transition_time(plant.x_ss[i], plant.x_ss[j], plant, &scheme, true)?;
                let oracle = TransitionOracle {
                    problem: TransitionProblem {
                        x_from: plant.x_ss[i],
                        x_to: plant.x_ss[j],
                        u_to: plant.u_ss[j],
                    },
                    plant: plant.clone(),
                    scheme: scheme.clone(),
                    lb: tmin,
                    ub: THETA_SPAN * tmin,
                };
                phi_at_min[i][j] = oracle.problem.solve(plant, &scheme, tmin)?.value;
                theta_min[i][j] = tmin;
                pair_oracles.insert(TransitionKey::Pair(i, j), oracle);
            }
        }
        Ok(Self {
            config,
            scheme,
            theta_min,
            phi_at_min,
            pair_oracles,
        })
    }

    pub fn num_products(&self) -> usize {
        self.config.plant.num_products()
    }

    pub fn plant(&self) -> &PlantParams {
        &self.config.plant
    }

    pub fn economics(&self) -> &EconomicsParams {
        &self.config.economics
    }

    pub fn pair_oracles(&self) -> &BTreeMap<TransitionKey, TransitionOracle> {
        &self.pair_oracles
    }

    /// Checks that every pair value function has non-decreasing slopes on a
    /// 50-point grid of its domain.
    pub fn audit_convexity(&self) -> Result<(), CstrError> {
        for (key, o) in &self.pair_oracles {
            let pts = 50;
            let ts: Vec<f64> = (0..pts)
                .map(|k| o.lb + (o.ub - o.lb) * k as f64 / (pts - 1) as f64)
                .collect();
            let vals = ts
                .iter()
                .map(|&t| o.problem.solve(&o.plant, &o.scheme, t).map(|s| s.value))
                .collect::<Result<Vec<_>, _>>()?;
            let slopes: Vec<f64> = (1..pts).map(|k| (vals[k] - vals[k - 1]) / (ts[k] - ts[k - 1])).collect();
            for k in 1..slopes.len() {
                if slopes[k] < slopes[k - 1] - 1e-6 * (1.0 + slopes[k - 1].abs()) {
                    return Err(CstrError::NonConvex(format!(
                        "transition {key}: slope drops from {} to {} near theta = {}",
                        slopes[k - 1],
                        slopes[k],
                        ts[k]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Cut library over the product-to-product transitions, after the
    /// convexity audit.
    pub fn cut_library(&self, n_max: usize) -> Result<CutLibrary<TransitionKey>, GbdError> {
        self.audit_convexity().map_err(|e| GbdError::Oracle(e.to_string()))?;
        let map: BTreeMap<TransitionKey, &dyn SubproblemOracle> = self
            .pair_oracles
            .iter()
            .map(|(k, o)| (*k, o as &dyn SubproblemOracle))
            .collect();
        build_cut_library(&map, n_max)
    }

    /// Instance for the given post-disturbance data; computes the
    /// intermediate transition domains and big-M constants.
    #[allow(clippy::too_many_arguments)]
    pub fn instance(
        &self,
        id: u64,
        t0: f64,
        demand: Vec<f64>,
        init_inventory: Vec<f64>,
        x_star: f64,
        c0: f64,
        state: PlantState,
    ) -> Result<ScheduleInstance, CstrError> {
        let plant = &self.config.plant;
        let n = self.num_products();
        let mut theta_hat_min = Vec::with_capacity(n);
        let mut theta_hat_max = Vec::with_capacity(n);
        let mut phi_hat_at_min = Vec::with_capacity(n);
        for i in 0..n {
            let tmin = min_transition_time(x_star, plant.x_ss[i], plant, &self.scheme, true)?;
            let p = TransitionProblem {
                x_from: x_star,
                x_to: plant.x_ss[i],
                u_to: plant.u_ss[i],
            };
            phi_hat_at_min.push(p.solve(plant, &self.scheme, tmin)?.value);
            theta_hat_min.push(tmin);
            theta_hat_max.push((THETA_SPAN * tmin).max(THETA_HAT_FLOOR));
        }
        let inst = ScheduleInstance {
            schema: INSTANCE_SCHEMA,
            id,
            horizon: self.config.horizon,
            t0,
            demand,
            init_inventory,
            rates: self.config.economics.rates.clone(),
            x_star,
            c0,
            state,
            theta_min: self.theta_min.clone(),
            theta_hat_min,
            theta_hat_max,
            phi_at_min: self.phi_at_min.clone(),
            phi_hat_at_min,
        };
        inst.validate()?;
        Ok(inst)
    }

    /// Undisturbed problem at the start of the horizon, sitting at product 0.
    pub fn nominal_instance(&self) -> Result<ScheduleInstance, CstrError> {
        let n = self.num_products();
        self.instance(
            0,
            0.0,
            self.config.disturbance.nominal_demand.clone(),
            vec![0.0; n],
            self.config.plant.x_ss[0],
            1.0,
            PlantState::Production,
        )
    }

    /// Pair oracles plus the instance's intermediate oracles.
    pub fn oracles(&self, inst: &ScheduleInstance) -> BTreeMap<TransitionKey, TransitionOracle> {
        let plant = &self.config.plant;
        let mut map = self.pair_oracles.clone();
        for i in 0..inst.num_products() {
            map.insert(
                TransitionKey::Intermediate(i),
                TransitionOracle {
                    problem: TransitionProblem {
                        x_from: inst.x_star,
                        x_to: plant.x_ss[i],
                        u_to: plant.u_ss[i],
                    },
                    plant: plant.clone(),
                    scheme: self.scheme.clone(),
                    lb: inst.theta_hat_min[i],
                    ub: inst.theta_hat_max[i],
                },
            );
        }
        map
    }

    pub fn solve(
        &self,
        inst: &ScheduleInstance,
        initial_cuts: &CutSet<TransitionKey>,
        config: &GbdConfig,
    ) -> Result<GbdResult, GbdError> {
        let master = ScheduleMaster::new(inst, &self.config.economics, self.config.formulation)
            .map_err(|e| GbdError::Config(e.to_string()))?;
        run_gbd(&master, &self.oracles(inst), initial_cuts, config)
    }

    /// True iff the master without cuts has a feasible schedule.
    pub fn check_feasible(&self, inst: &ScheduleInstance) -> bool {
        let Ok(model) = build_master(inst, &self.config.economics, &CutSet::new(), self.config.formulation) else {
            return false;
        };
        let opts = MilpOptions {
            node_limit: 2000,
            ..MilpOptions::default()
        };
        match solve_milp(&model, &opts) {
            Ok(sol) => !sol.values.is_empty(),
            Err(_) => false,
        }
    }

    /// Solves the undisturbed problem and reads off the slot plan.
    pub fn nominal_schedule(&self, config: &GbdConfig) -> Result<NominalSchedule, GbdError> {
        let inst = self
            .nominal_instance()
            .map_err(|e| GbdError::Config(e.to_string()))?;
        let res = self.solve(&inst, &CutSet::new(), config)?;
        let (_, layout) = build_master_with_layout(&inst, &self.config.economics, &CutSet::new(), self.config.formulation)
            .map_err(|e| GbdError::Config(e.to_string()))?;
        let v = &res.values;
        let n = inst.num_products();
        let product_in = |k: usize| (0..n).find(|&i| v[layout.w_prod[i][k].0] > 0.5).unwrap_or(0);
        let mut slots = Vec::with_capacity(n);
        for k in 0..n {
            let p = product_in(k);
            let entry = if k == 0 { v[layout.hat[p].tau.0] } else { 0.0 };
            let transition = if k + 1 < n {
                let q = product_in(k + 1);
                (q != p).then(|| (q, v[layout.pair[p][q][k].unwrap().tau.0]))
            } else {
                None
            };
            slots.push(NominalSlot {
                product: p,
                start: v[layout.t_start[k].0],
                entry,
                production: v[layout.prod_time[p][k].0],
                transition,
            });
        }
        Ok(NominalSchedule {
            x_initial: inst.x_star,
            init_inventory: inst.init_inventory.clone(),
            slots,
            objective: res.upper,
        })
    }

    /// Inventories and reactor state at `t0` while following `nominal`.
    /// Production accrues at the product rate; sales settle at the horizon
    /// end, so nothing is drawn down before `t0`.
    pub fn simulate_to_disturbance(&self, nominal: &NominalSchedule, t0: f64) -> DisturbedState {
        let plant = &self.config.plant;
        let rates = &self.config.economics.rates;
        let mut inventory = nominal.init_inventory.clone();
        let mut t = 0.0;
        let mut x = nominal.x_initial;
        let transit = |x_from: f64, to: usize, dur: f64, at: f64| -> f64 {
            let p = TransitionProblem {
                x_from,
                x_to: plant.x_ss[to],
                u_to: plant.u_ss[to],
            };
            match p.solve(plant, &self.scheme, dur) {
                Ok(s) => s.state_at(&self.scheme, x_from, dur, at),
                Err(_) => x_from + (plant.x_ss[to] - x_from) * (at / dur).clamp(0.0, 1.0),
            }
        };
        for slot in &nominal.slots {
            if slot.entry > 0.0 {
                if t0 < t + slot.entry {
                    let xs = transit(x, slot.product, slot.entry, t0 - t);
                    return DisturbedState { inventory, x: xs, state: PlantState::Transition };
                }
                t += slot.entry;
            }
            x = plant.x_ss[slot.product];
            if t0 < t + slot.production {
                inventory[slot.product] += rates[slot.product] * (t0 - t);
                return DisturbedState { inventory, x, state: PlantState::Production };
            }
            inventory[slot.product] += rates[slot.product] * slot.production;
            t += slot.production;
            if let Some((to, dur)) = slot.transition {
                if dur > 0.0 && t0 < t + dur {
                    let xs = transit(x, to, dur, t0 - t);
                    return DisturbedState { inventory, x: xs, state: PlantState::Transition };
                }
                t += dur;
            }
        }
        DisturbedState {
            inventory,
            x,
            state: PlantState::Production,
        }
    }

    /// Instance after `dist` hits the plant running `nominal`. The scaled
    /// inlet drives the reactor toward `c0 * x` for the detection delay
    /// before `t0`.
    pub fn disturbed_instance(
        &self,
        id: u64,
        nominal: &NominalSchedule,
        dist: &Disturbance,
    ) -> Result<ScheduleInstance, CstrError> {
        let s = self.simulate_to_disturbance(nominal, dist.t0);
        let (xlo, xhi) = self.config.plant.reachable_interval();
        let plant = &self.config.plant;
        let reach = 1.0 - (-plant.decay() * self.config.disturbance.detection_delay).exp();
        let x_star = (s.x * (1.0 + (dist.c0 - 1.0) * reach)).clamp(xlo, xhi);
        self.instance(id, dist.t0, dist.demand.clone(), s.inventory, x_star, dist.c0, s.state)
    }
}

/// Feature map `[T0, x*, c0, d_1..d_n, I_1..I_n, state, n_cuts]`.
pub fn instance_features(inst: &ScheduleInstance, n_cuts: usize) -> Vec<f64> {
    let mut f = Vec::with_capacity(2 * inst.num_products() + 5);
    f.extend([inst.t0, inst.x_star, inst.c0]);
    f.extend_from_slice(&inst.demand);
    f.extend_from_slice(&inst.init_inventory);
    f.push(match inst.state {
        PlantState::Production => 0.0,
        PlantState::Transition => 1.0,
    });
    f.push(n_cuts as f64);
    f
}
