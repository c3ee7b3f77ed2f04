use std::fmt;

use serde::{Deserialize, Serialize};

use super::CstrError;

pub const INSTANCE_SCHEMA: u32 = 1;

/// Subproblem key: a product-to-product transition or the transition from
/// the disturbed state into a product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TransitionKey {
    Pair(usize, usize),
    Intermediate(usize),
}

impl fmt::Display for TransitionKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransitionKey::Pair(i, j) => write!(f, "{i}->{j}"),
            TransitionKey::Intermediate(i) => write!(f, "*->{i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlantState {
    Production,
    Transition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EconomicsParams {
    pub price: Vec<f64>,
    pub oper_cost: Vec<f64>,
    pub inv_cost: f64,
    /// Fixed cost per product-to-product transition (diagonal ignored).
    pub trans_cost: Vec<Vec<f64>>,
    /// Production rates; filled from nominal demands when empty.
    #[serde(default)]
    pub rates: Vec<f64>,
}

impl EconomicsParams {
    pub fn defaults(n_products: usize) -> Self {
        let price = [150.0, 200.0, 230.0, 180.0, 210.0];
        let oper = [20.0, 25.0, 30.0, 22.0, 28.0];
        let pick = |v: &[f64]| (0..n_products).map(|i| v[i % v.len()]).collect();
        Self {
            price: pick(&price),
            oper_cost: pick(&oper),
            inv_cost: 1.0,
            trans_cost: (0..n_products)
                .map(|i| (0..n_products).map(|j| if i == j { 0.0 } else { 10.0 }).collect())
                .collect(),
            rates: Vec::new(),
        }
    }

    /// Common rate such that the nominal demands take `fill` of the horizon.
    pub fn fill_rates(&mut self, nominal_demand: &[f64], horizon: f64, fill: f64) {
        let r = nominal_demand.iter().sum::<f64>() / (fill * horizon);
        self.rates = vec![r; nominal_demand.len()];
    }

    pub fn validate(&self, n: usize) -> Result<(), CstrError> {
        let bad = |m: &str| Err(CstrError::BadParams(m.to_string()));
        if self.price.len() != n || self.oper_cost.len() != n || self.rates.len() != n {
            return bad("economics vectors must have one entry per product");
        }
        if self.trans_cost.len() != n || self.trans_cost.iter().any(|r| r.len() != n) {
            return bad("transition cost must be a square matrix over products");
        }
        let all = self
            .price
            .iter()
            .chain(&self.oper_cost)
            .chain(&self.rates)
            .chain(self.trans_cost.iter().flatten())
            .chain(std::iter::once(&self.inv_cost));
        for &v in all {
            if !(v >= 0.0 && v.is_finite()) {
                return bad("economic parameters must be finite and nonnegative");
            }
        }
        Ok(())
    }
}

/// Parameters of one scheduling problem solved after a disturbance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleInstance {
    pub schema: u32,
    pub id: u64,
    pub horizon: f64,
    pub t0: f64,
    pub demand: Vec<f64>,
    pub init_inventory: Vec<f64>,
    pub rates: Vec<f64>,
    pub x_star: f64,
    /// Inlet concentration multiplier of the disturbance.
    pub c0: f64,
    pub state: PlantState,
    /// Minimum product-to-product transition times; diagonal is zero.
    pub theta_min: Vec<Vec<f64>>,
    /// Minimum times from `x_star` into each product.
    pub theta_hat_min: Vec<f64>,
    pub theta_hat_max: Vec<f64>,
    /// Transition value at the minimum time, used as the big-M for `Z * eta`.
    pub phi_at_min: Vec<Vec<f64>>,
    pub phi_hat_at_min: Vec<f64>,
}

/// Upper end of the product-to-product transition domain.
pub const THETA_SPAN: f64 = 5.0;
/// Floor on the intermediate domain width when the disturbed state already
/// sits at a product's steady state.
pub const THETA_HAT_FLOOR: f64 = 0.05;

impl ScheduleInstance {
    pub fn num_products(&self) -> usize {
        self.demand.len()
    }

    pub fn remaining(&self) -> f64 {
        self.horizon - self.t0
    }

    pub fn theta_max(&self, i: usize, j: usize) -> f64 {
        THETA_SPAN * self.theta_min[i][j]
    }

    pub fn validate(&self) -> Result<(), CstrError> {
        let bad = |m: String| Err(CstrError::MalformedInstance(m));
        let n = self.num_products();
        if self.schema != INSTANCE_SCHEMA {
            return bad(format!("unsupported schema {}", self.schema));
        }
        if n == 0 {
            return bad("no products".into());
        }
        if !(self.t0 >= 0.0 && self.t0 < self.horizon) {
            return bad(format!("T0 = {} outside [0, {})", self.t0, self.horizon));
        }
        let vecs = [
            &self.init_inventory,
            &self.rates,
            &self.theta_hat_min,
            &self.theta_hat_max,
            &self.phi_hat_at_min,
        ];
        if vecs.iter().any(|v| v.len() != n) {
            return bad("per-product vectors must match the number of products".into());
        }
        if self.theta_min.len() != n
            || self.phi_at_min.len() != n
            || self.theta_min.iter().chain(&self.phi_at_min).any(|r| r.len() != n)
        {
            return bad("transition matrices must be square over products".into());
        }
        if self.demand.iter().chain(&self.init_inventory).any(|&d| !(d >= 0.0)) {
            return bad("demands and inventories must be nonnegative".into());
        }
        if self.rates.iter().any(|&r| !(r > 0.0)) {
            return bad("rates must be positive".into());
        }
        for i in 0..n {
            for j in 0..n {
                if i != j && !(self.theta_min[i][j] > 0.0) {
                    return bad(format!("theta_min[{i}][{j}] must be positive"));
                }
            }
            if !(self.theta_hat_max[i] > self.theta_hat_min[i] && self.theta_hat_min[i] >= 0.0) {
                return bad(format!("intermediate domain for product {i} is empty"));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, CstrError> {
        let inst: Self =
            serde_json::from_str(s).map_err(|e| CstrError::MalformedInstance(e.to_string()))?;
        inst.validate()?;
        Ok(inst)
    }
}
