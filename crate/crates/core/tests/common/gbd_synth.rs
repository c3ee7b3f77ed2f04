//! Synthetic decomposition instances with analytic convex value functions and
//! a brute-force oracle (binary enumeration plus a fine 1-D grid per
//! complicating variable).

use std::collections::BTreeMap;

use cutinit::gbd::{CutSet, FnOracle, GbdError, MasterProblem, OracleValue};
use cutinit::lp::{LinearModel, Relation, Sense, VarId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy)]
pub enum ValueShape {
    /// alpha + beta / theta
    Inverse { alpha: f64, beta: f64 },
    /// alpha + gamma (theta - mu)^2
    Quadratic { alpha: f64, gamma: f64, mu: f64 },
}

impl ValueShape {
    pub fn eval(&self, t: f64) -> OracleValue {
        match *self {
            ValueShape::Inverse { alpha, beta } => OracleValue {
                value: alpha + beta / t,
                multiplier: beta / (t * t),
            },
            ValueShape::Quadratic { alpha, gamma, mu } => OracleValue {
                value: alpha + gamma * (t - mu).powi(2),
                multiplier: -2.0 * gamma * (t - mu),
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthInstance {
    pub bin_cost: Vec<f64>,
    pub weights: Vec<f64>,
    pub capacity: f64,
    pub theta_lo: Vec<f64>,
    pub theta_hi: Vec<f64>,
    pub theta_cost: Vec<f64>,
    /// coupling[t][b]: how much binary b raises the lower bound of theta_t
    pub coupling: Vec<Vec<f64>>,
    pub shapes: Vec<ValueShape>,
    pub offset: f64,
}

impl SynthInstance {
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nb = rng.gen_range(3..=10);
        let nt = rng.gen_range(1..=3);
        let bin_cost = (0..nb).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let weights: Vec<f64> = (0..nb).map(|_| rng.gen_range(1.0..4.0)).collect();
        let capacity = weights.iter().sum::<f64>() * rng.gen_range(0.4..0.8);
        let theta_lo: Vec<f64> = (0..nt).map(|_| rng.gen_range(0.5..1.5)).collect();
        let theta_hi = theta_lo.iter().map(|lo| lo * rng.gen_range(3.0..5.0)).collect();
        let theta_cost = (0..nt).map(|_| rng.gen_range(0.1..1.0)).collect();
        let coupling = (0..nt)
            .map(|_| {
                (0..nb)
                    .map(|_| if rng.gen_bool(0.4) { rng.gen_range(0.1..0.5) } else { 0.0 })
                    .collect()
            })
            .collect();
        let shapes = (0..nt)
            .map(|_| {
                if rng.gen_bool(0.5) {
                    ValueShape::Inverse {
                        alpha: rng.gen_range(1.0..3.0),
                        beta: rng.gen_range(1.0..6.0),
                    }
                } else {
                    ValueShape::Quadratic {
                        alpha: rng.gen_range(1.0..3.0),
                        gamma: rng.gen_range(0.2..2.0),
                        mu: rng.gen_range(1.0..4.0),
                    }
                }
            })
            .collect();
        Self {
            bin_cost,
            weights,
            capacity,
            theta_lo,
            theta_hi,
            theta_cost,
            coupling,
            shapes,
            offset: 20.0,
        }
    }

    pub fn num_binaries(&self) -> usize {
        self.bin_cost.len()
    }

    pub fn oracles(&self) -> BTreeMap<usize, FnOracle<Box<dyn Fn(f64) -> OracleValue + Send + Sync>>> {
        self.shapes
            .iter()
            .enumerate()
            .map(|(t, s)| {
                let s = *s;
                let f: Box<dyn Fn(f64) -> OracleValue + Send + Sync> = Box::new(move |x| s.eval(x));
                (
                    t,
                    FnOracle {
                        lb: self.theta_lo[t],
                        ub: self.theta_hi[t],
                        f,
                    },
                )
            })
            .collect()
    }

    /// Enumerate binaries; minimize each theta on a grid refined by golden section.
    pub fn brute_force(&self) -> Option<f64> {
        let nb = self.num_binaries();
        let mut best: Option<f64> = None;
        'mask: for mask in 0u32..(1 << nb) {
            let y: Vec<f64> = (0..nb).map(|b| ((mask >> b) & 1) as f64).collect();
            if y.iter().sum::<f64>() < 1.0 {
                continue;
            }
            if y.iter().zip(&self.weights).map(|(a, w)| a * w).sum::<f64>() > self.capacity {
                continue;
            }
            let mut total = self.offset + y.iter().zip(&self.bin_cost).map(|(a, c)| a * c).sum::<f64>();
            for t in 0..self.shapes.len() {
                let lo = self.theta_lo[t]
                    + y.iter().zip(&self.coupling[t]).map(|(a, c)| a * c).sum::<f64>();
                let hi = self.theta_hi[t];
                if lo > hi {
                    continue 'mask;
                }
                let g = |x: f64| self.theta_cost[t] * x + self.shapes[t].eval(x).value;
                let steps = 20_000;
                let h = (hi - lo) / steps as f64;
                let (mut arg, mut val) = (lo, g(lo));
                for i in 1..=steps {
                    let x = lo + h * i as f64;
                    let v = g(x);
                    if v < val {
                        arg = x;
                        val = v;
                    }
                }
                let (mut a, mut b) = ((arg - h).max(lo), (arg + h).min(hi));
                let r = (5f64.sqrt() - 1.0) / 2.0;
                for _ in 0..100 {
                    let c = b - r * (b - a);
                    let d = a + r * (b - a);
                    if g(c) < g(d) {
                        b = d;
                    } else {
                        a = c;
                    }
                }
                total += val.min(g(0.5 * (a + b)));
            }
            if best.map_or(true, |b| total < b) {
                best = Some(total);
            }
        }
        best
    }
}

impl MasterProblem<usize> for SynthInstance {
    fn build(&self, cuts: &CutSet<usize>) -> Result<LinearModel, GbdError> {
        let nb = self.num_binaries();
        let nt = self.shapes.len();
        let mut m = LinearModel::new(Sense::Minimize);
        m.objective_offset = self.offset;
        let y: Vec<VarId> = (0..nb).map(|b| m.add_binary(format!("y{b}"))).collect();
        let th: Vec<VarId> = (0..nt)
            .map(|t| m.add_var(format!("theta{t}"), self.theta_lo[t], self.theta_hi[t]))
            .collect();
        let eta: Vec<VarId> = (0..nt).map(|t| m.add_var(format!("eta{t}"), 0.0, f64::INFINITY)).collect();
        for b in 0..nb {
            m.set_objective(y[b], self.bin_cost[b]);
        }
        for t in 0..nt {
            m.set_objective(th[t], self.theta_cost[t]);
            m.set_objective(eta[t], 1.0);
            let mut row = vec![(th[t], 1.0)];
            for b in 0..nb {
                if self.coupling[t][b] != 0.0 {
                    row.push((y[b], -self.coupling[t][b]));
                }
            }
            m.add_row(format!("couple{t}"), row, Relation::Ge, self.theta_lo[t]);
            for c in cuts.get(&t).into_iter().flatten() {
                m.add_row(
                    format!("cut{t}"),
                    [(eta[t], 1.0), (th[t], c.multiplier)],
                    Relation::Ge,
                    c.value + c.multiplier * c.anchor,
                );
            }
        }
        m.add_row("cover", y.iter().map(|&v| (v, 1.0)), Relation::Ge, 1.0);
        m.add_row(
            "knap",
            y.iter().zip(&self.weights).map(|(&v, &w)| (v, w)),
            Relation::Le,
            self.capacity,
        );
        Ok(m)
    }

    fn proposals(&self, values: &[f64]) -> Vec<(usize, f64)> {
        let nb = self.num_binaries();
        (0..self.shapes.len()).map(|t| (t, values[nb + t])).collect()
    }

    fn first_stage_cost(&self, model: &LinearModel, values: &[f64]) -> f64 {
        let nb = self.num_binaries();
        let nt = self.shapes.len();
        let mut masked = values.to_vec();
        for t in 0..nt {
            masked[nb + nt + t] = 0.0;
        }
        model.evaluate(&masked)
    }
}
