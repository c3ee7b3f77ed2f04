//! Transition subproblems of the scalar linear plant, solved exactly.
//!
//! Eliminating the collocation states leaves the end state affine in the
//! inputs, so each subproblem is a diagonal QP with one equality and box
//! bounds. It is solved by a monotone search over the equality multiplier.

use serde::{Deserialize, Serialize};

use super::collocation::{element_map, CollocationScheme};
use super::{CstrError, PlantParams};
use crate::gbd::{GbdError, OracleValue, SubproblemOracle};

/// One transition: drive `x_from` to `x_to` in time `theta` with the input
/// pinned to `u_to` at the final collocation point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionProblem {
    pub x_from: f64,
    pub x_to: f64,
    pub u_to: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionSolution {
    pub value: f64,
    /// -d(value)/d(theta)
    pub multiplier: f64,
    /// Inputs at collocation points, element-major.
    pub u: Vec<f64>,
    /// States at collocation points, element-major.
    pub x: Vec<f64>,
}

/// Affine end-state map `x_N = base + sum(g_m u_m)` for a given theta.
struct Linearized {
    base: f64,
    g: Vec<f64>,
}

fn linearize(plant: &PlantParams, scheme: &CollocationScheme, x0: f64, theta: f64) -> Linearized {
    let h = theta / scheme.n_f as f64;
    let em = element_map(scheme, plant.q_over_v, plant.decay(), h);
    let last = scheme.n_c - 1;
    let p = em.start[last];
    let gl: Vec<f64> = (0..scheme.n_c).map(|c| em.gain[(last, c)]).collect();
    let n = scheme.n_f;
    let mut g = vec![0.0; n * scheme.n_c];
    let mut scale = 1.0;
    for f in (0..n).rev() {
        for c in 0..scheme.n_c {
            g[f * scheme.n_c + c] = scale * gl[c];
        }
        scale *= p;
    }
    Linearized {
        base: p.powi(n as i32) * x0,
        g,
    }
}

/// States at collocation points and d(x_N)/d(theta) for fixed inputs.
fn forward(plant: &PlantParams, scheme: &CollocationScheme, x0: f64, theta: f64, u: &[f64]) -> (Vec<f64>, f64) {
    let h = theta / scheme.n_f as f64;
    let (a, s) = (plant.q_over_v, plant.decay());
    let em = element_map(scheme, a, s, h);
    let nc = scheme.n_c;
    let a0 = nalgebra::DVector::from_fn(nc, |i, _| scheme.diff[i][0]);
    let mut xs = Vec::with_capacity(u.len());
    let (mut x, mut dx) = (x0, 0.0);
    for f in 0..scheme.n_f {
        let uf = nalgebra::DVector::from_column_slice(&u[f * nc..(f + 1) * nc]);
        let big_x = &em.start * x + &em.gain * &uf;
        // M X = -A0 x0 + h a U with dM/dh = s I
        let rhs = -(&big_x * s) - &a0 * dx + &uf * a;
        let dxx = &em.inv * rhs;
        xs.extend(big_x.iter());
        x = big_x[nc - 1];
        dx = dxx[nc - 1];
    }
    (xs, dx / scheme.n_f as f64)
}

/// Feasible range of the end state over the input box.
fn reach(lin: &Linearized, pinned: Option<(usize, f64)>, lb: f64, ub: f64) -> (f64, f64) {
    let mut lo = lin.base;
    let mut hi = lin.base;
    for (m, &g) in lin.g.iter().enumerate() {
        match pinned {
            Some((p, v)) if p == m => {
                lo += g * v;
                hi += g * v;
            }
            _ => {
                lo += (g * lb).min(g * ub);
                hi += (g * lb).max(g * ub);
            }
        }
    }
    (lo, hi)
}

fn feas_tol(x_to: f64) -> f64 {
    1e-10 * (1.0 + x_to.abs())
}

impl TransitionSolution {
    /// State at time `t` in `[0, theta]` from the collocation polynomials.
    pub fn state_at(&self, scheme: &CollocationScheme, x_from: f64, theta: f64, t: f64) -> f64 {
        if theta <= 0.0 {
            return x_from;
        }
        let h = theta / scheme.n_f as f64;
        let t = t.clamp(0.0, theta);
        let f = ((t / h).floor() as usize).min(scheme.n_f - 1);
        let s = (t - f as f64 * h) / h;
        let nc = scheme.n_c;
        let x0 = if f == 0 { x_from } else { self.x[f * nc - 1] };
        let mut pts = vec![0.0];
        pts.extend_from_slice(&scheme.nodes);
        let mut vals = vec![x0];
        vals.extend_from_slice(&self.x[f * nc..(f + 1) * nc]);
        let mut out = 0.0;
        for j in 0..pts.len() {
            let mut l = 1.0;
            for m in 0..pts.len() {
                if m != j {
                    l *= (s - pts[m]) / (pts[j] - pts[m]);
                }
            }
            out += l * vals[j];
        }
        out
    }
}

impl TransitionProblem {
    pub fn solve(
        &self,
        plant: &PlantParams,
        scheme: &CollocationScheme,
        theta: f64,
    ) -> Result<TransitionSolution, CstrError> {
        let npts = scheme.num_points();
        let tol = feas_tol(self.x_to);
        if theta <= 0.0 {
            if (self.x_from - self.x_to).abs() <= tol {
                return Ok(TransitionSolution {
                    value: 0.0,
                    multiplier: 0.0,
                    u: vec![self.u_to; npts],
                    x: vec![self.x_to; npts],
                });
            }
            return Err(CstrError::InfeasibleTransition { theta });
        }
        let lin = linearize(plant, scheme, self.x_from, theta);
        let pin = npts - 1;
        let (lb, ub) = (plant.u_lb, plant.u_ub);
        let ubar = self.u_to;
        let r = self.x_to - lin.base - lin.g[pin] * self.u_to;
        let w: Vec<f64> = (0..npts)
            .map(|m| plant.alpha_u * theta / scheme.n_f as f64 * scheme.weights[m % scheme.n_c])
            .collect();

        let free = 0..pin;
        let h_at = |mu: f64| -> f64 {
            free.clone()
                .map(|m| lin.g[m] * (ubar + mu * lin.g[m] / (2.0 * w[m])).clamp(lb, ub))
                .sum()
        };
        let mut bps = vec![0.0];
        for m in free.clone() {
            let g = lin.g[m];
            if g != 0.0 {
                bps.push(2.0 * w[m] * (lb - ubar) / g);
                bps.push(2.0 * w[m] * (ub - ubar) / g);
            }
        }
        bps.sort_by(f64::total_cmp);
        bps.dedup();
        let hs: Vec<f64> = bps.iter().map(|&b| h_at(b)).collect();
        let (hmin, hmax) = (hs[0], hs[hs.len() - 1]);
        if r < hmin - tol || r > hmax + tol {
            return Err(CstrError::InfeasibleTransition { theta });
        }
        let mu = if r <= hs[0] {
            bps[0]
        } else {
            match hs.iter().position(|&h| h >= r) {
                None => bps[bps.len() - 1],
                Some(i) => {
                    let (b0, b1, h0, h1) = (bps[i - 1], bps[i], hs[i - 1], hs[i]);
                    b0 + (r - h0) * (b1 - b0) / (h1 - h0)
                }
            }
        };
        let mut u: Vec<f64> = (0..npts)
            .map(|m| (ubar + mu * lin.g[m] / (2.0 * w[m])).clamp(lb, ub))
            .collect();
        u[pin] = self.u_to;
        let value: f64 = (0..npts).map(|m| w[m] * (u[m] - ubar).powi(2)).sum();
        let (x, dxn) = forward(plant, scheme, self.x_from, theta, &u);
        // envelope theorem on L = J - mu (x_N - x_to); weights scale with theta
        let dphi = value / theta - mu * dxn;
        Ok(TransitionSolution {
            value,
            multiplier: -dphi,
            u,
            x,
        })
    }

    /// Whether the end state can hit `x_to` within `theta` under the input box.
    pub fn feasible(&self, plant: &PlantParams, scheme: &CollocationScheme, theta: f64, terminal_pin: bool) -> bool {
        let tol = feas_tol(self.x_to);
        if theta <= 0.0 {
            return (self.x_from - self.x_to).abs() <= tol;
        }
        let lin = linearize(plant, scheme, self.x_from, theta);
        let pin = terminal_pin.then_some((lin.g.len() - 1, self.u_to));
        let (lo, hi) = reach(&lin, pin, plant.u_lb, plant.u_ub);
        self.x_to >= lo - tol && self.x_to <= hi + tol
    }
}

/// Smallest transition time (bisection to 1e-6 h) for which the collocation
/// system is feasible. With `terminal_pin` the final input is held at the
/// target's steady-state value, as in the transition oracle.
pub fn min_transition_time(
    x_from: f64,
    x_to: f64,
    plant: &PlantParams,
    scheme: &CollocationScheme,
    terminal_pin: bool,
) -> Result<f64, CstrError> {
    if x_from == x_to {
        return Ok(0.0);
    }
    let (xlo, xhi) = plant.reachable_interval();
    if x_to >= xhi || x_to <= xlo {
        return Err(CstrError::Unreachable { x_from, x_to });
    }
    let prob = TransitionProblem {
        x_from,
        x_to,
        u_to: plant.steady_input(x_to),
    };
    let mut hi = 1e-3;
    while !prob.feasible(plant, scheme, hi, terminal_pin) {
        hi *= 2.0;
        if hi > 1e5 {
            return Err(CstrError::Unreachable { x_from, x_to });
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-7 {
        let mid = 0.5 * (lo + hi);
        if prob.feasible(plant, scheme, mid, terminal_pin) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// A transition subproblem bound to its domain, usable as a Benders oracle.
#[derive(Debug, Clone)]
pub struct TransitionOracle {
    pub problem: TransitionProblem,
    pub plant: PlantParams,
    pub scheme: CollocationScheme,
    pub lb: f64,
    pub ub: f64,
}

impl SubproblemOracle for TransitionOracle {
    fn domain(&self) -> (f64, f64) {
        (self.lb, self.ub)
    }

    fn evaluate(&self, theta: f64) -> Result<OracleValue, GbdError> {
        let s = self
            .problem
            .solve(&self.plant, &self.scheme, theta)
            .map_err(|e| GbdError::Oracle(e.to_string()))?;
        Ok(OracleValue {
            value: s.value,
            multiplier: s.multiplier,
        })
    }
}

/// Product-to-product transition value `(phi, lambda)`; zero for `i == j`.
pub fn transition_value(
    i: usize,
    j: usize,
    theta: f64,
    plant: &PlantParams,
    scheme: &CollocationScheme,
) -> Result<OracleValue, CstrError> {
    if i == j {
        return Ok(OracleValue {
            value: 0.0,
            multiplier: 0.0,
        });
    }
    let p = TransitionProblem {
        x_from: plant.x_ss[i],
        x_to: plant.x_ss[j],
        u_to: plant.u_ss[j],
    };
    let s = p.solve(plant, scheme, theta)?;
    Ok(OracleValue {
        value: s.value,
        multiplier: s.multiplier,
    })
}

/// Transition from a disturbed state `x_star` to product `i`.
pub fn intermediate_value(
    i: usize,
    x_star: f64,
    theta: f64,
    plant: &PlantParams,
    scheme: &CollocationScheme,
) -> Result<OracleValue, CstrError> {
    let p = TransitionProblem {
        x_from: x_star,
        x_to: plant.x_ss[i],
        u_to: plant.u_ss[i],
    };
    let s = p.solve(plant, scheme, theta)?;
    Ok(OracleValue {
        value: s.value,
        multiplier: s.multiplier,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (PlantParams, CollocationScheme) {
        let p = PlantParams::default();
        let s = p.scheme().unwrap();
        (p, s)
    }

    fn fd(i: usize, j: usize, theta: f64, p: &PlantParams, s: &CollocationScheme) -> f64 {
        let h = 1e-4;
        let up = transition_value(i, j, theta + h, p, s).unwrap().value;
        let dn = transition_value(i, j, theta - h, p, s).unwrap().value;
        -(up - dn) / (2.0 * h)
    }

    #[test]
    fn min_time_matches_bang_bang() {
        let (p, s) = setup();
        // x' = 2 - 2x from 0.2 reaches 0.8 at ln(4)/2
        let t = min_transition_time(0.2, 0.8, &p, &s, false).unwrap();
        assert!((t - 4f64.ln() / 2.0).abs() < 1e-5, "{t}");
        let pinned = min_transition_time(0.2, 0.8, &p, &s, true).unwrap();
        assert!(pinned >= t - 1e-7 && pinned <= 1.02 * t, "{pinned}");
        let down = min_transition_time(0.8, 0.2, &p, &s, false).unwrap();
        assert!((down - 4f64.ln() / 2.0).abs() < 1e-5, "{down}");
    }

    #[test]
    fn min_time_edge_cases() {
        let (p, s) = setup();
        assert_eq!(min_transition_time(0.5, 0.5, &p, &s, true).unwrap(), 0.0);
        assert!(matches!(
            min_transition_time(0.2, 1.0, &p, &s, true),
            Err(CstrError::Unreachable { .. })
        ));
        assert!(matches!(
            min_transition_time(0.2, 1.3, &p, &s, false),
            Err(CstrError::Unreachable { .. })
        ));
    }

    #[test]
    fn identity_transition_is_free() {
        let (p, s) = setup();
        let v = transition_value(1, 1, 0.7, &p, &s).unwrap();
        assert_eq!((v.value, v.multiplier), (0.0, 0.0));
    }

    #[test]
    fn at_target_intermediate_costs_nothing() {
        let (p, s) = setup();
        let v = intermediate_value(2, p.x_ss[2], 0.3, &p, &s).unwrap();
        assert!(v.value.abs() < 1e-9 * p.alpha_u, "{v:?}");
    }

    #[test]
    fn below_min_time_is_infeasible() {
        let (p, s) = setup();
        let t = min_transition_time(0.2, 0.8, &p, &s, true).unwrap();
        assert!(matches!(
            transition_value(0, 2, 0.9 * t, &p, &s),
            Err(CstrError::InfeasibleTransition { .. })
        ));
        assert!(transition_value(0, 2, t, &p, &s).is_ok());
    }

    #[test]
    fn value_non_increasing_on_grid() {
        let (p, s) = setup();
        for (i, j) in [(0, 1), (1, 0), (0, 2), (2, 1)] {
            let tmin = min_transition_time(p.x_ss[i], p.x_ss[j], &p, &s, true).unwrap();
            let mut prev = f64::INFINITY;
            for k in 0..20 {
                let th = tmin * (1.0 + 4.0 * k as f64 / 19.0);
                let v = transition_value(i, j, th, &p, &s).unwrap().value;
                assert!(v <= prev + 1e-9 * prev.abs().max(1.0), "{i}->{j} at {th}");
                prev = v;
            }
        }
    }

    #[test]
    fn multiplier_matches_central_difference() {
        let (p, s) = setup();
        let tmin = min_transition_time(0.5, 0.2, &p, &s, true).unwrap();
        for f in [1.05, 1.5, 2.5, 4.5] {
            let th = f * tmin;
            let lam = transition_value(1, 0, th, &p, &s).unwrap().multiplier;
            let want = fd(1, 0, th, &p, &s);
            assert!((lam - want).abs() <= 1e-3 * want.abs(), "{lam} vs {want}");
        }
    }

    #[test]
    fn constant_input_matches_analytic_trajectory() {
        let (p, s) = setup();
        let (x0, u, theta) = (0.3, 1.4, 1.7);
        let n = s.num_points();
        let (xs, _) = forward(&p, &s, x0, theta, &vec![u; n]);
        let xe = u * p.q_over_v / p.decay();
        let h = theta / s.n_f as f64;
        for f in 0..s.n_f {
            for c in 0..s.n_c {
                let t = (f as f64 + s.nodes[c]) * h;
                let exact = xe + (x0 - xe) * (-p.decay() * t).exp();
                assert!((xs[f * s.n_c + c] - exact).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn interpolated_state_hits_both_ends() {
        let (p, s) = setup();
        let prob = TransitionProblem {
            x_from: 0.2,
            x_to: 0.5,
            u_to: p.u_ss[1],
        };
        let sol = prob.solve(&p, &s, 0.8).unwrap();
        assert!((sol.state_at(&s, 0.2, 0.8, 0.0) - 0.2).abs() < 1e-12);
        assert!((sol.state_at(&s, 0.2, 0.8, 0.8) - 0.5).abs() < 1e-9);
        let mid = sol.state_at(&s, 0.2, 0.8, 0.4);
        assert!(mid > 0.2 && mid < 0.5);
    }
}
