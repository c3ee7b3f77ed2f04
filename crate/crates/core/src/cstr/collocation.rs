use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::CstrError;

/// Radau IIA collocation on finite elements.
///
/// `diff` is N_c x (N_c + 1): row `c` holds the derivatives at node `c` of
/// the Lagrange basis over `{0, tau_1, .., tau_Nc}`, so the element-start
/// value enters through column 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollocationScheme {
    pub n_f: usize,
    pub n_c: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub diff: Vec<Vec<f64>>,
}

fn legendre(n: usize, x: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return p0;
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Right Radau points on (0, 1]: roots of P_n(2t-1) - P_{n-1}(2t-1).
pub fn radau_nodes(n_c: usize) -> Vec<f64> {
    let r = |t: f64| legendre(n_c, 2.0 * t - 1.0) - legendre(n_c - 1, 2.0 * t - 1.0);
    let mut roots = Vec::with_capacity(n_c);
    let steps = 4000;
    let mut a = 1e-9;
    let mut fa = r(a);
    for s in 1..steps {
        let b = s as f64 / steps as f64;
        let fb = r(b);
        if fa == 0.0 {
            roots.push(a);
        } else if fa * fb < 0.0 {
            let (mut lo, mut hi) = (a, b);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if r(lo) * r(mid) <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        a = b;
        fa = fb;
    }
    roots.push(1.0);
    roots
}

impl CollocationScheme {
    pub fn radau(n_f: usize, n_c: usize) -> Result<Self, CstrError> {
        if n_f == 0 || !(1..=6).contains(&n_c) {
            return Err(CstrError::BadParams(format!(
                "collocation needs n_f >= 1 and 1 <= n_c <= 6, got {n_f}, {n_c}"
            )));
        }
        let nodes = radau_nodes(n_c);
        debug_assert_eq!(nodes.len(), n_c);

        // quadrature: integrate the interpolant through the collocation nodes exactly
        let v = DMatrix::from_fn(n_c, n_c, |q, c| nodes[c].powi(q as i32));
        let rhs = DVector::from_fn(n_c, |q, _| 1.0 / (q as f64 + 1.0));
        let weights = v
            .lu()
            .solve(&rhs)
            .ok_or_else(|| CstrError::BadParams("singular quadrature system".into()))?;

        // barycentric differentiation over {0, nodes}
        let mut pts = vec![0.0];
        pts.extend_from_slice(&nodes);
        let m = pts.len();
        let bw: Vec<f64> = (0..m)
            .map(|j| {
                1.0 / (0..m)
                    .filter(|&l| l != j)
                    .map(|l| pts[j] - pts[l])
                    .product::<f64>()
            })
            .collect();
        let mut full = vec![vec![0.0; m]; m];
        for i in 0..m {
            let mut diag = 0.0;
            for j in 0..m {
                if i != j {
                    let d = bw[j] / bw[i] / (pts[i] - pts[j]);
                    full[i][j] = d;
                    diag -= d;
                }
            }
            full[i][i] = diag;
        }
        let diff = full.into_iter().skip(1).collect();
        Ok(Self {
            n_f,
            n_c,
            nodes,
            weights: weights.iter().copied().collect(),
            diff,
        })
    }

    /// Element-relative time of collocation point `c`.
    pub fn node(&self, c: usize) -> f64 {
        self.nodes[c]
    }

    pub fn num_points(&self) -> usize {
        self.n_f * self.n_c
    }
}

/// Per-element linear map of `x' = a u - s x` under collocation with
/// element length `h`: `X = start * x0 + gain * U`.
#[derive(Debug, Clone)]
pub(crate) struct ElementMap {
    pub start: DVector<f64>,
    pub gain: DMatrix<f64>,
    /// (M)^{-1}, kept for derivatives with respect to h.
    pub inv: DMatrix<f64>,
}

pub(crate) fn element_map(scheme: &CollocationScheme, a: f64, s: f64, h: f64) -> ElementMap {
    let n = scheme.n_c;
    let m = DMatrix::from_fn(n, n, |i, j| {
        scheme.diff[i][j + 1] + if i == j { h * s } else { 0.0 }
    });
    let inv = m
        .try_inverse()
        .expect("collocation element matrix is nonsingular for s >= 0");
    let a0 = DVector::from_fn(n, |i, _| scheme.diff[i][0]);
    let start = -(&inv * a0);
    let gain = &inv * (h * a);
    ElementMap { start, gain, inv }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_point_radau_closed_form() {
        let s = CollocationScheme::radau(10, 3).unwrap();
        let r6 = 6f64.sqrt();
        let want = [(4.0 - r6) / 10.0, (4.0 + r6) / 10.0, 1.0];
        for (a, b) in s.nodes.iter().zip(want) {
            assert!((a - b).abs() < 1e-13, "{a} vs {b}");
        }
        let wb = [(16.0 - r6) / 36.0, (16.0 + r6) / 36.0, 1.0 / 9.0];
        for (a, b) in s.weights.iter().zip(wb) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn differentiating_a_constant_gives_zero() {
        for n_c in 1..=5 {
            let s = CollocationScheme::radau(4, n_c).unwrap();
            assert_eq!(s.diff.len(), n_c);
            for row in &s.diff {
                assert_eq!(row.len(), n_c + 1);
                assert!(row.iter().sum::<f64>().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn exact_on_polynomials_of_degree_n_c() {
        let s = CollocationScheme::radau(1, 3).unwrap();
        let mut pts = vec![0.0];
        pts.extend_from_slice(&s.nodes);
        for (c, row) in s.diff.iter().enumerate() {
            let d: f64 = row.iter().zip(&pts).map(|(a, t)| a * t.powi(3)).sum();
            assert!((d - 3.0 * s.nodes[c].powi(2)).abs() < 1e-11);
        }
    }

    #[test]
    fn single_point_is_implicit_euler() {
        let s = CollocationScheme::radau(1, 1).unwrap();
        assert_eq!(s.nodes, vec![1.0]);
        assert!((s.weights[0] - 1.0).abs() < 1e-14);
        assert_eq!(s.diff, vec![vec![-1.0, 1.0]]);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(CollocationScheme::radau(0, 3).is_err());
        assert!(CollocationScheme::radau(3, 0).is_err());
    }
}
