use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::kernel::{distance, matern_of_distance, Nu};
use super::scale::Standardizer;
use super::{check_dataset, SurrogateError};

const JITTER_START: f64 = 1e-8;
const JITTER_MAX: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpOptions {
    pub nu: Nu,
    pub restarts: usize,
    /// Likelihood evaluations per restart.
    pub evals_per_start: usize,
    /// Fixed noise std in standardized label units; `None` learns it.
    pub noise: Option<f64>,
    /// Log-space box for (length, sigma_f, sigma_n).
    pub length_bounds: [f64; 2],
    pub sigma_f_bounds: [f64; 2],
    pub sigma_n_bounds: [f64; 2],
}

impl Default for GpOptions {
    fn default() -> Self {
        Self {
            nu: Nu::ThreeHalves,
            restarts: 5,
            evals_per_start: 40,
            noise: None,
            length_bounds: [1e-2, 1e3],
            sigma_f_bounds: [1e-2, 1e2],
            sigma_n_bounds: [1e-4, 1e1],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpHyper {
    pub length: f64,
    pub sigma_f: f64,
    pub sigma_n: f64,
    pub nu: Nu,
}

/// Fitted GP posterior. Inputs and labels live in standardized units;
/// predictions come back in label units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpModel {
    pub hyper: GpHyper,
    pub jitter: f64,
    pub log_marginal_likelihood: f64,
    /// Best log marginal likelihood after each evaluation of the search.
    pub search_trace: Vec<f64>,
    x_scale: Standardizer,
    y_scale: Standardizer,
    x: Vec<Vec<f64>>,
    /// Row-major lower Cholesky factor of K + (sigma_n^2 + jitter) I.
    chol: Vec<f64>,
    alpha: Vec<f64>,
}

struct Factor {
    chol: Vec<f64>,
    alpha: Vec<f64>,
    jitter: f64,
    log_ml: f64,
}

fn factor(x: &[Vec<f64>], y: &[f64], h: &GpHyper) -> Result<Factor, SurrogateError> {
    let n = x.len();
    let mut k = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            let v = matern_of_distance(distance(&x[i], &x[j]), h.length, h.sigma_f, h.nu);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
        k[(i, i)] = h.sigma_f * h.sigma_f + h.sigma_n * h.sigma_n;
    }
    let mut jitter = JITTER_START;
    while jitter <= JITTER_MAX * (1.0 + 1e-9) {
        let mut kj = k.clone();
        for i in 0..n {
            kj[(i, i)] += jitter;
        }
        if let Some(c) = kj.cholesky() {
            let l = c.l();
            let mut chol = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..=i {
                    chol[i * n + j] = l[(i, j)];
                }
            }
            let z = forward(&chol, n, y);
            let alpha = backward(&chol, n, &z);
            let fit: f64 = z.iter().map(|v| v * v).sum();
            let logdet: f64 = (0..n).map(|i| chol[i * n + i].ln()).sum();
            let log_ml = -0.5 * fit - logdet - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
            if log_ml.is_finite() {
                return Ok(Factor {
                    chol,
                    alpha,
                    jitter,
                    log_ml,
                });
            }
        }
        jitter *= 10.0;
    }
    Err(SurrogateError::SingularKernel)
}

/// Solves L z = b.
fn forward(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut z = b.to_vec();
    for i in 0..n {
        let row = &l[i * n..i * n + i];
        let s: f64 = row.iter().zip(&z[..i]).map(|(a, b)| a * b).sum();
        z[i] = (z[i] - s) / l[i * n + i];
    }
    z
}

/// Solves L^T a = z.
fn backward(l: &[f64], n: usize, z: &[f64]) -> Vec<f64> {
    let mut a = z.to_vec();
    for i in (0..n).rev() {
        let mut s = a[i];
        for j in i + 1..n {
            s -= l[j * n + i] * a[j];
        }
        a[i] = s / l[i * n + i];
    }
    a
}

fn clamp_log(v: f64, b: [f64; 2]) -> f64 {
    v.clamp(b[0].ln(), b[1].ln())
}

impl GpModel {
    /// Fits hyperparameters by a multi-start coordinate search on the log
    /// marginal likelihood, then factors at the best point.
    pub fn fit(x: &[Vec<f64>], y: &[f64], opts: &GpOptions) -> Result<Self, SurrogateError> {
        check_dataset(x, y)?;
        let x_scale = Standardizer::fit(x);
        let y_scale = Standardizer::fit_labels(y);
        let xs = x_scale.transform_rows(x);
        let ys: Vec<f64> = y.iter().map(|&v| y_scale.forward(v)).collect();
        let d = x[0].len().max(1) as f64;

        let learn_noise = opts.noise.is_none();
        let dims = if learn_noise { 3 } else { 2 };
        let bounds = [opts.length_bounds, opts.sigma_f_bounds, opts.sigma_n_bounds];
        let to_hyper = |p: &[f64; 3]| GpHyper {
            length: p[0].exp(),
            sigma_f: p[1].exp(),
            sigma_n: if learn_noise { p[2].exp() } else { opts.noise.unwrap_or(0.0) },
            nu: opts.nu,
        };
        let eval = |p: &[f64; 3]| factor(&xs, &ys, &to_hyper(p)).map_or(f64::NEG_INFINITY, |f| f.log_ml);

        let base_len = d.sqrt().ln();
        let offsets = [0.0, -1.0, 1.0, -2.0, 2.0, -0.5, 0.5, -1.5, 1.5, 3.0];
        let noises: [f64; 5] = [1e-1, 1e-2, 3e-1, 1e-3, 3e-2];
        let mut best_p = [base_len, 0.0, noises[0].ln()];
        let mut best = f64::NEG_INFINITY;
        let mut trace = Vec::with_capacity(opts.restarts * opts.evals_per_start);

        for r in 0..opts.restarts {
            let mut p = [
                clamp_log(base_len + offsets[r % offsets.len()], bounds[0]),
                0.0,
                clamp_log(noises[r % noises.len()].ln(), bounds[2]),
            ];
            let mut cur = eval(&p);
            let mut evals = 1;
            let record = |v: f64, p: &[f64; 3], best: &mut f64, best_p: &mut [f64; 3], trace: &mut Vec<f64>| {
                if v > *best {
                    *best = v;
                    *best_p = *p;
                }
                trace.push(*best);
            };
            record(cur, &p, &mut best, &mut best_p, &mut trace);
            let mut step = [1.0; 3];
            let mut c = 0;
            while evals < opts.evals_per_start {
                if step[..dims].iter().all(|s| *s < 1e-3) {
                    break;
                }
                let mut moved = false;
                for dir in [1.0, -1.0] {
                    if evals >= opts.evals_per_start {
                        break;
                    }
                    let mut q = p;
                    q[c] = clamp_log(p[c] + dir * step[c], bounds[c]);
                    if q[c] == p[c] {
                        continue;
                    }
                    let v = eval(&q);
                    evals += 1;
                    record(v, &q, &mut best, &mut best_p, &mut trace);
                    if v > cur {
                        p = q;
                        cur = v;
                        moved = true;
                        break;
                    }
                }
                if !moved {
                    step[c] *= 0.5;
                }
                c = (c + 1) % dims;
            }
        }
        if !best.is_finite() {
            return Err(SurrogateError::SingularKernel);
        }
        let hyper = to_hyper(&best_p);
        let f = factor(&xs, &ys, &hyper)?;
        Ok(Self {
            hyper,
            jitter: f.jitter,
            log_marginal_likelihood: f.log_ml,
            search_trace: trace,
            x_scale,
            y_scale,
            x: xs,
            chol: f.chol,
            alpha: f.alpha,
        })
    }

    /// Posterior for fixed hyperparameters, no search.
    pub fn with_hyper(x: &[Vec<f64>], y: &[f64], hyper: GpHyper) -> Result<Self, SurrogateError> {
        check_dataset(x, y)?;
        if !(hyper.length > 0.0 && hyper.sigma_f > 0.0 && hyper.sigma_n >= 0.0) {
            return Err(SurrogateError::BadHyperparameter(format!("{hyper:?}")));
        }
        let x_scale = Standardizer::fit(x);
        let y_scale = Standardizer::fit_labels(y);
        let xs = x_scale.transform_rows(x);
        let ys: Vec<f64> = y.iter().map(|&v| y_scale.forward(v)).collect();
        let f = factor(&xs, &ys, &hyper)?;
        Ok(Self {
            hyper,
            jitter: f.jitter,
            log_marginal_likelihood: f.log_ml,
            search_trace: vec![f.log_ml],
            x_scale,
            y_scale,
            x: xs,
            chol: f.chol,
            alpha: f.alpha,
        })
    }

    pub fn dim(&self) -> usize {
        self.x_scale.dim()
    }

    pub fn num_samples(&self) -> usize {
        self.x.len()
    }

    /// Predictive mean and std in label units.
    pub fn predict(&self, s: &[f64]) -> Result<(f64, f64), SurrogateError> {
        if s.len() != self.dim() {
            return Err(SurrogateError::DimensionMismatch {
                expected: self.dim(),
                got: s.len(),
            });
        }
        let z = self.x_scale.transform(s);
        let h = &self.hyper;
        let n = self.x.len();
        let ks: Vec<f64> = self
            .x
            .iter()
            .map(|xi| matern_of_distance(distance(xi, &z), h.length, h.sigma_f, h.nu))
            .collect();
        let mean: f64 = ks.iter().zip(&self.alpha).map(|(a, b)| a * b).sum();
        let v = forward(&self.chol, n, &ks);
        let var = h.sigma_f * h.sigma_f + h.sigma_n * h.sigma_n - v.iter().map(|a| a * a).sum::<f64>();
        let std = var.max(0.0).sqrt();
        Ok((self.y_scale.inverse(mean), std * self.y_scale.scale[0]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noise_free() -> GpOptions {
        GpOptions {
            noise: Some(0.0),
            ..GpOptions::default()
        }
    }

    #[test]
    fn single_point_interpolates() {
        let m = GpModel::fit(&[vec![0.3, 1.0]], &[4.0], &noise_free()).unwrap();
        let (mu, sd) = m.predict(&[0.3, 1.0]).unwrap();
        assert!((mu - 4.0).abs() < 1e-8);
        assert!(sd < 1e-3);
        let (mu, _) = m.predict(&[9.0, -3.0]).unwrap();
        assert!((mu - 4.0).abs() < 1e-8);
    }

    #[test]
    fn interpolates_training_points() {
        let x: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64 * 0.5, (i as f64).sin()]).collect();
        let y: Vec<f64> = x.iter().map(|r| r[0] * r[0] - r[1]).collect();
        let m = GpModel::fit(&x, &y, &noise_free()).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            let (mu, _) = m.predict(xi).unwrap();
            assert!((mu - yi).abs() < 1e-6, "{mu} vs {yi}");
        }
    }

    #[test]
    fn constant_labels_predict_constant() {
        let x: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64]).collect();
        let m = GpModel::fit(&x, &[3.0; 5], &GpOptions::default()).unwrap();
        for q in [-10.0, 0.5, 2.2, 40.0] {
            assert!((m.predict(&[q]).unwrap().0 - 3.0).abs() < 1e-6);
        }
    }

    #[test]
    fn duplicates_with_different_labels_learn_noise() {
        let x = vec![vec![0.0], vec![0.0], vec![1.0], vec![1.0], vec![2.0], vec![2.0]];
        let y = vec![0.0, 1.0, 2.0, 3.0, 1.0, 2.0];
        let m = GpModel::fit(&x, &y, &GpOptions::default()).unwrap();
        assert!(m.hyper.sigma_n > 0.05, "{:?}", m.hyper);
    }

    #[test]
    fn search_trace_never_decreases() {
        let x: Vec<Vec<f64>> = (0..12).map(|i| vec![(i as f64 * 0.37).cos(), i as f64]).collect();
        let y: Vec<f64> = x.iter().map(|r| r[0] * 3.0 + r[1].sqrt()).collect();
        let m = GpModel::fit(&x, &y, &GpOptions::default()).unwrap();
        assert!(m.search_trace.len() <= 5 * 40);
        assert!(m.search_trace.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(*m.search_trace.last().unwrap(), m.log_marginal_likelihood);
    }

    #[test]
    fn far_query_reverts_to_prior() {
        let x = vec![vec![0.0], vec![1.0], vec![2.0]];
        let y = vec![1.0, 2.0, 6.0];
        let h = GpHyper {
            length: 0.5,
            sigma_f: 1.2,
            sigma_n: 0.1,
            nu: Nu::ThreeHalves,
        };
        let m = GpModel::with_hyper(&x, &y, h).unwrap();
        let (mu, sd) = m.predict(&[1e4]).unwrap();
        let ymean = 3.0;
        let ystd = (((1.0f64 - 3.0).powi(2) + 1.0 + 9.0) / 3.0).sqrt();
        assert!((mu - ymean).abs() < 1e-9);
        assert!((sd / ystd - (1.44f64 + 0.01).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn midpoint_weights_are_symmetric() {
        let x = vec![vec![-1.0], vec![1.0]];
        let h = GpHyper {
            length: 1.0,
            sigma_f: 1.0,
            sigma_n: 0.0,
            nu: Nu::FiveHalves,
        };
        let m = GpModel::with_hyper(&x, &[0.0, 10.0], h).unwrap();
        assert!((m.predict(&[0.0]).unwrap().0 - 5.0).abs() < 1e-9);
    }

    #[test]
    fn std_drops_where_a_label_is_added() {
        let mut x: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, (i * i) as f64 * 0.1]).collect();
        let mut y: Vec<f64> = x.iter().map(|r| r[0].sin() + r[1]).collect();
        let q = vec![2.5, 0.4];
        let before = GpModel::fit(&x, &y, &noise_free()).unwrap().predict(&q).unwrap().1;
        x.push(q.clone());
        y.push(q[0].sin() + q[1]);
        let after = GpModel::fit(&x, &y, &noise_free()).unwrap().predict(&q).unwrap().1;
        assert!(after < before - 1e-6, "{before} -> {after}");
    }

    #[test]
    fn dimension_checked() {
        let m = GpModel::fit(&[vec![0.0, 1.0], vec![1.0, 0.0]], &[1.0, 2.0], &GpOptions::default()).unwrap();
        assert!(matches!(
            m.predict(&[1.0]),
            Err(SurrogateError::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn fit_is_deterministic() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![(i as f64).sqrt(), (i % 3) as f64]).collect();
        let y: Vec<f64> = x.iter().map(|r| r[0] + 0.3 * r[1]).collect();
        let a = GpModel::fit(&x, &y, &GpOptions::default()).unwrap();
        let b = GpModel::fit(&x, &y, &GpOptions::default()).unwrap();
        assert_eq!(a, b);
    }
}
