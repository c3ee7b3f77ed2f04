use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::scale::Standardizer;
use super::{check_dataset, SurrogateError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpOptions {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    /// L2 penalty on weights (not biases).
    pub alpha: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for MlpOptions {
    fn default() -> Self {
        Self {
            hidden: vec![32; 3],
            learning_rate: 1e-4,
            alpha: 0.01,
            epochs: 2000,
            batch_size: 200,
            seed: 0,
        }
    }
}

impl MlpOptions {
    /// Three hidden layers of 150 units.
    pub fn wide() -> Self {
        Self {
            hidden: vec![150; 3],
            ..Self::default()
        }
    }
}

/// Dense layer, `w` row-major `outputs x inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

/// Tanh network with a linear scalar output, trained on standardized data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub layers: Vec<Layer>,
    x_scale: Standardizer,
    y_scale: Standardizer,
    /// Set when every training label is equal.
    constant: Option<f64>,
}

impl Layer {
    fn forward(&self, a: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.outputs {
            let row = &self.w[o * self.inputs..(o + 1) * self.inputs];
            out.push(self.b[o] + row.iter().zip(a).map(|(w, x)| w * x).sum::<f64>());
        }
    }
}

fn init_layers(sizes: &[usize], rng: &mut ChaCha8Rng) -> Vec<Layer> {
    sizes
        .windows(2)
        .map(|s| {
            let (fi, fo) = (s[0], s[1]);
            let bound = (6.0 / (fi + fo) as f64).sqrt();
            Layer {
                inputs: fi,
                outputs: fo,
                w: (0..fi * fo).map(|_| rng.gen_range(-bound..bound)).collect(),
                b: (0..fo).map(|_| rng.gen_range(-bound..bound)).collect(),
            }
        })
        .collect()
}

/// Raw output for standardized input.
fn run(layers: &[Layer], x: &[f64]) -> f64 {
    let mut a = x.to_vec();
    let mut z = Vec::new();
    let last = layers.len() - 1;
    for (k, l) in layers.iter().enumerate() {
        l.forward(&a, &mut z);
        if k < last {
            z.iter_mut().for_each(|v| *v = v.tanh());
        }
        std::mem::swap(&mut a, &mut z);
    }
    a[0]
}

/// Loss `sum (f - y)^2 / 2m + alpha * |W|^2 / 2m` over `batch` and its
/// gradient, laid out layer by layer as (w, b).
fn loss_and_grad(layers: &[Layer], x: &[Vec<f64>], y: &[f64], batch: &[usize], alpha: f64) -> (f64, Vec<Vec<f64>>) {
    let m = batch.len() as f64;
    let mut grads: Vec<Vec<f64>> = layers.iter().map(|l| vec![0.0; l.w.len() + l.b.len()]).collect();
    let mut loss = 0.0;
    let last = layers.len() - 1;
    let mut acts: Vec<Vec<f64>> = vec![Vec::new(); layers.len() + 1];
    for &i in batch {
        acts[0].clone_from(&x[i]);
        for (k, l) in layers.iter().enumerate() {
            let (lo, hi) = acts.split_at_mut(k + 1);
            l.forward(&lo[k], &mut hi[0]);
            if k < last {
                hi[0].iter_mut().for_each(|v| *v = v.tanh());
            }
        }
        let err = acts[layers.len()][0] - y[i];
        loss += 0.5 * err * err / m;
        let mut delta = vec![err / m];
        for k in (0..layers.len()).rev() {
            let l = &layers[k];
            let a = &acts[k];
            let g = &mut grads[k];
            for o in 0..l.outputs {
                for j in 0..l.inputs {
                    g[o * l.inputs + j] += delta[o] * a[j];
                }
                g[l.w.len() + o] += delta[o];
            }
            if k > 0 {
                let mut prev = vec![0.0; l.inputs];
                for o in 0..l.outputs {
                    for (j, p) in prev.iter_mut().enumerate() {
                        *p += l.w[o * l.inputs + j] * delta[o];
                    }
                }
                for (p, av) in prev.iter_mut().zip(a) {
                    *p *= 1.0 - av * av;
                }
                delta = prev;
            }
        }
    }
    for (l, g) in layers.iter().zip(&mut grads) {
        for (gw, w) in g.iter_mut().zip(&l.w) {
            *gw += alpha * w / m;
            loss += 0.5 * alpha * w * w / m;
        }
    }
    (loss, grads)
}

impl MlpModel {
    pub fn fit(x: &[Vec<f64>], y: &[f64], opts: &MlpOptions) -> Result<Self, SurrogateError> {
        check_dataset(x, y)?;
        if opts.hidden.contains(&0) || opts.batch_size == 0 || !(opts.learning_rate > 0.0) {
            return Err(SurrogateError::BadHyperparameter(format!("{opts:?}")));
        }
        let x_scale = Standardizer::fit(x);
        let y_scale = Standardizer::fit_labels(y);
        let xs = x_scale.transform_rows(x);
        let ys: Vec<f64> = y.iter().map(|&v| y_scale.forward(v)).collect();

        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let mut sizes = vec![x[0].len()];
        sizes.extend(&opts.hidden);
        sizes.push(1);
        let mut layers = init_layers(&sizes, &mut rng);

        let (b1, b2, eps) = (0.9, 0.999, 1e-8);
        let mut m1: Vec<Vec<f64>> = layers.iter().map(|l| vec![0.0; l.w.len() + l.b.len()]).collect();
        let mut m2 = m1.clone();
        let mut t = 0;
        let mut order: Vec<usize> = (0..x.len()).collect();
        for _ in 0..opts.epochs {
            order.shuffle(&mut rng);
            for batch in order.chunks(opts.batch_size) {
                let (_, g) = loss_and_grad(&layers, &xs, &ys, batch, opts.alpha);
                t += 1;
                let c1 = 1.0 - f64::powi(b1, t);
                let c2 = 1.0 - f64::powi(b2, t);
                for k in 0..layers.len() {
                    let nw = layers[k].w.len();
                    for (p, gp) in g[k].iter().enumerate() {
                        m1[k][p] = b1 * m1[k][p] + (1.0 - b1) * gp;
                        m2[k][p] = b2 * m2[k][p] + (1.0 - b2) * gp * gp;
                        let step = opts.learning_rate * (m1[k][p] / c1) / ((m2[k][p] / c2).sqrt() + eps);
                        if p < nw {
                            layers[k].w[p] -= step;
                        } else {
                            layers[k].b[p - nw] -= step;
                        }
                    }
                }
            }
        }
        let constant = y.iter().all(|&v| v == y[0]).then_some(y[0]);
        Ok(Self {
            layers,
            x_scale,
            y_scale,
            constant,
        })
    }

    pub fn dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn predict(&self, s: &[f64]) -> Result<f64, SurrogateError> {
        if s.len() != self.dim() {
            return Err(SurrogateError::DimensionMismatch {
                expected: self.dim(),
                got: s.len(),
            });
        }
        if let Some(c) = self.constant {
            return Ok(c);
        }
        Ok(self.y_scale.inverse(run(&self.layers, &self.x_scale.transform(s))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data() -> (Vec<Vec<f64>>, Vec<f64>) {
        let x = vec![
            vec![0.1, -0.4, 1.2],
            vec![0.9, 0.3, -0.5],
            vec![-1.1, 0.8, 0.2],
            vec![0.4, -1.3, -0.7],
            vec![-0.2, 0.6, 1.5],
        ];
        let y = vec![0.3, -1.2, 0.8, 1.9, -0.4];
        (x, y)
    }

    fn slot(ls: &mut [Layer], k: usize, p: usize) -> &mut f64 {
        let nw = ls[k].w.len();
        if p < nw { &mut ls[k].w[p] } else { &mut ls[k].b[p - nw] }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let (x, y) = data();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut layers = init_layers(&[3, 6, 5, 4, 1], &mut rng);
        let batch: Vec<usize> = (0..5).collect();
        let (_, g) = loss_and_grad(&layers, &x, &y, &batch, 0.01);
        let h = 1e-6;
        let mut worst: f64 = 0.0;
        for k in 0..layers.len() {
            for p in 0..g[k].len() {
                let orig = *slot(&mut layers, k, p);
                *slot(&mut layers, k, p) = orig + h;
                let up = loss_and_grad(&layers, &x, &y, &batch, 0.01).0;
                *slot(&mut layers, k, p) = orig - h;
                let dn = loss_and_grad(&layers, &x, &y, &batch, 0.01).0;
                *slot(&mut layers, k, p) = orig;
                let fd = (up - dn) / (2.0 * h);
                let rel = (fd - g[k][p]).abs() / fd.abs().max(g[k][p].abs()).max(1e-3);
                worst = worst.max(rel);
            }
        }
        assert!(worst < 1e-4, "worst relative error {worst}");
    }

    #[test]
    fn training_reduces_loss() {
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64 / 40.0, ((i * 13) % 7) as f64]).collect();
        let y: Vec<f64> = x.iter().map(|r| (3.0 * r[0]).sin() + 0.2 * r[1]).collect();
        let opts = MlpOptions {
            hidden: vec![16, 16],
            learning_rate: 1e-2,
            epochs: 300,
            ..MlpOptions::default()
        };
        let m = MlpModel::fit(&x, &y, &opts).unwrap();
        let mse: f64 = x.iter().zip(&y).map(|(a, b)| (m.predict(a).unwrap() - b).powi(2)).sum::<f64>() / 40.0;
        let var: f64 = {
            let mu = y.iter().sum::<f64>() / 40.0;
            y.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / 40.0
        };
        assert!(mse < 0.1 * var, "mse {mse} var {var}");
    }

    #[test]
    fn layer_shapes_chain() {
        let (x, y) = data();
        let m = MlpModel::fit(&x, &y, &MlpOptions { epochs: 1, ..MlpOptions::default() }).unwrap();
        assert_eq!(m.layers.len(), 4);
        for w in m.layers.windows(2) {
            assert_eq!(w[0].outputs, w[1].inputs);
        }
        assert_eq!(m.layers[0].inputs, 3);
        assert_eq!(m.layers[3].outputs, 1);
        let wide = MlpOptions::wide();
        assert_eq!(wide.hidden, vec![150, 150, 150]);
    }

    #[test]
    fn single_sample_predicts_its_label() {
        let m = MlpModel::fit(&[vec![1.0, 2.0]], &[4.5], &MlpOptions { epochs: 50, ..MlpOptions::default() }).unwrap();
        assert!((m.predict(&[0.0, -7.0]).unwrap() - 4.5).abs() < 1e-9);
    }

    #[test]
    fn seeded_fit_is_deterministic() {
        let (x, y) = data();
        let o = MlpOptions { epochs: 20, ..MlpOptions::default() };
        assert_eq!(MlpModel::fit(&x, &y, &o).unwrap(), MlpModel::fit(&x, &y, &o).unwrap());
    }
}
