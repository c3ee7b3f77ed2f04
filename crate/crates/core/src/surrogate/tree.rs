use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_dataset, SurrogateError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeOptions {
    pub min_samples_split: usize,
    pub max_depth: Option<usize>,
}

impl Default for TreeOptions {
    fn default() -> Self {
        Self {
            min_samples_split: 2,
            max_depth: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf { value: f64 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

/// CART regression tree in a flat arena, root at index 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub dim: usize,
    pub nodes: Vec<Node>,
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    opts: &'a TreeOptions,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn grow(&mut self, idx: &mut [usize], depth: usize) -> usize {
        let n = idx.len();
        let mean = idx.iter().map(|&i| self.y[i]).sum::<f64>() / n as f64;
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { value: mean });
        let pure = idx.iter().all(|&i| self.y[i] == self.y[idx[0]]);
        if pure || n < self.opts.min_samples_split || self.opts.max_depth.is_some_and(|m| depth >= m) {
            return id;
        }
        let Some((feature, threshold)) = self.best_split(idx) else {
            return id;
        };
        idx.sort_by(|&a, &b| {
            let (va, vb) = (self.x[a][feature] <= threshold, self.x[b][feature] <= threshold);
            vb.cmp(&va).then(a.cmp(&b))
        });
        let cut = idx.iter().take_while(|&&i| self.x[i][feature] <= threshold).count();
        let (l, r) = idx.split_at_mut(cut);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }

    /// Split maximizing the drop in summed squared error; first found wins ties.
    fn best_split(&self, idx: &[usize]) -> Option<(usize, f64)> {
        let n = idx.len() as f64;
        let total: f64 = idx.iter().map(|&i| self.y[i]).sum();
        let mut best: Option<(f64, usize, f64)> = None;
        let mut order = idx.to_vec();
        for f in 0..self.x[idx[0]].len() {
            order.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]).then(a.cmp(&b)));
            let mut left = 0.0;
            for k in 0..order.len() - 1 {
                left += self.y[order[k]];
                let (v, w) = (self.x[order[k]][f], self.x[order[k + 1]][f]);
                if v == w {
                    continue;
                }
                let nl = (k + 1) as f64;
                let nr = n - nl;
                let right = total - left;
                // SSE = sum y^2 - (sum_l)^2/nl - (sum_r)^2/nr; the first term is fixed
                let gain = left * left / nl + right * right / nr;
                if best.is_none_or(|(g, _, _)| gain > g * (1.0 + 1e-12) + 1e-300) {
                    let mut t = 0.5 * (v + w);
                    if !(t > v && t <= w) {
                        t = v;
                    }
                    best = Some((gain, f, t));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

impl TreeModel {
    pub fn fit(x: &[Vec<f64>], y: &[f64], opts: &TreeOptions) -> Result<Self, SurrogateError> {
        check_dataset(x, y)?;
        let mut idx: Vec<usize> = (0..x.len()).collect();
        Ok(Self::fit_indices(x, y, &mut idx, opts))
    }

    fn fit_indices(x: &[Vec<f64>], y: &[f64], idx: &mut [usize], opts: &TreeOptions) -> Self {
        let mut b = Builder {
            x,
            y,
            opts,
            nodes: Vec::new(),
        };
        b.grow(idx, 0);
        Self {
            dim: x[0].len(),
            nodes: b.nodes,
        }
    }

    pub fn predict(&self, s: &[f64]) -> Result<f64, SurrogateError> {
        if s.len() != self.dim {
            return Err(SurrogateError::DimensionMismatch {
                expected: self.dim,
                got: s.len(),
            });
        }
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return Ok(*value),
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if s[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn num_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestOptions {
    pub n_trees: usize,
    pub seed: u64,
    pub tree: TreeOptions,
}

impl Default for ForestOptions {
    fn default() -> Self {
        Self {
            n_trees: 100,
            seed: 0,
            tree: TreeOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<TreeModel>,
    pub seeds: Vec<u64>,
}

impl ForestModel {
    /// Bagged trees; tree `t` draws its bootstrap from its own seed, so the
    /// result does not depend on thread scheduling.
    pub fn fit(x: &[Vec<f64>], y: &[f64], opts: &ForestOptions) -> Result<Self, SurrogateError> {
        check_dataset(x, y)?;
        if opts.n_trees == 0 {
            return Err(SurrogateError::BadHyperparameter("forest needs at least one tree".into()));
        }
        let mut master = ChaCha8Rng::seed_from_u64(opts.seed);
        let seeds: Vec<u64> = (0..opts.n_trees).map(|_| master.gen()).collect();
        let n = x.len();
        let trees = seeds
            .par_iter()
            .map(|&s| {
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                let mut idx: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
                TreeModel::fit_indices(x, y, &mut idx, &opts.tree)
            })
            .collect();
        Ok(Self { trees, seeds })
    }

    pub fn predict(&self, s: &[f64]) -> Result<f64, SurrogateError> {
        let mut sum = 0.0;
        for t in &self.trees {
            sum += t.predict(s)?;
        }
        Ok(sum / self.trees.len() as f64)
    }

    pub fn dim(&self) -> usize {
        self.trees[0].dim
    }
}
