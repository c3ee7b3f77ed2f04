use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::pool::{label_entries, Labeler, Pool};
use super::{ActiveError, LabeledSample, LabeledSet, Metric};
use crate::surrogate::{GpModel, GpOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlStep {
    pub step: usize,
    pub chosen_sample_id: u64,
    /// Predictive std of the chosen entry under the model before labeling.
    pub sigma: f64,
    pub label: f64,
}

#[derive(Debug, Clone)]
pub struct AlOutcome {
    pub model: GpModel,
    pub labeled: LabeledSet,
    pub trace: Vec<AlStep>,
}

/// `k` distinct sample ids drawn uniformly, in ascending order.
pub fn initial_sample(pool: &Pool, k: usize, seed: u64) -> Result<Vec<u64>, ActiveError> {
    if k > pool.len() {
        return Err(ActiveError::BudgetTooLarge {
            budget: k,
            pool: pool.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ids: Vec<u64> = rand::seq::index::sample(&mut rng, pool.len(), k)
        .into_iter()
        .map(|i| pool.entries[i].sample_id)
        .collect();
    ids.sort_unstable();
    Ok(ids)
}

/// Uniform subset of `budget` entries, labeled.
pub fn random_label_baseline(
    pool: &Pool,
    budget: usize,
    seed: u64,
    labeler: &dyn Labeler,
    metric: Metric,
) -> Result<LabeledSet, ActiveError> {
    let ids = initial_sample(pool, budget, seed)?;
    Ok(label_entries(pool, &ids, labeler, metric)?.0)
}

/// Uncertainty sampling: refit the GP, label the unlabeled entry with the
/// largest predictive std (lowest sample id on ties), repeat `budget` times.
pub fn al_loop(
    pool: &Pool,
    initial: LabeledSet,
    budget: usize,
    labeler: &dyn Labeler,
    metric: Metric,
    gp: &GpOptions,
) -> Result<AlOutcome, ActiveError> {
    let trainable = initial.rows.iter().filter(|r| !r.censored).count();
    if trainable < 2 {
        return Err(ActiveError::TooFewInitial(trainable));
    }
    let taken = initial.sample_ids();
    let mut open: Vec<usize> = (0..pool.len())
        .filter(|&i| !taken.contains(&pool.entries[i].sample_id))
        .collect();
    if budget > open.len() {
        return Err(ActiveError::PoolExhausted {
            budget,
            available: open.len(),
        });
    }
    let mut labeled = initial;
    let mut trace = Vec::with_capacity(budget);
    for step in 1..=budget {
        let (x, y) = labeled.training_data();
        let model = GpModel::fit(&x, &y, gp)?;
        let mut best: Option<(usize, f64)> = None;
        for (k, &i) in open.iter().enumerate() {
            let sd = model.predict(&pool.entries[i].features)?.1;
            if best.is_none_or(|(_, s)| sd > s) {
                best = Some((k, sd));
            }
        }
        let (k, sigma) = best.expect("open entries remain");
        let e = &pool.entries[open.remove(k)];
        let out = labeler.label(e).map_err(|reason| ActiveError::Label {
            sample_id: e.sample_id,
            reason,
        })?;
        labeled.push(LabeledSample {
            sample_id: e.sample_id,
            instance_id: e.instance_id,
            n_cuts: e.n_cuts,
            features: e.features.clone(),
            label: out.value,
            censored: out.censored,
            metric,
            seed: pool.seed,
        })?;
        trace.push(AlStep {
            step,
            chosen_sample_id: e.sample_id,
            sigma,
            label: out.value,
        });
    }
    let (x, y) = labeled.training_data();
    let model = GpModel::fit(&x, &y, gp)?;
    Ok(AlOutcome { model, labeled, trace })
}
