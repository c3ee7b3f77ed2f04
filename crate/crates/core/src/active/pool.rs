use std::collections::BTreeMap;

use log::{info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ActiveError, LabeledSample, LabeledSet, Metric};
use crate::cstr::{instance_features, sample_disturbance, CaseStudy, NominalSchedule, ScheduleInstance, TransitionKey};
use crate::gbd::{select_initial_cuts, CutLibrary, GbdConfig, GbdError};

/// Independent random streams drawn from the same seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstanceStream {
    Pool,
    HeldOut,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolEntry {
    pub sample_id: u64,
    pub instance_id: u64,
    pub n_cuts: usize,
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Pool {
    pub seed: u64,
    pub n_max: usize,
    /// Sorted by sample id.
    pub entries: Vec<PoolEntry>,
    pub instances: BTreeMap<u64, ScheduleInstance>,
}

impl Pool {
    pub fn from_instances(seed: u64, n_max: usize, instances: Vec<ScheduleInstance>) -> Self {
        let mut entries = Vec::with_capacity(instances.len() * n_max.saturating_sub(1));
        for inst in &instances {
            for n in 2..=n_max {
                entries.push(PoolEntry {
                    sample_id: entries.len() as u64,
                    instance_id: inst.id,
                    n_cuts: n,
                    features: instance_features(inst, n),
                });
            }
        }
        Self {
            seed,
            n_max,
            entries,
            instances: instances.into_iter().map(|i| (i.id, i)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, sample_id: u64) -> Option<&PoolEntry> {
        self.entries
            .binary_search_by_key(&sample_id, |e| e.sample_id)
            .ok()
            .map(|i| &self.entries[i])
    }
}

/// Feasible disturbed instances from one stream, in draw order. Stops at
/// `target` instances or after `max_attempts` draws; instance ids are draw
/// indices.
pub fn build_instances(
    case: &CaseStudy,
    nominal: &NominalSchedule,
    seed: u64,
    stream: InstanceStream,
    target: usize,
    max_attempts: usize,
) -> Vec<ScheduleInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(match stream {
        InstanceStream::Pool => 0,
        InstanceStream::HeldOut => 1,
    });
    let mut out = Vec::with_capacity(target);
    let mut attempt = 0;
    while out.len() < target && attempt < max_attempts {
        let batch = (target - out.len()).min(max_attempts - attempt);
        let draws: Vec<(u64, u64)> = (0..batch).map(|k| ((attempt + k) as u64, rng.gen())).collect();
        let made: Vec<Option<ScheduleInstance>> = draws
            .par_iter()
            .map(|&(id, sub)| {
                let dist = sample_disturbance(sub, &case.config.disturbance, case.config.horizon);
                match case.disturbed_instance(id, nominal, &dist) {
                    Ok(inst) if case.check_feasible(&inst) => Some(inst),
                    Ok(_) => {
                        info!("disturbance {id} infeasible, discarded");
                        None
                    }
                    Err(e) => {
                        info!("disturbance {id} discarded: {e}");
                        None
                    }
                }
            })
            .collect();
        out.extend(made.into_iter().flatten().take(target - out.len()));
        attempt += batch;
    }
    if out.is_empty() {
        warn!("no feasible instance in {attempt} draws");
    } else if out.len() < target {
        warn!("only {} feasible instances in {attempt} draws", out.len());
    }
    out
}

/// Pool of `n_data` feasible instances, one entry per `n` in `2..=n_max`.
/// Gives up after `10 * n_data` draws.
pub fn build_pool(case: &CaseStudy, nominal: &NominalSchedule, seed: u64, n_data: usize, n_max: usize) -> Pool {
    assert!(n_max >= 2, "n_max must be at least 2");
    let inst = build_instances(case, nominal, seed, InstanceStream::Pool, n_data, 10 * n_data.max(1));
    Pool::from_instances(seed, n_max, inst)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelOutcome {
    pub value: f64,
    pub censored: bool,
}

/// Solve cost of `inst` started from the `n`-point cuts of `library`.
pub fn label(
    case: &CaseStudy,
    library: &CutLibrary<TransitionKey>,
    inst: &ScheduleInstance,
    n: usize,
    metric: Metric,
    config: &GbdConfig,
) -> Result<LabelOutcome, GbdError> {
    let cuts = select_initial_cuts(library, n)?;
    let r = case.solve(inst, &cuts, config)?;
    Ok(LabelOutcome {
        value: match metric {
            Metric::Wall => r.wall_seconds,
            Metric::Work => r.work_units,
        },
        censored: !r.converged,
    })
}

pub trait Labeler: Sync {
    fn label(&self, entry: &PoolEntry) -> Result<LabelOutcome, String>;
}

impl<F> Labeler for F
where
    F: Fn(&PoolEntry) -> Result<LabelOutcome, String> + Sync,
{
    fn label(&self, entry: &PoolEntry) -> Result<LabelOutcome, String> {
        self(entry)
    }
}

/// Labels pool entries by running the decomposition on their instance.
pub struct GbdLabeler<'a> {
    pub case: &'a CaseStudy,
    pub library: &'a CutLibrary<TransitionKey>,
    pub instances: &'a BTreeMap<u64, ScheduleInstance>,
    pub config: &'a GbdConfig,
    pub metric: Metric,
}

impl Labeler for GbdLabeler<'_> {
    fn label(&self, entry: &PoolEntry) -> Result<LabelOutcome, String> {
        let inst = self
            .instances
            .get(&entry.instance_id)
            .ok_or_else(|| format!("instance {} not loaded", entry.instance_id))?;
        label(self.case, self.library, inst, entry.n_cuts, self.metric, self.config).map_err(|e| e.to_string())
    }
}

/// Labels looked up from an already labeled set, keyed by sample id.
pub struct LabelTable {
    rows: BTreeMap<u64, LabelOutcome>,
}

impl LabelTable {
    pub fn new(set: &LabeledSet) -> Self {
        Self {
            rows: set
                .rows
                .iter()
                .map(|r| {
                    (
                        r.sample_id,
                        LabelOutcome {
                            value: r.label,
                            censored: r.censored,
                        },
                    )
                })
                .collect(),
        }
    }
}

impl Labeler for LabelTable {
    fn label(&self, entry: &PoolEntry) -> Result<LabelOutcome, String> {
        self.rows
            .get(&entry.sample_id)
            .copied()
            .ok_or_else(|| format!("sample {} has no label", entry.sample_id))
    }
}

/// Labels `ids` in parallel. Failed samples are logged and returned
/// separately; rows come back sorted by sample id.
pub fn label_entries(
    pool: &Pool,
    ids: &[u64],
    labeler: &dyn Labeler,
    metric: Metric,
) -> Result<(LabeledSet, Vec<(u64, String)>), ActiveError> {
    let entries = ids
        .iter()
        .map(|&id| pool.entry(id).ok_or(ActiveError::UnknownSample(id)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut results: Vec<(u64, Result<LabeledSample, String>)> = entries
        .par_iter()
        .map(|e| {
            let r = labeler.label(e).map(|o| LabeledSample {
                sample_id: e.sample_id,
                instance_id: e.instance_id,
                n_cuts: e.n_cuts,
                features: e.features.clone(),
                label: o.value,
                censored: o.censored,
                metric,
                seed: pool.seed,
            });
            (e.sample_id, r)
        })
        .collect();
    results.sort_by_key(|r| r.0);
    let mut set = LabeledSet::default();
    let mut failed = Vec::new();
    for (id, r) in results {
        match r {
            Ok(row) => set.push(row)?,
            Err(reason) => {
                warn!("sample {id} excluded: {reason}");
                failed.push((id, reason));
            }
        }
    }
    Ok((set, failed))
}

/// Pool plus a label for every entry.
#[allow(clippy::too_many_arguments)]
pub fn supervised_dataset(
    case: &CaseStudy,
    nominal: &NominalSchedule,
    library: &CutLibrary<TransitionKey>,
    seed: u64,
    n_data: usize,
    n_max: usize,
    metric: Metric,
    config: &GbdConfig,
) -> Result<(Pool, LabeledSet), ActiveError> {
    let pool = build_pool(case, nominal, seed, n_data, n_max);
    let labeler = GbdLabeler {
        case,
        library,
        instances: &pool.instances,
        config,
        metric,
    };
    let ids: Vec<u64> = pool.entries.iter().map(|e| e.sample_id).collect();
    let (set, _) = label_entries(&pool, &ids, &labeler, metric)?;
    Ok((pool, set))
}
