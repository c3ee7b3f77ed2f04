//! Pool construction, labeling through the decomposition solver, and
//! pool-based uncertainty sampling.

mod io;
mod pool;
mod sampling;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::surrogate::SurrogateError;

pub use io::{read_labeled_csv, read_pool_csv, read_trace_csv, write_labeled_csv, write_pool_csv, write_trace_csv};
pub use pool::{
    build_instances, build_pool, label, label_entries, supervised_dataset, GbdLabeler, InstanceStream, LabelOutcome,
    LabelTable, Labeler, Pool, PoolEntry,
};
pub use sampling::{al_loop, initial_sample, random_label_baseline, AlOutcome, AlStep};

#[derive(Debug, Error)]
pub enum ActiveError {
    #[error("budget {budget} exceeds the {available} unlabeled pool entries")]
    PoolExhausted { budget: usize, available: usize },
    #[error("budget {budget} exceeds the pool size {pool}")]
    BudgetTooLarge { budget: usize, pool: usize },
    #[error("at least two uncensored initial labels are required, got {0}")]
    TooFewInitial(usize),
    #[error("sample {0} is not in the pool")]
    UnknownSample(u64),
    #[error("duplicate label for instance {instance_id} with {n_cuts} cuts")]
    Duplicate { instance_id: u64, n_cuts: usize },
    #[error("labeling sample {sample_id} failed: {reason}")]
    Label { sample_id: u64, reason: String },
    #[error(transparent)]
    Surrogate(#[from] SurrogateError),
    #[error("csv: {0}")]
    Csv(String),
}

impl From<csv::Error> for ActiveError {
    fn from(e: csv::Error) -> Self {
        ActiveError::Csv(e.to_string())
    }
}

/// Cost measure used as the label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Wall,
    #[default]
    Work,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Wall => "wall",
            Metric::Work => "work",
        })
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "wall" | "wall_seconds" => Ok(Metric::Wall),
            "work" | "work_units" => Ok(Metric::Work),
            _ => Err(format!("unknown metric {s:?} (wall, work)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub sample_id: u64,
    pub instance_id: u64,
    pub n_cuts: usize,
    pub features: Vec<f64>,
    pub label: f64,
    /// Hit the iteration cap; kept for reporting, left out of training.
    pub censored: bool,
    pub metric: Metric,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LabeledSet {
    pub rows: Vec<LabeledSample>,
}

impl LabeledSet {
    pub fn from_rows(rows: Vec<LabeledSample>) -> Result<Self, ActiveError> {
        let mut s = Self::default();
        for r in rows {
            s.push(r)?;
        }
        Ok(s)
    }

    pub fn push(&mut self, row: LabeledSample) -> Result<(), ActiveError> {
        if self
            .rows
            .iter()
            .any(|r| r.instance_id == row.instance_id && r.n_cuts == row.n_cuts)
        {
            return Err(ActiveError::Duplicate {
                instance_id: row.instance_id,
                n_cuts: row.n_cuts,
            });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn censored_count(&self) -> usize {
        self.rows.iter().filter(|r| r.censored).count()
    }

    pub fn sample_ids(&self) -> BTreeSet<u64> {
        self.rows.iter().map(|r| r.sample_id).collect()
    }

    /// Features and labels of the uncensored rows.
    pub fn training_data(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        self.rows
            .iter()
            .filter(|r| !r.censored)
            .map(|r| (r.features.clone(), r.label))
            .unzip()
    }

    pub fn sort_by_id(&mut self) {
        self.rows.sort_by_key(|r| r.sample_id);
    }
}
