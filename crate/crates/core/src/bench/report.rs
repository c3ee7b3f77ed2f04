use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::BenchError;

pub const NO_CUTS: &str = "nc";
pub const LEARNED: &str = "learned";

/// One solve of one held-out instance under one strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceResult {
    pub instance_id: u64,
    pub strategy: String,
    pub n_cuts: usize,
    pub cost: f64,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Policy overhead in seconds; zero for fixed strategies.
    pub overhead_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub strategy: String,
    pub avg_cost: f64,
    pub avg_red_pct: f64,
    pub avg_fold: f64,
    pub max_red_pct: f64,
    pub min_red_pct: f64,
    pub max_fold: f64,
    pub min_fold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub instance_ids: Vec<u64>,
    pub rows: Vec<ReportRow>,
}

fn strategy_rank(s: &str) -> (u8, usize, String) {
    if s == NO_CUTS {
        (0, 0, String::new())
    } else if s == LEARNED {
        (1, 0, String::new())
    } else if let Some(n) = s.strip_prefix('n').and_then(|v| v.parse().ok()) {
        (2, n, String::new())
    } else {
        (3, 0, s.to_string())
    }
}

impl BenchReport {
    /// Paired statistics of every strategy against the no-cuts solve of
    /// the same instance. Only instances solved under every strategy count.
    pub fn from_results(results: &[InstanceResult]) -> Result<Self, BenchError> {
        let mut by: BTreeMap<(u8, usize, String), (String, BTreeMap<u64, f64>)> = BTreeMap::new();
        for r in results {
            by.entry(strategy_rank(&r.strategy))
                .or_insert_with(|| (r.strategy.clone(), BTreeMap::new()))
                .1
                .insert(r.instance_id, r.cost);
        }
        let base = by
            .get(&strategy_rank(NO_CUTS))
            .map(|v| v.1.clone())
            .ok_or_else(|| BenchError::Config("results hold no no-cuts rows".into()))?;
        let ids: Vec<u64> = base
            .keys()
            .copied()
            .filter(|id| by.values().all(|(_, m)| m.contains_key(id)))
            .collect();
        if ids.is_empty() {
            return Err(BenchError::Config("no instance was solved under every strategy".into()));
        }
        let mut rows = Vec::new();
        for (name, costs) in by.values() {
            let mut cost = Vec::new();
            let mut red = Vec::new();
            let mut fold = Vec::new();
            for id in &ids {
                let (c, nc) = (costs[id], base[id]);
                cost.push(c);
                red.push(100.0 * (nc - c) / nc);
                fold.push(nc / c);
            }
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            let max = |v: &[f64]| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let min = |v: &[f64]| v.iter().cloned().fold(f64::INFINITY, f64::min);
            rows.push(ReportRow {
                strategy: name.clone(),
                avg_cost: mean(&cost),
                avg_red_pct: mean(&red),
                avg_fold: mean(&fold),
                max_red_pct: max(&red),
                min_red_pct: min(&red),
                max_fold: max(&fold),
                min_fold: min(&fold),
            });
        }
        Ok(Self { instance_ids: ids, rows })
    }

    pub fn row(&self, strategy: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.strategy == strategy)
    }
}

pub fn write_results_csv<W: Write>(results: &[InstanceResult], out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    for r in results {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| BenchError::Csv(e.to_string()))
}

pub fn read_results_csv<R: Read>(input: R) -> Result<Vec<InstanceResult>, BenchError> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().map(|x| x.map_err(BenchError::from)).collect()
}

pub fn write_report_csv<W: Write>(report: &BenchReport, out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    for r in &report.rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| BenchError::Csv(e.to_string()))
}
