use std::io::{Read, Write};

use super::pool::PoolEntry;
use super::sampling::AlStep;
use super::{ActiveError, LabeledSample, LabeledSet};

fn header(d: usize) -> Vec<String> {
    let mut h: Vec<String> = ["sample_id", "instance_id", "n_cuts"].iter().map(|s| s.to_string()).collect();
    h.extend((1..=d).map(|i| format!("f{i}")));
    h.extend(["label", "censored", "metric", "seed"].iter().map(|s| s.to_string()));
    h
}

fn base(sample_id: u64, instance_id: u64, n_cuts: usize, features: &[f64]) -> Vec<String> {
    let mut r = vec![sample_id.to_string(), instance_id.to_string(), n_cuts.to_string()];
    r.extend(features.iter().map(|v| v.to_string()));
    r
}

/// Unlabeled pool rows leave `label`, `censored` and `metric` empty.
pub fn write_pool_csv<W: Write>(entries: &[PoolEntry], seed: u64, out: W) -> Result<(), ActiveError> {
    let d = entries.first().map_or(0, |e| e.features.len());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(d))?;
    for e in entries {
        let mut r = base(e.sample_id, e.instance_id, e.n_cuts, &e.features);
        r.extend([String::new(), String::new(), String::new(), seed.to_string()]);
        w.write_record(&r)?;
    }
    w.flush().map_err(|e| ActiveError::Csv(e.to_string()))
}

pub fn write_labeled_csv<W: Write>(set: &LabeledSet, out: W) -> Result<(), ActiveError> {
    let d = set.rows.first().map_or(0, |r| r.features.len());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(d))?;
    for s in &set.rows {
        let mut r = base(s.sample_id, s.instance_id, s.n_cuts, &s.features);
        r.extend([s.label.to_string(), s.censored.to_string(), s.metric.to_string(), s.seed.to_string()]);
        w.write_record(&r)?;
    }
    w.flush().map_err(|e| ActiveError::Csv(e.to_string()))
}

struct RawRow {
    sample_id: u64,
    instance_id: u64,
    n_cuts: usize,
    features: Vec<f64>,
    tail: [String; 4],
}

fn parse<T: std::str::FromStr>(field: &str, what: &str) -> Result<T, ActiveError> {
    field
        .trim()
        .parse()
        .map_err(|_| ActiveError::Csv(format!("bad {what}: {field:?}")))
}

fn read_raw<R: Read>(input: R) -> Result<Vec<RawRow>, ActiveError> {
    let mut r = csv::Reader::from_reader(input);
    let h = r.headers()?.clone();
    if h.len() < 7 || h.get(0) != Some("sample_id") || h.get(h.len() - 4) != Some("label") {
        return Err(ActiveError::Csv(format!("unexpected header {h:?}")));
    }
    let d = h.len() - 7;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let features = (0..d)
            .map(|i| parse::<f64>(&rec[3 + i], "feature"))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(RawRow {
            sample_id: parse(&rec[0], "sample_id")?,
            instance_id: parse(&rec[1], "instance_id")?,
            n_cuts: parse(&rec[2], "n_cuts")?,
            features,
            tail: [0, 1, 2, 3].map(|k| rec[3 + d + k].to_string()),
        });
    }
    Ok(rows)
}

/// Pool entries and the pool seed (0 for an empty file).
pub fn read_pool_csv<R: Read>(input: R) -> Result<(Vec<PoolEntry>, u64), ActiveError> {
    let rows = read_raw(input)?;
    let seed = match rows.first() {
        Some(r) => parse(&r.tail[3], "seed")?,
        None => 0,
    };
    let mut entries: Vec<PoolEntry> = rows
        .into_iter()
        .map(|r| PoolEntry {
            sample_id: r.sample_id,
            instance_id: r.instance_id,
            n_cuts: r.n_cuts,
            features: r.features,
        })
        .collect();
    entries.sort_by_key(|e| e.sample_id);
    Ok((entries, seed))
}

pub fn read_labeled_csv<R: Read>(input: R) -> Result<LabeledSet, ActiveError> {
    let rows = read_raw(input)?
        .into_iter()
        .map(|r| {
            Ok(LabeledSample {
                sample_id: r.sample_id,
                instance_id: r.instance_id,
                n_cuts: r.n_cuts,
                features: r.features,
                label: parse(&r.tail[0], "label")?,
                censored: parse(&r.tail[1], "censored")?,
                metric: r.tail[2].parse().map_err(ActiveError::Csv)?,
                seed: parse(&r.tail[3], "seed")?,
            })
        })
        .collect::<Result<Vec<_>, ActiveError>>()?;
    LabeledSet::from_rows(rows)
}

pub fn write_trace_csv<W: Write>(trace: &[AlStep], out: W) -> Result<(), ActiveError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["step", "chosen_sample_id", "sigma", "label"])?;
    for s in trace {
        w.write_record([
            s.step.to_string(),
            s.chosen_sample_id.to_string(),
            s.sigma.to_string(),
            s.label.to_string(),
        ])?;
    }
    w.flush().map_err(|e| ActiveError::Csv(e.to_string()))
}

pub fn read_trace_csv<R: Read>(input: R) -> Result<Vec<AlStep>, ActiveError> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        out.push(AlStep {
            step: parse(&rec[0], "step")?,
            chosen_sample_id: parse(&rec[1], "chosen_sample_id")?,
            sigma: parse(&rec[2], "sigma")?,
            label: parse(&rec[3], "label")?,
        });
    }
    Ok(out)
}
