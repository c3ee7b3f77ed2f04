use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{make_cut, BendersCut, CutSet, GbdError, SubproblemOracle};

/// `n` equally spaced points from `lb` to `ub`, both included.
pub fn uniform_anchors(lb: f64, ub: f64, n: usize) -> Result<Vec<f64>, GbdError> {
    if !(ub > lb) {
        return Err(GbdError::DegenerateDomain { lb, ub });
    }
    if n < 2 {
        return Err(GbdError::TooFewPoints(n));
    }
    Ok((0..n).map(|i| anchor_at(lb, ub, i, n)).collect())
}

fn anchor_at(lb: f64, ub: f64, i: usize, n: usize) -> f64 {
    if i + 1 == n {
        ub
    } else {
        lb + (ub - lb) * (i as f64 / (n - 1) as f64)
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Grid position `i / (n-1)` in lowest terms; equal fractions share one cut.
fn grid_key(i: usize, n: usize) -> (usize, usize) {
    let d = n - 1;
    let g = gcd(i, d).max(1);
    (i / g, d / g)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibraryEntry {
    pub lb: f64,
    pub ub: f64,
    /// Cuts keyed by reduced grid fraction (numerator, denominator).
    pub cuts: BTreeMap<(usize, usize), BendersCut>,
}

impl LibraryEntry {
    pub fn anchors(&self) -> Vec<f64> {
        let mut a: Vec<f64> = self.cuts.values().map(|c| c.anchor).collect();
        a.sort_by(f64::total_cmp);
        a
    }
}

/// Precomputed cuts for every transition on the union of the uniform grids
/// with 2..=n_max points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutLibrary<K: Ord> {
    pub n_max: usize,
    pub entries: BTreeMap<K, LibraryEntry>,
}

impl<K: Ord + Clone> CutLibrary<K> {
    pub fn total_cuts(&self) -> usize {
        self.entries.values().map(|e| e.cuts.len()).sum()
    }
}

pub fn build_cut_library<K: Ord + Clone>(
    oracles: &BTreeMap<K, &dyn SubproblemOracle>,
    n_max: usize,
) -> Result<CutLibrary<K>, GbdError> {
    if n_max < 2 {
        return Err(GbdError::TooFewPoints(n_max));
    }
    let mut entries = BTreeMap::new();
    for (key, oracle) in oracles {
        let (lb, ub) = oracle.domain();
        if !(ub > lb) {
            return Err(GbdError::DegenerateDomain { lb, ub });
        }
        let mut cuts = BTreeMap::new();
        for n in 2..=n_max {
            for i in 0..n {
                let gk = grid_key(i, n);
                if cuts.contains_key(&gk) {
                    continue;
                }
                cuts.insert(gk, make_cut(*oracle, anchor_at(lb, ub, i, n))?);
            }
        }
        entries.insert(key.clone(), LibraryEntry { lb, ub, cuts });
    }
    Ok(CutLibrary { n_max, entries })
}

/// The cuts anchored at the `n`-point uniform grid of every library
/// transition. `n = 0` means no initial cuts.
pub fn select_initial_cuts<K: Ord + Clone>(
    library: &CutLibrary<K>,
    n: usize,
) -> Result<CutSet<K>, GbdError> {
    let mut set = CutSet::new();
    if n == 0 {
        return Ok(set);
    }
    if n < 2 {
        return Err(GbdError::TooFewPoints(n));
    }
    if n > library.n_max {
        return Err(GbdError::NotInLibrary {
            n,
            n_max: library.n_max,
        });
    }
    for (key, entry) in &library.entries {
        let cuts = (0..n).map(|i| entry.cuts[&grid_key(i, n)]).collect();
        set.insert(key.clone(), cuts);
    }
    Ok(set)
}
