use serde::{Deserialize, Serialize};

/// Column-wise z-score map fitted on training data. Columns with zero
/// spread get unit scale, so they map to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let d = rows.first().map_or(0, Vec::len);
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v / n;
            }
        }
        let mut var = vec![0.0; d];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m) / n;
            }
        }
        let scale = var
            .into_iter()
            .map(|v| {
                let s = v.sqrt();
                if s > 1e-12 * (1.0 + s) { s } else { 1.0 }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn fit_labels(y: &[f64]) -> Self {
        let rows: Vec<Vec<f64>> = y.iter().map(|&v| vec![v]).collect();
        let mut s = Self::fit(&rows);
        if s.mean.is_empty() {
            s.mean.push(0.0);
            s.scale.push(1.0);
        }
        s
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }

    pub fn transform_rows(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.transform(r)).collect()
    }

    /// Scalar label maps use column 0.
    pub fn forward(&self, y: f64) -> f64 {
        (y - self.mean[0]) / self.scale[0]
    }

    pub fn inverse(&self, z: f64) -> f64 {
        z * self.scale[0] + self.mean[0]
    }
}
