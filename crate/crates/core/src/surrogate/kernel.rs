use serde::{Deserialize, Serialize};

use super::SurrogateError;

/// Matérn smoothness. Only the half-integer orders with closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Nu {
    #[serde(rename = "0.5")]
    Half,
    #[default]
    #[serde(rename = "1.5")]
    ThreeHalves,
    #[serde(rename = "2.5")]
    FiveHalves,
}

impl Nu {
    pub fn value(self) -> f64 {
        match self {
            Nu::Half => 0.5,
            Nu::ThreeHalves => 1.5,
            Nu::FiveHalves => 2.5,
        }
    }

    pub fn from_value(v: f64) -> Result<Self, SurrogateError> {
        match v {
            x if x == 0.5 => Ok(Nu::Half),
            x if x == 1.5 => Ok(Nu::ThreeHalves),
            x if x == 2.5 => Ok(Nu::FiveHalves),
            _ => Err(SurrogateError::BadHyperparameter(format!("nu = {v} has no closed form"))),
        }
    }
}

/// Matérn covariance as a function of the distance `d`, without checks.
#[inline]
pub(crate) fn matern_of_distance(d: f64, length: f64, sigma_f: f64, nu: Nu) -> f64 {
    let s2 = sigma_f * sigma_f;
    let r = d / length;
    match nu {
        Nu::Half => s2 * (-r).exp(),
        Nu::ThreeHalves => {
            let z = 3f64.sqrt() * r;
            s2 * (1.0 + z) * (-z).exp()
        }
        Nu::FiveHalves => {
            let z = 5f64.sqrt() * r;
            s2 * (1.0 + z + z * z / 3.0) * (-z).exp()
        }
    }
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Isotropic Matérn kernel between two feature vectors.
pub fn matern_kernel(a: &[f64], b: &[f64], length: f64, sigma_f: f64, nu: Nu) -> Result<f64, SurrogateError> {
    if !(length > 0.0) || !(sigma_f > 0.0) {
        return Err(SurrogateError::BadHyperparameter(format!(
            "length {length} and sigma_f {sigma_f} must be positive"
        )));
    }
    if a.len() != b.len() {
        return Err(SurrogateError::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(matern_of_distance(distance(a, b), length, sigma_f, nu))
}
