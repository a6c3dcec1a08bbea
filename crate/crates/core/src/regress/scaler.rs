use serde::{Deserialize, Serialize};

use super::RegressError;

/// Per-feature and target standardization. Zero-variance columns keep a
/// scale of 1 so they map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    pub target_mean: f64,
    pub target_scale: f64,
}

/// Mean taken as offsets from the first value, which makes it exact for
/// constant inputs.
fn mean(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let mut it = values.clone();
    let Some(first) = it.next() else {
        return 0.0;
    };
    let n = values.clone().count() as f64;
    first + values.map(|v| v - first).sum::<f64>() / n
}

fn population_scale(values: impl Iterator<Item = f64> + Clone, m: f64) -> f64 {
    let n = values.clone().count() as f64;
    let std = (values.map(|v| (v - m) * (v - m)).sum::<f64>() / n).sqrt();
    if std <= 1e-12 * m.abs().max(1.0) {
        1.0
    } else {
        std
    }
}

pub fn fit_scaler(x: &[Vec<f64>], y: &[f64]) -> Result<Scaler, RegressError> {
    let first = x
        .first()
        .ok_or_else(|| RegressError::Contract("cannot fit a scaler on zero rows".into()))?;
    if x.len() != y.len() {
        return Err(RegressError::Contract(format!(
            "{} feature rows but {} targets",
            x.len(),
            y.len()
        )));
    }
    let d = first.len();
    if let Some(i) = x.iter().position(|r| r.len() != d) {
        return Err(RegressError::Contract(format!(
            "row {i} has {} features, expected {d}",
            x[i].len()
        )));
    }
    let mut means = Vec::with_capacity(d);
    let mut scales = Vec::with_capacity(d);
    for j in 0..d {
        let col = x.iter().map(move |r| r[j]);
        let m = mean(col.clone());
        means.push(m);
        scales.push(population_scale(col, m));
    }
    let target_mean = mean(y.iter().copied());
    let target_scale = population_scale(y.iter().copied(), target_mean);
    Ok(Scaler {
        means,
        scales,
        target_mean,
        target_scale,
    })
}

impl Scaler {
    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn apply(&self, row: &[f64]) -> Result<Vec<f64>, RegressError> {
        if row.len() != self.dim() {
            return Err(RegressError::Contract(format!(
                "input has {} features, model expects {}",
                row.len(),
                self.dim()
            )));
        }
        Ok(row
            .iter()
            .zip(self.means.iter().zip(&self.scales))
            .map(|(v, (m, s))| (v - m) / s)
            .collect())
    }

    pub fn apply_target(&self, y: f64) -> f64 {
        (y - self.target_mean) / self.target_scale
    }

    pub fn invert_target(&self, z: f64) -> f64 {
        z * self.target_scale + self.target_mean
    }

    pub(crate) fn validate(&self) -> Result<(), RegressError> {
        if self.means.len() != self.scales.len() {
            return Err(RegressError::Format(
                "scaler means and scales differ in length".into(),
            ));
        }
        let ok = self.scales.iter().all(|s| *s > 0.0 && s.is_finite())
            && self.means.iter().all(|m| m.is_finite())
            && self.target_scale > 0.0
            && self.target_scale.is_finite()
            && self.target_mean.is_finite();
        if !ok {
            return Err(RegressError::Format(
                "scaler holds non-finite or non-positive values".into(),
            ));
        }
        Ok(())
    }
}
