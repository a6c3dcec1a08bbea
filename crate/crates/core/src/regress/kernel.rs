use serde::{Deserialize, Serialize};

use super::RegressError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Linear,
    Polynomial,
    Rbf,
    Sigmoid,
}

impl KernelKind {
    pub const ALL: [KernelKind; 4] = [
        KernelKind::Linear,
        KernelKind::Polynomial,
        KernelKind::Rbf,
        KernelKind::Sigmoid,
    ];
}

/// Kernel width. `Scale` resolves at fit time to
/// `1 / (n_features * variance of the standardized training matrix)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "GammaRepr", into = "GammaRepr")]
pub enum Gamma {
    #[default]
    Scale,
    Value(f64),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum GammaRepr {
    Number(f64),
    Named(String),
}

impl TryFrom<GammaRepr> for Gamma {
    type Error = String;

    fn try_from(r: GammaRepr) -> Result<Self, Self::Error> {
        match r {
            GammaRepr::Number(v) => Ok(Gamma::Value(v)),
            GammaRepr::Named(s) if s == "scale" => Ok(Gamma::Scale),
            GammaRepr::Named(s) => Err(format!("gamma must be a number or \"scale\", got {s:?}")),
        }
    }
}

impl From<Gamma> for GammaRepr {
    fn from(g: Gamma) -> Self {
        match g {
            Gamma::Scale => GammaRepr::Named("scale".into()),
            Gamma::Value(v) => GammaRepr::Number(v),
        }
    }
}

fn default_degree() -> u32 {
    3
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub kind: KernelKind,
    #[serde(default)]
    pub gamma: Gamma,
    #[serde(default)]
    pub coef0: f64,
    #[serde(default = "default_degree")]
    pub degree: u32,
}

impl Default for KernelParams {
    fn default() -> Self {
        Self::rbf(Gamma::Scale)
    }
}

impl KernelParams {
    pub fn linear() -> Self {
        Self {
            kind: KernelKind::Linear,
            gamma: Gamma::Scale,
            coef0: 0.0,
            degree: default_degree(),
        }
    }

    pub fn rbf(gamma: Gamma) -> Self {
        Self {
            kind: KernelKind::Rbf,
            gamma,
            ..Self::linear()
        }
    }

    pub fn polynomial(gamma: Gamma, coef0: f64, degree: u32) -> Self {
        Self {
            kind: KernelKind::Polynomial,
            gamma,
            coef0,
            degree,
        }
    }

    pub fn sigmoid(gamma: Gamma, coef0: f64) -> Self {
        Self {
            kind: KernelKind::Sigmoid,
            gamma,
            coef0,
            ..Self::linear()
        }
    }

    pub fn validate(&self) -> Result<(), RegressError> {
        if let Gamma::Value(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(RegressError::Contract(format!("gamma must be positive, got {g}")));
            }
        }
        if !self.coef0.is_finite() {
            return Err(RegressError::Contract("coef0 must be finite".into()));
        }
        if self.degree == 0 {
            return Err(RegressError::Contract("degree must be >= 1".into()));
        }
        Ok(())
    }

    /// Replaces `Gamma::Scale` using the standardized training rows.
    pub fn resolve(&self, standardized: &[Vec<f64>]) -> KernelParams {
        let gamma = match self.gamma {
            Gamma::Value(g) => g,
            Gamma::Scale => {
                let d = standardized.first().map_or(1, Vec::len).max(1);
                let var = matrix_variance(standardized);
                if var > 0.0 {
                    1.0 / (d as f64 * var)
                } else {
                    1.0 / d as f64
                }
            }
        };
        KernelParams {
            gamma: Gamma::Value(gamma),
            ..*self
        }
    }

    pub(crate) fn gamma_value(&self) -> Option<f64> {
        match self.gamma {
            Gamma::Value(g) => Some(g),
            Gamma::Scale => None,
        }
    }

    /// Kernel evaluation with a resolved gamma; callers check dimensions.
    pub(crate) fn eval_unchecked(&self, gamma: f64, x: &[f64], y: &[f64]) -> f64 {
        match self.kind {
            KernelKind::Linear => dot(x, y),
            KernelKind::Polynomial => (gamma * dot(x, y) + self.coef0).powi(self.degree as i32),
            KernelKind::Rbf => {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-gamma * d2).exp()
            }
            KernelKind::Sigmoid => (gamma * dot(x, y) + self.coef0).tanh(),
        }
    }
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn matrix_variance(rows: &[Vec<f64>]) -> f64 {
    let n: usize = rows.iter().map(Vec::len).sum();
    if n == 0 {
        return 0.0;
    }
    let mean = rows.iter().flatten().sum::<f64>() / n as f64;
    rows.iter()
        .flatten()
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / n as f64
}

/// Evaluates `k(x, y)`. Gamma must already be a concrete value.
pub fn kernel_eval(k: &KernelParams, x: &[f64], y: &[f64]) -> Result<f64, RegressError> {
    if x.len() != y.len() {
        return Err(RegressError::Contract(format!(
            "kernel arguments differ in dimension: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let gamma = match k.kind {
        KernelKind::Linear => k.gamma_value().unwrap_or(1.0),
        _ => k
            .gamma_value()
            .ok_or_else(|| RegressError::Contract("gamma \"scale\" must be resolved first".into()))?,
    };
    Ok(k.eval_unchecked(gamma, x, y))
}

/// Dense `n × n` Gram matrix, row-major.
pub(crate) fn gram_matrix(k: &KernelParams, rows: &[Vec<f64>]) -> Vec<f64> {
    let gamma = k.gamma_value().unwrap_or(1.0);
    let n = rows.len();
    let mut g = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = k.eval_unchecked(gamma, &rows[i], &rows[j]);
            g[i * n + j] = v;
            g[j * n + i] = v;
        }
    }
    g
}
