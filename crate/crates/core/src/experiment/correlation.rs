use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StatsError {
    #[error("vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 observations, got {0}")]
    TooShort(usize),
    #[error("input contains a non-finite value at index {0}")]
    NonFinite(usize),
    #[error("cannot rank an empty vector")]
    Empty,
}

/// A correlation coefficient, or an explicit marker that it is undefined
/// because one side has no variation. Serializes as a number or the string
/// `"undefined"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CorrelationRepr", into = "CorrelationRepr")]
pub enum Correlation {
    Defined(f64),
    Undefined,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CorrelationRepr {
    Number(f64),
    Label(String),
}

impl TryFrom<CorrelationRepr> for Correlation {
    type Error = String;

    fn try_from(r: CorrelationRepr) -> Result<Self, Self::Error> {
        match r {
            CorrelationRepr::Number(v) => Ok(Correlation::Defined(v)),
            CorrelationRepr::Label(s) if s == "undefined" => Ok(Correlation::Undefined),
            CorrelationRepr::Label(s) => Err(format!("expected a number or \"undefined\", got {s:?}")),
        }
    }
}

impl From<Correlation> for CorrelationRepr {
    fn from(c: Correlation) -> Self {
        match c {
            Correlation::Defined(v) => CorrelationRepr::Number(v),
            Correlation::Undefined => CorrelationRepr::Label("undefined".into()),
        }
    }
}

impl Correlation {
    pub fn value(&self) -> Option<f64> {
        match self {
            Correlation::Defined(v) => Some(*v),
            Correlation::Undefined => None,
        }
    }

    pub fn is_defined(&self) -> bool {
        matches!(self, Correlation::Defined(_))
    }
}

impl fmt::Display for Correlation {
    /// Six decimals, or `undefined`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Correlation::Defined(v) => write!(f, "{v:.6}"),
            Correlation::Undefined => f.write_str("undefined"),
        }
    }
}

fn check_finite(v: &[f64]) -> Result<(), StatsError> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(StatsError::NonFinite(i)),
        None => Ok(()),
    }
}

/// 1-based ranks; tied values share the mean of the positions they occupy.
pub fn rank_average(v: &[f64]) -> Result<Vec<f64>, StatsError> {
    if v.is_empty() {
        return Err(StatsError::Empty);
    }
    check_finite(v)?;
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        // -0.0 and 0.0 compare equal here, unlike total_cmp
        while end + 1 < order.len() && v[order[end + 1]] == v[order[start]] {
            end += 1;
        }
        let rank = (start + end + 2) as f64 / 2.0;
        for &i in &order[start..=end] {
            ranks[i] = rank;
        }
        start = end + 1;
    }
    Ok(ranks)
}

fn pearson(a: &[f64], b: &[f64]) -> Correlation {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Correlation::Undefined;
    }
    Correlation::Defined((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rank correlation: Pearson correlation of the average ranks.
/// Undefined when either input is constant.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<Correlation, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(StatsError::TooShort(a.len()));
    }
    let ra = rank_average(a)?;
    let rb = rank_average(b)?;
    Ok(pearson(&ra, &rb))
}
