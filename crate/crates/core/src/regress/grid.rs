use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{svr_fit, KernelParams, RegressError, SvrParams};
use crate::experiment::{spearman, Correlation};

/// Cartesian product of candidate hyperparameters, expanded in
/// kernel → C → epsilon order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamGrid {
    #[serde(rename = "C")]
    pub c: Vec<f64>,
    pub epsilon: Vec<f64>,
    pub kernels: Vec<KernelParams>,
}

impl ParamGrid {
    pub fn expand(&self, base: &SvrParams) -> Vec<SvrParams> {
        let mut out = Vec::with_capacity(self.kernels.len() * self.c.len() * self.epsilon.len());
        for k in &self.kernels {
            for &c in &self.c {
                for &epsilon in &self.epsilon {
                    out.push(SvrParams {
                        c,
                        epsilon,
                        kernel: *k,
                        ..base.clone()
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridScore {
    pub params: SvrParams,
    pub score: Correlation,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best: SvrParams,
    pub best_score: Correlation,
    /// One row per candidate, in input order.
    pub table: Vec<GridScore>,
}

fn distinct_count(values: &[f64]) -> usize {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v.len()
}

/// Fits each candidate on the `train` rows and scores it by Spearman
/// correlation on the `validation` rows. The winner has the highest score;
/// ties go to the smaller C, then the smaller polynomial degree, then the
/// earlier candidate. Undefined scores rank below every defined one.
pub fn grid_search(
    x: &[Vec<f64>],
    y: &[f64],
    candidates: &[SvrParams],
    train: &[usize],
    validation: &[usize],
) -> Result<GridResult, RegressError> {
    if candidates.is_empty() {
        return Err(RegressError::Contract("parameter grid is empty".into()));
    }
    if x.len() != y.len() {
        return Err(RegressError::Contract("x and y differ in length".into()));
    }
    if let Some(i) = train.iter().chain(validation).find(|i| **i >= x.len()) {
        return Err(RegressError::Contract(format!("row index {i} out of range")));
    }
    let pick =
        |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<f64>) { idx.iter().map(|&i| (x[i].clone(), y[i])).unzip() };
    let (tx, ty) = pick(train);
    let (vx, vy) = pick(validation);
    if vy.len() < 2 || distinct_count(&vy) < 2 {
        return Err(RegressError::Degenerate(
            "validation targets need at least two distinct values; choose a different split".into(),
        ));
    }

    let mut table = Vec::with_capacity(candidates.len());
    for p in candidates {
        let model = svr_fit(&tx, &ty, p)?;
        let preds = model.predict_many(&vx)?;
        let score = spearman(&preds, &vy).map_err(|e| RegressError::Contract(e.to_string()))?;
        table.push(GridScore {
            params: p.clone(),
            score,
            converged: model.converged,
        });
    }

    let degree = |p: &SvrParams| match p.kernel.kind {
        super::KernelKind::Polynomial => p.kernel.degree,
        _ => 0,
    };
    let best_idx = (0..table.len())
        .min_by(|&a, &b| {
            let (sa, sb) = (&table[a], &table[b]);
            let by_score = match (sa.score.value(), sb.score.value()) {
                (Some(x), Some(y)) => y.total_cmp(&x),
                (Some(_), None) => Ordering::Less,
                (None, Some(_)) => Ordering::Greater,
                (None, None) => Ordering::Equal,
            };
            by_score
                .then(sa.params.c.total_cmp(&sb.params.c))
                .then(degree(&sa.params).cmp(&degree(&sb.params)))
                .then(a.cmp(&b))
        })
        .expect("nonempty grid");
    Ok(GridResult {
        best: table[best_idx].params.clone(),
        best_score: table[best_idx].score,
        table,
    })
}
