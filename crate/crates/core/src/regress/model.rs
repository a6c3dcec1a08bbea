use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::kernel::gram_matrix;
use super::smo::{solve_svr_dual, DualSolution, SolverOptions};
use super::{fit_scaler, KernelParams, RegressError, Scaler};

pub const MODEL_VERSION: u64 = 1;

fn default_c() -> f64 {
    1.0
}
fn default_epsilon() -> f64 {
    0.1
}
fn default_tol() -> f64 {
    1e-3
}

/// Epsilon-SVR hyperparameters. `epsilon` and `tol` are in standardized
/// target units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrParams {
    #[serde(rename = "C", default = "default_c")]
    pub c: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Cap on SMO pair updates; `None` means `10 · n · 1000`.
    #[serde(default)]
    pub max_passes: Option<usize>,
    #[serde(default)]
    pub kernel: KernelParams,
    /// Recorded for reproducibility; working-set selection is deterministic
    /// (lowest index wins ties), so the solver never draws from it.
    #[serde(default)]
    pub seed: u64,
}

impl Default for SvrParams {
    fn default() -> Self {
        Self {
            c: default_c(),
            epsilon: default_epsilon(),
            tol: default_tol(),
            max_passes: None,
            kernel: KernelParams::default(),
            seed: 0,
        }
    }
}

impl SvrParams {
    pub fn with_kernel(mut self, kernel: KernelParams) -> Self {
        self.kernel = kernel;
        self
    }

    pub fn with_c(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn validate(&self) -> Result<(), RegressError> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(RegressError::Contract(format!(
                "C must be positive, got {}",
                self.c
            )));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(RegressError::Contract(format!(
                "epsilon must be non-negative, got {}",
                self.epsilon
            )));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(RegressError::Contract(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_passes == Some(0) {
            return Err(RegressError::Contract("max_passes must be positive".into()));
        }
        self.kernel.validate()
    }

    pub fn max_iter(&self, n: usize) -> usize {
        self.max_passes.unwrap_or(10 * n.max(1) * 1000)
    }
}

/// A fitted epsilon-SVR. Support vectors are stored standardized; the
/// kernel's gamma is always a concrete value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub params: SvrParams,
    pub scaler: Scaler,
    pub support_vectors: Vec<Vec<f64>>,
    pub dual_coefs: Vec<f64>,
    pub bias: f64,
    pub converged: bool,
    pub iterations: usize,
    pub kkt_violation: f64,
}

/// Everything the solver produced, for diagnostics and tests.
#[derive(Debug, Clone)]
pub struct FitDetails {
    pub model: SvrModel,
    pub standardized_x: Vec<Vec<f64>>,
    pub standardized_y: Vec<f64>,
    pub gram: Vec<f64>,
    pub solution: DualSolution,
}

fn check_inputs(x: &[Vec<f64>], y: &[f64]) -> Result<(), RegressError> {
    if x.is_empty() {
        return Err(RegressError::Contract("cannot fit on zero rows".into()));
    }
    if x.len() != y.len() {
        return Err(RegressError::Contract(format!(
            "{} rows but {} targets",
            x.len(),
            y.len()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) || x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(RegressError::Contract("inputs must be finite".into()));
    }
    Ok(())
}

pub fn svr_fit(x: &[Vec<f64>], y: &[f64], params: &SvrParams) -> Result<SvrModel, RegressError> {
    fit_inner(x, y, params, false).map(|d| d.model)
}

/// [`svr_fit`] that also returns solver internals, including an objective
/// trace.
pub fn svr_fit_detailed(x: &[Vec<f64>], y: &[f64], params: &SvrParams) -> Result<FitDetails, RegressError> {
    fit_inner(x, y, params, true)
}

fn fit_inner(x: &[Vec<f64>], y: &[f64], params: &SvrParams, trace: bool) -> Result<FitDetails, RegressError> {
    params.validate()?;
    check_inputs(x, y)?;
    let scaler = fit_scaler(x, y)?;
    let standardized_x = x.iter().map(|r| scaler.apply(r)).collect::<Result<Vec<_>, _>>()?;
    let standardized_y: Vec<f64> = y.iter().map(|v| scaler.apply_target(*v)).collect();
    let kernel = params.kernel.resolve(&standardized_x);
    let gram = gram_matrix(&kernel, &standardized_x);
    let opts = SolverOptions {
        record_trace: trace,
        ..SolverOptions::new(params.tol, params.max_iter(x.len()))
    };
    let solution = solve_svr_dual(&gram, &standardized_y, params.c, params.epsilon, opts);

    let (support_vectors, dual_coefs) = standardized_x
        .iter()
        .zip(&solution.coef)
        .filter(|(_, c)| **c != 0.0)
        .map(|(r, c)| (r.clone(), *c))
        .unzip();
    let model = SvrModel {
        params: SvrParams {
            kernel,
            ..params.clone()
        },
        scaler,
        support_vectors,
        dual_coefs,
        bias: solution.bias,
        converged: solution.converged,
        iterations: solution.iterations,
        kkt_violation: solution.kkt_violation,
    };
    Ok(FitDetails {
        model,
        standardized_x,
        standardized_y,
        gram,
        solution,
    })
}

impl SvrModel {
    pub fn dim(&self) -> usize {
        self.scaler.dim()
    }

    /// Decision value in standardized target units for a standardized input.
    pub fn decision_standardized(&self, z: &[f64]) -> f64 {
        let gamma = self.params.kernel.gamma_value().unwrap_or(1.0);
        self.support_vectors
            .iter()
            .zip(&self.dual_coefs)
            .map(|(sv, c)| c * self.params.kernel.eval_unchecked(gamma, sv, z))
            .sum::<f64>()
            + self.bias
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64, RegressError> {
        let z = self.scaler.apply(x)?;
        Ok(self.scaler.invert_target(self.decision_standardized(&z)))
    }

    pub fn predict_many(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>, RegressError> {
        rows.iter().map(|r| self.predict(r)).collect()
    }

    fn validate(&self) -> Result<(), RegressError> {
        self.scaler.validate()?;
        if self.support_vectors.len() != self.dual_coefs.len() {
            return Err(RegressError::Format(format!(
                "{} support vectors but {} dual coefficients",
                self.support_vectors.len(),
                self.dual_coefs.len()
            )));
        }
        if let Some(i) = self.support_vectors.iter().position(|sv| sv.len() != self.dim()) {
            return Err(RegressError::Format(format!(
                "support vector {i} has dimension {}, scaler has {}",
                self.support_vectors[i].len(),
                self.dim()
            )));
        }
        if self.params.kernel.gamma_value().is_none() {
            return Err(RegressError::Format("model kernel gamma must be numeric".into()));
        }
        self.params
            .validate()
            .map_err(|e| RegressError::Format(e.to_string()))
    }
}

/// On-disk layout of a model document.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    version: u64,
    kernel: KernelParams,
    #[serde(rename = "C")]
    c: f64,
    epsilon: f64,
    tol: f64,
    max_passes: Option<usize>,
    seed: u64,
    scaler: Scaler,
    support_vectors: Vec<Vec<f64>>,
    dual_coefs: Vec<f64>,
    bias: f64,
    converged: bool,
    iterations: usize,
    kkt_violation: f64,
}

pub fn save_model<W: Write>(model: &SvrModel, w: W) -> Result<(), RegressError> {
    let doc = ModelDoc {
        version: MODEL_VERSION,
        kernel: model.params.kernel,
        c: model.params.c,
        epsilon: model.params.epsilon,
        tol: model.params.tol,
        max_passes: model.params.max_passes,
        seed: model.params.seed,
        scaler: model.scaler.clone(),
        support_vectors: model.support_vectors.clone(),
        dual_coefs: model.dual_coefs.clone(),
        bias: model.bias,
        converged: model.converged,
        iterations: model.iterations,
        kkt_violation: model.kkt_violation,
    };
    serde_json::to_writer_pretty(w, &doc)?;
    Ok(())
}

pub fn load_model<R: Read>(r: R) -> Result<SvrModel, RegressError> {
    let value: Value = serde_json::from_reader(r)?;
    let version = value
        .get("version")
        .ok_or_else(|| RegressError::Format("missing field `version`".into()))?
        .as_u64()
        .ok_or_else(|| RegressError::Format("`version` must be an unsigned integer".into()))?;
    if version != MODEL_VERSION {
        return Err(RegressError::UnsupportedVersion(version));
    }
    let doc: ModelDoc = serde_json::from_value(value).map_err(|e| RegressError::Format(e.to_string()))?;
    let model = SvrModel {
        params: SvrParams {
            c: doc.c,
            epsilon: doc.epsilon,
            tol: doc.tol,
            max_passes: doc.max_passes,
            kernel: doc.kernel,
            seed: doc.seed,
        },
        scaler: doc.scaler,
        support_vectors: doc.support_vectors,
        dual_coefs: doc.dual_coefs,
        bias: doc.bias,
        converged: doc.converged,
        iterations: doc.iterations,
        kkt_violation: doc.kkt_violation,
    };
    model.validate()?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regress::{Gamma, KernelKind};

    fn all_kernels() -> Vec<KernelParams> {
        vec![
            KernelParams::linear(),
            KernelParams::polynomial(Gamma::Scale, 1.0, 3),
            KernelParams::rbf(Gamma::Scale),
            KernelParams::sigmoid(Gamma::Scale, 0.0),
        ]
    }

    #[test]
    fn constant_target_every_kernel() {
        let x = vec![vec![0.0, 1.0], vec![2.0, -1.0], vec![5.0, 3.0]];
        for k in all_kernels() {
            let m = svr_fit(&x, &[5.0, 5.0, 5.0], &SvrParams::default().with_kernel(k)).unwrap();
            assert!(m.dual_coefs.is_empty(), "{:?}", k.kind);
            for probe in [[0.0, 0.0], [100.0, -3.0], [2.0, -1.0]] {
                assert_eq!(m.predict(&probe).unwrap(), 5.0);
            }
        }
    }

    #[test]
    fn noiseless_linear() {
        let x = vec![vec![0.0], vec![1.0], vec![2.0]];
        let y = [0.0, 1.0, 2.0];
        let p = SvrParams::default()
            .with_kernel(KernelParams::linear())
            .with_epsilon(0.01)
            .with_c(100.0);
        let m = svr_fit(&x, &y, &p).unwrap();
        for (row, want) in x.iter().zip(y) {
            assert!((m.predict(row).unwrap() - want).abs() <= 0.011);
        }
        assert!((m.predict(&[1.5]).unwrap() - 1.5).abs() <= 0.011);
    }

    #[test]
    fn single_point() {
        for k in all_kernels() {
            let m = svr_fit(&[vec![3.0, 4.0]], &[-2.5], &SvrParams::default().with_kernel(k)).unwrap();
            assert_eq!(m.predict(&[0.0, 0.0]).unwrap(), -2.5);
            assert_eq!(m.predict(&[9.0, 1.0]).unwrap(), -2.5);
        }
    }

    #[test]
    fn contract_errors() {
        let p = SvrParams::default();
        assert!(svr_fit(&[], &[], &p).is_err());
        assert!(svr_fit(&[vec![1.0]], &[f64::NAN], &p).is_err());
        assert!(svr_fit(&[vec![f64::INFINITY]], &[1.0], &p).is_err());
        assert!(svr_fit(&[vec![1.0]], &[1.0], &p.clone().with_c(0.0)).is_err());
        assert!(svr_fit(&[vec![1.0]], &[1.0], &p.clone().with_epsilon(-1.0)).is_err());
        let m = svr_fit(&[vec![1.0], vec![2.0]], &[1.0, 2.0], &p).unwrap();
        assert!(m.predict(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn training_rows_reproduce_fit_time_values() {
        let x: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64, (i * i) as f64 / 7.0]).collect();
        let y: Vec<f64> = (0..8).map(|i| (i as f64).sin() * 10.0).collect();
        let d = svr_fit_detailed(&x, &y, &SvrParams::default()).unwrap();
        for (row, z) in x.iter().zip(&d.standardized_x) {
            let fit_time = d.model.scaler.invert_target(d.model.decision_standardized(z));
            assert_eq!(d.model.predict(row).unwrap(), fit_time);
        }
    }

    #[test]
    fn save_load_bit_identical() {
        let x: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64 * 0.37, (i % 4) as f64]).collect();
        let y: Vec<f64> = (0..12).map(|i| (i as f64 * 0.7).cos() * 3.0 + i as f64).collect();
        let m = svr_fit(&x, &y, &SvrParams::default()).unwrap();
        let mut buf = Vec::new();
        save_model(&m, &mut buf).unwrap();
        let back = load_model(buf.as_slice()).unwrap();
        assert_eq!(back, m);
        for i in 0..10 {
            let probe = [i as f64 * 1.3 - 2.0, (i as f64).sqrt()];
            assert_eq!(
                back.predict(&probe).unwrap().to_bits(),
                m.predict(&probe).unwrap().to_bits()
            );
        }
        assert_eq!(back.params.kernel.kind, KernelKind::Rbf);
    }

    fn saved_value() -> Value {
        let m = svr_fit(&[vec![0.0], vec![1.0]], &[0.0, 1.0], &SvrParams::default()).unwrap();
        let mut buf = Vec::new();
        save_model(&m, &mut buf).unwrap();
        serde_json::from_slice(&buf).unwrap()
    }

    #[test]
    fn missing_bias_named() {
        let mut v = saved_value();
        v.as_object_mut().unwrap().remove("bias");
        let err = load_model(serde_json::to_vec(&v).unwrap().as_slice()).unwrap_err();
        assert!(
            matches!(&err, RegressError::Format(msg) if msg.contains("bias")),
            "{err}"
        );
    }

    #[test]
    fn unsupported_version() {
        let mut v = saved_value();
        v["version"] = 99.into();
        let err = load_model(serde_json::to_vec(&v).unwrap().as_slice()).unwrap_err();
        assert!(matches!(err, RegressError::UnsupportedVersion(99)));
    }

    #[test]
    fn schema_fields_present() {
        let v = saved_value();
        for key in [
            "version",
            "kernel",
            "C",
            "epsilon",
            "scaler",
            "support_vectors",
            "dual_coefs",
            "bias",
            "converged",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert!(v["kernel"]["gamma"].is_number());
    }

    #[test]
    fn params_json_defaults() {
        let p: SvrParams = serde_json::from_str("{}").unwrap();
        assert_eq!(p, SvrParams::default());
        let p: SvrParams = serde_json::from_str(r#"{"C": 10, "kernel": {"kind": "linear"}}"#).unwrap();
        assert_eq!(p.c, 10.0);
        assert_eq!(p.kernel.kind, KernelKind::Linear);
        assert_eq!(p.max_iter(3), 30_000);
    }
}
