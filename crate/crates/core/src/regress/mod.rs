//! Epsilon-support-vector regression: standardization, kernels, an SMO dual
//! solver, prediction and JSON model files.

mod grid;
mod kernel;
mod model;
mod scaler;
pub mod smo;

use thiserror::Error;

pub use grid::{grid_search, GridResult, GridScore, ParamGrid};
pub use kernel::{kernel_eval, Gamma, KernelKind, KernelParams};
pub use model::{
    load_model, save_model, svr_fit, svr_fit_detailed, FitDetails, SvrModel, SvrParams, MODEL_VERSION,
};
pub use scaler::{fit_scaler, Scaler};

#[derive(Debug, Error)]
pub enum RegressError {
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("degenerate data: {0}")]
    Degenerate(String),
    #[error("model format error: {0}")]
    Format(String),
    #[error("unsupported model version {0} (expected {MODEL_VERSION})")]
    UnsupportedVersion(u64),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}
