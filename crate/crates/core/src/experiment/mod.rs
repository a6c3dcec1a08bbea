//! Rank correlation, train/test time settings, domestic and cross-country
//! runs, and report tables.

mod correlation;
mod report;
mod runner;
mod setting;

use thiserror::Error;

pub use correlation::{rank_average, spearman, Correlation, StatsError};
pub use report::{emit_report, ReportInputs, ReportLayout, ReportTable};
pub use runner::{
    fit_source_model, run_experiment, CountryData, ExperimentConfig, ExperimentResult, PredictionRow,
    TrainedSource,
};
pub use setting::{split_preset, SettingName, TimeSetting};

use crate::corpus::CorpusError;
use crate::regress::RegressError;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("unknown time setting {0:?}; valid names are I, II, III, IV, V")]
    UnknownSetting(String),
    #[error("invalid experiment configuration: {0}")]
    Config(String),
    #[error("degenerate training data: {0}")]
    Degenerate(String),
    #[error("test window has {0} usable days; at least 2 are needed")]
    InsufficientTestDays(usize),
    #[error(
        "feature columns differ between countries: source [{source_columns}], target [{target_columns}]"
    )]
    IncompatibleFeatures {
        source_columns: String,
        target_columns: String,
    },
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Regress(#[from] RegressError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}
