use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{spearman, Correlation, ExperimentError, SettingName, TimeSetting};
use crate::corpus::{CaseMode, CaseSeries};
use crate::features::FeatureTable;
use crate::regress::{svr_fit, SvrModel, SvrParams};

/// Everything needed about one country: its daily features and its case
/// series (in either mode; converted as the experiment requires).
#[derive(Debug, Clone)]
pub struct CountryData {
    pub name: String,
    pub features: FeatureTable,
    pub cases: CaseSeries,
}

fn default_label() -> String {
    "features".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub source_country: String,
    pub target_country: String,
    pub case_mode: CaseMode,
    /// Short name of the feature set, used as a row label in reports.
    #[serde(default = "default_label")]
    pub feature_label: String,
    #[serde(default)]
    pub svr_params: SvrParams,
    pub time_setting: TimeSetting,
}

impl ExperimentConfig {
    pub fn is_domestic(&self) -> bool {
        self.source_country == self.target_country
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub date: NaiveDate,
    pub predicted: f64,
    pub actual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub source_country: String,
    pub target_country: String,
    pub setting: SettingName,
    pub case_mode: CaseMode,
    pub feature_label: String,
    pub spearman: Correlation,
    pub n_train: usize,
    pub n_test: usize,
    pub predictions: Vec<PredictionRow>,
    pub warnings: Vec<String>,
    /// Train and test windows overlap, so the score is optimistic.
    pub upper_bound: bool,
    pub converged: bool,
}

impl ExperimentResult {
    pub fn is_domestic(&self) -> bool {
        self.source_country == self.target_country
    }
}

/// A model fitted on the source country's training window.
#[derive(Debug, Clone)]
pub struct TrainedSource {
    pub model: SvrModel,
    pub train_dates: Vec<NaiveDate>,
    pub warnings: Vec<String>,
}

struct Aligned {
    dates: Vec<NaiveDate>,
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    warnings: Vec<String>,
}

fn summarize(country: &str, what: &str, dates: &[NaiveDate]) -> String {
    const SHOWN: usize = 5;
    let mut listed: Vec<String> = dates.iter().take(SHOWN).map(|d| d.to_string()).collect();
    if dates.len() > SHOWN {
        listed.push(format!("and {} more", dates.len() - SHOWN));
    }
    format!("{country}: {} {what} ({})", dates.len(), listed.join(", "))
}

/// Pairs feature rows with case counts on `dates`, dropping any date that
/// lacks either one.
fn align(
    data: &CountryData,
    mode: CaseMode,
    dates: &[NaiveDate],
    role: &str,
) -> Result<Aligned, ExperimentError> {
    let cases = data.cases.in_mode(mode)?;
    let mut out = Aligned {
        dates: Vec::new(),
        x: Vec::new(),
        y: Vec::new(),
        warnings: Vec::new(),
    };
    let (mut no_features, mut no_cases, mut empty) = (Vec::new(), Vec::new(), Vec::new());
    for &d in dates {
        let row = data.features.row(d);
        let count = cases.get(d);
        match (row, count) {
            (None, _) => no_features.push(d),
            (_, None) => no_cases.push(d),
            (Some(r), Some(c)) => {
                if r.empty_day {
                    empty.push(d);
                }
                out.dates.push(d);
                out.x.push(r.x.clone());
                out.y.push(c as f64);
            }
        }
    }
    let name = &data.name;
    if !no_features.is_empty() {
        out.warnings.push(summarize(
            name,
            &format!("{role} days without features dropped"),
            &no_features,
        ));
    }
    if !no_cases.is_empty() {
        out.warnings.push(summarize(
            name,
            &format!("{role} days without case counts dropped"),
            &no_cases,
        ));
    }
    if !empty.is_empty() {
        out.warnings.push(summarize(
            name,
            &format!("{role} days with no usable tweets"),
            &empty,
        ));
    }
    Ok(out)
}

fn distinct(values: &[f64]) -> usize {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v.len()
}

/// Fits the regressor on the source country's training days only. Nothing
/// from the test window or the target country is read.
pub fn fit_source_model(
    cfg: &ExperimentConfig,
    source: &CountryData,
) -> Result<TrainedSource, ExperimentError> {
    if source.name != cfg.source_country {
        return Err(ExperimentError::Config(format!(
            "source data is for {:?}, config names {:?}",
            source.name, cfg.source_country
        )));
    }
    let train = align(source, cfg.case_mode, &cfg.time_setting.train_dates(), "train")?;
    if train.y.len() < 2 || distinct(&train.y) < 2 {
        return Err(ExperimentError::Degenerate(format!(
            "{}: training window {} has {} usable days and {} distinct {} case values; \
             pick a window where cases change",
            source.name,
            cfg.time_setting.name,
            train.y.len(),
            distinct(&train.y),
            cfg.case_mode
        )));
    }
    let model = svr_fit(&train.x, &train.y, &cfg.svr_params)?;
    let mut warnings = train.warnings;
    if !model.converged {
        warnings.push(format!(
            "{}: solver stopped after {} iterations without converging (KKT gap {:.3e})",
            source.name, model.iterations, model.kkt_violation
        ));
    }
    Ok(TrainedSource {
        model,
        train_dates: train.dates,
        warnings,
    })
}

/// Trains on the source country over the setting's training window and
/// scores predictions for the target country over the test window by
/// Spearman correlation against its reported cases.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    source: &CountryData,
    target: &CountryData,
) -> Result<ExperimentResult, ExperimentError> {
    if target.name != cfg.target_country {
        return Err(ExperimentError::Config(format!(
            "target data is for {:?}, config names {:?}",
            target.name, cfg.target_country
        )));
    }
    if source.features.columns != target.features.columns {
        return Err(ExperimentError::IncompatibleFeatures {
            source_columns: source.features.columns.join(","),
            target_columns: target.features.columns.join(","),
        });
    }
    let trained = fit_source_model(cfg, source)?;
    let test = align(target, cfg.case_mode, &cfg.time_setting.test_dates(), "test")?;
    if test.y.len() < 2 {
        return Err(ExperimentError::InsufficientTestDays(test.y.len()));
    }
    let predicted = trained.model.predict_many(&test.x)?;
    let score = spearman(&predicted, &test.y)?;

    let mut warnings = trained.warnings;
    warnings.extend(test.warnings);
    let upper_bound = cfg.time_setting.overlaps();
    if upper_bound {
        warnings.push("train and test windows overlap; score is an upper bound".into());
    }
    if score == Correlation::Undefined {
        warnings.push(
            "predictions or actual cases are constant over the test window; correlation undefined".into(),
        );
    }
    let predictions = test
        .dates
        .iter()
        .zip(&predicted)
        .zip(&test.y)
        .map(|((d, p), a)| PredictionRow {
            date: *d,
            predicted: *p,
            actual: *a,
        })
        .collect();
    Ok(ExperimentResult {
        source_country: cfg.source_country.clone(),
        target_country: cfg.target_country.clone(),
        setting: cfg.time_setting.name,
        case_mode: cfg.case_mode,
        feature_label: cfg.feature_label.clone(),
        spearman: score,
        n_train: trained.train_dates.len(),
        n_test: test.y.len(),
        predictions,
        warnings,
        upper_bound,
        converged: trained.model.converged,
    })
}
