use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{ExperimentError, ExperimentResult, SettingName};
use crate::corpus::{CaseMode, FilterStats, RemovalReason};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportLayout {
    /// Rows are (country, case mode, features); columns are time settings.
    DomesticTable,
    /// One table per case mode. Rows are (source, features, setting);
    /// columns are target countries.
    TransferTable,
    /// Daily tweet counts, one column per country.
    FrequencyTimeline,
    /// Pre/post counts and removals per reason, one column per country.
    FilterStats,
}

impl ReportLayout {
    pub const ALL: [ReportLayout; 4] = [
        ReportLayout::DomesticTable,
        ReportLayout::TransferTable,
        ReportLayout::FrequencyTimeline,
        ReportLayout::FilterStats,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ReportLayout::DomesticTable => "domestic_table",
            ReportLayout::TransferTable => "transfer_table",
            ReportLayout::FrequencyTimeline => "frequency_timeline",
            ReportLayout::FilterStats => "filter_stats",
        }
    }
}

impl fmt::Display for ReportLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ReportLayout {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|l| l.as_str() == s.trim())
            .ok_or_else(|| {
                ExperimentError::Config(format!(
                    "unknown report layout {s:?} (expected one of domestic_table, transfer_table, \
                     frequency_timeline, filter_stats)"
                ))
            })
    }
}

/// What a report can draw on. Layouts only read the part they need.
#[derive(Debug, Clone, Copy, Default)]
pub struct ReportInputs<'a> {
    pub results: &'a [ExperimentResult],
    /// Country name and its daily tweet counts.
    pub timelines: &'a [(String, BTreeMap<NaiveDate, u64>)],
    pub filter_stats: &'a [(String, FilterStats)],
}

/// A rendered table; `name` is a file stem such as `transfer_total`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportTable {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl ReportTable {
    /// CSV text with LF line endings.
    pub fn to_csv(&self) -> String {
        let mut wtr = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        // writing into a Vec cannot fail
        wtr.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            wtr.write_record(r).expect("in-memory write");
        }
        String::from_utf8(wtr.into_inner().expect("in-memory flush")).expect("CSV of UTF-8 fields")
    }
}

fn mode_rank(m: CaseMode) -> u8 {
    match m {
        CaseMode::Total => 0,
        CaseMode::New => 1,
    }
}

/// Reduces results sharing a cell to one, independent of input order: the
/// one with the lexicographically largest JSON encoding wins.
fn pick<'a>(slot: &mut Option<(&'a ExperimentResult, String)>, r: &'a ExperimentResult) {
    let key = serde_json::to_string(r).expect("results serialize");
    match slot {
        Some((_, k)) if *k >= key => {}
        _ => *slot = Some((r, key)),
    }
}

fn domestic(results: &[ExperimentResult]) -> Result<Vec<ReportTable>, ExperimentError> {
    type RowKey = (String, u8, String);
    let mut cells: BTreeMap<(RowKey, SettingName), Option<(&ExperimentResult, String)>> = BTreeMap::new();
    for r in results.iter().filter(|r| r.is_domestic()) {
        let key = (
            r.source_country.clone(),
            mode_rank(r.case_mode),
            r.feature_label.clone(),
        );
        pick(cells.entry((key, r.setting)).or_default(), r);
    }
    if cells.is_empty() {
        return Err(ExperimentError::Config("no domestic results to tabulate".into()));
    }
    let settings: BTreeSet<SettingName> = cells.keys().map(|(_, s)| *s).collect();
    let row_keys: BTreeSet<&RowKey> = cells.keys().map(|(k, _)| k).collect();

    let mut header = vec!["country".to_string(), "cases".into(), "features".into()];
    header.extend(settings.iter().map(|s| s.to_string()));
    let rows = row_keys
        .into_iter()
        .map(|k| {
            let mode = if k.1 == 0 { CaseMode::Total } else { CaseMode::New };
            let mut row = vec![k.0.clone(), mode.to_string(), k.2.clone()];
            row.extend(settings.iter().map(|s| {
                cells
                    .get(&(k.clone(), *s))
                    .and_then(|c| c.as_ref())
                    .map(|(r, _)| r.spearman.to_string())
                    .unwrap_or_default()
            }));
            row
        })
        .collect();
    Ok(vec![ReportTable {
        name: "domestic".into(),
        header,
        rows,
    }])
}

fn transfer(results: &[ExperimentResult]) -> Result<Vec<ReportTable>, ExperimentError> {
    type RowKey = (String, String, SettingName);
    type Cells<'a> = BTreeMap<(RowKey, String), Option<(&'a ExperimentResult, String)>>;
    let mut by_mode: BTreeMap<u8, Cells> = BTreeMap::new();
    for r in results.iter().filter(|r| !r.is_domestic()) {
        let key = (r.source_country.clone(), r.feature_label.clone(), r.setting);
        let cells = by_mode.entry(mode_rank(r.case_mode)).or_default();
        pick(cells.entry((key, r.target_country.clone())).or_default(), r);
    }
    if by_mode.is_empty() {
        return Err(ExperimentError::Config(
            "no cross-country results to tabulate".into(),
        ));
    }
    let mut tables = Vec::new();
    for (mode, cells) in by_mode {
        let mode = if mode == 0 { CaseMode::Total } else { CaseMode::New };
        let targets: BTreeSet<&String> = cells.keys().map(|(_, t)| t).collect();
        let row_keys: BTreeSet<&RowKey> = cells.keys().map(|(k, _)| k).collect();
        let mut header = vec!["source".to_string(), "features".into(), "setting".into()];
        header.extend(targets.iter().map(|t| t.to_string()));
        let rows = row_keys
            .into_iter()
            .map(|k| {
                let mut row = vec![k.0.clone(), k.1.clone(), k.2.to_string()];
                row.extend(targets.iter().map(|t| {
                    cells
                        .get(&(k.clone(), (*t).clone()))
                        .and_then(|c| c.as_ref())
                        .map(|(r, _)| r.spearman.to_string())
                        .unwrap_or_default()
                }));
                row
            })
            .collect();
        tables.push(ReportTable {
            name: format!("transfer_{mode}"),
            header,
            rows,
        });
    }
    Ok(tables)
}

fn timeline(series: &[(String, BTreeMap<NaiveDate, u64>)]) -> Result<Vec<ReportTable>, ExperimentError> {
    if series.is_empty() {
        return Err(ExperimentError::Config("no tweet-frequency series given".into()));
    }
    let mut by_country: BTreeMap<&String, &BTreeMap<NaiveDate, u64>> = BTreeMap::new();
    for (name, s) in series {
        if by_country.insert(name, s).is_some() {
            return Err(ExperimentError::Config(format!("country {name:?} given twice")));
        }
    }
    let dates: BTreeSet<NaiveDate> = series.iter().flat_map(|(_, s)| s.keys().copied()).collect();
    let mut header = vec!["date".to_string()];
    header.extend(by_country.keys().map(|c| c.to_string()));
    let rows = dates
        .into_iter()
        .map(|d| {
            let mut row = vec![d.to_string()];
            row.extend(
                by_country
                    .values()
                    .map(|s| s.get(&d).map(|v| v.to_string()).unwrap_or_default()),
            );
            row
        })
        .collect();
    Ok(vec![ReportTable {
        name: "frequency_timeline".into(),
        header,
        rows,
    }])
}

fn filter_table(stats: &[(String, FilterStats)]) -> Result<Vec<ReportTable>, ExperimentError> {
    if stats.is_empty() {
        return Err(ExperimentError::Config("no filter statistics given".into()));
    }
    let mut by_country: BTreeMap<&String, &FilterStats> = BTreeMap::new();
    for (name, s) in stats {
        if by_country.insert(name, s).is_some() {
            return Err(ExperimentError::Config(format!("country {name:?} given twice")));
        }
    }
    let mut header = vec!["stage".to_string()];
    header.extend(by_country.keys().map(|c| c.to_string()));
    let mut rows = vec![
        std::iter::once("pre".to_string())
            .chain(by_country.values().map(|s| s.pre_count.to_string()))
            .collect::<Vec<_>>(),
        std::iter::once("post".to_string())
            .chain(by_country.values().map(|s| s.post_count.to_string()))
            .collect(),
    ];
    for reason in RemovalReason::ALL {
        rows.push(
            std::iter::once(reason.to_string())
                .chain(by_country.values().map(|s| s.removed(reason).to_string()))
                .collect(),
        );
    }
    Ok(vec![ReportTable {
        name: "filter_stats".into(),
        header,
        rows,
    }])
}

/// Renders one layout. Output depends only on the set of inputs, never on
/// their order, and correlations are printed with six decimals.
pub fn emit_report(
    inputs: &ReportInputs<'_>,
    layout: ReportLayout,
) -> Result<Vec<ReportTable>, ExperimentError> {
    match layout {
        ReportLayout::DomesticTable => domestic(inputs.results),
        ReportLayout::TransferTable => transfer(inputs.results),
        ReportLayout::FrequencyTimeline => timeline(inputs.timelines),
        ReportLayout::FilterStats => filter_table(inputs.filter_stats),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::Correlation;

    fn result(
        src: &str,
        tgt: &str,
        setting: SettingName,
        mode: CaseMode,
        rho: Correlation,
    ) -> ExperimentResult {
        ExperimentResult {
            source_country: src.into(),
            target_country: tgt.into(),
            setting,
            case_mode: mode,
            feature_label: "freq+kw".into(),
            spearman: rho,
            n_train: 29,
            n_test: 31,
            predictions: vec![],
            warnings: vec![],
            upper_bound: setting == SettingName::V,
            converged: true,
        }
    }

    #[test]
    fn single_domestic_cell() {
        let rs = [result(
            "it",
            "it",
            SettingName::III,
            CaseMode::Total,
            Correlation::Defined(0.9),
        )];
        let t = emit_report(
            &ReportInputs {
                results: &rs,
                ..Default::default()
            },
            ReportLayout::DomesticTable,
        )
        .unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(
            t[0].to_csv(),
            "country,cases,features,III\nit,total,freq+kw,0.900000\n"
        );
    }

    #[test]
    fn transfer_grid_shape_and_order() {
        let targets = ["th", "id", "es", "gb"];
        let mut rs = Vec::new();
        for s in SettingName::PRESETS.iter().rev() {
            for t in targets {
                rs.push(result("it", t, *s, CaseMode::Total, Correlation::Defined(0.5)));
            }
        }
        rs.push(result(
            "it",
            "th",
            SettingName::I,
            CaseMode::New,
            Correlation::Undefined,
        ));
        let tables = emit_report(
            &ReportInputs {
                results: &rs,
                ..Default::default()
            },
            ReportLayout::TransferTable,
        )
        .unwrap();
        assert_eq!(tables.len(), 2);
        let total = &tables[0];
        assert_eq!(total.name, "transfer_total");
        assert_eq!(
            total.header,
            ["source", "features", "setting", "es", "gb", "id", "th"]
        );
        assert_eq!(total.rows.len(), 5);
        assert_eq!(total.rows[0][2], "I");
        assert_eq!(total.rows[4][2], "V");
        assert_eq!(tables[1].name, "transfer_new");
        assert_eq!(tables[1].rows[0][3], "undefined");

        let mut shuffled = rs.clone();
        shuffled.reverse();
        let again = emit_report(
            &ReportInputs {
                results: &shuffled,
                ..Default::default()
            },
            ReportLayout::TransferTable,
        )
        .unwrap();
        assert_eq!(again, tables);
    }

    #[test]
    fn duplicate_cells_resolve_independent_of_order() {
        let a = result(
            "it",
            "it",
            SettingName::I,
            CaseMode::Total,
            Correlation::Defined(0.1),
        );
        let b = result(
            "it",
            "it",
            SettingName::I,
            CaseMode::Total,
            Correlation::Defined(0.2),
        );
        let one = emit_report(
            &ReportInputs {
                results: &[a.clone(), b.clone()],
                ..Default::default()
            },
            ReportLayout::DomesticTable,
        )
        .unwrap();
        let two = emit_report(
            &ReportInputs {
                results: &[b, a],
                ..Default::default()
            },
            ReportLayout::DomesticTable,
        )
        .unwrap();
        assert_eq!(one, two);
    }

    #[test]
    fn filter_and_timeline_tables() {
        let mut s = FilterStats {
            pre_count: 10,
            post_count: 7,
            ..Default::default()
        };
        s.removed_by_reason.insert(RemovalReason::Retweet, 3);
        let t = emit_report(
            &ReportInputs {
                filter_stats: &[("it".into(), s)],
                ..Default::default()
            },
            ReportLayout::FilterStats,
        )
        .unwrap();
        let csv = t[0].to_csv();
        assert!(csv.starts_with("stage,it\npre,10\npost,7\nwrong_language,0\n"));
        assert!(csv.contains("retweet,3\n"));

        let d = |day| NaiveDate::from_ymd_opt(2020, 2, day).unwrap();
        let series = [
            ("th".to_string(), BTreeMap::from([(d(1), 4u64), (d(2), 5)])),
            ("it".to_string(), BTreeMap::from([(d(2), 9u64)])),
        ];
        let t = emit_report(
            &ReportInputs {
                timelines: &series,
                ..Default::default()
            },
            ReportLayout::FrequencyTimeline,
        )
        .unwrap();
        assert_eq!(t[0].to_csv(), "date,it,th\n2020-02-01,,4\n2020-02-02,9,5\n");
    }

    #[test]
    fn empty_inputs_error() {
        assert!(emit_report(&ReportInputs::default(), ReportLayout::DomesticTable).is_err());
        assert!("bogus".parse::<ReportLayout>().is_err());
        assert_eq!(
            "transfer_table".parse::<ReportLayout>().unwrap(),
            ReportLayout::TransferTable
        );
    }
}
