use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::dates::DateRange;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SettingName {
    I,
    II,
    III,
    IV,
    V,
    #[serde(rename = "custom")]
    Custom,
}

impl SettingName {
    pub const PRESETS: [SettingName; 5] = [
        SettingName::I,
        SettingName::II,
        SettingName::III,
        SettingName::IV,
        SettingName::V,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SettingName::I => "I",
            SettingName::II => "II",
            SettingName::III => "III",
            SettingName::IV => "IV",
            SettingName::V => "V",
            SettingName::Custom => "custom",
        }
    }
}

impl fmt::Display for SettingName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SettingName {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::PRESETS
            .into_iter()
            .chain([SettingName::Custom])
            .find(|n| n.as_str() == s.trim())
            .ok_or_else(|| ExperimentError::UnknownSetting(s.to_string()))
    }
}

/// Train and test windows for one run. Custom settings may overlap; presets
/// other than V never do.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SettingRepr", into = "SettingRepr")]
pub struct TimeSetting {
    pub name: SettingName,
    pub train: Vec<DateRange>,
    pub test: Vec<DateRange>,
}

/// Presets are written by name; custom settings spell out their windows.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SettingRepr {
    Preset(String),
    Custom {
        train: Vec<DateRange>,
        test: Vec<DateRange>,
    },
}

impl TryFrom<SettingRepr> for TimeSetting {
    type Error = String;

    fn try_from(r: SettingRepr) -> Result<Self, Self::Error> {
        match r {
            SettingRepr::Preset(name) => split_preset(&name).map_err(|e| e.to_string()),
            SettingRepr::Custom { train, test } => {
                TimeSetting::custom(train, test).map_err(|e| e.to_string())
            }
        }
    }
}

impl From<TimeSetting> for SettingRepr {
    fn from(s: TimeSetting) -> Self {
        match s.name {
            SettingName::Custom => SettingRepr::Custom {
                train: s.train,
                test: s.test,
            },
            preset => SettingRepr::Preset(preset.as_str().to_string()),
        }
    }
}

fn day(m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(2020, m, d).expect("valid 2020 date")
}

fn span(a: NaiveDate, b: NaiveDate) -> DateRange {
    DateRange { start: a, end: b }
}

/// The named month-level splits over February to April 2020.
///
/// | name | train          | test          |
/// |------|----------------|---------------|
/// | I    | Feb 1 – Mar 31 | Apr 1 – Apr 30 |
/// | II   | Feb 1 – Feb 29 | Mar 1 – Apr 30 |
/// | III  | Feb 1 – Feb 29 | Mar 1 – Mar 31 |
/// | IV   | Mar 1 – Mar 31 | Apr 1 – Apr 30 |
/// | V    | Feb 1 – Apr 30 | Feb 1 – Apr 30 |
pub fn split_preset(name: &str) -> Result<TimeSetting, ExperimentError> {
    let feb = span(day(2, 1), day(2, 29));
    let mar = span(day(3, 1), day(3, 31));
    let apr = span(day(4, 1), day(4, 30));
    let (setting, train, test) = match name.parse::<SettingName>()? {
        SettingName::I => (SettingName::I, span(feb.start, mar.end), apr),
        SettingName::II => (SettingName::II, feb, span(mar.start, apr.end)),
        SettingName::III => (SettingName::III, feb, mar),
        SettingName::IV => (SettingName::IV, mar, apr),
        SettingName::V => (SettingName::V, span(feb.start, apr.end), span(feb.start, apr.end)),
        SettingName::Custom => return Err(ExperimentError::UnknownSetting(name.to_string())),
    };
    Ok(TimeSetting {
        name: setting,
        train: vec![train],
        test: vec![test],
    })
}

fn expand(ranges: &[DateRange]) -> Vec<NaiveDate> {
    ranges
        .iter()
        .flat_map(|r| r.days().collect::<Vec<_>>())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

impl TimeSetting {
    pub fn custom(train: Vec<DateRange>, test: Vec<DateRange>) -> Result<Self, ExperimentError> {
        if train.is_empty() || test.is_empty() {
            return Err(ExperimentError::Config(
                "custom setting needs at least one train and one test interval".into(),
            ));
        }
        Ok(Self {
            name: SettingName::Custom,
            train,
            test,
        })
    }

    /// Sorted, de-duplicated training dates.
    pub fn train_dates(&self) -> Vec<NaiveDate> {
        expand(&self.train)
    }

    pub fn test_dates(&self) -> Vec<NaiveDate> {
        expand(&self.test)
    }

    /// Whether any training date is also a test date (the V-style upper
    /// bound).
    pub fn overlaps(&self) -> bool {
        self.train.iter().any(|a| self.test.iter().any(|b| a.overlaps(b)))
    }
}
