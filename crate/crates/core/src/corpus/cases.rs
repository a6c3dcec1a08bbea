use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use super::CorpusError;
use crate::dates::DateRange;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseMode {
    Total,
    New,
}

impl std::fmt::Display for CaseMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CaseMode::Total => "total",
            CaseMode::New => "new",
        })
    }
}

impl std::str::FromStr for CaseMode {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "total" => Ok(CaseMode::Total),
            "new" => Ok(CaseMode::New),
            other => Err(CorpusError::Config(format!(
                "unknown case mode {other:?} (expected total or new)"
            ))),
        }
    }
}

/// Daily case counts for one country over consecutive days.
///
/// Totals are kept as reported; they are not assumed monotone because
/// official corrections can lower them. New-case series may go negative
/// for the same reason.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseSeries {
    pub country: String,
    pub start_date: NaiveDate,
    pub counts: Vec<i64>,
    pub mode: CaseMode,
}

impl CaseSeries {
    pub fn new(
        country: impl Into<String>,
        start_date: NaiveDate,
        counts: Vec<i64>,
        mode: CaseMode,
    ) -> Result<Self, CorpusError> {
        if counts.is_empty() {
            return Err(CorpusError::EmptyInput("case series has no days".into()));
        }
        Ok(Self {
            country: country.into(),
            start_date,
            counts,
            mode,
        })
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn end_date(&self) -> NaiveDate {
        self.start_date + Duration::days(self.counts.len() as i64 - 1)
    }

    pub fn range(&self) -> DateRange {
        DateRange {
            start: self.start_date,
            end: self.end_date(),
        }
    }

    pub fn get(&self, date: NaiveDate) -> Option<i64> {
        self.range().offset_of(date).map(|i| self.counts[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (NaiveDate, i64)> + '_ {
        self.start_date.iter_days().zip(self.counts.iter().copied())
    }

    /// Returns the series in the requested mode, differencing totals when
    /// `New` is asked for.
    pub fn in_mode(&self, mode: CaseMode) -> Result<CaseSeries, CorpusError> {
        match (self.mode, mode) {
            (a, b) if a == b => Ok(self.clone()),
            (CaseMode::Total, CaseMode::New) => derive_new_cases(self),
            (CaseMode::New, CaseMode::Total) => Ok(cumulative_totals(self)),
            _ => unreachable!(),
        }
    }
}

/// First differences of a total series; the first day keeps its total.
pub fn derive_new_cases(series: &CaseSeries) -> Result<CaseSeries, CorpusError> {
    if series.mode != CaseMode::Total {
        return Err(CorpusError::Contract(
            "derive_new_cases expects a total-mode series".into(),
        ));
    }
    let counts = std::iter::once(series.counts[0])
        .chain(series.counts.windows(2).map(|w| w[1] - w[0]))
        .collect();
    Ok(CaseSeries {
        counts,
        mode: CaseMode::New,
        ..series.clone()
    })
}

/// Running sum of a new-case series, the inverse of [`derive_new_cases`].
pub fn cumulative_totals(series: &CaseSeries) -> CaseSeries {
    let counts = series
        .counts
        .iter()
        .scan(0i64, |acc, v| {
            *acc += v;
            Some(*acc)
        })
        .collect();
    CaseSeries {
        counts,
        mode: CaseMode::Total,
        ..series.clone()
    }
}

/// A parsed series plus notes about repaired gaps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedCases {
    pub series: CaseSeries,
    pub warnings: Vec<String>,
}

fn parse_count(raw: &str) -> Option<i64> {
    let raw = raw.trim();
    if let Ok(v) = raw.parse::<i64>() {
        return Some(v);
    }
    // some exports write integral counts as "12.0"
    let f: f64 = raw.parse().ok()?;
    (f.is_finite() && f.fract() == 0.0 && f.abs() < 9.0e15).then_some(f as i64)
}

/// Turns sparse (date, total) points into a consecutive series, carrying the
/// previous total across missing days.
fn densify(country: String, points: &BTreeMap<NaiveDate, i64>) -> Result<ParsedCases, CorpusError> {
    let (&start, _) = points
        .iter()
        .next()
        .ok_or_else(|| CorpusError::EmptyInput("no case rows".into()))?;
    let (&end, _) = points.iter().next_back().expect("nonempty");
    let mut counts = Vec::with_capacity(((end - start).num_days() + 1) as usize);
    let mut warnings = Vec::new();
    let mut last = 0;
    for date in start.iter_days().take_while(|d| *d <= end) {
        match points.get(&date) {
            Some(&v) => last = v,
            None => warnings.push(format!(
                "{country}: no row for {date}; forward-filled total {last}"
            )),
        }
        counts.push(last);
    }
    Ok(ParsedCases {
        series: CaseSeries {
            country,
            start_date: start,
            counts,
            mode: CaseMode::Total,
        },
        warnings,
    })
}

/// Reads a long-format `date,country,total_cases` CSV holding one country.
pub fn parse_case_csv_long<R: Read>(reader: R) -> Result<ParsedCases, CorpusError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let expected = ["date", "country", "total_cases"];
    if headers.len() < 3 || headers.iter().take(3).ne(expected.iter().copied()) {
        return Err(CorpusError::Format {
            line: 1,
            msg: format!("expected header date,country,total_cases, got {headers:?}"),
        });
    }
    let mut country: Option<String> = None;
    let mut points: BTreeMap<NaiveDate, i64> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let fmt_err = |msg: String| CorpusError::Format { line, msg };
        let date = NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d")
            .map_err(|_| fmt_err(format!("bad date {:?}", &rec[0])))?;
        match &country {
            None => country = Some(rec[1].to_string()),
            Some(c) if c != &rec[1] => {
                return Err(fmt_err(format!("file mixes countries {c:?} and {:?}", &rec[1])))
            }
            _ => {}
        }
        let total = parse_count(&rec[2])
            .filter(|v| *v >= 0)
            .ok_or_else(|| fmt_err(format!("bad total_cases {:?}", &rec[2])))?;
        if let Some(prev) = points.insert(date, total) {
            if prev != total {
                return Err(fmt_err(format!(
                    "conflicting totals {prev} and {total} for {date}"
                )));
            }
        }
    }
    let country = country.ok_or_else(|| CorpusError::EmptyInput("case CSV has no rows".into()))?;
    densify(country, &points)
}

/// Reads a Johns Hopkins CSSE wide time-series CSV and sums every row whose
/// `Country/Region` equals `country`.
pub fn parse_case_csv_jhu_wide<R: Read>(reader: R, country: &str) -> Result<ParsedCases, CorpusError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let fixed = ["Province/State", "Country/Region", "Lat", "Long"];
    if headers.len() < 5 || headers.iter().take(4).ne(fixed.iter().copied()) {
        return Err(CorpusError::Format {
            line: 1,
            msg: "expected Province/State,Country/Region,Lat,Long followed by date columns".into(),
        });
    }
    let dates: Vec<NaiveDate> = headers
        .iter()
        .skip(4)
        .map(|h| {
            NaiveDate::parse_from_str(h, "%m/%d/%y").map_err(|_| CorpusError::Format {
                line: 1,
                msg: format!("bad date column {h:?}"),
            })
        })
        .collect::<Result<_, _>>()?;

    let mut sums = vec![0i64; dates.len()];
    let mut matched = false;
    for rec in rdr.records() {
        let rec = rec?;
        if rec.get(1) != Some(country) {
            continue;
        }
        matched = true;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        for (i, sum) in sums.iter_mut().enumerate() {
            let cell = rec.get(i + 4).unwrap_or("");
            let v = parse_count(cell).ok_or_else(|| CorpusError::Format {
                line,
                msg: format!("non-numeric cell {cell:?} in column {}", &headers[i + 4]),
            })?;
            *sum += v;
        }
    }
    if !matched {
        return Err(CorpusError::NotFound(country.to_string()));
    }
    let mut points = BTreeMap::new();
    for (date, v) in dates.into_iter().zip(sums) {
        if let Some(prev) = points.insert(date, v) {
            if prev != v {
                return Err(CorpusError::Format {
                    line: 1,
                    msg: format!("date column {date} repeated with different values"),
                });
            }
        }
    }
    densify(country.to_string(), &points)
}

/// Writes the series as long-format CSV (`date,country,total_cases` for
/// totals, `date,country,new_cases` for new counts).
pub fn write_case_csv_long<W: Write>(series: &CaseSeries, w: W) -> Result<(), CorpusError> {
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    let value_col = match series.mode {
        CaseMode::Total => "total_cases",
        CaseMode::New => "new_cases",
    };
    wtr.write_record(["date", "country", value_col])?;
    for (date, v) in series.iter() {
        wtr.write_record([date.to_string(), series.country.clone(), v.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2020, m, day).unwrap()
    }

    fn totals(counts: &[i64]) -> CaseSeries {
        CaseSeries::new("IT", d(2, 1), counts.to_vec(), CaseMode::Total).unwrap()
    }

    #[test]
    fn long_direct_mapping() {
        let src = "date,country,total_cases\n2020-02-01,IT,2\n2020-02-02,IT,3\n";
        let p = parse_case_csv_long(src.as_bytes()).unwrap();
        assert_eq!(p.series.start_date, d(2, 1));
        assert_eq!(p.series.counts, vec![2, 3]);
        assert!(p.warnings.is_empty());
    }

    #[test]
    fn long_forward_fill() {
        let src = "date,country,total_cases\n2020-02-03,IT,5\n2020-02-01,IT,2\n";
        let p = parse_case_csv_long(src.as_bytes()).unwrap();
        assert_eq!(p.series.counts, vec![2, 2, 5]);
        assert_eq!(p.warnings.len(), 1);
    }

    #[test]
    fn long_header_only() {
        let err = parse_case_csv_long("date,country,total_cases\n".as_bytes()).unwrap_err();
        assert!(matches!(err, CorpusError::EmptyInput(_)));
    }

    #[test]
    fn long_conflicting_duplicate() {
        let src = "date,country,total_cases\n2020-02-01,IT,2\n2020-02-01,IT,4\n";
        assert!(matches!(
            parse_case_csv_long(src.as_bytes()),
            Err(CorpusError::Format { .. })
        ));
        let same = "date,country,total_cases\n2020-02-01,IT,2\n2020-02-01,IT,2\n";
        assert_eq!(
            parse_case_csv_long(same.as_bytes()).unwrap().series.counts,
            vec![2]
        );
    }

    #[test]
    fn long_rejects_mixed_countries_and_bad_header() {
        let mixed = "date,country,total_cases\n2020-02-01,IT,2\n2020-02-02,JP,4\n";
        assert!(parse_case_csv_long(mixed.as_bytes()).is_err());
        assert!(parse_case_csv_long("day,total\n2020-02-01,1\n".as_bytes()).is_err());
    }

    const JHU: &str = "Province/State,Country/Region,Lat,Long,2/1/20,2/2/20\n\
        ,Italy,41.9,12.6,2,3\n\
        Hokkaido,Japan,43.0,141.0,1,2\n\
        Tokyo,Japan,35.7,139.7,3,4\n";

    #[test]
    fn jhu_single_row() {
        let p = parse_case_csv_jhu_wide(JHU.as_bytes(), "Italy").unwrap();
        assert_eq!(p.series.counts, vec![2, 3]);
        assert_eq!(p.series.start_date, d(2, 1));
    }

    #[test]
    fn jhu_sums_provinces() {
        let p = parse_case_csv_jhu_wide(JHU.as_bytes(), "Japan").unwrap();
        assert_eq!(p.series.counts, vec![4, 6]);
    }

    #[test]
    fn jhu_missing_country() {
        let err = parse_case_csv_jhu_wide(JHU.as_bytes(), "Atlantis").unwrap_err();
        assert!(matches!(err, CorpusError::NotFound(c) if c == "Atlantis"));
    }

    #[test]
    fn jhu_non_numeric() {
        let src = "Province/State,Country/Region,Lat,Long,2/1/20\n,Italy,0,0,abc\n";
        assert!(matches!(
            parse_case_csv_jhu_wide(src.as_bytes(), "Italy"),
            Err(CorpusError::Format { .. })
        ));
    }

    #[test]
    fn new_cases_examples() {
        assert_eq!(
            derive_new_cases(&totals(&[1, 3, 6])).unwrap().counts,
            vec![1, 2, 3]
        );
        assert_eq!(
            derive_new_cases(&totals(&[5, 5, 5])).unwrap().counts,
            vec![5, 0, 0]
        );
        assert_eq!(derive_new_cases(&totals(&[10, 8])).unwrap().counts, vec![10, -2]);
        let new = derive_new_cases(&totals(&[1])).unwrap();
        assert!(matches!(derive_new_cases(&new), Err(CorpusError::Contract(_))));
    }

    #[test]
    fn series_accessors() {
        let s = totals(&[1, 2, 3]);
        assert_eq!(s.end_date(), d(2, 3));
        assert_eq!(s.get(d(2, 2)), Some(2));
        assert_eq!(s.get(d(3, 2)), None);
        assert!(CaseSeries::new("X", d(2, 1), vec![], CaseMode::Total).is_err());
    }

    #[test]
    fn long_csv_roundtrip() {
        let s = totals(&[0, 4, 4, 9]);
        let mut buf = Vec::new();
        write_case_csv_long(&s, &mut buf).unwrap();
        let back = parse_case_csv_long(buf.as_slice()).unwrap();
        assert_eq!(back.series, s);
    }
}
