use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use serde::Serialize;

use epialign::corpus::{
    filter_corpus, parse_case_csv_jhu_wide, parse_case_csv_long, parse_tweet_jsonl, read_lexicon,
    write_case_csv_long, write_tweet_jsonl, CaseMode, CaseSeries, FilterConfig, FilterStats, Tweet,
};
use epialign::experiment::{
    emit_report, fit_source_model, run_experiment, spearman, split_preset, CountryData, ExperimentConfig,
    ExperimentError, ExperimentResult, ReportInputs, ReportLayout,
};
use epialign::features::{
    build_feature_table, read_embedding_store, EmbeddingFeature, EmbeddingSource, FeatureConfig,
    FeatureTable, MockEmbedder, Pooling,
};
use epialign::regress::{load_model, save_model, KernelParams, RegressError, SvrParams};
use epialign::synthetic::{default_range, generate_pair};
use epialign::DateRange;

use crate::output::{manifest_for, Run};
use crate::{Cli, Command};

/// Input that is well-formed but carries too little signal to work with.
#[derive(Debug)]
pub struct Degenerate(pub String);

impl fmt::Display for Degenerate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Degenerate {}

/// 3 for data degeneracy, 2 for everything else.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<Degenerate>() {
            return 3;
        }
        if let Some(e) = cause.downcast_ref::<ExperimentError>() {
            if matches!(
                e,
                ExperimentError::Degenerate(_)
                    | ExperimentError::InsufficientTestDays(_)
                    | ExperimentError::Regress(RegressError::Degenerate(_))
            ) {
                return 3;
            }
        }
        if let Some(RegressError::Degenerate(_)) = cause.downcast_ref::<RegressError>() {
            return 3;
        }
    }
    2
}

pub fn run(cli: Cli) -> Result<()> {
    let (seed, threads) = (cli.seed, cli.threads.map(usize::from));
    match cli.command {
        Command::Filter(a) => filter(a, Run::new("filter", seed, threads)),
        Command::Featurize(a) => featurize(a, Run::new("featurize", seed, threads)),
        Command::Train(a) => train(a, Run::new("train", seed, threads)),
        Command::Predict(a) => predict(a, Run::new("predict", seed, threads)),
        Command::Eval(a) => eval(a, Run::new("eval", seed, threads)),
        Command::Transfer(a) => transfer(a, Run::new("transfer", seed, threads)),
        Command::Report(a) => report(a, Run::new("report", seed, threads)),
        Command::Synth(a) => synth(a, seed, Run::new("synth", seed, threads)),
    }
}

#[derive(Debug, clap::Args)]
pub struct FilterArgs {
    /// Tweet JSONL.
    pub input: PathBuf,
    /// Filter configuration JSON.
    #[arg(long)]
    pub config: PathBuf,
    /// Extra country-lexicon file, one entry per line.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub stats: PathBuf,
}

fn read_tweets(run: &mut Run, path: &Path) -> Result<Vec<Tweet>> {
    let bytes = run.read(path)?;
    let parsed = parse_tweet_jsonl(&bytes[..]).with_context(|| format!("cannot parse {}", path.display()))?;
    if parsed.parse_errors > 0 {
        let lines: Vec<String> = parsed
            .error_lines
            .iter()
            .take(10)
            .map(|l| l.to_string())
            .collect();
        run.warn(format!(
            "{}: skipped {} malformed lines (lines {})",
            path.display(),
            parsed.parse_errors,
            lines.join(", ")
        ));
    }
    Ok(parsed.tweets)
}

fn filter(a: FilterArgs, mut run: Run) -> Result<()> {
    let mut cfg: FilterConfig = run.read_json(&a.config)?;
    if let Some(path) = &a.lexicon {
        let bytes = run.read(path)?;
        cfg.country_lexicon.extend(read_lexicon(&bytes[..])?);
    }
    cfg.validate()?;
    run.set_config(&cfg);
    let tweets = read_tweets(&mut run, &a.input)?;
    let (kept, stats) = filter_corpus(&tweets, &cfg);

    let mut out = Vec::new();
    write_tweet_jsonl(&kept, &mut out)?;
    run.stage(&a.out, out);
    run.stage_json(&a.stats, &stats);
    eprintln!("kept {} of {} tweets", stats.post_count, stats.pre_count);
    run.commit(&manifest_for(&a.out))
}

#[derive(Debug, clap::Args)]
pub struct FeaturizeArgs {
    /// Filtered tweet JSONL.
    pub input: PathBuf,
    /// Feature configuration JSON.
    #[arg(long)]
    pub features: PathBuf,
    /// EMB1 embedding store.
    #[arg(long, conflicts_with = "mock_dim")]
    pub emb: Option<PathBuf>,
    /// Use deterministic hashed-trigram embeddings of this dimension.
    #[arg(long)]
    pub mock_dim: Option<usize>,
    /// Inclusive date range, START:END.
    #[arg(long)]
    pub range: DateRange,
    #[arg(long)]
    pub out: PathBuf,
}

const LISTED_MISSING: usize = 20;

fn featurize(a: FeaturizeArgs, mut run: Run) -> Result<()> {
    let mut cfg: FeatureConfig = run.read_json(&a.features)?;
    let source: Option<Box<dyn EmbeddingSource>> = match (&a.emb, a.mock_dim) {
        (Some(path), _) => {
            let bytes = run.read(path)?;
            let loaded = read_embedding_store(&bytes[..])
                .with_context(|| format!("cannot read embedding store {}", path.display()))?;
            for w in loaded.warnings {
                run.warn(format!("{}: {w}", path.display()));
            }
            Some(Box::new(loaded.store))
        }
        (None, Some(dim)) => Some(Box::new(
            MockEmbedder::new(dim).context("--mock-dim must be positive")?,
        )),
        (None, None) => None,
    };
    if source.is_some() && cfg.embedding.is_none() {
        run.warn("embedding source given but the feature config has none; using average pooling");
        cfg.embedding = Some(EmbeddingFeature {
            pooling: Pooling::Average,
            dim: None,
        });
    }
    cfg.validate()?;
    run.set_config(&serde_json::json!({ "features": cfg, "range": a.range, "mock_dim": a.mock_dim }));

    let tweets = read_tweets(&mut run, &a.input)?;
    let source = source.as_deref();
    let table = build_feature_table(&cfg, &tweets, source, a.range)?;

    if cfg.embedding.is_some() && table.missing_embeddings > 0 {
        let src = source.expect("embedding source resolved");
        let missing: Vec<&str> = tweets
            .iter()
            .filter(|t| a.range.contains(t.date_at(cfg.utc_offset)) && src.lookup(t).is_none())
            .map(|t| t.id.as_str())
            .collect();
        for id in missing.iter().take(LISTED_MISSING) {
            run.warn(format!("no embedding for tweet {id}"));
        }
        if missing.len() > LISTED_MISSING {
            run.warn(format!(
                "{} more tweets without embeddings",
                missing.len() - LISTED_MISSING
            ));
        }
        eprintln!(
            "{} tweets had no embedding and were left out of pooling",
            missing.len()
        );
    }
    let empty = table.empty_days().count();
    if empty > 0 {
        eprintln!("note: {empty} days have no usable tweets (zero-filled, empty_day=1)");
    }

    let mut out = Vec::new();
    table.write_csv(&mut out)?;
    run.stage(&a.out, out);
    run.commit(&manifest_for(&a.out))
}

/// Case data for one country: a long `date,country,total_cases` CSV, or a
/// JHU wide CSV when `jhu_country` is set.
fn read_cases(run: &mut Run, path: &Path, jhu_country: Option<&str>) -> Result<CaseSeries> {
    let bytes = run.read(path)?;
    let parsed = match jhu_country {
        Some(c) => parse_case_csv_jhu_wide(&bytes[..], c),
        None => parse_case_csv_long(&bytes[..]),
    }
    .with_context(|| format!("cannot parse {}", path.display()))?;
    for w in parsed.warnings {
        run.warn(w);
    }
    Ok(parsed.series)
}

fn read_features(run: &mut Run, path: &Path) -> Result<FeatureTable> {
    let bytes = run.read(path)?;
    FeatureTable::read_csv(&bytes[..]).with_context(|| format!("cannot parse {}", path.display()))
}

fn read_svr(run: &mut Run, path: Option<&Path>) -> Result<SvrParams> {
    let mut params: SvrParams = match path {
        Some(p) => run.read_json(p)?,
        None => SvrParams::default(),
    };
    params.seed = run.seed();
    Ok(params)
}

#[derive(Debug, clap::Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub cases: PathBuf,
    /// Read --cases as a JHU wide CSV and take this country's rows.
    #[arg(long)]
    pub jhu_country: Option<String>,
    /// Time setting whose training window is used (I..V).
    #[arg(long)]
    pub setting: String,
    #[arg(long, default_value = "total")]
    pub case_mode: CaseMode,
    /// SVR parameter JSON.
    #[arg(long)]
    pub svr: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

fn train(a: TrainArgs, mut run: Run) -> Result<()> {
    let time_setting = split_preset(&a.setting)?;
    let svr_params = read_svr(&mut run, a.svr.as_deref())?;
    let features = read_features(&mut run, &a.features)?;
    let cases = read_cases(&mut run, &a.cases, a.jhu_country.as_deref())?;
    let cfg = ExperimentConfig {
        source_country: cases.country.clone(),
        target_country: cases.country.clone(),
        case_mode: a.case_mode,
        feature_label: "features".into(),
        svr_params,
        time_setting,
    };
    run.set_config(&cfg);
    let data = CountryData {
        name: cases.country.clone(),
        features,
        cases,
    };
    let trained = fit_source_model(&cfg, &data)?;
    for w in trained.warnings {
        run.warn(w);
    }
    let mut out = Vec::new();
    save_model(&trained.model, &mut out)?;
    out.push(b'\n');
    run.stage(&a.out, out);
    eprintln!(
        "trained on {} days, {} support vectors",
        trained.train_dates.len(),
        trained.model.support_vectors.len()
    );
    run.commit(&manifest_for(&a.out))
}

#[derive(Debug, clap::Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    /// Restrict predictions to this START:END range.
    #[arg(long)]
    pub range: Option<DateRange>,
    #[arg(long)]
    pub out: PathBuf,
}

fn predict(a: PredictArgs, mut run: Run) -> Result<()> {
    let bytes = run.read(&a.model)?;
    let model = load_model(&bytes[..]).with_context(|| format!("cannot load {}", a.model.display()))?;
    let table = read_features(&mut run, &a.features)?;
    if table.dim() != model.dim() {
        bail!(
            "model expects {} features but {} has {}",
            model.dim(),
            a.features.display(),
            table.dim()
        );
    }
    run.set_config(&serde_json::json!({ "range": a.range }));
    let mut out = String::from("date,predicted\n");
    for row in table
        .rows
        .iter()
        .filter(|r| a.range.is_none_or(|g| g.contains(r.date)))
    {
        let y = model.predict(&row.x)?;
        out.push_str(&format!("{},{y}\n", row.date));
    }
    run.stage(&a.out, out.into_bytes());
    run.commit(&manifest_for(&a.out))
}

/// Reads `date,...,value` CSV, taking the last column as the value.
fn read_dated_values(run: &mut Run, path: &Path) -> Result<BTreeMap<NaiveDate, f64>> {
    let bytes = run.read(path)?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(&bytes[..]);
    let headers = rdr.headers()?.clone();
    if headers.len() < 2 || &headers[0] != "date" {
        bail!(
            "{}: expected a header starting with `date` and at least one value column",
            path.display()
        );
    }
    let mut out = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.with_context(|| format!("cannot parse {}", path.display()))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let date = NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d")
            .with_context(|| format!("{}:{line}: bad date {:?}", path.display(), &rec[0]))?;
        let raw = rec.get(rec.len() - 1).unwrap_or_default();
        let v: f64 = raw
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .with_context(|| format!("{}:{line}: bad value {raw:?}", path.display()))?;
        if out.insert(date, v).is_some() {
            bail!("{}:{line}: date {date} repeats", path.display());
        }
    }
    Ok(out)
}

#[derive(Debug, clap::Args)]
pub struct EvalArgs {
    /// Predictions CSV (`date,...,value`).
    pub predictions: PathBuf,
    /// Ground-truth CSV (`date,...,value`).
    pub truth: PathBuf,
    /// Also write the score as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct EvalOutput {
    spearman: epialign::experiment::Correlation,
    n: usize,
}

fn eval(a: EvalArgs, mut run: Run) -> Result<()> {
    let pred = read_dated_values(&mut run, &a.predictions)?;
    let truth = read_dated_values(&mut run, &a.truth)?;
    let (p, t): (Vec<f64>, Vec<f64>) = pred
        .iter()
        .filter_map(|(d, v)| truth.get(d).map(|w| (*v, *w)))
        .unzip();
    if p.len() < 2 {
        return Err(Degenerate(format!(
            "only {} dates appear in both files; need at least 2",
            p.len()
        ))
        .into());
    }
    let score = spearman(&p, &t)?;
    println!("{score}");
    if let Some(out) = &a.out {
        run.stage_json(
            out,
            &EvalOutput {
                spearman: score,
                n: p.len(),
            },
        );
        run.commit(&manifest_for(out))?;
    }
    Ok(())
}

#[derive(Debug, clap::Args)]
pub struct TransferArgs {
    #[arg(long)]
    pub source_features: PathBuf,
    #[arg(long)]
    pub source_cases: PathBuf,
    #[arg(long)]
    pub target_features: PathBuf,
    #[arg(long)]
    pub target_cases: PathBuf,
    /// I, II, III, IV or V.
    #[arg(long)]
    pub setting: String,
    #[arg(long, default_value = "total")]
    pub case_mode: CaseMode,
    #[arg(long)]
    pub svr: Option<PathBuf>,
    /// Row label for reports.
    #[arg(long, default_value = "features")]
    pub feature_label: String,
    /// Result JSON.
    #[arg(long)]
    pub out: PathBuf,
}

fn transfer(a: TransferArgs, mut run: Run) -> Result<()> {
    let time_setting = split_preset(&a.setting)?;
    let svr_params = read_svr(&mut run, a.svr.as_deref())?;
    let src_features = read_features(&mut run, &a.source_features)?;
    let src_cases = read_cases(&mut run, &a.source_cases, None)?;
    let tgt_features = read_features(&mut run, &a.target_features)?;
    let tgt_cases = read_cases(&mut run, &a.target_cases, None)?;
    let cfg = ExperimentConfig {
        source_country: src_cases.country.clone(),
        target_country: tgt_cases.country.clone(),
        case_mode: a.case_mode,
        feature_label: a.feature_label,
        svr_params,
        time_setting,
    };
    run.set_config(&cfg);
    let source = CountryData {
        name: src_cases.country.clone(),
        features: src_features,
        cases: src_cases,
    };
    let target = CountryData {
        name: tgt_cases.country.clone(),
        features: tgt_features,
        cases: tgt_cases,
    };
    let result = run_experiment(&cfg, &source, &target)?;
    for w in &result.warnings {
        run.warn(w.clone());
    }
    println!("{}", result.spearman);
    run.stage_json(&a.out, &result);
    run.commit(&manifest_for(&a.out))
}

#[derive(Debug, clap::Args)]
pub struct ReportArgs {
    /// Directory of result JSON, filter-stats JSON and feature CSV files.
    pub results: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

fn strip_suffix(name: &str, suffix: &str) -> String {
    name.strip_suffix(suffix).unwrap_or(name).to_string()
}

fn report(a: ReportArgs, mut run: Run) -> Result<()> {
    let mut paths: Vec<PathBuf> = fs::read_dir(&a.results)
        .with_context(|| format!("cannot read {}", a.results.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    paths.sort();

    let mut results: Vec<ExperimentResult> = Vec::new();
    let mut stats: Vec<(String, FilterStats)> = Vec::new();
    let mut timelines: Vec<(String, BTreeMap<NaiveDate, u64>)> = Vec::new();
    for path in paths.iter().filter(|p| p.is_file()) {
        let name = path.file_name().unwrap_or_default().to_string_lossy().to_string();
        if name.ends_with(".manifest.json") || name == "manifest.json" || name.starts_with('.') {
            continue;
        }
        if name.ends_with(".json") {
            let bytes = run.read(path)?;
            if let Ok(r) = serde_json::from_slice::<ExperimentResult>(&bytes) {
                results.push(r);
            } else if let Ok(s) = serde_json::from_slice::<FilterStats>(&bytes) {
                stats.push((strip_suffix(&strip_suffix(&name, ".json"), ".stats"), s));
            } else {
                run.warn(format!(
                    "{}: not a result or filter-stats file; skipped",
                    path.display()
                ));
            }
        } else if name.ends_with(".csv") {
            let bytes = run.read(path)?;
            match FeatureTable::read_csv(&bytes[..]) {
                Ok(t) => timelines.push((
                    strip_suffix(&strip_suffix(&name, ".csv"), ".features"),
                    t.rows.iter().map(|r| (r.date, r.tweet_count)).collect(),
                )),
                Err(_) => run.warn(format!("{}: not a feature table; skipped", path.display())),
            }
        }
    }
    if results.is_empty() && stats.is_empty() && timelines.is_empty() {
        return Err(Degenerate(format!(
            "no experiment results, filter statistics or feature tables in {}",
            a.results.display()
        ))
        .into());
    }

    let inputs = ReportInputs {
        results: &results,
        timelines: &timelines,
        filter_stats: &stats,
    };
    let has_domestic = results.iter().any(|r| r.is_domestic());
    let has_transfer = results.iter().any(|r| !r.is_domestic());
    let mut written = Vec::new();
    for layout in ReportLayout::ALL {
        let wanted = match layout {
            ReportLayout::DomesticTable => has_domestic,
            ReportLayout::TransferTable => has_transfer,
            ReportLayout::FrequencyTimeline => !timelines.is_empty(),
            ReportLayout::FilterStats => !stats.is_empty(),
        };
        if !wanted {
            continue;
        }
        for table in emit_report(&inputs, layout)? {
            let path = a.out.join(format!("{}.csv", table.name));
            run.stage(&path, table.to_csv().into_bytes());
            written.push(path.display().to_string());
        }
    }
    run.set_config(&serde_json::json!({ "tables": written }));
    for w in &written {
        eprintln!("wrote {w}");
    }
    run.commit(&a.out.join("manifest.json"))
}

#[derive(Debug, clap::Args)]
pub struct SynthArgs {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Days by which the second country's outbreak lags the first.
    #[arg(long, default_value_t = 10.0)]
    pub shift: f64,
}

fn synth(a: SynthArgs, seed: u64, mut run: Run) -> Result<()> {
    let (alpha, beta) = generate_pair(seed, a.shift);
    run.set_config(&serde_json::json!({ "shift": a.shift, "range": default_range() }));
    for g in [&alpha, &beta] {
        let name = &g.country.name;
        let mut tweets = Vec::new();
        write_tweet_jsonl(&g.tweets, &mut tweets)?;
        run.stage(&a.out.join(format!("{name}.jsonl")), tweets);
        let mut cases = Vec::new();
        write_case_csv_long(&g.cases, &mut cases)?;
        run.stage(&a.out.join(format!("{name}.cases.csv")), cases);
        run.stage_json(&a.out.join(format!("{name}.filter.json")), &g.filter);
    }
    let features = FeatureConfig {
        tweet_frequency: true,
        keywords: Some(alpha.keywords.clone()),
        embedding: Some(EmbeddingFeature {
            pooling: Pooling::Average,
            dim: None,
        }),
        utc_offset: Default::default(),
    };
    run.stage_json(&a.out.join("features.json"), &features);
    run.stage_json(
        &a.out.join("svr.json"),
        &SvrParams::default().with_kernel(KernelParams::linear()),
    );
    run.commit(&a.out.join("manifest.json"))
}
