//! Seeded synthetic corpora for tests and demos.
//!
//! Each country gets a logistic outbreak curve of cumulative cases. Daily
//! keyword and background tweet volumes grow with the square root of the
//! epidemic's progress, with multiplicative uniform noise, so features are a
//! noisy monotone function of reported cases. A fraction of extra tweets is
//! junk that the filter chain should remove.

use chrono::{Duration, NaiveDate, TimeZone, Utc};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{CaseMode, CaseSeries, FilterConfig, Tweet};
use crate::dates::DateRange;
use crate::features::KeywordSpec;

/// Cumulative cases `peak / (1 + exp(-growth * (day - onset)))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutbreakCurve {
    pub peak_total: f64,
    /// Day index (from the start of the range) of the inflection point.
    pub onset_day: f64,
    pub growth: f64,
}

impl OutbreakCurve {
    pub fn total_at(&self, day: usize) -> i64 {
        (self.peak_total / (1.0 + (-self.growth * (day as f64 - self.onset_day)).exp())).round() as i64
    }

    /// Fraction of the eventual total reached by `day`, in (0, 1).
    pub fn progress(&self, day: usize) -> f64 {
        1.0 / (1.0 + (-self.growth * (day as f64 - self.onset_day)).exp())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticCountry {
    pub name: String,
    /// Language tag on the country's tweets; `it` and `es` have their own
    /// vocabularies, anything else uses an English one.
    pub language: String,
    pub curve: OutbreakCurve,
    /// Mean keyword tweets per day once the outbreak has fully developed.
    pub keyword_per_day: f64,
    /// Mean background tweets per day before the outbreak.
    pub background_per_day: f64,
    /// Half-width of the multiplicative uniform noise on daily volumes.
    pub noise: f64,
    /// Junk tweets per day as a fraction of the clean volume.
    pub junk_rate: f64,
}

impl SyntheticCountry {
    /// Defaults tuned to a Feb–Apr 2020 window with the inflection in
    /// mid-March.
    pub fn new(name: impl Into<String>, language: impl Into<String>, onset_day: f64) -> Self {
        Self {
            name: name.into(),
            language: language.into(),
            curve: OutbreakCurve {
                peak_total: 200_000.0,
                onset_day,
                growth: 0.15,
            },
            keyword_per_day: 400.0,
            background_per_day: 150.0,
            noise: 0.05,
            junk_rate: 0.2,
        }
    }
}

/// A generated country: raw (unfiltered) tweets, reported totals and the
/// matching filter and keyword configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub country: SyntheticCountry,
    pub tweets: Vec<Tweet>,
    pub cases: CaseSeries,
    pub filter: FilterConfig,
    pub keywords: KeywordSpec,
}

pub const KEYWORD: &str = "lockdown";
const OTHER_COUNTRY: &str = "narnia";

struct Vocab {
    common: &'static [&'static str],
    outbreak: &'static [&'static str],
}

fn vocab(language: &str) -> Vocab {
    match language {
        "it" => Vocab {
            common: &[
                "oggi", "domani", "casa", "lavoro", "amici", "pizza", "sole", "pioggia", "treno", "scuola",
                "calcio", "musica", "film", "libro", "caffè", "mare", "città", "strada", "festa", "cena",
                "pranzo", "famiglia", "gatto", "cane", "giardino", "mercato",
            ],
            outbreak: &[
                "quarantena",
                "mascherina",
                "ospedale",
                "contagi",
                "restiamo",
                "virus",
                "chiusura",
                "decreto",
                "tampone",
                "distanza",
            ],
        },
        "es" => Vocab {
            common: &[
                "hoy",
                "mañana",
                "casa",
                "trabajo",
                "amigos",
                "playa",
                "sol",
                "lluvia",
                "tren",
                "escuela",
                "fútbol",
                "música",
                "película",
                "libro",
                "café",
                "mar",
                "ciudad",
                "calle",
                "fiesta",
                "cena",
                "comida",
                "familia",
                "gato",
                "perro",
                "jardín",
                "mercado",
            ],
            outbreak: &[
                "cuarentena",
                "mascarilla",
                "hospital",
                "contagios",
                "quédate",
                "virus",
                "cierre",
                "decreto",
                "prueba",
                "distancia",
            ],
        },
        _ => Vocab {
            common: &[
                "today", "tomorrow", "home", "work", "friends", "beach", "sun", "rain", "train", "school",
                "football", "music", "movie", "book", "coffee", "sea", "city", "street", "party", "dinner",
                "lunch", "family", "cat", "dog", "garden", "market",
            ],
            outbreak: &[
                "quarantine",
                "mask",
                "hospital",
                "infections",
                "stayhome",
                "virus",
                "closure",
                "decree",
                "testing",
                "distancing",
            ],
        },
    }
}

fn noisy_count(rng: &mut ChaCha8Rng, mean: f64, noise: f64) -> usize {
    let factor = 1.0 + noise * (2.0 * rng.random::<f64>() - 1.0);
    (mean * factor).round().max(0.0) as usize
}

fn sentence(rng: &mut ChaCha8Rng, v: &Vocab, keyword: bool) -> String {
    let n = rng.random_range(5..=9);
    let mut words: Vec<&str> = (0..n)
        .map(|_| *v.common.choose(rng).expect("nonempty vocab"))
        .collect();
    if keyword {
        for _ in 0..2 {
            let at = rng.random_range(0..=words.len());
            words.insert(at, v.outbreak.choose(rng).expect("nonempty vocab"));
        }
        let at = rng.random_range(0..=words.len());
        words.insert(at, KEYWORD);
    }
    words.join(" ")
}

/// Generates one country over `range`. Identical inputs give identical
/// output.
pub fn generate_country(spec: &SyntheticCountry, range: DateRange, seed: u64) -> SyntheticCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = vocab(&spec.language);
    let mut tweets = Vec::new();
    let mut totals = Vec::with_capacity(range.len());

    for (day, date) in range.days().enumerate() {
        totals.push(spec.curve.total_at(day));
        let frac = spec.curve.progress(day).sqrt();
        let n_kw = noisy_count(&mut rng, 2.0 + spec.keyword_per_day * frac, spec.noise);
        let n_bg = noisy_count(&mut rng, spec.background_per_day * (1.0 + 0.5 * frac), spec.noise);
        let n_junk = ((n_kw + n_bg) as f64 * spec.junk_rate).round() as usize;

        let midnight = Utc.from_utc_datetime(&date.and_hms_opt(0, 0, 0).expect("midnight"));
        let mut day_tweets: Vec<Tweet> = Vec::with_capacity(n_kw + n_bg + n_junk);
        let stamp = |rng: &mut ChaCha8Rng, text: String, lang: &str, is_retweet: Option<bool>| Tweet {
            id: String::new(),
            timestamp: midnight + Duration::seconds(rng.random_range(0..86_400)),
            lang: lang.to_string(),
            text,
            is_retweet,
        };
        for i in 0..n_kw + n_bg {
            let text = sentence(&mut rng, &v, i < n_kw);
            day_tweets.push(stamp(&mut rng, text, &spec.language, None));
        }
        for _ in 0..n_junk {
            let keyword = rng.random_bool(0.5);
            let base = sentence(&mut rng, &v, keyword);
            let lang = spec.language.as_str();
            let t = match rng.random_range(0..6) {
                0 => stamp(&mut rng, format!("RT @someone {base}"), lang, Some(true)),
                1 => {
                    let page: u32 = rng.random();
                    stamp(&mut rng, format!("{base} https://example.org/{page}"), lang, None)
                }
                2 => stamp(&mut rng, base, "xx", None),
                3 => stamp(&mut rng, format!("{base} {OTHER_COUNTRY}"), lang, None),
                4 => stamp(&mut rng, "   ".into(), lang, None),
                _ => {
                    // exact repeat of an earlier clean post from the same day
                    let i = rng.random_range(0..(n_kw + n_bg).max(1));
                    let text = day_tweets.get(i).map(|t| t.text.clone()).unwrap_or(base);
                    stamp(&mut rng, text, lang, None)
                }
            };
            day_tweets.push(t);
        }
        day_tweets.sort_by_key(|t| t.timestamp);
        for (i, mut t) in day_tweets.into_iter().enumerate() {
            t.id = format!("{}-{}-{i:05}", spec.name, date.format("%Y%m%d"));
            tweets.push(t);
        }
    }

    let cases =
        CaseSeries::new(spec.name.clone(), range.start, totals, CaseMode::Total).expect("range is nonempty");
    let keywords = KeywordSpec {
        language: Some(spec.language.clone()),
        ..KeywordSpec::new([KEYWORD]).expect("valid keyword")
    };
    SyntheticCorpus {
        country: spec.clone(),
        tweets,
        cases,
        filter: FilterConfig::new(spec.language.clone()).with_lexicon([OTHER_COUNTRY]),
        keywords,
    }
}

/// Feb 1 – Apr 30 2020.
pub fn default_range() -> DateRange {
    DateRange::new(
        NaiveDate::from_ymd_opt(2020, 2, 1).expect("valid date"),
        NaiveDate::from_ymd_opt(2020, 4, 30).expect("valid date"),
    )
    .expect("ordered")
}

/// Two countries sharing the same generative link, the second with its
/// outbreak shifted `shift_days` later.
pub fn generate_pair(seed: u64, shift_days: f64) -> (SyntheticCorpus, SyntheticCorpus) {
    let range = default_range();
    let a = SyntheticCountry::new("alpha", "it", 40.0);
    let b = SyntheticCountry::new("beta", "it", 40.0 + shift_days);
    (
        generate_country(&a, range, seed),
        generate_country(&b, range, seed.wrapping_add(0x9e37_79b9_7f4a_7c15)),
    )
}
