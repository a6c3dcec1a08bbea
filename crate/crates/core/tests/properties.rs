//! Property tests across module boundaries.

use chrono::{Duration, NaiveDate, TimeZone, Utc};
use proptest::prelude::*;

use epialign::corpus::{
    cumulative_totals, derive_new_cases, filter_corpus, parse_case_csv_long, CaseMode, CaseSeries,
    FilterConfig, Tweet,
};
use epialign::experiment::{spearman, split_preset, Correlation};
use epialign::features::{
    build_feature_table, daily_keyword_counts, daily_tweet_frequency, mock_embed, read_embedding_store,
    write_embedding_store, EmbeddingFeature, EmbeddingSource, EmbeddingStore, FeatureConfig, KeywordSpec,
    MockEmbedder, Pooling,
};
use epialign::regress::{svr_fit, svr_fit_detailed, Gamma, KernelParams, SvrParams};
use epialign::{DateRange, DayOffset};

const WORDS: &[&str] = &[
    "casa",
    "lockdown",
    "Lockdown",
    "virus",
    "RT",
    "@amico",
    "https://x.it",
    "narnia",
    "",
    "oggi",
    "Città",
    "città",
];

fn march() -> DateRange {
    DateRange::new(
        NaiveDate::from_ymd_opt(2020, 3, 1).unwrap(),
        NaiveDate::from_ymd_opt(2020, 3, 7).unwrap(),
    )
    .unwrap()
}

fn tweet_strategy() -> impl Strategy<Value = Tweet> {
    (
        0u32..10_000,
        0i64..7 * 86_400,
        prop::sample::select(vec!["it", "en", "it-IT", ""]),
        prop::collection::vec(prop::sample::select(WORDS.to_vec()), 0..6),
        prop::option::of(any::<bool>()),
    )
        .prop_map(|(id, secs, lang, words, rt)| Tweet {
            id: id.to_string(),
            timestamp: Utc.with_ymd_and_hms(2020, 3, 1, 0, 0, 0).unwrap() + Duration::seconds(secs),
            lang: lang.into(),
            text: words.join(" "),
            is_retweet: rt,
        })
}

fn corpus() -> impl Strategy<Value = Vec<Tweet>> {
    // repeat some tweets so duplicates occur
    prop::collection::vec(tweet_strategy(), 0..60).prop_flat_map(|ts| {
        let n = ts.len();
        prop::collection::vec(0..n.max(1), 0..10).prop_map(move |picks| {
            let mut out = ts.clone();
            if n > 0 {
                out.extend(picks.iter().map(|&i| ts[i].clone()));
            }
            out
        })
    })
}

fn filter_config() -> FilterConfig {
    FilterConfig::new("it").with_lexicon(["narnia"])
}

proptest! {
    #[test]
    fn filter_is_idempotent_and_conserves_counts(tweets in corpus()) {
        let cfg = filter_config();
        let (kept, stats) = filter_corpus(&tweets, &cfg);
        prop_assert_eq!(stats.pre_count, tweets.len() as u64);
        prop_assert_eq!(stats.pre_count, stats.post_count + stats.total_removed());
        prop_assert_eq!(stats.post_count, kept.len() as u64);
        let (again, _) = filter_corpus(&kept, &cfg);
        prop_assert_eq!(&again, &kept);
    }

    #[test]
    fn filter_preserves_relative_order(tweets in corpus()) {
        let (kept, _) = filter_corpus(&tweets, &filter_config());
        let mut pos = 0;
        for k in &kept {
            let found = tweets[pos..].iter().position(|t| t == k);
            prop_assert!(found.is_some());
            pos += found.unwrap() + 1;
        }
    }

    #[test]
    fn new_cases_sum_back_to_totals(counts in prop::collection::vec(0i64..1_000_000, 1..60)) {
        let start = NaiveDate::from_ymd_opt(2020, 2, 1).unwrap();
        let series = CaseSeries::new("x", start, counts.clone(), CaseMode::Total).unwrap();
        let back = cumulative_totals(&derive_new_cases(&series).unwrap());
        prop_assert_eq!(back.counts, counts);
        prop_assert_eq!(back.mode, CaseMode::Total);
    }

    #[test]
    fn long_csv_spans_first_to_last_date(offsets in prop::collection::btree_set(0i64..80, 1..30)) {
        let start = NaiveDate::from_ymd_opt(2020, 2, 1).unwrap();
        let mut csv = String::from("date,country,total_cases\n");
        for (i, o) in offsets.iter().enumerate() {
            csv.push_str(&format!("{},x,{}\n", start + Duration::days(*o), i * 3));
        }
        let parsed = parse_case_csv_long(csv.as_bytes()).unwrap();
        let first = *offsets.iter().next().unwrap();
        let last = *offsets.iter().next_back().unwrap();
        prop_assert_eq!(parsed.series.len() as i64, last - first + 1);
    }

    #[test]
    fn feature_dimension_is_constant(
        tweets in prop::collection::vec(tweet_strategy(), 0..40),
        freq in any::<bool>(),
        n_kw in 0usize..3,
        emb_dim in prop::option::of(1usize..6),
    ) {
        prop_assume!(freq || n_kw > 0 || emb_dim.is_some());
        let keywords = (n_kw > 0).then(|| KeywordSpec::new(["lockdown", "virus", "casa"].into_iter().take(n_kw)).unwrap());
        let cfg = FeatureConfig {
            tweet_frequency: freq,
            keywords,
            embedding: emb_dim.map(|d| EmbeddingFeature { pooling: Pooling::Max, dim: Some(d) }),
            utc_offset: DayOffset::default(),
        };
        let source = emb_dim.map(|d| MockEmbedder::new(d).unwrap());
        let table = build_feature_table(&cfg, &tweets, source.as_ref().map(|s| s as &dyn EmbeddingSource), march()).unwrap();
        let want = usize::from(freq) + n_kw + emb_dim.unwrap_or(0);
        prop_assert_eq!(table.dim(), want);
        prop_assert_eq!(table.rows.len(), 7);
        prop_assert!(table.rows.iter().all(|r| r.x.len() == want));
    }

    #[test]
    fn keyword_counts_bounded_by_frequency(tweets in prop::collection::vec(tweet_strategy(), 0..60)) {
        let spec = KeywordSpec::new(["lockdown", "città", "virus"]).unwrap();
        let freq = daily_tweet_frequency(&tweets, march(), DayOffset::default());
        let kw = daily_keyword_counts(&tweets, &spec, march(), DayOffset::default());
        for (day, counts) in &kw {
            prop_assert!(counts.iter().all(|c| c <= &freq[day]));
        }
    }

    #[test]
    fn store_round_trip_is_bit_exact(
        dim in 1usize..8,
        raw in prop::collection::vec(prop::collection::vec(any::<u32>(), 8), 0..10),
    ) {
        let mut store = EmbeddingStore::new(dim).unwrap();
        for (i, bits) in raw.iter().enumerate() {
            let v: Vec<f32> = bits[..dim]
                .iter()
                .map(|b| f32::from_bits(*b))
                .map(|f| if f.is_finite() { f } else { 0.5 })
                .collect();
            store.insert(format!("id{i}"), v).unwrap();
        }
        let mut bytes = Vec::new();
        write_embedding_store(&store, &mut bytes).unwrap();
        let back = read_embedding_store(&bytes[..]).unwrap().store;
        prop_assert_eq!(back.len(), store.len());
        for (id, v) in store.iter() {
            let w = back.get(id).unwrap();
            prop_assert!(v.iter().zip(w).all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }

    #[test]
    fn mock_embedding_is_pure(text in "\\PC{0,30}", dim in 1usize..32) {
        prop_assert_eq!(mock_embed(&text, dim), mock_embed(&text, dim));
    }
}

// ---------------------------------------------------------------- regression

fn kernels() -> impl Strategy<Value = KernelParams> {
    prop_oneof![
        Just(KernelParams::linear()),
        (0.1f64..2.0).prop_map(|g| KernelParams::rbf(Gamma::Value(g))),
        Just(KernelParams::rbf(Gamma::Scale)),
        ((0.1f64..1.0), (0.0f64..1.0), 2u32..4).prop_map(|(g, c, d)| KernelParams::polynomial(
            Gamma::Value(g),
            c,
            d
        )),
        ((0.05f64..0.5), (-0.5f64..0.5)).prop_map(|(g, c)| KernelParams::sigmoid(Gamma::Value(g), c)),
    ]
}

fn dataset() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
    (2usize..14, 1usize..4).prop_flat_map(|(n, d)| {
        (
            prop::collection::vec(prop::collection::vec(-5.0f64..5.0, d), n),
            prop::collection::vec(-10.0f64..10.0, n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dual_feasibility_and_kkt((x, y) in dataset(), kernel in kernels(), c in 0.1f64..10.0) {
        let params = SvrParams::default().with_kernel(kernel).with_c(c);
        let fit = svr_fit_detailed(&x, &y, &params).unwrap();
        let n = y.len();
        let m = &fit.model;
        prop_assert!(m.dual_coefs.iter().all(|v| v.abs() <= c + 1e-9));
        prop_assert!(m.dual_coefs.iter().sum::<f64>().abs() <= 1e-8 * c * n as f64);
        prop_assert!(m.converged);

        // independent KKT recomputation from alpha, alpha*
        let sol = &fit.solution;
        let k = &fit.gram;
        let ys = &fit.standardized_y;
        let eps = params.epsilon;
        let (mut up, mut low) = (f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..n {
            let kt: f64 = (0..n).map(|j| k[i * n + j] * (sol.alpha[j] - sol.alpha_star[j])).sum();
            let g = kt + eps - ys[i];
            if sol.alpha[i] < c { up = up.max(-g); }
            if sol.alpha[i] > 0.0 { low = low.min(-g); }
            let g = -kt + eps + ys[i];
            if sol.alpha_star[i] > 0.0 { up = up.max(g); }
            if sol.alpha_star[i] < c { low = low.min(g); }
        }
        prop_assert!(up - low <= params.tol, "violation {}", up - low);
    }

    #[test]
    fn objective_trace_never_decreases((x, y) in dataset(), kernel in kernels()) {
        let fit = svr_fit_detailed(&x, &y, &SvrParams::default().with_kernel(kernel)).unwrap();
        let trace = &fit.solution.trace;
        prop_assert!(!trace.is_empty());
        for w in trace.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-12 * w[0].abs().max(1.0), "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn row_order_does_not_matter(
        (x, y) in dataset(),
        kernel in kernels(),
        perm_seed in any::<u64>(),
    ) {
        let n = y.len();
        let mut order: Vec<usize> = (0..n).collect();
        // Fisher-Yates with a splitmix-style stream
        let mut s = perm_seed;
        for i in (1..n).rev() {
            s = s.wrapping_add(0x9e37_79b9_7f4a_7c15);
            let j = ((s ^ (s >> 31)).wrapping_mul(0xbf58_476d_1ce4_e5b9) % (i as u64 + 1)) as usize;
            order.swap(i, j);
        }
        let px: Vec<Vec<f64>> = order.iter().map(|&i| x[i].clone()).collect();
        let py: Vec<f64> = order.iter().map(|&i| y[i]).collect();
        let params = SvrParams::default().with_kernel(kernel).with_tol(1e-9);
        let a = svr_fit(&x, &y, &params).unwrap();
        let b = svr_fit(&px, &py, &params).unwrap();
        for row in &x {
            let (pa, pb) = (a.predict(row).unwrap(), b.predict(row).unwrap());
            prop_assert!((pa - pb).abs() <= 1e-6, "{pa} vs {pb}");
        }
    }

    #[test]
    fn feature_rescaling_is_absorbed(
        (x, y) in dataset(),
        rbf in any::<bool>(),
        col in 0usize..3,
        factor in prop_oneof![Just(10.0), Just(0.1), Just(-3.0)],
    ) {
        let col = col % x[0].len();
        let kernel = if rbf { KernelParams::rbf(Gamma::Scale) } else { KernelParams::linear() };
        // at the default tolerance, ulp-level input changes can end SMO at a
        // different point of the tolerance band
        let params = SvrParams::default().with_kernel(kernel).with_tol(1e-9);
        let scaled: Vec<Vec<f64>> = x
            .iter()
            .map(|r| { let mut r = r.clone(); r[col] *= factor; r })
            .collect();
        let a = svr_fit(&x, &y, &params).unwrap();
        let b = svr_fit(&scaled, &y, &params).unwrap();
        for (r, s) in x.iter().zip(&scaled) {
            let (pa, pb) = (a.predict(r).unwrap(), b.predict(s).unwrap());
            prop_assert!((pa - pb).abs() <= 1e-6, "{pa} vs {pb}");
        }
    }

    #[test]
    fn realizable_linear_data_fits_within_tube(
        xs in prop::collection::btree_set(-500i32..500, 2..20),
        slope in -5.0f64..5.0,
        intercept in -10.0f64..10.0,
    ) {
        prop_assume!(slope.abs() > 1e-3);
        let x: Vec<Vec<f64>> = xs.iter().map(|v| vec![*v as f64 / 10.0]).collect();
        let y: Vec<f64> = x.iter().map(|r| slope * r[0] + intercept).collect();
        let params = SvrParams::default()
            .with_kernel(KernelParams::linear())
            .with_c(100.0)
            .with_epsilon(0.05);
        let m = svr_fit(&x, &y, &params).unwrap();
        // epsilon and tol are in standardized target units
        let bound = (params.epsilon + params.tol) * m.scaler.target_scale;
        for (r, t) in x.iter().zip(&y) {
            let p = m.predict(r).unwrap();
            prop_assert!((p - t).abs() <= bound + 1e-9, "residual {} > {bound}", (p - t).abs());
        }
    }
}

// ---------------------------------------------------------------- experiment

fn varied(min_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-50i32..50, min_len..40)
        .prop_filter("needs two distinct values", |v| v.iter().any(|x| *x != v[0]))
        .prop_map(|v| v.into_iter().map(f64::from).collect())
}

proptest! {
    #[test]
    fn spearman_basic_identities(a in varied(2)) {
        prop_assert_eq!(spearman(&a, &a).unwrap(), Correlation::Defined(1.0));
        let neg: Vec<f64> = a.iter().map(|v| -v).collect();
        let r = spearman(&a, &neg).unwrap().value().unwrap();
        prop_assert!((r + 1.0).abs() <= 1e-12, "{r}");
    }

    #[test]
    fn spearman_symmetric_bounded_and_rank_only(
        (a, b) in (2usize..40).prop_flat_map(|n| (
            prop::collection::vec(-20i32..20, n),
            prop::collection::vec(-20i32..20, n),
        )),
    ) {
        let a: Vec<f64> = a.into_iter().map(f64::from).collect();
        let b: Vec<f64> = b.into_iter().map(f64::from).collect();
        let r = spearman(&a, &b).unwrap();
        prop_assert_eq!(r, spearman(&b, &a).unwrap());
        if let Some(v) = r.value() {
            prop_assert!(v.abs() <= 1.0 + 1e-12);
        }
        let fa: Vec<f64> = a.iter().map(|x| x.powi(3) + 0.5 * x).collect();
        prop_assert_eq!(spearman(&fa, &b).unwrap(), r);
    }
}

#[test]
fn presets_are_mutually_consistent() {
    let get = |n: &str| split_preset(n).unwrap();
    let mut union = get("II").train_dates();
    union.extend(get("IV").train_dates());
    union.sort();
    union.dedup();
    assert_eq!(get("I").train_dates(), union);
    let ii_test = get("II").test_dates();
    assert!(get("III").test_dates().iter().all(|d| ii_test.contains(d)));
}
