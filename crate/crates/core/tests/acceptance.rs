//! Acceptance checks, one line per criterion.
//!
//! Runs with its own harness so the verdicts are always printed. Criteria
//! that need the converted published corpus read it from
//! `TIMBRE_CORPUS_DIR` and report BLOCKED when it is not set.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use ndarray::{Array1, Array2, ArrayD, IxDyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use timbre_align::align::{Metric, MetricConfig};
use timbre_align::block::SymmetricBlock;
use timbre_align::dataset::{corpus_stats, load_corpus, load_corpus_with, Rating, TimbreDataset};
use timbre_align::distances::{cosine, l1, l2, poincare, DistanceKind};
use timbre_align::evaluate::{
    evaluate, score_corpus, AudioFeature, AudioFeatureSource, EvalPlan, InMemorySource,
    RepresentationSource,
};
use timbre_align::exec::with_threads;
use timbre_align::features::Representation;
use timbre_align::lengths::{check_applicable, time_average, LengthStrategy, SourceTraits};
use timbre_align::published::{self, lookup};
use timbre_align::style::{
    concat_style, gram_style, style_embedding, FeatureMap, GramNorm, StyleKind,
};
use timbre_align::summary::summarize;
use timbre_align::Execution;

enum Verdict {
    Pass(String),
    Blocked(String),
}

type Check = fn() -> Verdict;

/// Block size with predicted and human pairs.
type PairBlock = (usize, Vec<(usize, usize, f64)>, Vec<(usize, usize, f64)>);

const CORPUS_ENV: &str = "TIMBRE_CORPUS_DIR";

fn corpus_dir() -> Option<PathBuf> {
    std::env::var_os(CORPUS_ENV).map(PathBuf::from)
}

fn corpus_accounting() -> Verdict {
    // Catalog arithmetic holds regardless of data availability.
    let n: usize = published::DATASETS.iter().map(|d| d.n_sounds).sum();
    let pairs: usize = published::DATASETS.iter().map(|d| d.full_pairs()).sum();
    assert_eq!((published::DATASETS.len(), n, pairs), (21, 334, 2614));
    let Some(dir) = corpus_dir() else {
        return Verdict::Blocked(format!("converted corpus not available (set {CORPUS_ENV})"));
    };
    let start = Instant::now();
    let corpus = load_corpus(&dir).expect("corpus loads");
    let elapsed = start.elapsed();
    let stats = corpus_stats(&corpus);
    assert_eq!(
        (stats.n_datasets, stats.n_samples, stats.n_ratings),
        (21, 334, 2614)
    );
    assert!(elapsed.as_secs_f64() < 1.0, "load took {elapsed:?}");
    Verdict::Pass(format!(
        "21 blocks, 334 samples, 2614 ratings in {elapsed:?}"
    ))
}

fn stimulus_table() -> Verdict {
    let Some(dir) = corpus_dir() else {
        return Verdict::Blocked(format!(
            "converted corpus audio not available (set {CORPUS_ENV})"
        ));
    };
    let corpus = load_corpus(&dir).expect("corpus loads");
    let rows = summarize(&corpus, Execution::default());
    let mut failures = Vec::new();
    let mut checked = 0;
    for row in &rows {
        let Some(reference) = lookup(&row.name) else {
            continue;
        };
        checked += 1;
        let len = row.length.expect("lengths measured");
        if (len.mean - reference.length.mean).abs() > 0.01 + 1e-9 {
            failures.push(format!(
                "{}: length mean {:.3} vs {}",
                row.name, len.mean, reference.length.mean
            ));
        }
        if let Some(std) = reference.length.std {
            if (len.std - std).abs() > 0.01 + 1e-9 {
                failures.push(format!("{}: length std {:.3} vs {std}", row.name, len.std));
            }
        }
        let loud = row.loudness.expect("loudness measured");
        if (loud.mean - reference.loudness.mean).abs() > 0.3 {
            failures.push(format!(
                "{}: loudness {:.2} vs {}",
                row.name, loud.mean, reference.loudness.mean
            ));
        }
    }
    assert!(checked > 0, "no dataset names match the published catalog");
    assert!(failures.is_empty(), "{}", failures.join("; "));
    Verdict::Pass(format!("{checked} datasets within tolerance"))
}

fn to_block(n: usize, pairs: &[(usize, usize, f64)]) -> SymmetricBlock {
    SymmetricBlock::from_pairs(n, pairs.iter().copied())
}

fn metric_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7133);
    let cfg = MetricConfig::default();
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for trial in 0..100 {
        // A corpus of 1 to 3 blocks; trial 0..100 covers 100+ datasets.
        let blocks: Vec<PairBlock> = (0..rng.gen_range(1..=3))
            .map(|_| {
                let n = rng.gen_range(3..=12);
                let missing = if rng.gen_bool(0.3) { 0.2 } else { 0.0 };
                let coarse_truth = rng.gen_bool(0.4);
                let truth = random_pairs(&mut rng, n, missing, coarse_truth);
                let coarse = rng.gen_bool(0.4);
                let pred = truth
                    .iter()
                    .map(|&(i, j, _)| {
                        (
                            i,
                            j,
                            if coarse {
                                rng.gen_range(0..5) as f64
                            } else {
                                rng.gen_range(0.0..3.0)
                            },
                        )
                    })
                    .collect();
                (n, truth, pred)
            })
            .filter(|b| !b.1.is_empty())
            .collect();
        if blocks.is_empty() {
            continue;
        }
        let engine = score_corpus(
            &blocks
                .iter()
                .enumerate()
                .map(|(k, (n, t, p))| (format!("d{k}"), to_block(*n, p), to_block(*n, t)))
                .collect::<Vec<_>>(),
            &Metric::ALL,
            &cfg,
        )
        .unwrap();
        let dense: Vec<(Dense, Dense)> = blocks
            .iter()
            .map(|(n, t, p)| (dense_from(*n, p), dense_from(*n, t)))
            .collect();
        let oracle = brute_corpus(&dense, cfg.triplet.margin);
        for (k, summary) in engine.iter().enumerate() {
            match (summary.aggregate, oracle[k]) {
                (Some(a), Some(b)) => {
                    worst = worst.max((a - b).abs());
                    assert!(
                        (a - b).abs() <= 1e-9,
                        "trial {trial} {}: {a} vs {b}",
                        summary.metric
                    );
                }
                (a, b) => assert_eq!(a.is_some(), b.is_some(), "trial {trial} {}", summary.metric),
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0);
    Verdict::Pass(format!(
        "100 random corpora, max deviation {worst:.1e}, {elapsed:?}"
    ))
}

fn perfect_and_adversarial() -> Verdict {
    let n = 7;
    let truth: Vec<(usize, usize, f64)> = (0..n)
        .flat_map(|i| {
            (i + 1..n).map(move |j| (i, j, ((i * 5 + j * 3) % 11) as f64 + 0.1 * j as f64))
        })
        .collect();
    let gt = to_block(n, &truth);
    let (scaled, _) = gt.rescaled().unwrap();
    let blocks = [("p".to_string(), scaled.clone(), gt.clone())];
    let perfect = score_corpus(&blocks, &Metric::ALL, &MetricConfig::default()).unwrap();
    for s in &perfect {
        let want = if s.metric == Metric::Mae { 0.0 } else { 1.0 };
        assert_eq!(s.aggregate, Some(want), "{}", s.metric);
    }
    let inverse = scaled.map(|v| 1.0 - v);
    let blocks = [("a".to_string(), inverse, gt)];
    let adversarial = score_corpus(&blocks, &Metric::ALL, &MetricConfig::default()).unwrap();
    let get = |m: Metric| {
        adversarial
            .iter()
            .find(|s| s.metric == m)
            .unwrap()
            .aggregate
            .unwrap()
    };
    assert_eq!(get(Metric::Kendall), -1.0);
    assert_eq!(get(Metric::Spearman), -1.0);
    assert_eq!(get(Metric::Triplet), 0.0);
    Verdict::Pass("identity: MAE 0, ranks 1; inverse: tau -1, rho -1, triplets 0".into())
}

fn triplet_margin() -> Verdict {
    let cfg = timbre_align::align::TripletConfig { margin: 0.1 };
    let triplets = timbre_align::align::extract_triplets(&[0.0, 0.5, 0.55], &cfg);
    assert_eq!(triplets.len(), 2);
    assert_eq!(
        brute_triplet(&[(0.0, 0.0), (1.0, 0.5), (2.0, 0.55)], 0.1)
            .unwrap()
            .1,
        2
    );
    Verdict::Pass("[0, 0.5, 0.55] at margin 0.1 gives 2 triplets".into())
}

fn monotone_invariance() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.gen_range(4..=12);
        let truth = random_pairs(&mut rng, n, 0.1, false);
        if truth.is_empty() {
            continue;
        }
        let pred: Vec<_> = truth
            .iter()
            .map(|&(i, j, _)| (i, j, rng.gen_range(-2.0..2.0)))
            .collect();
        let warped: Vec<_> = pred
            .iter()
            .map(|&(i, j, x)| (i, j, x * x * x + x))
            .collect();
        let metrics = [
            Metric::Kendall,
            Metric::Spearman,
            Metric::Ndcg,
            Metric::Triplet,
        ];
        let cfg = MetricConfig::default();
        let a = score_corpus(
            &[("x".into(), to_block(n, &pred), to_block(n, &truth))],
            &metrics,
            &cfg,
        )
        .unwrap();
        let b = score_corpus(
            &[("x".into(), to_block(n, &warped), to_block(n, &truth))],
            &metrics,
            &cfg,
        )
        .unwrap();
        for (x, y) in a.iter().zip(&b) {
            let d = (x.aggregate.unwrap_or(0.0) - y.aggregate.unwrap_or(0.0)).abs();
            worst = worst.max(d);
            assert!(d <= 1e-12, "{}: {d}", x.metric);
        }
    }
    Verdict::Pass(format!("x^3 + x on 50 fixtures, max change {worst:.1e}"))
}

fn style_algebra() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let layers: Vec<FeatureMap> = (0..rng.gen_range(1..=4))
            .map(|k| {
                let (c, s) = (rng.gen_range(1..=12), rng.gen_range(1..=30));
                FeatureMap::new(
                    Array2::from_shape_fn((c, s), |_| rng.gen_range(-3.0..3.0)),
                    format!("l{k}"),
                )
                .unwrap()
            })
            .collect();
        for fm in &layers {
            let g = gram_style(fm, GramNorm::Positions);
            assert_eq!(g, g.t());
            let rows: Vec<Vec<f64>> = g.outer_iter().map(|r| r.to_vec()).collect();
            let min = symmetric_eigenvalues(&rows)
                .into_iter()
                .fold(f64::INFINITY, f64::min);
            assert!(min >= -1e-9, "eigenvalue {min}");

            let mut perm: Vec<usize> = (0..fm.positions()).collect();
            perm.reverse();
            perm.rotate_left(rng.gen_range(0..fm.positions()));
            let shuffled = FeatureMap::new(fm.data().select(ndarray::Axis(1), &perm), "p").unwrap();
            for kind in [StyleKind::Gatys, StyleKind::Huang] {
                let a = style_embedding(fm, kind, GramNorm::Positions).data;
                let b = style_embedding(&shuffled, kind, GramNorm::Positions).data;
                assert!(
                    a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()),
                    "{kind:?} not permutation exact"
                );
            }
        }
        let sq: usize = layers.iter().map(|l| l.channels() * l.channels()).sum();
        let twice: usize = layers.iter().map(|l| 2 * l.channels()).sum();
        let stack = |kind| {
            concat_style(
                &layers
                    .iter()
                    .map(|l| style_embedding(l, kind, GramNorm::Positions))
                    .collect::<Vec<_>>(),
            )
            .unwrap()
        };
        assert_eq!(stack(StyleKind::Gatys).data.len(), sq);
        assert_eq!(stack(StyleKind::Huang).data.len(), twice);
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0);
    Verdict::Pass(format!(
        "symmetry, PSD, exact permutation invariance, shape laws; {elapsed:?}"
    ))
}

fn distance_suite() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let tol = 1e-9;
    for _ in 0..1000 {
        let dim = rng.gen_range(1..=8);
        let mut point = |r: f64| -> Vec<f64> { (0..dim).map(|_| rng.gen_range(-r..r)).collect() };
        let (x, y, z) = (point(2.0), point(2.0), point(2.0));
        for d in [l1, l2] {
            assert!(d(&x, &y).unwrap() >= 0.0);
            assert_eq!(d(&x, &x).unwrap(), 0.0);
            assert_eq!(d(&x, &y).unwrap(), d(&y, &x).unwrap());
            assert!(d(&x, &z).unwrap() <= d(&x, &y).unwrap() + d(&y, &z).unwrap() + tol);
        }
        let scale = 0.9 / (dim as f64).sqrt() / 2.0;
        let inside = |v: &[f64]| v.iter().map(|a| a * scale).collect::<Vec<_>>();
        let (px, py, pz) = (inside(&x), inside(&y), inside(&z));
        assert!(poincare(&px, &py).unwrap() >= 0.0);
        assert_eq!(poincare(&px, &px).unwrap(), 0.0);
        assert!((poincare(&px, &py).unwrap() - poincare(&py, &px).unwrap()).abs() <= tol);
        assert!(
            poincare(&px, &pz).unwrap()
                <= poincare(&px, &py).unwrap() + poincare(&py, &pz).unwrap() + tol
        );
        let origin = vec![0.0; dim];
        let norm = px.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!((poincare(&origin, &px).unwrap() - 2.0 * norm.atanh()).abs() <= tol);
        let c = cosine(&x, &y).unwrap();
        assert!((-1e-12..=2.0 + 1e-12).contains(&c));
    }
    assert!(cosine(&[0.0, 0.0], &[1.0, 0.0]).is_err());

    // Zero vectors drop out of cosine evaluation; other distances keep them.
    let refs = (0..3).map(|k| PathBuf::from(format!("{k}.wav"))).collect();
    let ds = TimbreDataset::new(
        "z",
        refs,
        vec![Rating(0, 1, 1.0), Rating(0, 2, 2.0), Rating(1, 2, 3.0)],
    )
    .unwrap();
    let src = InMemorySource::from_vectors(
        "v",
        &[("z", vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 2.0]])],
    )
    .unwrap();
    let plan = EvalPlan {
        distances: vec![DistanceKind::Cosine, DistanceKind::L2],
        metrics: vec![Metric::Mae],
        ..EvalPlan::default()
    };
    let report = evaluate(&[ds], &[&src], &plan);
    let cos = report.slice("v", "fixed", DistanceKind::Cosine).unwrap();
    let euc = report.slice("v", "fixed", DistanceKind::L2).unwrap();
    assert_eq!((cos.pairs_skipped, euc.pairs_skipped), (2, 0));
    assert_eq!(cos.metric(Metric::Mae).unwrap().evaluated, 1);
    assert!(!report.warnings.is_empty());
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0);
    Verdict::Pass(format!(
        "1000 random triples, Poincare closed form, zero-vector skip; {elapsed:?}"
    ))
}

fn length_contract() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let wave = tone(0.3, 44_100, 261.6, 4);
    let file = dir.path().join("x.wav");
    timbre_align::audio::encode_wav(&file, &wave, timbre_align::audio::WavEncoding::Float32)
        .unwrap();
    let short = dir.path().join("short.wav");
    timbre_align::audio::encode_wav(
        &short,
        &tone(0.2, 44_100, 261.6, 2),
        timbre_align::audio::WavEncoding::Float32,
    )
    .unwrap();
    // Sample 0 and 1 are the same audio; sample 2 is shorter.
    let ds = TimbreDataset::new(
        "self",
        vec![file.clone(), file, short],
        vec![Rating(0, 1, 0.0), Rating(0, 2, 1.0), Rating(1, 2, 1.0)],
    )
    .unwrap();
    let plan = EvalPlan {
        strategies: vec![LengthStrategy::DynamicPad],
        distances: DistanceKind::ALL.to_vec(),
        metrics: vec![Metric::Mae],
        ..EvalPlan::default()
    };
    for feature in [AudioFeature::mfcc(), AudioFeature::mss()] {
        let src = AudioFeatureSource::new(feature.clone());
        let report = evaluate(std::slice::from_ref(&ds), &[&src], &plan);
        for d in [DistanceKind::L1, DistanceKind::L2] {
            let mae = report
                .slice(feature.name(), "dynamic", d)
                .unwrap()
                .metric(Metric::Mae)
                .unwrap();
            // Truth rescales to [0, 1, 1]; d(x, x) = 0 rescales to 0 exactly.
            let per_dataset = mae.datasets[0].score.unwrap();
            assert_eq!(per_dataset, 0.0, "{} {d}", feature.name());
        }
    }

    // Single-frame embeddings refuse time averaging and dynamic padding.
    let single = SourceTraits {
        framed: false,
        fixed_window: Some(10.0),
    };
    assert!(check_applicable(LengthStrategy::TimeAverage, &single, "clap").is_err());
    assert!(check_applicable(LengthStrategy::DynamicPad, &single, "clap").is_err());
    let clap = Representation::new(ArrayD::from_elem(IxDyn(&[512]), 0.1), None, "clap").unwrap();
    assert!(time_average(&clap).is_err());

    // 10 or 20 scores per representation under the default plan.
    let refs: Vec<PathBuf> = (0..4).map(|k| PathBuf::from(format!("{k}.wav"))).collect();
    let ratings = vec![
        Rating(0, 1, 1.0),
        Rating(0, 2, 2.0),
        Rating(0, 3, 3.0),
        Rating(1, 2, 1.5),
        Rating(1, 3, 2.5),
        Rating(2, 3, 0.5),
    ];
    let ds = TimbreDataset::new("four", refs, ratings).unwrap();
    let mut framed = InMemorySource::new(
        "framed",
        SourceTraits {
            framed: true,
            fixed_window: None,
        },
    );
    let mut unframed = InMemorySource::new("unframed", single);
    for k in 0..4 {
        let frames = Array2::from_shape_fn((3, 2 + k), |(c, t)| (c * 7 + t * (k + 1)) as f64 + 1.0);
        framed.insert(
            "four",
            k,
            Representation::new(frames.into_dyn(), Some(1), "framed").unwrap(),
        );
        framed.set_len("four", k, 2 + k);
        let v = Array1::from_shape_fn(5, |c| (c * (k + 2)) as f64 + 1.0);
        unframed.insert(
            "four",
            k,
            Representation::new(v.into_dyn(), None, "unframed").unwrap(),
        );
    }
    let report = evaluate(&[ds], &[&framed, &unframed], &EvalPlan::default());
    assert_eq!(report.score_count("framed"), 20);
    assert_eq!(report.score_count("unframed"), 10);
    Verdict::Pass(
        "d(x,x) = 0 for MFCC and MSS; avg refused for single-frame; 20 / 10 scores".into(),
    )
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    write_audio_corpus(dir.path(), 2, 5);
    let corpus = load_corpus_with(dir.path(), true).unwrap();
    let plan = EvalPlan {
        distances: DistanceKind::ALL.to_vec(),
        ..EvalPlan::default()
    };
    let run = |threads| {
        let mfcc = AudioFeatureSource::new(AudioFeature::mfcc());
        let mss = AudioFeatureSource::new(AudioFeature::mss());
        let sources: [&dyn RepresentationSource; 2] = [&mfcc, &mss];
        with_threads(Some(threads), || {
            evaluate(&corpus, &sources, &plan).to_json_string()
        })
        .unwrap()
    };
    let one = run(1);
    let eight = run(8);
    assert_eq!(one, eight);
    let seq = EvalPlan {
        execution: Execution::Sequential,
        ..plan.clone()
    };
    let mfcc = AudioFeatureSource::new(AudioFeature::mfcc());
    let mss = AudioFeatureSource::new(AudioFeature::mss());
    assert_eq!(
        evaluate(&corpus, &[&mfcc, &mss], &seq).to_json_string(),
        one
    );
    Verdict::Pass(format!(
        "{} byte report identical at 1 and 8 threads and sequentially",
        one.len()
    ))
}

fn main() -> ExitCode {
    let checks: [(&str, Check); 10] = [
        ("corpus accounting", corpus_accounting),
        ("stimulus table reproduction", stimulus_table),
        ("metric oracle equivalence", metric_oracle),
        ("perfect/adversarial fixtures", perfect_and_adversarial),
        ("triplet margin semantics", triplet_margin),
        ("monotone invariance", monotone_invariance),
        ("style-embedding algebra", style_algebra),
        ("distance suite", distance_suite),
        ("length-strategy contract", length_contract),
        ("determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (name, check) in checks {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        match catch_unwind(AssertUnwindSafe(check)) {
            Ok(Verdict::Pass(detail)) => println!("PASS     {name}: {detail}"),
            Ok(Verdict::Blocked(reason)) => println!("BLOCKED  {name}: {reason}"),
            Err(e) => {
                failed += 1;
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                println!("FAIL     {name}: {msg}");
            }
        }
    }
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
