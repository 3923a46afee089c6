//! Acceptance suite: one line per criterion, `PASS`, `FAIL` or `SKIP`.
//! Runs without the libtest harness so the lines always reach stdout.

mod common;
#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use common::*;
use hcd_core::calibration::{evaluate_hcd, HcdOptions, HcdRun};
use hcd_core::corpus::KeyField;
use hcd_core::geometry::{divergence_delta, k_sweep, knn_purity};
use hcd_core::lexmatch::{build_frequency_table, quantile_match, FrequencyScale, FrequencyTable, Lexicon, LexiconCategory};
use hcd_core::linalg::DenseMatrix;
use hcd_core::stats::{chi2_2x2, wilcoxon_signed_rank, Alternative};
use hcd_core::syntax::{extract_features, Feature, FeatureOptions};
use hcd_core::textmetrics::{lexical_entropy, logit_winsorize, tokenize, type_token_ratio, DEFAULT_EPSILON};
use hcd_eval::conllu;
use hcd_eval::corpus_io::SchemaMode;
use hcd_eval::lexfile;
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use support::{
    chi2_expected, gaussian, oracle_hcd, purity_bruteforce, quantile7, random_images, rng, to_corpus,
    wilcoxon_enumerated, ImageFixture, OracleModes,
};

enum Outcome {
    Pass(String),
    Skip(String),
}

type Criterion = fn() -> Outcome;

fn pass(detail: impl Into<String>) -> Outcome {
    Outcome::Pass(detail.into())
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

fn run_hcd(images: &[ImageFixture], options: HcdOptions) -> HcdRun {
    let (records, matrix) = to_corpus(images, "navigation");
    evaluate_hcd(&records, &matrix.normalize().unwrap(), options)
}

fn hcd_oracle_parity() -> Outcome {
    let mut r = rng(20240611);
    let fixtures: Vec<Vec<ImageFixture>> = (0..200).map(|_| random_images(&mut r)).collect();
    let modes = OracleModes { pairwise: false, lb_mean: false, ub_global: false };
    let start = Instant::now();
    let runs: Vec<HcdRun> = fixtures.iter().map(|f| run_hcd(f, HcdOptions::default())).collect();
    let elapsed = start.elapsed();
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    for (images, got) in fixtures.iter().zip(&runs) {
        for (i, expected) in oracle_hcd(images, modes).into_iter().enumerate() {
            let image_id = format!("img{i:02}");
            let rows: Vec<_> =
                got.records.iter().filter(|r| r.group.get(KeyField::ImageId) == Some(&image_id)).collect();
            let Some(models) = expected else {
                assert!(rows.is_empty(), "{image_id} should be excluded");
                continue;
            };
            assert_eq!(rows.len(), models.len());
            for row in rows {
                let o = models[row.group.get(KeyField::ModelName).unwrap()];
                for (a, b) in [(row.lb, o.lb), (row.ub, o.ub), (row.d_hm, o.d_hm), (row.hcd, o.hcd)] {
                    worst = worst.max((a - b).abs() / b.abs().max(1.0));
                    assert!(close(a, b, 1e-9), "{a} vs {b}");
                }
                checked += 1;
            }
        }
    }
    assert!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    pass(format!("{checked} pairs, max rel err {worst:.1e}, pipeline {:.0} ms", elapsed.as_secs_f64() * 1e3))
}

fn transform(images: &[ImageFixture], mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Vec<ImageFixture> {
    images
        .iter()
        .map(|im| ImageFixture {
            humans: im.humans.iter().map(|v| f(v)).collect(),
            models: im.models.iter().map(|(k, vs)| (k.clone(), vs.iter().map(|v| f(v)).collect())).collect(),
        })
        .collect()
}

fn max_hcd_difference(a: &HcdRun, b: &HcdRun) -> f64 {
    assert_eq!(a.records.len(), b.records.len());
    assert_eq!(a.excluded.len(), b.excluded.len());
    a.records
        .iter()
        .zip(&b.records)
        .flat_map(|(x, y)| {
            assert_eq!(x.group, y.group);
            [(x.lb, y.lb), (x.ub, y.ub), (x.d_hm, y.d_hm), (x.hcd, y.hcd)]
        })
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max)
}

fn hcd_invariances() -> Outcome {
    let mut r = rng(99);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let images = random_images(&mut r);
        let dim = images[0].humans[0].len();
        let q = DMatrix::from_iterator(dim, dim, gaussian(&mut r, dim * dim)).qr().q();
        let rotated = transform(&images, |v| (&q * DVector::from_column_slice(v)).as_slice().to_vec());
        let factors: Vec<f64> = (0..200).map(|_| r.random_range(0.01..100.0)).collect();
        let mut next = factors.iter().cycle();
        let scaled = transform(&images, |v| {
            let s = next.next().unwrap();
            v.iter().map(|x| x * s).collect()
        });
        let base = run_hcd(&images, HcdOptions::default());
        worst = worst.max(max_hcd_difference(&base, &run_hcd(&rotated, HcdOptions::default())));
        worst = worst.max(max_hcd_difference(&base, &run_hcd(&scaled, HcdOptions::default())));
    }
    assert!(worst <= 1e-9, "max difference {worst:e}");
    pass(format!("100 trials, max difference {worst:.1e}"))
}

fn wilcoxon_exactness() -> Outcome {
    let deltas: Vec<f64> = (1..=18).map(|i| 0.01 * i as f64).collect();
    let r = wilcoxon_signed_rank(&deltas, Alternative::TwoSided).unwrap();
    assert_eq!(r.statistic, 171.0);
    assert!(r.exact);
    assert!((r.p_value - 7.63e-6).abs() / 7.63e-6 < 0.01, "p = {}", r.p_value);

    // Reference table generated offline with an external statistics package.
    let table = fs::read_to_string(
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/stats/wilcoxon.tsv"),
    )
    .unwrap();
    let mut rows = 0;
    for line in table.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
        let (p, values) = line.split_once('\t').unwrap();
        let values: Vec<f64> = values.split(',').map(|v| v.parse().unwrap()).collect();
        if values.len() > 12 {
            continue;
        }
        let got = wilcoxon_signed_rank(&values, Alternative::TwoSided).unwrap();
        assert!((got.p_value - p.parse::<f64>().unwrap()).abs() < 1e-10, "{values:?}");
        rows += 1;
    }
    assert!(rows >= 20);
    // And random vectors against full sign enumeration.
    let mut g = rng(12);
    for _ in 0..200 {
        let n = g.random_range(1..=12);
        let values: Vec<f64> = (0..n).map(|_| (g.random_range(-20i32..=20) as f64) / 4.0).collect();
        if values.iter().all(|v| *v == 0.0) {
            continue;
        }
        let (v, p) = wilcoxon_enumerated(&values);
        let got = wilcoxon_signed_rank(&values, Alternative::TwoSided).unwrap();
        assert_eq!(got.statistic, v);
        assert!((got.p_value - p).abs() < 1e-10, "{values:?}: {} vs {p}", got.p_value);
    }
    pass(format!("V = 171, p = {:.4e}; {rows} reference rows and 200 enumerations agree", r.p_value))
}

fn ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("r{i:04}")).collect()
}

fn purity_correctness() -> Outcome {
    let mut r = rng(22);
    let dim = 8;
    let centers = [gaussian(&mut r, dim), gaussian(&mut r, dim)];
    let (mut points, mut labels) = (Vec::new(), Vec::new());
    for (c, center) in centers.iter().enumerate() {
        let norm = center.iter().map(|x| x * x).sum::<f64>().sqrt();
        for _ in 0..40 {
            let noise = gaussian(&mut r, dim);
            points.push(center.iter().zip(&noise).map(|(x, e)| 10.0 * x / norm + 0.05 * e).collect::<Vec<f64>>());
            labels.push(if c == 0 { "left" } else { "right" });
        }
    }
    let dist = |a: &Vec<f64>, b: &Vec<f64>| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let (mut intra, mut inter) = (0.0f64, f64::INFINITY);
    for i in 0..points.len() {
        for j in 0..i {
            if labels[i] == labels[j] {
                intra = intra.max(dist(&points[i], &points[j]));
            } else {
                inter = inter.min(dist(&points[i], &points[j]));
            }
        }
    }
    assert!(inter / intra >= 10.0, "separation ratio {}", inter / intra);
    let sweep = k_sweep(&DenseMatrix::from_rows(&points), &labels, &ids(80), &[0.1, 0.2, 0.3, 0.4, 0.5]).unwrap();
    assert!(sweep.iter().all(|p| p.purity == 1.0));

    let mut r = rng(21);
    for _ in 0..100 {
        let d = r.random_range(2..=6);
        let pts: Vec<Vec<f64>> = (0..30).map(|_| (0..d).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
        let mut labs: Vec<&str> = (0..30).map(|i| ["a", "b"][i % 2]).collect();
        labs.shuffle(&mut r);
        let id_list = ids(30);
        for f in [0.1, 0.2, 0.3, 0.4, 0.5] {
            let got = knn_purity(&DenseMatrix::from_rows(&pts), &labs, &id_list, f).unwrap().purity;
            assert_eq!(got, purity_bruteforce(&pts, &labs, &id_list, f));
        }
    }

    let mut r = rng(23);
    let n = 1000;
    let pts: Vec<Vec<f64>> = (0..n).map(|_| gaussian(&mut r, 10)).collect();
    let matrix = DenseMatrix::from_rows(&pts);
    let id_list = ids(n);
    let draw = |r: &mut rand_chacha::ChaCha8Rng| -> Vec<&str> {
        (0..n).map(|_| ["a", "b", "c", "d"][r.random_range(0..4)]).collect()
    };
    let samples: Vec<f64> =
        (0..30).map(|_| knn_purity(&matrix, &draw(&mut r), &id_list, 0.1).unwrap().purity).collect();
    let mean = samples.iter().sum::<f64>() / 30.0;
    let sd = (samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / 29.0).sqrt();
    let fresh = knn_purity(&matrix, &draw(&mut r), &id_list, 0.1).unwrap().purity;
    assert!((fresh - 0.25).abs() <= 3.0 * sd, "purity {fresh}, sd {sd}");
    pass(format!("separation {:.1}x pure at every k; 500 brute-force matches; random labels {fresh:.4} (sd {sd:.4})", inter / intra))
}

fn delta_arithmetic() -> Outcome {
    let d = divergence_delta(0.80, 0.91, 0.80, 0.82);
    assert!((d - 0.09).abs() <= 1e-15, "{d}");
    assert_eq!(hcd_eval::output::format_float(d), "0.09");
    pass(format!("delta = {}", hcd_eval::output::format_float(d)))
}

fn text_metrics() -> Outcome {
    let entropy = |s: &str| lexical_entropy(&tokenize(s).tokens).unwrap();
    assert_eq!(entropy("a b c d"), 2.0);
    let oracle = -(2.0f64 / 6.0) * (2.0f64 / 6.0).log2() - 4.0 * (1.0f64 / 6.0) * (1.0f64 / 6.0).log2();
    let e = entropy("the cat sat on the mat");
    assert!((e - 2.2516).abs() <= 1e-4 && (e - oracle).abs() < 1e-12, "{e}");
    assert_eq!(type_token_ratio(&tokenize("the cat the cat").tokens).unwrap(), 0.5);
    assert_eq!(logit_winsorize(0.5, DEFAULT_EPSILON).unwrap(), 0.0);
    pass(format!("entropy 2 / {e:.6} bits, ttr 0.5, logit(0.5) = 0"))
}

fn chi2_cramers_v() -> Outcome {
    let r = chi2_2x2(10, 20, 20, 10).unwrap();
    let oracle = chi2_expected(10.0, 20.0, 20.0, 10.0);
    assert!((r.test.statistic - 6.6667).abs() <= 1e-4 && (r.test.statistic - oracle).abs() < 1e-12);
    assert!((r.cramers_v - 0.3333).abs() <= 1e-4 && (r.cramers_v - (oracle / 60.0).sqrt()).abs() < 1e-12);
    let mut g = rng(13);
    let mut tables = 0;
    while tables < 1000 {
        let c: Vec<u64> = (0..4).map(|_| g.random_range(0..200)).collect();
        let Ok(x) = chi2_2x2(c[0], c[1], c[2], c[3]) else { continue };
        let y = chi2_2x2(c[2], c[3], c[0], c[1]).unwrap();
        assert!((x.test.statistic - y.test.statistic).abs() <= 1e-9 * x.test.statistic.max(1.0));
        assert!((x.cramers_v - y.cramers_v).abs() < 1e-12);
        assert!((0.0..=1.0).contains(&x.cramers_v));
        tables += 1;
    }
    pass(format!("chi2 = {:.4}, V = {:.4}; 1000 random tables symmetric with V in [0, 1]", r.test.statistic, r.cramers_v))
}

fn frequency_table(counts: &BTreeMap<String, u64>) -> FrequencyTable {
    let tokens: Vec<&str> = counts.iter().flat_map(|(t, c)| std::iter::repeat_n(t.as_str(), *c as usize)).collect();
    build_frequency_table(tokens).unwrap()
}

fn quantile_matching() -> Outcome {
    let mut r = rng(31);
    for _ in 0..500 {
        let n_target = r.random_range(1..=40);
        let n_candidates = r.random_range(1..=150);
        let out_size = r.random_range(1..=n_candidates.min(60));
        let mut counts = BTreeMap::new();
        let mut name = |prefix: &str, i: usize, r: &mut rand_chacha::ChaCha8Rng| {
            let t = format!("{prefix}{i:03}");
            counts.insert(t.clone(), r.random_range(1..300u64));
            t
        };
        let target: Vec<String> = (0..n_target).map(|i| name("t", i, &mut r)).collect();
        let candidates: Vec<String> = (0..n_candidates).map(|i| name("c", i, &mut r)).collect();
        let freq = frequency_table(&counts);
        let t = Lexicon::new("target", LexiconCategory::Custom, &target).unwrap();
        let c = Lexicon::new("pool", LexiconCategory::Custom, &candidates).unwrap();
        let out = quantile_match(&t, &c, &freq, out_size, FrequencyScale::Log).unwrap();
        let terms = out.lexicon.terms();
        assert_eq!(terms.len(), out_size);
        assert_eq!(terms.iter().collect::<BTreeSet<_>>().len(), out_size);
        assert!(terms.iter().all(|x| candidates.contains(x)));
        let again = quantile_match(&t, &c, &freq, out_size, FrequencyScale::Log).unwrap();
        assert_eq!(again.lexicon.terms(), terms);
        // Every step picks the closest remaining candidate to the target quantile.
        let values: Vec<f64> = target.iter().map(|x| freq.scaled(x, FrequencyScale::Log)).collect();
        for (j, step) in out.steps.iter().enumerate() {
            let q = (j as f64 + 0.5) / out_size as f64;
            assert!((step.target_value - quantile7(&values, q)).abs() < 1e-12);
        }
    }

    // Twins share a target's exact count (50..200); distractors never occur
    // in the reference corpus, so in log space they sit further from every
    // target quantile than any twin does.
    let mut r = rng(33);
    for _ in 0..50 {
        let n = r.random_range(1..=30);
        let mut counts = BTreeMap::new();
        let mut used = BTreeSet::new();
        let (mut target, mut candidates) = (Vec::new(), Vec::new());
        for i in 0..n {
            let mut c = r.random_range(50..200u64);
            while !used.insert(c) {
                c = r.random_range(50..200u64);
            }
            counts.insert(format!("t{i:02}"), c);
            counts.insert(format!("c{i:02}"), c);
            target.push(format!("t{i:02}"));
            candidates.push(format!("c{i:02}"));
        }
        let twins: BTreeSet<String> = candidates.iter().cloned().collect();
        candidates.extend((0..r.random_range(1..=40)).map(|i| format!("unseen{i:02}")));
        let freq = frequency_table(&counts);
        let t = Lexicon::new("target", LexiconCategory::Custom, &target).unwrap();
        let c = Lexicon::new("pool", LexiconCategory::Custom, &candidates).unwrap();
        let out = quantile_match(&t, &c, &freq, n, FrequencyScale::Log).unwrap();
        assert_eq!(out.lexicon.terms().iter().cloned().collect::<BTreeSet<_>>(), twins);
        let chosen: BTreeSet<u64> = out.steps.iter().map(|s| freq.count(&s.term)).collect();
        assert_eq!(chosen, target.iter().map(|x| counts[x]).collect::<BTreeSet<_>>());
    }
    pass("500 random pools sized, unique and deterministic; 50 exact-frequency pools matched one-for-one")
}

fn syntax_features() -> Outcome {
    let f = fixtures();
    let loaded = conllu::parse(&fs::read(f.join("syntax30.conllu")).unwrap(), "syntax30", SchemaMode::Strict).unwrap();
    assert_eq!(loaded.sentences.len(), 30);
    let terms = lexfile::read_terms(&fs::read(f.join("affordance.txt")).unwrap()).unwrap();
    let lexicon = Lexicon::new("affordance", LexiconCategory::Custom, &terms).unwrap();
    let options = FeatureOptions::default();
    let mut got = BTreeMap::new();
    for s in &loaded.sentences {
        for row in extract_features(s, &lexicon, &options) {
            got.insert((row.sentence_id.clone(), row.token_id), (row.term.clone(), row.values));
        }
    }
    let mut gold = BTreeMap::new();
    for line in fs::read_to_string(f.join("syntax30.gold.tsv")).unwrap().lines().filter(|l| !l.starts_with('#')) {
        let c: Vec<&str> = line.split('\t').collect();
        let values: [bool; 6] = std::array::from_fn(|i| c[3 + i] == "1");
        gold.insert((c[0].to_string(), c[1].parse::<usize>().unwrap()), (c[2].to_string(), values));
    }
    let mismatches: Vec<_> = gold.keys().chain(got.keys()).filter(|k| gold.get(*k) != got.get(*k)).collect();
    assert!(mismatches.is_empty(), "mismatches at {mismatches:?}");

    let (_, sit) = &got[&("s01".to_string(), 3)];
    let (_, walk) = &got[&("s02".to_string(), 1)];
    let get = |v: &[bool; 6], f: Feature| v[f.index()];
    assert!(get(sit, Feature::AsVerb) && get(sit, Feature::SecondPerson) && get(sit, Feature::Modal));
    assert!(!get(sit, Feature::Imperative));
    assert!(get(walk, Feature::AsVerb) && get(walk, Feature::SpatialPrep) && get(walk, Feature::Imperative));
    assert!(!get(walk, Feature::SecondPerson));
    pass(format!("{} gold occurrences, 0 mismatches; both worked examples hold", gold.len()))
}

fn determinism() -> Outcome {
    let one = tempfile::tempdir().unwrap();
    let eight = tempfile::tempdir().unwrap();
    run_pipeline(one.path(), 1);
    run_pipeline(eight.path(), 8);
    let mut bytes = 0;
    for name in PIPELINE_OUTPUTS {
        let a = fs::read(one.path().join(name)).unwrap();
        let b = fs::read(eight.path().join(name)).unwrap();
        assert!(a == b, "{name} differs between --threads 1 and --threads 8");
        bytes += a.len();
    }
    pass(format!("{} outputs, {bytes} bytes identical at --threads 1 and 8", PIPELINE_OUTPUTS.len()))
}

/// Mean of a numeric column over rows whose `key` column equals `value`.
fn column_mean(path: &Path, key: &str, value: &str, column_name: &str) -> f64 {
    let (header, rows) = read_csv(path);
    let (k, c) = (column(&header, key), column(&header, column_name));
    let picked: Vec<f64> = rows.iter().filter(|r| r[k] == value && !r[c].is_empty()).map(|r| r[c].parse().unwrap()).collect();
    picked.iter().sum::<f64>() / picked.len() as f64
}

fn osf_integration() -> Outcome {
    let Some(dir) = std::env::var_os("HCD_EVAL_OSF_DIR") else {
        return Outcome::Skip("set HCD_EVAL_OSF_DIR to the released dataset directory".into());
    };
    let dir = Path::new(&dir);
    let out = tempfile::tempdir().unwrap();
    let corpus = dir.join("corpus.jsonl");
    let lexicon = dir.join("sentiment.tsv");
    let nlp = out.path().join("nlp.csv");
    let status = run([
        "nlp".as_ref(),
        "--corpus".as_ref(),
        corpus.as_os_str(),
        "--sentiment-lexicon".as_ref(),
        lexicon.as_os_str(),
        "--out".as_ref(),
        nlp.as_os_str(),
    ]);
    assert!(status.status.success(), "{}", stderr(&status));
    let mut args: Vec<std::ffi::OsString> = vec!["purity".into(), "--corpus".into(), corpus.clone().into()];
    let mut embedders = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "emb1") {
            args.extend(["--embeddings".into(), path.into()]);
            embedders += 1;
        }
    }
    assert!(embedders > 0, "no .emb1 files in {}", dir.display());
    let purity = out.path().join("purity.csv");
    args.extend(["--out".into(), purity.clone().into()]);
    let status = run(&args);
    assert!(status.status.success(), "{}", stderr(&status));

    let within = |got: f64, want: f64, tol: f64, what: &str| assert!((got - want).abs() <= tol, "{what}: {got} vs {want}");
    let words_h = column_mean(&nlp, "source", "human", "n_words");
    let words_m = column_mean(&nlp, "source", "model", "n_words");
    within(words_h, 14.4, 0.05 * 14.4, "human words");
    within(words_m, 56.3, 0.05 * 56.3, "model words");
    within(column_mean(&nlp, "source", "human", "ttr"), 0.89, 0.02, "human ttr");
    within(column_mean(&nlp, "source", "model", "ttr"), 0.78, 0.02, "model ttr");
    within(column_mean(&nlp, "source", "human", "sentiment"), 9.67, 3.0, "human sentiment");
    within(column_mean(&nlp, "source", "model", "sentiment"), 26.36, 3.0, "model sentiment");
    let (header, rows) = read_csv(&purity);
    let (s, l, p) = (column(&header, "source_id"), column(&header, "level"), column(&header, "purity"));
    let level_mean = |level: &str| {
        let v: Vec<f64> = rows.iter().filter(|r| r[s] == "human" && r[l] == level).map(|r| r[p].parse().unwrap()).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    within(level_mean("fine"), 0.80, 0.03, "human fine purity");
    within(level_mean("coarse"), 0.91, 0.03, "human coarse purity");
    pass(format!("words {words_h:.1}/{words_m:.1} over {embedders} embedder(s)"))
}

const CRITERIA: [(&str, Criterion); 11] = [
    ("hcd-oracle-parity", hcd_oracle_parity),
    ("hcd-geometry-invariances", hcd_invariances),
    ("wilcoxon-exactness", wilcoxon_exactness),
    ("purity-correctness", purity_correctness),
    ("delta-arithmetic", delta_arithmetic),
    ("text-metrics", text_metrics),
    ("chi2-cramers-v", chi2_cramers_v),
    ("quantile-matching", quantile_matching),
    ("syntax-features", syntax_features),
    ("determinism", determinism),
    ("released-data-integration", osf_integration),
];

fn main() {
    // Failures are reported on the criterion line, not as panic dumps.
    panic::set_hook(Box::new(|_| {}));
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, criterion) in CRITERIA {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let line = match panic::catch_unwind(AssertUnwindSafe(criterion)) {
            Ok(Outcome::Pass(detail)) => format!("PASS {name}: {detail}"),
            Ok(Outcome::Skip(reason)) => format!("SKIP {name}: {reason}"),
            Err(e) => {
                failed += 1;
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panicked".into());
                format!("FAIL {name}: {msg}")
            }
        };
        println!("{line}");
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
