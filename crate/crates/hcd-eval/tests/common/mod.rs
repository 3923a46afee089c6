//! Shared helpers for the command-line tests: fixture paths and a full
//! pipeline run over the bundled fixture.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn pipeline_dir() -> PathBuf {
    fixtures().join("pipeline")
}

pub fn golden_dir() -> PathBuf {
    fixtures().join("golden")
}

pub fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hcd-eval"));
    cmd.env_remove("HCD_EVAL_THREADS").env("SOURCE_DATE_EPOCH", "0");
    cmd
}

pub fn run<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    bin().args(args).output().expect("spawn hcd-eval")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn check(out: Output, what: &str) {
    assert!(out.status.success(), "{what} failed ({:?}):\n{}", out.status, stderr(&out));
}

/// Files written by [`run_pipeline`] that are compared against goldens.
pub const PIPELINE_OUTPUTS: [&str; 13] = [
    "hcd.csv",
    "hcd.excluded.csv",
    "rates.csv",
    "purity.csv",
    "delta.csv",
    "project2d.csv",
    "nlp.csv",
    "hedge.csv",
    "matched.txt",
    "steps.csv",
    "syntax.csv",
    "features.csv",
    "share.csv",
];

/// Runs every subcommand on the bundled fixture, writing into `out`.
pub fn run_pipeline(out: &Path, threads: usize) {
    let p = pipeline_dir();
    let f = fixtures();
    let s = |p: PathBuf| p.display().to_string();
    let o = |name: &str| out.join(name).display().to_string();
    let threads = threads.to_string();
    let global = ["--threads", threads.as_str(), "--seed", "7"];
    let emb = [
        "--embeddings".to_string(),
        s(p.join("emb-a.emb1")),
        "--embeddings".to_string(),
        s(p.join("emb-b.emb1")),
    ];
    let corpus = s(p.join("corpus.jsonl"));

    let mut args: Vec<String> = global.iter().map(|a| a.to_string()).collect();
    args.extend(["hcd".into(), "--corpus".into(), corpus.clone()]);
    args.extend(emb.iter().cloned());
    args.extend(["--out".into(), o("hcd.csv"), "--rates".into(), o("rates.csv")]);
    check(run(&args), "hcd");

    let mut args: Vec<String> = global.iter().map(|a| a.to_string()).collect();
    args.extend(["purity".into(), "--corpus".into(), corpus.clone()]);
    args.extend(emb.iter().cloned());
    args.extend(["--out".into(), o("purity.csv"), "--delta".into(), o("delta.csv")]);
    check(run(&args), "purity");

    let mut args: Vec<String> = global.iter().map(|a| a.to_string()).collect();
    args.extend(["project2d".into(), "--corpus".into(), corpus.clone()]);
    args.extend(emb.iter().cloned());
    args.extend(["--out".into(), o("project2d.csv")]);
    check(run(&args), "project2d");

    let mut args: Vec<String> = global.iter().map(|a| a.to_string()).collect();
    args.extend([
        "nlp".into(),
        "--corpus".into(),
        corpus.clone(),
        "--word-vectors".into(),
        s(p.join("wordvec.txt")),
        "--hedge-lexicon".into(),
        s(p.join("hedges.txt")),
        "--sentiment-lexicon".into(),
        s(p.join("sentiment.tsv")),
        "--out".into(),
        o("nlp.csv"),
    ]);
    check(run(&args), "nlp");

    let mut args: Vec<String> = global.iter().map(|a| a.to_string()).collect();
    args.extend([
        "hedge".into(),
        "--corpus".into(),
        corpus,
        "--hedge-lexicon".into(),
        s(p.join("hedges.txt")),
        "--out".into(),
        o("hedge.csv"),
    ]);
    check(run(&args), "hedge");

    let mut args: Vec<String> = global.iter().map(|a| a.to_string()).collect();
    args.extend([
        "lexmatch".into(),
        "--target".into(),
        s(f.join("affect.txt")),
        "--candidates".into(),
        s(f.join("candidates.txt")),
        "--ref-corpus".into(),
        s(f.join("brown1000.txt")),
        "--n".into(),
        "5".into(),
        "--out".into(),
        o("matched.txt"),
        "--steps".into(),
        o("steps.csv"),
    ]);
    check(run(&args), "lexmatch");

    let mut args: Vec<String> = global.iter().map(|a| a.to_string()).collect();
    args.extend([
        "syntax".into(),
        "--parses".into(),
        s(f.join("syntax30.conllu")),
        "--parses-b".into(),
        s(f.join("roundtrip100.conllu")),
        "--lexicon".into(),
        s(f.join("affordance.txt")),
        "--lexicon-b".into(),
        s(f.join("affect.txt")),
        "--out".into(),
        o("syntax.csv"),
        "--features".into(),
        o("features.csv"),
        "--share".into(),
        o("share.csv"),
    ]);
    check(run(&args), "syntax");
}

/// Minimal CSV reader for the toolkit's own output (no quoted fields).
pub fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let mut lines = text.lines();
    let header = lines.next().expect("header").split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

pub fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}
