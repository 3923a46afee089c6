//! The `hcd-eval` command line.
//!
//! Exit codes: 0 on success, 1 when inputs fail validation, 2 on usage
//! errors (clap's own code for bad flags).

mod geometry;
mod hcd;
mod report;
mod syntax;
mod text;

pub use geometry::{DELTA_COLUMNS, PROJECT_COLUMNS, PURITY_COLUMNS};
pub use hcd::HCD_COLUMNS;
pub use syntax::TABLE_COLUMNS;
pub use text::NLP_COLUMNS;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use hcd_core::corpus::{DescriptionRecord, KeyField};
use hcd_core::embed::EmbeddingMatrix;
use serde_json::{json, Value};

use crate::corpus_io::{self, SchemaMode};
use crate::emb1::{self, EmbeddingSpec};
use crate::output::{self, InputLog, RunManifest};

#[derive(Debug, Parser)]
#[command(name = "hcd-eval", version, about = "Human-calibrated evaluation of image descriptions")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Worker threads (defaults to all cores).
    #[arg(long, env = "HCD_EVAL_THREADS", global = true)]
    pub threads: Option<usize>,
    /// Seed for every randomized step.
    #[arg(long, default_value_t = 0, global = true)]
    pub seed: u64,
    /// Directory that relative output paths are resolved against.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Write a `<output>.manifest.json` next to every output (default).
    #[arg(long, global = true, overrides_with = "no_manifest")]
    pub manifest: bool,
    #[arg(long, global = true, overrides_with = "manifest")]
    pub no_manifest: bool,
    /// Abort on the first invalid input record (default).
    #[arg(long, global = true, overrides_with = "lenient")]
    pub strict: bool,
    /// Skip and report invalid input records.
    #[arg(long, global = true, overrides_with = "strict")]
    pub lenient: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Human-calibrated cosine distance per image, task, embedder and model.
    Hcd(hcd::HcdArgs),
    /// kNN task-label purity in PCA space, per embedder and source.
    Purity(geometry::PurityArgs),
    /// First two principal components of each embedding space.
    Project2d(geometry::Project2dArgs),
    /// Per-description style metrics.
    Nlp(text::NlpArgs),
    /// Share of descriptions containing a hedge term, per group.
    Hedge(text::HedgeArgs),
    /// Frequency-matched lexicon from a candidate pool.
    Lexmatch(text::LexmatchArgs),
    /// Construction features of lexicon terms in two parsed corpora.
    Syntax(syntax::SyntaxArgs),
    /// Summary tables over result files of this toolkit.
    Report(report::ReportArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Hcd(_) => "hcd",
            Command::Purity(_) => "purity",
            Command::Project2d(_) => "project2d",
            Command::Nlp(_) => "nlp",
            Command::Hedge(_) => "hedge",
            Command::Lexmatch(_) => "lexmatch",
            Command::Syntax(_) => "syntax",
            Command::Report(_) => "report",
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    /// One message per invalid input.
    Validation(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Validation(_) => 1,
        }
    }

    fn invalid(message: impl fmt::Display) -> Self {
        CliError::Validation(vec![message.to_string()])
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::Validation(list) => {
                write!(f, "error: {} validation error(s)", list.len())?;
                for m in list {
                    write!(f, "\n  {m}")?;
                }
                Ok(())
            }
        }
    }
}

type CliResult<T> = Result<T, CliError>;

/// Shared state of one invocation.
pub(crate) struct Ctx {
    pub subcommand: &'static str,
    pub seed: u64,
    pub mode: SchemaMode,
    out_dir: Option<PathBuf>,
    write_manifest: bool,
    pub inputs: InputLog,
    pub notes: Vec<String>,
    pub flags: BTreeMap<String, Value>,
    pub decisions: BTreeMap<String, Value>,
}

impl Ctx {
    pub fn flag(&mut self, name: &str, value: impl Into<Value>) {
        self.flags.insert(name.into(), value.into());
    }

    pub fn decision(&mut self, name: &str, value: impl Into<Value>) {
        self.decisions.insert(name.into(), value.into());
    }

    /// Records a warning in the manifest and echoes it on stderr.
    pub fn note(&mut self, message: impl Into<String>) {
        let message = message.into();
        eprintln!("warning: {message}");
        self.notes.push(message);
    }

    pub fn read(&mut self, path: &Path) -> CliResult<Vec<u8>> {
        self.inputs.read(path).map_err(|e| CliError::invalid(format!("cannot read {}: {e}", path.display())))
    }

    pub fn out_path(&self, path: &Path) -> PathBuf {
        match &self.out_dir {
            Some(dir) if path.is_relative() => dir.join(path),
            _ => path.to_path_buf(),
        }
    }

    fn manifest(&self) -> RunManifest {
        let mut m = RunManifest::new(self.subcommand);
        m.flags = self.flags.clone();
        m.decisions = self.decisions.clone();
        m.notes = self.notes.clone();
        m
    }

    /// Writes one output atomically, plus its manifest unless disabled.
    pub fn emit(&self, path: &Path, bytes: &[u8]) -> CliResult<PathBuf> {
        let path = self.out_path(path);
        let manifest = self.write_manifest.then(|| self.manifest());
        output::emit(&path, bytes, manifest.as_ref(), &self.inputs)
            .map_err(|e| CliError::invalid(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }

    pub fn load_corpus(&mut self, path: &Path) -> CliResult<Vec<DescriptionRecord>> {
        let bytes = self.read(path)?;
        let loaded = corpus_io::parse_corpus(&bytes, self.mode)
            .map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?;
        if !loaded.violations.is_empty() {
            let n = loaded.violations.len();
            for v in &loaded.violations {
                eprintln!("warning: {}: line {}: {}", path.display(), v.line, v.error);
            }
            self.notes.push(format!("{}: skipped {n} invalid record line(s)", path.display()));
        }
        Ok(loaded.records)
    }

    /// Loads, validates against the corpus and L2-normalizes each
    /// embedding file.
    pub fn load_embeddings(
        &mut self,
        specs: &[String],
        records: &[DescriptionRecord],
    ) -> CliResult<Vec<EmbeddingMatrix>> {
        let known: std::collections::BTreeSet<&str> = records.iter().map(|r| r.record_id.as_str()).collect();
        let mut out: Vec<EmbeddingMatrix> = Vec::new();
        let mut errors = Vec::new();
        for arg in specs {
            let spec = EmbeddingSpec::parse(arg).map_err(CliError::Usage)?;
            if out.iter().any(|m| m.embedder_id() == spec.embedder_id) {
                return Err(CliError::Usage(format!("embedder id {:?} given twice", spec.embedder_id)));
            }
            let bytes = self.read(&spec.path)?;
            let matrix = match emb1::decode(&bytes, &spec.embedder_id, None).and_then(|m| Ok(m.normalize()?)) {
                Ok(m) => m,
                Err(e) => {
                    errors.push(format!("{}: {e}", spec.path.display()));
                    continue;
                }
            };
            let unknown = matrix.unresolved_ids(&|id| known.contains(id));
            if !unknown.is_empty() {
                let shown: Vec<&str> = unknown.iter().take(5).copied().collect();
                errors.push(format!(
                    "{}: {} vector id(s) match no corpus record (first: {})",
                    spec.path.display(),
                    unknown.len(),
                    shown.join(", ")
                ));
                continue;
            }
            self.flags
                .entry("embeddings".into())
                .or_insert_with(|| json!({}))
                .as_object_mut()
                .expect("object")
                .insert(spec.embedder_id.clone(), json!(spec.path.display().to_string()));
            out.push(matrix);
        }
        if errors.is_empty() {
            Ok(out)
        } else {
            Err(CliError::Validation(errors))
        }
    }
}

pub(crate) fn parse_key_fields(spec: &str) -> CliResult<Vec<KeyField>> {
    spec.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| KeyField::parse(s).map_err(|e| CliError::Usage(e.to_string())))
        .collect()
}

pub(crate) fn path_stem(path: &Path) -> String {
    path.file_stem().and_then(|s| s.to_str()).unwrap_or("input").to_string()
}

/// `dir/name.csv` -> `dir/name.<suffix>.csv`.
pub(crate) fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path_stem(path);
    let name = match path.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}.{suffix}.{ext}"),
        None => format!("{stem}.{suffix}"),
    };
    path.with_file_name(name)
}

/// Every mode decision of every module, at its default. Subcommands
/// overwrite the entries their flags resolve.
fn default_decisions(seed: u64) -> BTreeMap<String, Value> {
    use hcd_core::calibration::{DhmMode, LbMode, UbScope, UPPER_BOUND_PERCENTILE};
    use hcd_core::lexmatch::{FrequencyScale, DEFAULT_SMOOTHING};
    use hcd_core::stats::WILCOXON_EXACT_MAX_N;
    use hcd_core::syntax::{PurposeDirection, DEFAULT_MODALS, DEFAULT_SPATIAL_PREPOSITIONS};
    use hcd_core::textmetrics::{DEFAULT_EPSILON, TOKENIZER_ID};

    let pairs: Vec<(&str, Value)> = vec![
        ("record_format", json!("jsonl, one record per line; unknown fields rejected (strict) or kept (lenient)")),
        ("task_name_normalization", json!("lower_snake_case")),
        ("vector_precision", json!("f32 on disk, f64 accumulation")),
        ("zero_vectors", json!("error")),
        ("percentile", json!("type-7")),
        ("median_even_count", json!("mean of the two central order statistics")),
        ("ub_percentile", json!(UPPER_BOUND_PERCENTILE)),
        ("dhm_mode", json!(DhmMode::default().name())),
        ("lb_mode", json!(LbMode::default().name())),
        ("ub_scope", json!(UbScope::default().name())),
        ("degenerate_cells", json!("excluded and reported")),
        ("knn_metric", json!("cosine in PCA space, re-normalized after reduction")),
        ("knn_tie_break", json!("ascending record_id")),
        ("k_rounding", json!("round half up, floor 1, cap n-1")),
        ("pca_components", json!(100)),
        ("pca_solver", json!("symmetric eigendecomposition (covariance, or Gram when dim > n)")),
        ("pca_sign", json!("largest-magnitude loading positive")),
        ("tokenizer", json!(TOKENIZER_ID)),
        ("entropy_base", json!(2)),
        ("pairwise_oov", json!("excluded")),
        ("hedge_matching", json!("whole token, case-insensitive; multi-word terms as contiguous runs")),
        ("epsilon", json!(DEFAULT_EPSILON)),
        ("sentiment_unit", json!("per description")),
        ("sentiment_scale", json!("compound x 100")),
        ("quantile_grid", json!("(j - 0.5) / n")),
        ("quantile_order", json!("ascending")),
        ("frequency_scale", json!(FrequencyScale::default().name())),
        ("smoothing", json!(DEFAULT_SMOOTHING)),
        ("candidate_tie_break", json!("lexicographic")),
        ("chi2_correction", json!("none")),
        ("match_on", json!("lemma")),
        ("modals", json!(DEFAULT_MODALS)),
        ("spatial_prepositions", json!(DEFAULT_SPATIAL_PREPOSITIONS)),
        ("imperative_questions", json!("excluded")),
        ("purpose_direction", json!(PurposeDirection::default().name())),
        ("wilcoxon_exact_max_n", json!(WILCOXON_EXACT_MAX_N)),
        ("wilcoxon_alternative", json!("two-sided")),
        ("bootstrap", json!({ "method": "percentile", "resamples": 2000, "level": 0.95 })),
        ("seed", json!(seed)),
        ("csv", json!("RFC 4180, UTF-8, LF line endings, 9 significant digits")),
    ];
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn dispatch(command: Command, ctx: &mut Ctx) -> CliResult<()> {
    match command {
        Command::Hcd(a) => hcd::run(a, ctx),
        Command::Purity(a) => geometry::run_purity(a, ctx),
        Command::Project2d(a) => geometry::run_project2d(a, ctx),
        Command::Nlp(a) => text::run_nlp(a, ctx),
        Command::Hedge(a) => text::run_hedge(a, ctx),
        Command::Lexmatch(a) => text::run_lexmatch(a, ctx),
        Command::Syntax(a) => syntax::run(a, ctx),
        Command::Report(a) => report::run(a, ctx),
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    let g = cli.global;
    let mut ctx = Ctx {
        subcommand: cli.command.name(),
        seed: g.seed,
        mode: if g.lenient { SchemaMode::Lenient } else { SchemaMode::Strict },
        out_dir: g.out_dir.clone(),
        write_manifest: !g.no_manifest,
        inputs: InputLog::default(),
        notes: Vec::new(),
        flags: BTreeMap::new(),
        decisions: default_decisions(g.seed),
    };
    ctx.flag("seed", g.seed);
    ctx.flag("schema_mode", if g.lenient { "lenient" } else { "strict" });
    // thread count does not change any output, so it stays out of the manifest
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = g.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::Usage(format!("cannot start thread pool: {e}")))?;
    pool.install(|| dispatch(cli.command, &mut ctx))
}
