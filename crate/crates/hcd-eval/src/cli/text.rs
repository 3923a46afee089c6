use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use hcd_core::corpus::KeyField;
use hcd_core::lexmatch::{
    build_frequency_table, quantile_match, FrequencyScale, Lexicon, LexiconCategory, DEFAULT_SMOOTHING,
};
use hcd_core::textmetrics::{hedge_rate, logit_winsorize, style_metrics, HedgeLexicon, MetricResources, DEFAULT_EPSILON};
use rayon::prelude::*;

use super::{parse_key_fields, path_stem, CliError, CliResult, Ctx};
use crate::lexfile;
use crate::output::{format_float, format_opt, CsvTable};
use crate::refcorpus::{self, RefFormat};
use crate::wordvec;

#[derive(Debug, Args)]
pub struct NlpArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Word vectors in `<count> <dim>` text format.
    #[arg(long)]
    pub word_vectors: Option<PathBuf>,
    /// Hedge terms, one per line.
    #[arg(long)]
    pub hedge_lexicon: Option<PathBuf>,
    /// Sentiment lexicon, `token<TAB>valence` per line.
    #[arg(long)]
    pub sentiment_lexicon: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct HedgeArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub hedge_lexicon: PathBuf,
    /// Grouping fields.
    #[arg(long, default_value = "source,task_group")]
    pub group_by: String,
    /// Winsorization constant for the logit column.
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScaleArg {
    Log,
    Raw,
    PerMillion,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RefFormatArg {
    Auto,
    Tagged,
    Text,
}

#[derive(Debug, Args)]
pub struct LexmatchArgs {
    /// Lexicon whose frequency distribution is matched.
    #[arg(long)]
    pub target: PathBuf,
    /// Candidate pool.
    #[arg(long)]
    pub candidates: PathBuf,
    /// Reference corpus, tagged `word/TAG` or plain text.
    #[arg(long)]
    pub ref_corpus: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    pub ref_format: RefFormatArg,
    /// Number of terms to select.
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_enum, default_value = "log")]
    pub scale: ScaleArg,
    #[arg(long, default_value_t = DEFAULT_SMOOTHING)]
    pub smoothing: f64,
    /// Matched terms, one per line.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write every selection step as CSV.
    #[arg(long)]
    pub steps: Option<PathBuf>,
}

pub const NLP_COLUMNS: [&str; 15] = [
    "record_id",
    "image_id",
    "task",
    "task_group",
    "generality",
    "source",
    "model_name",
    "prompt_type",
    "n_words",
    "n_sentences",
    "entropy_bits",
    "ttr",
    "mean_pairwise_sim",
    "hedge_hit",
    "sentiment",
];

fn read_terms(ctx: &mut Ctx, path: &Path) -> CliResult<Vec<String>> {
    let bytes = ctx.read(path)?;
    lexfile::read_terms(&bytes).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))
}

fn hedge_lexicon(ctx: &mut Ctx, path: &Path) -> CliResult<HedgeLexicon> {
    let terms = read_terms(ctx, path)?;
    HedgeLexicon::new(&terms).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))
}

pub fn run_nlp(args: NlpArgs, ctx: &mut Ctx) -> CliResult<()> {
    ctx.flag("corpus", args.corpus.display().to_string());
    ctx.flag("out", args.out.display().to_string());
    let records = ctx.load_corpus(&args.corpus)?;
    let word_vectors = match &args.word_vectors {
        Some(path) => {
            ctx.flag("word_vectors", path.display().to_string());
            let bytes = ctx.read(path)?;
            Some(wordvec::parse(&bytes).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?)
        }
        None => None,
    };
    let hedges = match &args.hedge_lexicon {
        Some(path) => {
            ctx.flag("hedge_lexicon", path.display().to_string());
            Some(hedge_lexicon(ctx, path)?)
        }
        None => None,
    };
    let valence = match &args.sentiment_lexicon {
        Some(path) => {
            ctx.flag("sentiment_lexicon", path.display().to_string());
            let bytes = ctx.read(path)?;
            let lex =
                lexfile::read_valence(&bytes).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?;
            if lex.is_empty() {
                return Err(CliError::invalid(format!("{}: sentiment lexicon is empty", path.display())));
            }
            Some(lex)
        }
        None => None,
    };
    let resources =
        MetricResources { word_vectors: word_vectors.as_ref(), hedges: hedges.as_ref(), valence: valence.as_ref() };
    let metrics: Vec<_> = records.par_iter().map(|r| style_metrics(&r.record_id, &r.text, resources)).collect();

    let mut table = CsvTable::new(&NLP_COLUMNS);
    for (r, m) in records.iter().zip(&metrics) {
        let field = |f: KeyField| r.field(f).unwrap_or("").to_string();
        table.row(&[
            r.record_id.clone(),
            field(KeyField::ImageId),
            field(KeyField::Task),
            field(KeyField::TaskGroup),
            field(KeyField::Generality),
            field(KeyField::Source),
            field(KeyField::ModelName),
            field(KeyField::PromptType),
            m.n_words.to_string(),
            m.n_sentences.to_string(),
            format_opt(m.entropy_bits),
            format_opt(m.ttr),
            format_opt(m.mean_pairwise_sim),
            m.hedge_hit.map(|h| (h as u8).to_string()).unwrap_or_default(),
            format_opt(m.sentiment),
        ]);
    }
    ctx.emit(&args.out, &table.into_bytes())?;
    Ok(())
}

pub fn run_hedge(args: HedgeArgs, ctx: &mut Ctx) -> CliResult<()> {
    let group_by = parse_key_fields(&args.group_by)?;
    if group_by.contains(&KeyField::EmbedderId) {
        return Err(CliError::Usage("embedder_id is not a corpus field".into()));
    }
    logit_winsorize(0.5, args.epsilon).map_err(|e| CliError::Usage(e.to_string()))?;
    ctx.flag("corpus", args.corpus.display().to_string());
    ctx.flag("hedge_lexicon", args.hedge_lexicon.display().to_string());
    ctx.flag("group_by", args.group_by.clone());
    ctx.flag("out", args.out.display().to_string());
    ctx.decision("epsilon", args.epsilon);

    let records = ctx.load_corpus(&args.corpus)?;
    let lexicon = hedge_lexicon(ctx, &args.hedge_lexicon)?;
    let mut header: Vec<String> = group_by.iter().map(|f| f.name().to_string()).collect();
    header.extend(["n", "hits", "proportion", "logit"].map(String::from));
    let mut table = CsvTable::new(&header);
    for rate in hedge_rate(&records, &lexicon, &group_by) {
        let mut row: Vec<String> = group_by.iter().map(|f| rate.group.get(*f).unwrap_or("").to_string()).collect();
        let logit = logit_winsorize(rate.proportion, args.epsilon).expect("validated epsilon and proportion");
        row.extend([rate.n.to_string(), rate.hits.to_string(), format_float(rate.proportion), format_float(logit)]);
        table.row(&row);
    }
    ctx.emit(&args.out, &table.into_bytes())?;
    Ok(())
}

pub fn run_lexmatch(args: LexmatchArgs, ctx: &mut Ctx) -> CliResult<()> {
    let scale = match args.scale {
        ScaleArg::Log => FrequencyScale::Log,
        ScaleArg::Raw => FrequencyScale::Raw,
        ScaleArg::PerMillion => FrequencyScale::PerMillion,
    };
    let format = match args.ref_format {
        RefFormatArg::Auto => RefFormat::Auto,
        RefFormatArg::Tagged => RefFormat::Tagged,
        RefFormatArg::Text => RefFormat::Text,
    };
    ctx.flag("target", args.target.display().to_string());
    ctx.flag("candidates", args.candidates.display().to_string());
    ctx.flag("ref_corpus", args.ref_corpus.display().to_string());
    ctx.flag("n", args.n);
    ctx.flag("out", args.out.display().to_string());
    ctx.decision("frequency_scale", scale.name());
    ctx.decision("smoothing", args.smoothing);

    let target_terms = read_terms(ctx, &args.target)?;
    let candidate_terms = read_terms(ctx, &args.candidates)?;
    let invalid = |path: &Path, e: &dyn std::fmt::Display| CliError::invalid(format!("{}: {e}", path.display()));
    let target = Lexicon::new(path_stem(&args.target), LexiconCategory::Custom, &target_terms)
        .map_err(|e| invalid(&args.target, &e))?;
    let candidates = Lexicon::new(path_stem(&args.candidates), LexiconCategory::Custom, &candidate_terms)
        .map_err(|e| invalid(&args.candidates, &e))?;

    let ref_bytes = ctx.read(&args.ref_corpus)?;
    let ref_text = String::from_utf8(ref_bytes).map_err(|_| invalid(&args.ref_corpus, &"file is not UTF-8"))?;
    let (tokens, used_format) = refcorpus::tokens(&ref_text, format);
    ctx.decision("ref_format", used_format.name());
    let freq = build_frequency_table(&tokens)
        .and_then(|f| f.with_smoothing(args.smoothing))
        .map_err(|e| invalid(&args.ref_corpus, &e))?;
    let result = quantile_match(&target, &candidates, &freq, args.n, scale).map_err(CliError::invalid)?;

    let mut matched = String::new();
    for term in result.lexicon.terms() {
        matched.push_str(term);
        matched.push('\n');
    }
    if let Some(path) = &args.steps {
        ctx.flag("steps", path.display().to_string());
    }
    ctx.emit(&args.out, matched.as_bytes())?;
    if let Some(path) = &args.steps {
        let mut table = CsvTable::new(&["step", "quantile", "target_value", "term", "count", "value"]);
        for (i, s) in result.steps.iter().enumerate() {
            table.row(&[
                (i + 1).to_string(),
                format_float(s.quantile),
                format_float(s.target_value),
                s.term.clone(),
                freq.count(&s.term).to_string(),
                format_float(s.value),
            ]);
        }
        ctx.emit(path, &table.into_bytes())?;
    }
    Ok(())
}
