use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use hcd_core::lexmatch::{Lexicon, LexiconCategory};
use hcd_core::syntax::{
    compare_corpora, extract_features, matched_term_share, term_occurrences, Feature, FeatureCounts, FeatureOptions,
    FeatureVector, MatchOn, ParsedSentence, PurposeDirection,
};
use rayon::prelude::*;
use serde_json::json;

use super::{path_stem, CliError, CliResult, Ctx};
use crate::conllu;
use crate::lexfile;
use crate::output::{format_float, CsvTable};

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MatchOnArg {
    Lemma,
    Form,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PurposeArg {
    Both,
    TermInClause,
    TermGoverns,
}

#[derive(Debug, Args)]
pub struct SyntaxArgs {
    /// First corpus (CoNLL-U).
    #[arg(long)]
    pub parses: PathBuf,
    /// Second corpus (CoNLL-U); percent differences are b minus a.
    #[arg(long)]
    pub parses_b: PathBuf,
    /// Lexicon whose occurrences are analysed.
    #[arg(long)]
    pub lexicon: PathBuf,
    /// Optional second lexicon, analysed separately and used for the
    /// matched-term share.
    #[arg(long)]
    pub lexicon_b: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Share of `--lexicon` occurrences among both lexicons, per corpus
    /// (needs `--lexicon-b`).
    #[arg(long)]
    pub share: Option<PathBuf>,
    /// Per-occurrence feature vectors.
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "lemma")]
    pub match_on: MatchOnArg,
    #[arg(long, value_enum, default_value = "both")]
    pub purpose: PurposeArg,
    /// Count verb-initial questions as imperatives.
    #[arg(long)]
    pub include_questions: bool,
    /// Replacement modal set, one word per line.
    #[arg(long)]
    pub modals: Option<PathBuf>,
    /// Replacement spatial-preposition set, one word per line.
    #[arg(long)]
    pub spatial: Option<PathBuf>,
}

pub const TABLE_COLUMNS: [&str; 13] = [
    "lexicon",
    "feature",
    "corpus_a",
    "corpus_b",
    "n_a",
    "n_b",
    "rate_a",
    "rate_b",
    "percent_difference",
    "chi2",
    "p_value",
    "cramers_v",
    "degenerate",
];

fn lexicon(ctx: &mut Ctx, path: &Path) -> CliResult<Lexicon> {
    let bytes = ctx.read(path)?;
    let terms = lexfile::read_terms(&bytes).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?;
    Lexicon::new(path_stem(path), LexiconCategory::Custom, &terms)
        .map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))
}

fn word_set(ctx: &mut Ctx, path: &Path) -> CliResult<BTreeSet<String>> {
    let bytes = ctx.read(path)?;
    let terms = lexfile::read_terms(&bytes).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?;
    Ok(terms.into_iter().map(|t| t.to_lowercase()).collect())
}

fn parses(ctx: &mut Ctx, path: &Path) -> CliResult<(String, Vec<ParsedSentence>)> {
    let corpus_id = path_stem(path);
    let bytes = ctx.read(path)?;
    let loaded = conllu::parse(&bytes, &corpus_id, ctx.mode)
        .map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?;
    if !loaded.skipped.is_empty() {
        for e in &loaded.skipped {
            eprintln!("warning: {}: {e}", path.display());
        }
        ctx.notes.push(format!("{}: skipped {} malformed sentence(s)", path.display(), loaded.skipped.len()));
    }
    Ok((corpus_id, loaded.sentences))
}

fn features(sentences: &[ParsedSentence], lexicon: &Lexicon, options: &FeatureOptions) -> Vec<FeatureVector> {
    let per_sentence: Vec<Vec<FeatureVector>> =
        sentences.par_iter().map(|s| extract_features(s, lexicon, options)).collect();
    per_sentence.into_iter().flatten().collect()
}

pub fn run(args: SyntaxArgs, ctx: &mut Ctx) -> CliResult<()> {
    if args.share.is_some() && args.lexicon_b.is_none() {
        return Err(CliError::Usage("--share needs --lexicon-b".into()));
    }
    let mut options = FeatureOptions {
        match_on: match args.match_on {
            MatchOnArg::Lemma => MatchOn::Lemma,
            MatchOnArg::Form => MatchOn::Form,
        },
        purpose: match args.purpose {
            PurposeArg::Both => PurposeDirection::Both,
            PurposeArg::TermInClause => PurposeDirection::TermInClause,
            PurposeArg::TermGoverns => PurposeDirection::TermGoverns,
        },
        exclude_questions: !args.include_questions,
        ..FeatureOptions::default()
    };
    for (name, path) in
        [("parses", Some(&args.parses)), ("parses_b", Some(&args.parses_b)), ("lexicon", Some(&args.lexicon))]
            .into_iter()
            .chain([("lexicon_b", args.lexicon_b.as_ref()), ("share", args.share.as_ref())])
            .chain([("features", args.features.as_ref()), ("out", Some(&args.out))])
    {
        if let Some(p) = path {
            ctx.flag(name, p.display().to_string());
        }
    }
    if let Some(path) = &args.modals {
        ctx.flag("modals", path.display().to_string());
        options.modals = word_set(ctx, path)?;
    }
    if let Some(path) = &args.spatial {
        ctx.flag("spatial", path.display().to_string());
        options.spatial_prepositions = word_set(ctx, path)?;
    }
    ctx.decision("match_on", match options.match_on {
        MatchOn::Lemma => "lemma",
        MatchOn::Form => "form",
    });
    ctx.decision("purpose_direction", options.purpose.name());
    ctx.decision("imperative_questions", if options.exclude_questions { "excluded" } else { "included" });
    ctx.decision("modals", json!(options.modals));
    ctx.decision("spatial_prepositions", json!(options.spatial_prepositions));

    let (id_a, sentences_a) = parses(ctx, &args.parses)?;
    let (id_b, sentences_b) = parses(ctx, &args.parses_b)?;
    let mut lexicons = vec![lexicon(ctx, &args.lexicon)?];
    if let Some(path) = &args.lexicon_b {
        lexicons.push(lexicon(ctx, path)?);
    }

    let mut table = CsvTable::new(&TABLE_COLUMNS);
    let mut feature_table = CsvTable::new(
        &["corpus_id", "lexicon", "sentence_id", "token_id", "term"]
            .into_iter()
            .chain(Feature::ALL.iter().map(|f| f.name()))
            .collect::<Vec<_>>(),
    );
    for lex in &lexicons {
        let mut counts = Vec::new();
        for (corpus_id, sentences) in [(&id_a, &sentences_a), (&id_b, &sentences_b)] {
            let rows = features(sentences, lex, &options);
            let mut c = FeatureCounts::new(corpus_id.clone(), lex.category);
            for row in &rows {
                c.add(row);
                let mut fields =
                    vec![corpus_id.clone(), lex.name.clone(), row.sentence_id.clone(), row.token_id.to_string(), row.term.clone()];
                fields.extend(row.values.iter().map(|v| (*v as u8).to_string()));
                feature_table.row(&fields);
            }
            counts.push(c);
        }
        match compare_corpora(&counts[0], &counts[1]) {
            Ok(comparisons) => {
                for cmp in comparisons {
                    table.row(&[
                        lex.name.clone(),
                        cmp.feature.name().to_string(),
                        id_a.clone(),
                        id_b.clone(),
                        counts[0].total.to_string(),
                        counts[1].total.to_string(),
                        format_float(cmp.rate_a),
                        format_float(cmp.rate_b),
                        format_float(cmp.percent_difference),
                        format_float(cmp.chi2),
                        format_float(cmp.p_value),
                        format_float(cmp.cramers_v),
                        (cmp.degenerate as u8).to_string(),
                    ]);
                }
            }
            Err(e) => ctx.note(format!(
                "lexicon {}: {e} ({} occurrence(s) in {id_a}, {} in {id_b})",
                lex.name, counts[0].total, counts[1].total
            )),
        }
    }

    let mut share_table = CsvTable::new(&["corpus_id", "lexicon", "other_lexicon", "n_lexicon", "n_other", "share"]);
    if args.share.is_some() {
        let (a, b) = (&lexicons[0], &lexicons[1]);
        for (corpus_id, sentences) in [(&id_a, &sentences_a), (&id_b, &sentences_b)] {
            let mut both: Vec<String> = a.terms().to_vec();
            both.extend(b.terms().iter().cloned());
            let union = Lexicon::new("union", LexiconCategory::Custom, &both).expect("non-empty lexicons");
            let occurrences = term_occurrences(sentences.iter(), &union, options.match_on);
            let sum = |lex: &Lexicon| lex.terms().iter().map(|t| occurrences.get(t).copied().unwrap_or(0)).sum::<u64>();
            let share = match matched_term_share(&occurrences, a, b) {
                Ok(s) => format_float(s),
                Err(e) => {
                    ctx.note(format!("{corpus_id}: {e}"));
                    String::new()
                }
            };
            share_table.row(&[
                corpus_id.clone(),
                a.name.clone(),
                b.name.clone(),
                sum(a).to_string(),
                sum(b).to_string(),
                share,
            ]);
        }
    }

    ctx.emit(&args.out, &table.into_bytes())?;
    if let Some(path) = &args.features {
        ctx.emit(path, &feature_table.into_bytes())?;
    }
    if let Some(path) = &args.share {
        ctx.emit(path, &share_table.into_bytes())?;
    }
    Ok(())
}
