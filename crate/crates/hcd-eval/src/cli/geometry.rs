use std::path::PathBuf;

use clap::{Args, ValueEnum};
use hcd_core::corpus::{DescriptionRecord, KeyField};
use hcd_core::embed::EmbeddingMatrix;
use hcd_core::geometry::{check_fraction, divergence_delta, pca_reduce, project_2d, LabelLevel, NeighborIndex, Purity};
use hcd_core::linalg::DenseMatrix;
use rayon::prelude::*;
use serde_json::json;

use super::{CliError, CliResult, Ctx};
use crate::output::{format_float, CsvTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LabelsArg {
    Fine,
    Coarse,
    Both,
}

#[derive(Debug, Args)]
pub struct PurityArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, required = true)]
    pub embeddings: Vec<String>,
    #[arg(long, value_enum, default_value = "both")]
    pub labels: LabelsArg,
    /// Neighborhood sizes as fractions of the class size.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3,0.4,0.5")]
    pub k: Vec<f64>,
    /// Principal components kept before the neighbor search (0 keeps
    /// the embedding space as is).
    #[arg(long, default_value_t = 100)]
    pub pca: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write coarse-minus-fine divergence per model (needs
    /// `--labels both`).
    #[arg(long)]
    pub delta: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Project2dArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, required = true)]
    pub embeddings: Vec<String>,
    #[arg(long)]
    pub out: PathBuf,
}

pub const PURITY_COLUMNS: [&str; 8] =
    ["embedder_id", "source_id", "level", "k_fraction", "purity", "n_points", "n_components", "k_by_label"];

pub const DELTA_COLUMNS: [&str; 8] =
    ["embedder_id", "model_name", "k_fraction", "human_fine", "human_coarse", "model_fine", "model_coarse", "delta"];

fn source_id(r: &DescriptionRecord) -> &str {
    r.model_name().unwrap_or("human")
}

/// Sources in output order: `human` first, then model names sorted.
fn sources(records: &[DescriptionRecord]) -> Vec<String> {
    let models: std::collections::BTreeSet<&str> = records.iter().filter_map(|r| r.model_name()).collect();
    std::iter::once("human").chain(models).map(String::from).collect()
}

struct SourcePurity {
    n_components: usize,
    rank_note: Option<String>,
    results: Vec<(LabelLevel, Purity)>,
}

fn source_purity(
    matrix: &EmbeddingMatrix,
    records: &[&DescriptionRecord],
    levels: &[LabelLevel],
    fractions: &[f64],
    max_components: usize,
) -> Result<SourcePurity, String> {
    let with_vectors: Vec<(&DescriptionRecord, &[f64])> =
        records.iter().filter_map(|r| matrix.get(&r.record_id).map(|v| (*r, v))).collect();
    let rows: Vec<&[f64]> = with_vectors.iter().map(|(_, v)| *v).collect();
    let ids: Vec<&str> = with_vectors.iter().map(|(r, _)| r.record_id.as_str()).collect();
    if rows.len() < 2 {
        return Err(format!("{} point(s)", rows.len()));
    }
    let data = DenseMatrix::from_rows(&rows);
    let (points, n_components, rank_note) = if max_components == 0 {
        (data, matrix.dim(), None)
    } else {
        let k = max_components.min(rows.len() - 1).min(matrix.dim());
        let pca = pca_reduce(&data, k).map_err(|e| e.to_string())?;
        let note = pca.warning.map(|w| format!("{} of {} requested components have variance", w.available, w.requested));
        let used = pca.scores.cols();
        (pca.scores, used, note)
    };
    let mut results = Vec::new();
    for level in levels {
        let labels: Vec<&str> = with_vectors
            .iter()
            .map(|(r, _)| match level {
                LabelLevel::Fine => r.task.name(),
                LabelLevel::Coarse => r.task.group().name(),
            })
            .collect();
        let index = NeighborIndex::new(&points, &labels, &ids).map_err(|e| format!("{} labels: {e}", level.name()))?;
        for f in fractions {
            results.push((*level, index.purity(*f).map_err(|e| e.to_string())?));
        }
    }
    Ok(SourcePurity { n_components, rank_note, results })
}

pub fn run_purity(args: PurityArgs, ctx: &mut Ctx) -> CliResult<()> {
    for f in &args.k {
        check_fraction(*f).map_err(|e| CliError::Usage(e.to_string()))?;
    }
    if args.delta.is_some() && args.labels != LabelsArg::Both {
        return Err(CliError::Usage("--delta needs --labels both".into()));
    }
    let levels: Vec<LabelLevel> = match args.labels {
        LabelsArg::Fine => vec![LabelLevel::Fine],
        LabelsArg::Coarse => vec![LabelLevel::Coarse],
        LabelsArg::Both => vec![LabelLevel::Fine, LabelLevel::Coarse],
    };
    ctx.flag("corpus", args.corpus.display().to_string());
    ctx.flag("out", args.out.display().to_string());
    ctx.flag("labels", levels.iter().map(|l| l.name()).collect::<Vec<_>>());
    ctx.flag("k", args.k.clone());
    ctx.decision("pca_components", args.pca);
    if let Some(d) = &args.delta {
        ctx.flag("delta", d.display().to_string());
    }

    let records = ctx.load_corpus(&args.corpus)?;
    let matrices = ctx.load_embeddings(&args.embeddings, &records)?;
    let source_names = sources(&records);
    let jobs: Vec<(usize, &str)> =
        (0..matrices.len()).flat_map(|m| source_names.iter().map(move |s| (m, s.as_str()))).collect();
    let results: Vec<Result<SourcePurity, String>> = jobs
        .par_iter()
        .map(|(m, source)| {
            let subset: Vec<&DescriptionRecord> = records.iter().filter(|r| source_id(r) == *source).collect();
            source_purity(&matrices[*m], &subset, &levels, &args.k, args.pca)
        })
        .collect();

    let mut table = CsvTable::new(&PURITY_COLUMNS);
    // (embedder, source) -> level -> purity per k
    let mut found: std::collections::BTreeMap<(usize, &str), Vec<(LabelLevel, f64)>> = Default::default();
    for ((m, source), result) in jobs.iter().zip(results) {
        let embedder = matrices[*m].embedder_id();
        let sp = match result {
            Ok(sp) => sp,
            Err(reason) => {
                ctx.note(format!("{embedder}/{source}: skipped ({reason})"));
                continue;
            }
        };
        if let Some(n) = sp.rank_note {
            ctx.note(format!("{embedder}/{source}: {n}"));
        }
        for (level, p) in &sp.results {
            let k_by_label: Vec<String> = p.k_by_label.iter().map(|(l, k)| format!("{l}:{k}")).collect();
            table.row(&[
                embedder.to_string(),
                source.to_string(),
                level.name().to_string(),
                format_float(p.k_fraction),
                format_float(p.purity),
                p.n_points.to_string(),
                sp.n_components.to_string(),
                k_by_label.join(";"),
            ]);
            found.entry((*m, source)).or_default().push((*level, p.purity));
        }
    }

    let mut delta_table = CsvTable::new(&DELTA_COLUMNS);
    if args.delta.is_some() {
        let split = |v: &Vec<(LabelLevel, f64)>, level: LabelLevel| -> Vec<f64> {
            v.iter().filter(|(l, _)| *l == level).map(|(_, p)| *p).collect()
        };
        for (m, matrix) in matrices.iter().enumerate() {
            let Some(human) = found.get(&(m, "human")) else { continue };
            let (hf, hc) = (split(human, LabelLevel::Fine), split(human, LabelLevel::Coarse));
            for source in source_names.iter().filter(|s| *s != "human") {
                let Some(model) = found.get(&(m, source.as_str())) else { continue };
                let (mf, mc) = (split(model, LabelLevel::Fine), split(model, LabelLevel::Coarse));
                for (i, k) in args.k.iter().enumerate() {
                    delta_table.row(&[
                        matrix.embedder_id().to_string(),
                        source.clone(),
                        format_float(*k),
                        format_float(hf[i]),
                        format_float(hc[i]),
                        format_float(mf[i]),
                        format_float(mc[i]),
                        format_float(divergence_delta(hf[i], hc[i], mf[i], mc[i])),
                    ]);
                }
            }
        }
    }

    ctx.emit(&args.out, &table.into_bytes())?;
    if let Some(path) = &args.delta {
        ctx.emit(path, &delta_table.into_bytes())?;
    }
    Ok(())
}

pub const PROJECT_COLUMNS: [&str; 11] = [
    "embedder_id",
    "record_id",
    "image_id",
    "task",
    "task_group",
    "generality",
    "source",
    "model_name",
    "prompt_type",
    "x",
    "y",
];

pub fn run_project2d(args: Project2dArgs, ctx: &mut Ctx) -> CliResult<()> {
    ctx.flag("corpus", args.corpus.display().to_string());
    ctx.flag("out", args.out.display().to_string());
    let records = ctx.load_corpus(&args.corpus)?;
    let matrices = ctx.load_embeddings(&args.embeddings, &records)?;
    let mut table = CsvTable::new(&PROJECT_COLUMNS);
    let mut errors = Vec::new();
    for matrix in &matrices {
        let present: Vec<(&DescriptionRecord, &[f64])> =
            records.iter().filter_map(|r| matrix.get(&r.record_id).map(|v| (r, v))).collect();
        let rows: Vec<&[f64]> = present.iter().map(|(_, v)| *v).collect();
        let coords = match project_2d(&DenseMatrix::from_rows(&rows)) {
            Ok(c) => c,
            Err(e) => {
                errors.push(format!("{}: {e}", matrix.embedder_id()));
                continue;
            }
        };
        for ((r, _), (x, y)) in present.iter().zip(coords) {
            let field = |f: KeyField| r.field(f).unwrap_or("").to_string();
            table.row(&[
                matrix.embedder_id().to_string(),
                r.record_id.clone(),
                field(KeyField::ImageId),
                field(KeyField::Task),
                field(KeyField::TaskGroup),
                field(KeyField::Generality),
                field(KeyField::Source),
                field(KeyField::ModelName),
                field(KeyField::PromptType),
                format_float(x),
                format_float(y),
            ]);
        }
    }
    if !errors.is_empty() {
        return Err(CliError::Validation(errors));
    }
    ctx.decision("projection", json!("first two principal components, sign-fixed"));
    ctx.emit(&args.out, &table.into_bytes())?;
    Ok(())
}
