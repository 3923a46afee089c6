use std::path::PathBuf;

use clap::{Args, ValueEnum};
use hcd_core::calibration::{evaluate_task, failure_rates, DhmMode, HcdOptions, HcdRecord, HcdRun, LbMode, UbScope};
use hcd_core::corpus::{DescriptionRecord, KeyField, Task};
use rayon::prelude::*;

use super::{parse_key_fields, sibling, CliResult, Ctx};
use crate::output::{format_float, CsvTable};

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DhmArg {
    Centroid,
    Pairwise,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum LbArg {
    Median,
    Mean,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum UbArg {
    PerImage,
    Global,
}

#[derive(Debug, Args)]
pub struct HcdArgs {
    /// Description corpus (JSONL).
    #[arg(long)]
    pub corpus: PathBuf,
    /// EMB1 file as `embedder=path` or `path`; repeat once per embedder.
    #[arg(long, required = true)]
    pub embeddings: Vec<String>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "centroid")]
    pub dhm_mode: DhmArg,
    #[arg(long, value_enum, default_value = "median")]
    pub lb_mode: LbArg,
    #[arg(long, value_enum, default_value = "per-image")]
    pub ub_scope: UbArg,
    /// Also write generic / catastrophic rates to this CSV.
    #[arg(long)]
    pub rates: Option<PathBuf>,
    /// Grouping fields for --rates.
    #[arg(long, default_value = "embedder_id,task_group")]
    pub rates_by: String,
}

pub const HCD_COLUMNS: [&str; 12] = [
    "image_id",
    "task",
    "embedder_id",
    "model_name",
    "prompt_type",
    "n_human",
    "n_model",
    "lb",
    "ub",
    "d_hm",
    "hcd",
    "classification",
];

fn key(r: &HcdRecord, f: KeyField) -> String {
    r.group.get(f).unwrap_or("").to_string()
}

pub fn run(args: HcdArgs, ctx: &mut Ctx) -> CliResult<()> {
    let options = HcdOptions {
        dhm_mode: match args.dhm_mode {
            DhmArg::Centroid => DhmMode::Centroid,
            DhmArg::Pairwise => DhmMode::Pairwise,
        },
        lb_mode: match args.lb_mode {
            LbArg::Median => LbMode::Median,
            LbArg::Mean => LbMode::Mean,
        },
        ub_scope: match args.ub_scope {
            UbArg::PerImage => UbScope::PerImage,
            UbArg::Global => UbScope::Global,
        },
    };
    let rates_by = parse_key_fields(&args.rates_by)?;
    ctx.flag("corpus", args.corpus.display().to_string());
    ctx.flag("out", args.out.display().to_string());
    ctx.decision("dhm_mode", options.dhm_mode.name());
    ctx.decision("lb_mode", options.lb_mode.name());
    ctx.decision("ub_scope", options.ub_scope.name());

    let records = ctx.load_corpus(&args.corpus)?;
    let matrices = ctx.load_embeddings(&args.embeddings, &records)?;

    let mut by_task: std::collections::BTreeMap<Task, Vec<&DescriptionRecord>> = Default::default();
    for r in &records {
        by_task.entry(r.task).or_default().push(r);
    }
    let jobs: Vec<(usize, &Vec<&DescriptionRecord>)> =
        (0..matrices.len()).flat_map(|m| by_task.values().map(move |t| (m, t))).collect();
    let parts: Vec<HcdRun> = jobs.par_iter().map(|(m, task)| evaluate_task(task, &matrices[*m], options)).collect();

    let mut run = HcdRun::default();
    for (part, (m, _)) in parts.into_iter().zip(&jobs) {
        run.records.extend(part.records);
        run.excluded.extend(part.excluded);
        if !part.missing_embeddings.is_empty() {
            ctx.note(format!(
                "{}: {} corpus record(s) have no vector",
                matrices[*m].embedder_id(),
                part.missing_embeddings.len()
            ));
        }
    }
    if !run.excluded.is_empty() {
        ctx.note(format!("{} cell(s) excluded as degenerate", run.excluded.len()));
    }

    let mut table = CsvTable::new(&HCD_COLUMNS);
    for r in &run.records {
        table.row(&[
            key(r, KeyField::ImageId),
            key(r, KeyField::Task),
            key(r, KeyField::EmbedderId),
            key(r, KeyField::ModelName),
            key(r, KeyField::PromptType),
            r.n_human.to_string(),
            r.n_model.to_string(),
            format_float(r.lb),
            format_float(r.ub),
            format_float(r.d_hm),
            format_float(r.hcd),
            r.classification.name().to_string(),
        ]);
    }
    let mut excluded = CsvTable::new(&["image_id", "task", "embedder_id", "model_name", "prompt_type", "reason"]);
    for e in &run.excluded {
        let g = |f: KeyField| e.group.get(f).unwrap_or("").to_string();
        excluded.row(&[
            g(KeyField::ImageId),
            g(KeyField::Task),
            g(KeyField::EmbedderId),
            g(KeyField::ModelName),
            g(KeyField::PromptType),
            e.reason_text(),
        ]);
    }

    if let Some(path) = &args.rates {
        ctx.flag("rates", path.display().to_string());
        ctx.flag("rates_by", args.rates_by.clone());
    }
    ctx.emit(&args.out, &table.into_bytes())?;
    ctx.emit(&sibling(&args.out, "excluded"), &excluded.into_bytes())?;

    if let Some(path) = &args.rates {
        let mut header: Vec<String> = rates_by.iter().map(|f| f.name().to_string()).collect();
        header.extend(["n", "generic", "catastrophic", "generic_rate", "catastrophic_rate"].map(String::from));
        let mut rates = CsvTable::new(&header);
        if !run.records.is_empty() {
            for fr in failure_rates(&run.records, &rates_by).expect("non-empty records") {
                let mut row: Vec<String> = rates_by.iter().map(|f| fr.group.get(*f).unwrap_or("").to_string()).collect();
                row.extend([
                    fr.n.to_string(),
                    fr.generic.to_string(),
                    fr.catastrophic.to_string(),
                    format_float(fr.generic_rate),
                    format_float(fr.catastrophic_rate),
                ]);
                rates.row(&row);
            }
        }
        ctx.emit(path, &rates.into_bytes())?;
    }
    Ok(())
}
