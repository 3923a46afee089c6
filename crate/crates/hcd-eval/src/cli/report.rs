use std::path::PathBuf;

use clap::Args;
use serde_json::{json, Value};

use super::{CliError, CliResult, Ctx};
use crate::output::{manifest_path, sha256_hex};
use crate::report::{render_text, summarize, BootstrapSettings, CsvData, InputKind, ReportError};

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Result CSVs written by `hcd`, `nlp` or `purity`, each with its
    /// manifest alongside.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Machine-readable summary (JSON).
    #[arg(long)]
    pub out: PathBuf,
    /// Human-readable summary; defaults to the JSON path with `.txt`.
    #[arg(long)]
    pub text: Option<PathBuf>,
    /// Grouping columns applied to every input instead of each kind's
    /// default.
    #[arg(long, value_delimiter = ',')]
    pub group_by: Option<Vec<String>>,
    #[arg(long, default_value_t = 2000)]
    pub resamples: usize,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
}

fn mismatch(path: &std::path::Path, reason: impl Into<String>) -> CliError {
    CliError::invalid(ReportError::SchemaMismatch { path: path.display().to_string(), reason: reason.into() })
}

pub fn run(args: ReportArgs, ctx: &mut Ctx) -> CliResult<()> {
    if args.resamples == 0 {
        return Err(CliError::Usage("--resamples must be positive".into()));
    }
    if !(args.level > 0.0 && args.level < 1.0) {
        return Err(CliError::Usage("--level must lie in (0, 1)".into()));
    }
    let boot = BootstrapSettings { resamples: args.resamples, level: args.level, seed: ctx.seed };
    let text_path = args.text.clone().unwrap_or_else(|| args.out.with_extension("txt"));
    ctx.flag("inputs", args.inputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>());
    ctx.flag("out", args.out.display().to_string());
    ctx.flag("text", text_path.display().to_string());
    if let Some(g) = &args.group_by {
        ctx.flag("group_by", g.clone());
    }
    ctx.decision("bootstrap", json!({ "method": "percentile", "resamples": args.resamples, "level": args.level }));

    let mut tables = Vec::new();
    let mut described = Vec::new();
    let mut errors = Vec::new();
    for path in &args.inputs {
        let bytes = ctx.read(path)?;
        let result = (|| -> CliResult<(InputKind, CsvData)> {
            let data = CsvData::parse(&bytes).map_err(|e| mismatch(path, e))?;
            let kind = InputKind::from_header(&data.header)
                .ok_or_else(|| mismatch(path, "header matches no result format of this toolkit"))?;
            let mpath = manifest_path(path);
            let manifest_bytes = ctx.read(&mpath).map_err(|_| mismatch(path, "no manifest alongside"))?;
            let manifest: Value =
                serde_json::from_slice(&manifest_bytes).map_err(|e| mismatch(path, format!("bad manifest: {e}")))?;
            if manifest["subcommand"] != kind.subcommand() {
                return Err(mismatch(path, format!("manifest names {} but the header is {}", manifest["subcommand"], kind.name())));
            }
            if manifest["output"]["sha256"] != sha256_hex(&bytes).as_str() {
                return Err(mismatch(path, "file digest differs from its manifest"));
            }
            Ok((kind, data))
        })();
        let (kind, data) = match result {
            Ok(v) => v,
            Err(CliError::Validation(m)) => {
                errors.extend(m);
                continue;
            }
            Err(e) => return Err(e),
        };
        let group_by: Vec<&str> = match &args.group_by {
            Some(g) => g.iter().map(String::as_str).collect(),
            None => kind.default_group_by().to_vec(),
        };
        let label = path.file_name().and_then(|n| n.to_str()).unwrap_or("input").to_string();
        match summarize(kind, &label, &data, &group_by, boot) {
            Ok(t) => tables.extend(t),
            Err(e) => errors.push(format!("{}: {e}", path.display())),
        }
        described.push(json!({ "path": path.display().to_string(), "kind": kind.name(), "rows": data.rows.len() }));
    }
    if !errors.is_empty() {
        return Err(CliError::Validation(errors));
    }

    let doc = json!({
        "inputs": described,
        "tables": tables.iter().map(|t| t.json.clone()).collect::<Vec<_>>(),
    });
    let mut json_text = serde_json::to_string_pretty(&doc).expect("serialize report");
    json_text.push('\n');
    ctx.emit(&args.out, json_text.as_bytes())?;
    ctx.emit(&text_path, render_text(&tables).as_bytes())?;
    Ok(())
}
