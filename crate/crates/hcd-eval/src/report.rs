//! Summary tables over result CSVs written by this toolkit.

use std::collections::BTreeMap;

use hcd_core::corpus::Task;
use hcd_core::stats::{bootstrap_ci, mean, wilcoxon_signed_rank, Alternative};
use serde_json::{json, Value};

use crate::output::format_float;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReportError {
    #[error("{path}: {reason}")]
    SchemaMismatch { path: String, reason: String },
}

/// A parsed CSV: header plus string cells.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CsvData {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

type Getter<'a> = Box<dyn Fn(&[String]) -> String + 'a>;

impl CsvData {
    pub fn parse(bytes: &[u8]) -> Result<Self, String> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
        let header = reader.headers().map_err(|e| e.to_string())?.iter().map(String::from).collect();
        let mut rows = Vec::new();
        for record in reader.records() {
            rows.push(record.map_err(|e| e.to_string())?.iter().map(String::from).collect());
        }
        Ok(Self { header, rows })
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Cell accessor that derives `task_group` from `task` when the
    /// table has no explicit column.
    fn getter(&self, name: &str) -> Option<Getter<'_>> {
        if let Some(i) = self.column(name) {
            return Some(Box::new(move |row: &[String]| row[i].clone()));
        }
        if name == "task_group" {
            let t = self.column("task")?;
            return Some(Box::new(move |row: &[String]| {
                Task::parse(&row[t]).map(|t| t.group().name().to_string()).unwrap_or_default()
            }));
        }
        None
    }
}

/// Result files the report understands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputKind {
    Hcd,
    Nlp,
    Purity,
    Delta,
}

impl InputKind {
    pub fn name(self) -> &'static str {
        match self {
            InputKind::Hcd => "hcd",
            InputKind::Nlp => "nlp",
            InputKind::Purity => "purity",
            InputKind::Delta => "delta",
        }
    }

    /// Subcommand that writes this kind of file.
    pub fn subcommand(self) -> &'static str {
        match self {
            InputKind::Hcd => "hcd",
            InputKind::Nlp => "nlp",
            InputKind::Purity | InputKind::Delta => "purity",
        }
    }

    pub fn columns(self) -> &'static [&'static str] {
        match self {
            InputKind::Hcd => &crate::cli::HCD_COLUMNS,
            InputKind::Nlp => &crate::cli::NLP_COLUMNS,
            InputKind::Purity => &crate::cli::PURITY_COLUMNS,
            InputKind::Delta => &crate::cli::DELTA_COLUMNS,
        }
    }

    pub fn from_header(header: &[String]) -> Option<Self> {
        [InputKind::Hcd, InputKind::Nlp, InputKind::Purity, InputKind::Delta]
            .into_iter()
            .find(|k| k.columns().iter().copied().eq(header.iter().map(String::as_str)))
    }

    pub fn default_group_by(self) -> &'static [&'static str] {
        match self {
            InputKind::Hcd => &["embedder_id", "task_group"],
            InputKind::Nlp => &["source"],
            InputKind::Purity => &["embedder_id", "source_id", "level"],
            InputKind::Delta => &["embedder_id", "k_fraction"],
        }
    }

    fn value_columns(self) -> &'static [&'static str] {
        match self {
            InputKind::Hcd => &["hcd", "d_hm"],
            InputKind::Nlp => &["n_words", "entropy_bits", "ttr", "mean_pairwise_sim", "hedge_hit", "sentiment"],
            InputKind::Purity => &["purity"],
            InputKind::Delta => &["delta"],
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BootstrapSettings {
    pub resamples: usize,
    pub level: f64,
    pub seed: u64,
}

/// Mean with a percentile bootstrap interval. A group with a single
/// value reports that value as both bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanRow {
    /// `None` marks the overall row.
    pub group: Option<Vec<String>>,
    pub n: usize,
    pub mean: f64,
    pub ci: (f64, f64),
}

fn mean_row(group: Option<Vec<String>>, values: &[f64], boot: BootstrapSettings) -> MeanRow {
    let m = mean(values).expect("non-empty group");
    let ci = if values.len() < 2 {
        (m, m)
    } else {
        let stat = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
        bootstrap_ci(values, stat, boot.resamples, boot.level, boot.seed).expect("validated bootstrap settings")
    };
    MeanRow { group, n: values.len(), mean: m, ci }
}

fn parse_number(cell: &str) -> Option<f64> {
    cell.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Per-group means of `value`, then the overall row. Blank cells are
/// skipped.
pub fn grouped_means(
    data: &CsvData,
    group_by: &[&str],
    value: &str,
    boot: BootstrapSettings,
) -> Result<Vec<MeanRow>, String> {
    let v = data.column(value).ok_or_else(|| format!("no column {value:?}"))?;
    let getters = group_by
        .iter()
        .map(|g| data.getter(g).ok_or_else(|| format!("no column {g:?}")))
        .collect::<Result<Vec<_>, _>>()?;
    let mut groups: BTreeMap<Vec<String>, Vec<f64>> = BTreeMap::new();
    let mut all = Vec::new();
    for row in &data.rows {
        let Some(x) = parse_number(&row[v]) else { continue };
        groups.entry(getters.iter().map(|g| g(row)).collect()).or_default().push(x);
        all.push(x);
    }
    let mut out: Vec<MeanRow> = groups.into_iter().map(|(k, xs)| mean_row(Some(k), &xs, boot)).collect();
    if !all.is_empty() {
        out.push(mean_row(None, &all, boot));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub group: Option<Vec<String>>,
    pub n: usize,
    pub generic: usize,
    pub catastrophic: usize,
}

/// Generic and catastrophic counts from an HCD table's classification
/// column, per group and overall.
pub fn classification_rates(data: &CsvData, group_by: &[&str]) -> Result<Vec<RateRow>, String> {
    let c = data.column("classification").ok_or("no classification column")?;
    let getters = group_by
        .iter()
        .map(|g| data.getter(g).ok_or_else(|| format!("no column {g:?}")))
        .collect::<Result<Vec<_>, _>>()?;
    let mut groups: BTreeMap<Vec<String>, (usize, usize, usize)> = BTreeMap::new();
    let mut total = (0, 0, 0);
    for row in &data.rows {
        let key: Vec<String> = getters.iter().map(|g| g(row)).collect();
        let entry = groups.entry(key).or_default();
        for e in [entry, &mut total] {
            e.0 += 1;
            match row[c].as_str() {
                "generic" => e.1 += 1,
                "catastrophic" => e.2 += 1,
                _ => {}
            }
        }
    }
    let mut out: Vec<RateRow> = groups
        .into_iter()
        .map(|(k, (n, g, c))| RateRow { group: Some(k), n, generic: g, catastrophic: c })
        .collect();
    if total.0 > 0 {
        out.push(RateRow { group: None, n: total.0, generic: total.1, catastrophic: total.2 });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WilcoxonRow {
    pub group: Vec<String>,
    pub n: usize,
    pub n_positive: usize,
    pub mean: f64,
    /// `None` when every value is zero.
    pub statistic: Option<f64>,
    pub p_value: Option<f64>,
    pub exact: Option<bool>,
}

/// Two-sided signed-rank test of `value` against zero, per group.
pub fn wilcoxon_by_group(data: &CsvData, group_by: &[&str], value: &str) -> Result<Vec<WilcoxonRow>, String> {
    let v = data.column(value).ok_or_else(|| format!("no column {value:?}"))?;
    let getters = group_by
        .iter()
        .map(|g| data.getter(g).ok_or_else(|| format!("no column {g:?}")))
        .collect::<Result<Vec<_>, _>>()?;
    let mut groups: BTreeMap<Vec<String>, Vec<f64>> = BTreeMap::new();
    for row in &data.rows {
        if let Some(x) = parse_number(&row[v]) {
            groups.entry(getters.iter().map(|g| g(row)).collect()).or_default().push(x);
        }
    }
    Ok(groups
        .into_iter()
        .map(|(group, xs)| {
            let test = wilcoxon_signed_rank(&xs, Alternative::TwoSided).ok();
            WilcoxonRow {
                group,
                n: xs.len(),
                n_positive: xs.iter().filter(|x| **x > 0.0).count(),
                mean: mean(&xs).expect("non-empty group"),
                statistic: test.as_ref().map(|t| t.statistic),
                p_value: test.as_ref().map(|t| t.p_value),
                exact: test.as_ref().map(|t| t.exact),
            }
        })
        .collect())
}

/// One rendered table, kept both as JSON and as text cells.
#[derive(Debug, Clone)]
pub struct SummaryTable {
    pub title: String,
    pub columns: Vec<String>,
    pub cells: Vec<Vec<String>>,
    pub json: Value,
}

fn group_json(names: &[&str], group: &Option<Vec<String>>) -> Value {
    match group {
        Some(values) => json!(names.iter().zip(values).map(|(n, v)| (n.to_string(), json!(v))).collect::<BTreeMap<_, _>>()),
        None => Value::Null,
    }
}

fn group_cells(names: &[&str], group: &Option<Vec<String>>) -> Vec<String> {
    match group {
        Some(values) => values.clone(),
        None => {
            let mut v = vec!["(all)".to_string()];
            v.resize(names.len().max(1), String::new());
            v
        }
    }
}

fn group_columns(names: &[&str]) -> Vec<String> {
    if names.is_empty() {
        vec!["group".into()]
    } else {
        names.iter().map(|s| s.to_string()).collect()
    }
}

pub fn means_table(title: String, group_by: &[&str], value: &str, rows: &[MeanRow]) -> SummaryTable {
    let mut columns = group_columns(group_by);
    columns.extend(["n", "mean", "ci_low", "ci_high"].map(String::from));
    let cells = rows
        .iter()
        .map(|r| {
            let mut c = group_cells(group_by, &r.group);
            if group_by.is_empty() && r.group.is_some() {
                c = vec![String::new()];
            }
            c.extend([r.n.to_string(), format_float(r.mean), format_float(r.ci.0), format_float(r.ci.1)]);
            c
        })
        .collect();
    let json = json!({
        "title": title,
        "kind": "means",
        "value": value,
        "group_by": group_by,
        "rows": rows.iter().map(|r| json!({
            "group": group_json(group_by, &r.group),
            "overall": r.group.is_none(),
            "n": r.n,
            "mean": r.mean,
            "ci_low": r.ci.0,
            "ci_high": r.ci.1,
        })).collect::<Vec<_>>(),
    });
    SummaryTable { title, columns, cells, json }
}

pub fn rates_table(title: String, group_by: &[&str], rows: &[RateRow]) -> SummaryTable {
    let mut columns = group_columns(group_by);
    columns.extend(["n", "generic", "catastrophic", "generic_rate", "catastrophic_rate"].map(String::from));
    let rate = |k: usize, n: usize| k as f64 / n as f64;
    let cells = rows
        .iter()
        .map(|r| {
            let mut c = group_cells(group_by, &r.group);
            c.extend([
                r.n.to_string(),
                r.generic.to_string(),
                r.catastrophic.to_string(),
                format_float(rate(r.generic, r.n)),
                format_float(rate(r.catastrophic, r.n)),
            ]);
            c
        })
        .collect();
    let json = json!({
        "title": title,
        "kind": "failure_rates",
        "group_by": group_by,
        "rows": rows.iter().map(|r| json!({
            "group": group_json(group_by, &r.group),
            "overall": r.group.is_none(),
            "n": r.n,
            "generic": r.generic,
            "catastrophic": r.catastrophic,
            "generic_rate": rate(r.generic, r.n),
            "catastrophic_rate": rate(r.catastrophic, r.n),
        })).collect::<Vec<_>>(),
    });
    SummaryTable { title, columns, cells, json }
}

pub fn wilcoxon_table(title: String, group_by: &[&str], rows: &[WilcoxonRow]) -> SummaryTable {
    let mut columns = group_columns(group_by);
    columns.extend(["n", "n_positive", "mean", "V", "p_value", "exact"].map(String::from));
    let opt = |x: Option<f64>| x.map(format_float).unwrap_or_default();
    let cells = rows
        .iter()
        .map(|r| {
            let mut c = r.group.clone();
            c.extend([
                r.n.to_string(),
                r.n_positive.to_string(),
                format_float(r.mean),
                opt(r.statistic),
                opt(r.p_value),
                r.exact.map(|e| e.to_string()).unwrap_or_default(),
            ]);
            c
        })
        .collect();
    let json = json!({
        "title": title,
        "kind": "wilcoxon_signed_rank",
        "alternative": "two-sided",
        "group_by": group_by,
        "rows": rows.iter().map(|r| json!({
            "group": group_json(group_by, &Some(r.group.clone())),
            "n": r.n,
            "n_positive": r.n_positive,
            "mean": r.mean,
            "V": r.statistic,
            "p_value": r.p_value,
            "exact": r.exact,
        })).collect::<Vec<_>>(),
    });
    SummaryTable { title, columns, cells, json }
}

/// Purity by k, one row per (embedder, source, level).
pub fn purity_pivot(title: String, data: &CsvData) -> Result<SummaryTable, String> {
    let col = |n: &str| data.column(n).ok_or_else(|| format!("no column {n:?}"));
    let (e, s, l, k, p) = (col("embedder_id")?, col("source_id")?, col("level")?, col("k_fraction")?, col("purity")?);
    let mut ks: Vec<String> = Vec::new();
    let mut rows: BTreeMap<(String, String, String), BTreeMap<String, String>> = BTreeMap::new();
    for row in &data.rows {
        if !ks.contains(&row[k]) {
            ks.push(row[k].clone());
        }
        rows.entry((row[e].clone(), row[s].clone(), row[l].clone())).or_default().insert(row[k].clone(), row[p].clone());
    }
    let mut columns: Vec<String> = ["embedder_id", "source_id", "level"].map(String::from).to_vec();
    columns.extend(ks.iter().map(|k| format!("k={k}")));
    let cells = rows
        .iter()
        .map(|((e, s, l), by_k)| {
            let mut c = vec![e.clone(), s.clone(), l.clone()];
            c.extend(ks.iter().map(|k| by_k.get(k).cloned().unwrap_or_default()));
            c
        })
        .collect();
    let json = json!({
        "title": title,
        "kind": "purity",
        "rows": rows.iter().map(|((e, s, l), by_k)| json!({
            "embedder_id": e,
            "source_id": s,
            "level": l,
            "purity": by_k.iter().map(|(k, v)| (k.clone(), json!(parse_number(v)))).collect::<BTreeMap<_, _>>(),
        })).collect::<Vec<_>>(),
    });
    Ok(SummaryTable { title, columns, cells, json })
}

/// Summary tables for one input file.
pub fn summarize(
    kind: InputKind,
    label: &str,
    data: &CsvData,
    group_by: &[&str],
    boot: BootstrapSettings,
) -> Result<Vec<SummaryTable>, String> {
    let mut out = Vec::new();
    match kind {
        InputKind::Delta => {
            let rows = wilcoxon_by_group(data, group_by, "delta")?;
            out.push(wilcoxon_table(format!("{label}: signed-rank test of delta"), group_by, &rows));
        }
        InputKind::Purity => {
            out.push(purity_pivot(format!("{label}: purity by k"), data)?);
        }
        _ => {}
    }
    for value in kind.value_columns() {
        let rows = grouped_means(data, group_by, value, boot)?;
        let by = if group_by.is_empty() { String::new() } else { format!(" by {}", group_by.join(", ")) };
        out.push(means_table(format!("{label}: mean {value}{by}"), group_by, value, &rows));
    }
    if kind == InputKind::Hcd {
        let rows = classification_rates(data, group_by)?;
        out.push(rates_table(format!("{label}: failure rates"), group_by, &rows));
    }
    Ok(out)
}

/// Plain-text rendering with padded columns.
pub fn render_text(tables: &[SummaryTable]) -> String {
    let mut out = String::new();
    for (i, t) in tables.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&format!("== {} ==\n", t.title));
        let mut widths: Vec<usize> = t.columns.iter().map(|c| c.chars().count()).collect();
        for row in &t.cells {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.chars().count());
            }
        }
        let line = |cells: &[String]| {
            let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
            padded.join("  ").trim_end().to_string() + "\n"
        };
        out.push_str(&line(&t.columns));
        for row in &t.cells {
            out.push_str(&line(row));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const BOOT: BootstrapSettings = BootstrapSettings { resamples: 200, level: 0.95, seed: 1 };

    fn data(header: &[&str], rows: &[&[&str]]) -> CsvData {
        CsvData {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: rows.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect(),
        }
    }

    #[test]
    fn single_row_summary_equals_the_row() {
        let d = data(&["g", "x"], &[&["a", "0.25"]]);
        let rows = grouped_means(&d, &["g"], "x", BOOT).unwrap();
        assert_eq!(rows.len(), 2);
        for r in rows {
            assert_eq!((r.n, r.mean, r.ci), (1, 0.25, (0.25, 0.25)));
        }
    }

    #[test]
    fn disjoint_groups_then_overall() {
        let d = data(&["g", "x"], &[&["b", "1"], &["a", "2"], &["b", "3"], &["a", "4"], &["a", ""]]);
        let rows = grouped_means(&d, &["g"], "x", BOOT).unwrap();
        let summary: Vec<(Option<Vec<String>>, usize, f64)> = rows.iter().map(|r| (r.group.clone(), r.n, r.mean)).collect();
        assert_eq!(
            summary,
            vec![(Some(vec!["a".into()]), 2, 3.0), (Some(vec!["b".into()]), 2, 2.0), (None, 4, 2.5)]
        );
        assert!(rows.iter().all(|r| r.ci.0 <= r.mean && r.mean <= r.ci.1));
    }

    #[test]
    fn task_group_is_derived() {
        let d = data(&["task", "x"], &[&["navigation", "1"], &["emotions", "3"], &["sitting", "5"]]);
        let rows = grouped_means(&d, &["task_group"], "x", BOOT).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[1].group, Some(vec!["affordances".to_string()]));
        assert_eq!(rows[1].mean, 3.0);
    }

    #[test]
    fn rates_count_classifications() {
        let d = data(
            &["g", "classification"],
            &[&["a", "generic"], &["a", "in_range"], &["b", "catastrophic"], &["b", "generic"]],
        );
        let rows = classification_rates(&d, &["g"]).unwrap();
        assert_eq!(rows[2], RateRow { group: None, n: 4, generic: 2, catastrophic: 1 });
    }

    #[test]
    fn header_identifies_kind() {
        let header: Vec<String> = InputKind::Delta.columns().iter().map(|s| s.to_string()).collect();
        assert_eq!(InputKind::from_header(&header), Some(InputKind::Delta));
        assert_eq!(InputKind::from_header(&["x".to_string()]), None);
    }
}
