//! CSV dialect, atomic file writes and run manifests.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

/// Shortest round-trip-stable rendering with 9 significant digits.
///
/// Positional notation for magnitudes in `[1e-5, 1e15)`, scientific
/// otherwise; trailing zeros are trimmed and `-0` prints as `0`.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.8e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let digits = digits.trim_end_matches('0');
    let digits = if digits.is_empty() { "0" } else { digits };
    let sign = if negative { "-" } else { "" };

    if !(-5..15).contains(&exp) {
        let (head, tail) = digits.split_at(1);
        return if tail.is_empty() { format!("{sign}{head}e{exp}") } else { format!("{sign}{head}.{tail}e{exp}") };
    }
    let point = exp + 1;
    if point <= 0 {
        format!("{sign}0.{}{}", "0".repeat((-point) as usize), digits)
    } else if point as usize >= digits.len() {
        format!("{sign}{}{}", digits, "0".repeat(point as usize - digits.len()))
    } else {
        let (int, frac) = digits.split_at(point as usize);
        format!("{sign}{int}.{frac}")
    }
}

pub fn format_opt(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

/// In-memory CSV table: RFC 4180 quoting, `\n` line endings, header first.
pub struct CsvTable {
    writer: csv::Writer<Vec<u8>>,
}

impl CsvTable {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        writer.write_record(header.iter().map(|h| h.as_ref())).expect("write to memory");
        Self { writer }
    }

    pub fn row<S: AsRef<str>>(&mut self, fields: &[S]) {
        self.writer.write_record(fields.iter().map(|f| f.as_ref())).expect("write to memory");
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.writer.into_inner().expect("flush to memory")
    }
}

/// Writes `bytes` to a temporary file next to `path`, then renames it
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::Builder::new().prefix(".hcd-eval-").tempfile_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Reads a whole input file and remembers its digest for the manifest.
#[derive(Debug, Default)]
pub struct InputLog {
    entries: BTreeMap<String, (String, u64)>,
}

impl InputLog {
    pub fn read(&mut self, path: &Path) -> io::Result<Vec<u8>> {
        let bytes = fs::read(path)?;
        self.entries.insert(path.display().to_string(), (sha256_hex(&bytes), bytes.len() as u64));
        Ok(bytes)
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.entries
                .iter()
                .map(|(path, (digest, size))| json!({ "path": path, "sha256": digest, "bytes": size }))
                .collect(),
        )
    }
}

/// `SOURCE_DATE_EPOCH` if set, otherwise the current time, as RFC 3339.
pub fn timestamp() -> String {
    let now = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse::<i64>().ok())
        .and_then(|secs| time::OffsetDateTime::from_unix_timestamp(secs).ok())
        .unwrap_or_else(time::OffsetDateTime::now_utc);
    now.format(&time::format_description::well_known::Rfc3339).expect("format timestamp")
}

/// Everything needed to reproduce one output file.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub subcommand: String,
    pub flags: BTreeMap<String, Value>,
    pub decisions: BTreeMap<String, Value>,
    pub notes: Vec<String>,
}

impl RunManifest {
    pub fn new(subcommand: &str) -> Self {
        Self { subcommand: subcommand.into(), flags: BTreeMap::new(), decisions: BTreeMap::new(), notes: Vec::new() }
    }

    pub fn flag(&mut self, name: &str, value: impl Into<Value>) -> &mut Self {
        self.flags.insert(name.into(), value.into());
        self
    }

    pub fn decision(&mut self, name: &str, value: impl Into<Value>) -> &mut Self {
        self.decisions.insert(name.into(), value.into());
        self
    }

    pub fn to_json(&self, inputs: &InputLog, output: &Path, output_digest: &str) -> Value {
        json!({
            "toolkit": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "subcommand": self.subcommand,
            "flags": self.flags,
            "decisions": self.decisions,
            "inputs": inputs.to_json(),
            "output": { "path": output.display().to_string(), "sha256": output_digest },
            "notes": self.notes,
            "timestamp": timestamp(),
        })
    }
}

/// Sibling manifest path: `out.csv` -> `out.csv.manifest.json`.
pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    output.with_file_name(name)
}

/// Writes an output and, when `manifest` is given, its sibling manifest.
pub fn emit(
    path: &Path,
    bytes: &[u8],
    manifest: Option<&RunManifest>,
    inputs: &InputLog,
) -> io::Result<()> {
    write_atomic(path, bytes)?;
    if let Some(m) = manifest {
        let doc = m.to_json(inputs, path, &sha256_hex(bytes));
        let mut text = serde_json::to_string_pretty(&doc).expect("serialize manifest");
        text.push('\n');
        write_atomic(&manifest_path(path), text.as_bytes())?;
    }
    Ok(())
}
