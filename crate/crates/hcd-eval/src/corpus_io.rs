//! Line-delimited JSON corpora: one description record per line.

use std::path::Path;

use hcd_core::corpus::{CorpusBuilder, CorpusError, DescriptionRecord, RecordDraft};
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SchemaMode {
    /// Abort on the first violation; unknown fields are violations.
    #[default]
    Strict,
    /// Skip and report bad lines; keep unknown fields as opaque JSON.
    Lenient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    /// 1-based line number.
    pub line: usize,
    pub error: CorpusError,
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusFileError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {error}")]
    Violation { line: usize, error: CorpusError },
}

#[derive(Debug, Clone, Default)]
pub struct LoadedCorpus {
    pub records: Vec<DescriptionRecord>,
    pub violations: Vec<Violation>,
}

const FIELDS: [&str; 10] = [
    "record_id",
    "image_id",
    "task",
    "task_group",
    "generality",
    "source",
    "model_family",
    "model_name",
    "prompt_type",
    "text",
];

fn field_slot<'a>(draft: &'a mut RecordDraft, name: &str) -> Option<(&'static str, &'a mut Option<String>)> {
    let slot = match name {
        "record_id" => &mut draft.record_id,
        "image_id" => &mut draft.image_id,
        "task" => &mut draft.task,
        "task_group" => &mut draft.task_group,
        "generality" => &mut draft.generality,
        "source" => &mut draft.source,
        "model_family" => &mut draft.model_family,
        "model_name" => &mut draft.model_name,
        "prompt_type" => &mut draft.prompt_type,
        "text" => &mut draft.text,
        _ => return None,
    };
    let name = FIELDS.iter().find(|f| **f == name).copied().expect("listed field");
    Some((name, slot))
}

fn parse_line(line: &str, line_no: usize, mode: SchemaMode) -> Result<RecordDraft, CorpusError> {
    let object: Map<String, Value> = serde_json::from_str(line).map_err(|_| CorpusError::MalformedLine(line_no))?;
    let mut draft = RecordDraft::default();
    for (key, value) in object {
        match field_slot(&mut draft, &key) {
            Some((name, slot)) => match value {
                Value::String(s) => *slot = Some(s),
                Value::Null => *slot = None,
                other => return Err(CorpusError::InvalidValue { field: name, value: other.to_string() }),
            },
            None if mode == SchemaMode::Strict => return Err(CorpusError::UnknownField(key)),
            None => {
                draft.extra.insert(key, value.to_string());
            }
        }
    }
    Ok(draft)
}

/// Parses a corpus file's bytes. Blank lines and lines starting with `#`
/// are ignored.
pub fn parse_corpus(bytes: &[u8], mode: SchemaMode) -> Result<LoadedCorpus, CorpusFileError> {
    let mut builder = CorpusBuilder::new();
    let mut violations = Vec::new();
    for (i, raw) in bytes.split(|b| *b == b'\n').enumerate() {
        let line_no = i + 1;
        let result = match std::str::from_utf8(raw) {
            Err(_) => Err(CorpusError::MalformedLine(line_no)),
            Ok(line) => {
                let line = line.strip_suffix('\r').unwrap_or(line);
                if line.trim().is_empty() || line.starts_with('#') {
                    continue;
                }
                parse_line(line, line_no, mode).and_then(|draft| builder.push(draft))
            }
        };
        if let Err(error) = result {
            match mode {
                SchemaMode::Strict => return Err(CorpusFileError::Violation { line: line_no, error }),
                SchemaMode::Lenient => violations.push(Violation { line: line_no, error }),
            }
        }
    }
    Ok(LoadedCorpus { records: builder.finish(), violations })
}

pub fn load_corpus(path: &Path, mode: SchemaMode) -> Result<LoadedCorpus, CorpusFileError> {
    let bytes =
        std::fs::read(path).map_err(|source| CorpusFileError::Io { path: path.display().to_string(), source })?;
    parse_corpus(&bytes, mode)
}

fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("string serializes")
}

/// One JSON object per line, known fields in a fixed order followed by
/// any preserved extra fields.
pub fn write_corpus(records: &[DescriptionRecord]) -> String {
    let mut out = String::new();
    for r in records {
        let model = r.model.as_ref();
        let opt = |v: Option<&str>| v.map(json_string).unwrap_or_else(|| "null".into());
        let values = [
            json_string(&r.record_id),
            json_string(&r.image_id),
            json_string(r.task.name()),
            json_string(r.task.group().name()),
            json_string(r.generality.name()),
            json_string(r.source().name()),
            opt(model.map(|m| m.family.as_str())),
            opt(model.map(|m| m.name.as_str())),
            opt(model.map(|m| m.prompt_type.name())),
            json_string(&r.text),
        ];
        out.push('{');
        for (i, (name, value)) in FIELDS.iter().zip(values).enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&format!("{}:{}", json_string(name), value));
        }
        for (key, raw) in &r.extra {
            // extras hold serialized JSON; anything else is written as a string
            let value = serde_json::from_str::<Value>(raw).map(|v| v.to_string()).unwrap_or_else(|_| json_string(raw));
            out.push_str(&format!(",{}:{}", json_string(key), value));
        }
        out.push_str("}\n");
    }
    out
}
