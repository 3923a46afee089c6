//! Description records, the fixed task hierarchy and grouping keys.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CorpusError {
    #[error("malformed record on line {0}")]
    MalformedLine(usize),
    #[error("duplicate record id {0:?}")]
    DuplicateRecordId(String),
    #[error("invalid task name {0:?}")]
    InvalidTaskName(String),
    #[error("model record is missing {0}")]
    MissingModelField(&'static str),
    #[error("human record must not carry {0}")]
    UnexpectedModelField(&'static str),
    #[error("missing required field {0}")]
    MissingField(&'static str),
    #[error("invalid value {value:?} for field {field}")]
    InvalidValue { field: &'static str, value: String },
    #[error("record {0:?} has empty text")]
    EmptyText(String),
    #[error("unknown field {0:?}")]
    UnknownField(String),
}

/// Superordinate task groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TaskGroup {
    GeneralKnowledge,
    Affordances,
    Sensory,
    Affective,
    FutureCasting,
}

impl TaskGroup {
    pub const ALL: [TaskGroup; 5] = [
        TaskGroup::GeneralKnowledge,
        TaskGroup::Affordances,
        TaskGroup::Sensory,
        TaskGroup::Affective,
        TaskGroup::FutureCasting,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TaskGroup::GeneralKnowledge => "general_knowledge",
            TaskGroup::Affordances => "affordances",
            TaskGroup::Sensory => "sensory",
            TaskGroup::Affective => "affective",
            TaskGroup::FutureCasting => "future_casting",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        let key = normalize_name(name);
        Self::ALL.into_iter().find(|g| g.name() == key)
    }
}

impl fmt::Display for TaskGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The fifteen scene-understanding tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Task {
    GeneralDescription,
    BasicLevelCategory,
    Objects,
    GeneralAffordances,
    Navigation,
    Sitting,
    Multisensory,
    Loudness,
    PhysicalTemperature,
    Emotions,
    Safety,
    Aesthetics,
    Transience,
    Predictability,
    Temporal,
}

impl Task {
    pub const ALL: [Task; 15] = [
        Task::GeneralDescription,
        Task::BasicLevelCategory,
        Task::Objects,
        Task::GeneralAffordances,
        Task::Navigation,
        Task::Sitting,
        Task::Multisensory,
        Task::Loudness,
        Task::PhysicalTemperature,
        Task::Emotions,
        Task::Safety,
        Task::Aesthetics,
        Task::Transience,
        Task::Predictability,
        Task::Temporal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Task::GeneralDescription => "general_description",
            Task::BasicLevelCategory => "basic_level_category",
            Task::Objects => "objects",
            Task::GeneralAffordances => "general_affordances",
            Task::Navigation => "navigation",
            Task::Sitting => "sitting",
            Task::Multisensory => "multisensory",
            Task::Loudness => "loudness",
            Task::PhysicalTemperature => "physical_temperature",
            Task::Emotions => "emotions",
            Task::Safety => "safety",
            Task::Aesthetics => "aesthetics",
            Task::Transience => "transience",
            Task::Predictability => "predictability",
            Task::Temporal => "temporal",
        }
    }

    pub fn group(self) -> TaskGroup {
        use Task::*;
        match self {
            GeneralDescription | BasicLevelCategory | Objects => TaskGroup::GeneralKnowledge,
            GeneralAffordances | Navigation | Sitting => TaskGroup::Affordances,
            Multisensory | Loudness | PhysicalTemperature => TaskGroup::Sensory,
            Emotions | Safety | Aesthetics => TaskGroup::Affective,
            Transience | Predictability | Temporal => TaskGroup::FutureCasting,
        }
    }

    /// Looks a task up after normalizing to lower snake case, so
    /// `"Physical temperature"` and `"physical_temperature"` agree.
    pub fn parse(name: &str) -> Result<Self, CorpusError> {
        let key = normalize_name(name);
        Self::ALL
            .into_iter()
            .find(|t| t.name() == key)
            .ok_or_else(|| CorpusError::InvalidTaskName(name.to_string()))
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Lowercases and collapses every run of non-alphanumeric characters
/// into a single underscore.
pub fn normalize_name(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    let mut pending_sep = false;
    for ch in name.trim().chars() {
        if ch.is_alphanumeric() {
            if pending_sep && !out.is_empty() {
                out.push('_');
            }
            pending_sep = false;
            out.extend(ch.to_lowercase());
        } else {
            pending_sep = true;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Generality {
    General,
    Specific,
}

impl Generality {
    pub fn name(self) -> &'static str {
        match self {
            Generality::General => "general",
            Generality::Specific => "specific",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match normalize_name(s).as_str() {
            "general" => Some(Generality::General),
            "specific" => Some(Generality::Specific),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Source {
    Human,
    Model,
}

impl Source {
    pub fn name(self) -> &'static str {
        match self {
            Source::Human => "human",
            Source::Model => "model",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match normalize_name(s).as_str() {
            "human" => Some(Source::Human),
            "model" => Some(Source::Model),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PromptType {
    Human,
    Custom,
    ModelGenerated,
}

impl PromptType {
    pub fn name(self) -> &'static str {
        match self {
            PromptType::Human => "human",
            PromptType::Custom => "custom",
            PromptType::ModelGenerated => "model_generated",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match normalize_name(s).as_str() {
            "human" => Some(PromptType::Human),
            "custom" => Some(PromptType::Custom),
            "model_generated" => Some(PromptType::ModelGenerated),
            _ => None,
        }
    }
}

/// Identity of the model that produced a description.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModelInfo {
    pub family: String,
    pub name: String,
    pub prompt_type: PromptType,
}

/// One text response to one image under one task.
///
/// Model provenance is an `Option<ModelInfo>` so that the "all three model
/// fields present iff the source is a model" rule holds by construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DescriptionRecord {
    pub record_id: String,
    pub image_id: String,
    pub task: Task,
    pub generality: Generality,
    pub model: Option<ModelInfo>,
    pub text: String,
    /// Unrecognized fields kept verbatim (serialized values) for
    /// round-tripping in lenient mode.
    pub extra: BTreeMap<String, String>,
}

impl DescriptionRecord {
    pub fn task_group(&self) -> TaskGroup {
        self.task.group()
    }

    pub fn source(&self) -> Source {
        if self.model.is_some() {
            Source::Model
        } else {
            Source::Human
        }
    }

    pub fn model_name(&self) -> Option<&str> {
        self.model.as_ref().map(|m| m.name.as_str())
    }

    pub fn prompt_type(&self) -> Option<PromptType> {
        self.model.as_ref().map(|m| m.prompt_type)
    }

    /// Value of a grouping field; `None` for absent optional fields and
    /// for fields that do not live on a record (`embedder_id`).
    pub fn field(&self, field: KeyField) -> Option<&str> {
        match field {
            KeyField::ImageId => Some(&self.image_id),
            KeyField::Task => Some(self.task.name()),
            KeyField::TaskGroup => Some(self.task.group().name()),
            KeyField::Generality => Some(self.generality.name()),
            KeyField::Source => Some(self.source().name()),
            KeyField::ModelFamily => self.model.as_ref().map(|m| m.family.as_str()),
            KeyField::ModelName => self.model.as_ref().map(|m| m.name.as_str()),
            KeyField::PromptType => self.model.as_ref().map(|m| m.prompt_type.name()),
            KeyField::EmbedderId => None,
        }
    }
}

/// Unvalidated record fields as read from an interchange file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RecordDraft {
    pub record_id: Option<String>,
    pub image_id: Option<String>,
    pub task: Option<String>,
    pub task_group: Option<String>,
    pub generality: Option<String>,
    pub source: Option<String>,
    pub model_family: Option<String>,
    pub model_name: Option<String>,
    pub prompt_type: Option<String>,
    pub text: Option<String>,
    pub extra: BTreeMap<String, String>,
}

fn required(value: Option<String>, field: &'static str) -> Result<String, CorpusError> {
    match value {
        Some(v) if !v.trim().is_empty() => Ok(v),
        _ => Err(CorpusError::MissingField(field)),
    }
}

fn present(value: &Option<String>) -> bool {
    value.as_deref().is_some_and(|v| !v.trim().is_empty())
}

impl TryFrom<RecordDraft> for DescriptionRecord {
    type Error = CorpusError;

    fn try_from(draft: RecordDraft) -> Result<Self, CorpusError> {
        let record_id = required(draft.record_id, "record_id")?;
        let image_id = required(draft.image_id, "image_id")?;
        let task = Task::parse(&required(draft.task, "task")?)?;
        if let Some(group) = draft.task_group.as_deref() {
            // an explicit group must agree with the fixed task table
            if TaskGroup::parse(group) != Some(task.group()) {
                return Err(CorpusError::InvalidValue { field: "task_group", value: group.to_string() });
            }
        }
        let generality_raw = required(draft.generality, "generality")?;
        let generality = Generality::parse(&generality_raw)
            .ok_or(CorpusError::InvalidValue { field: "generality", value: generality_raw })?;
        let source_raw = required(draft.source, "source")?;
        let source =
            Source::parse(&source_raw).ok_or(CorpusError::InvalidValue { field: "source", value: source_raw })?;

        let model = match source {
            Source::Human => {
                for (value, name) in [
                    (&draft.model_family, "model_family"),
                    (&draft.model_name, "model_name"),
                    (&draft.prompt_type, "prompt_type"),
                ] {
                    if present(value) {
                        return Err(CorpusError::UnexpectedModelField(name));
                    }
                }
                None
            }
            Source::Model => {
                let family = draft
                    .model_family
                    .filter(|v| !v.trim().is_empty())
                    .ok_or(CorpusError::MissingModelField("model_family"))?;
                let name = draft
                    .model_name
                    .filter(|v| !v.trim().is_empty())
                    .ok_or(CorpusError::MissingModelField("model_name"))?;
                let prompt_raw = draft
                    .prompt_type
                    .filter(|v| !v.trim().is_empty())
                    .ok_or(CorpusError::MissingModelField("prompt_type"))?;
                let prompt_type = PromptType::parse(&prompt_raw)
                    .ok_or(CorpusError::InvalidValue { field: "prompt_type", value: prompt_raw })?;
                Some(ModelInfo { family, name, prompt_type })
            }
        };

        let text = draft.text.unwrap_or_default();
        if text.trim().is_empty() {
            return Err(CorpusError::EmptyText(record_id));
        }
        Ok(DescriptionRecord { record_id, image_id, task, generality, model, text, extra: draft.extra })
    }
}

/// Accumulates validated records and enforces id uniqueness.
#[derive(Debug, Default)]
pub struct CorpusBuilder {
    records: Vec<DescriptionRecord>,
    seen: BTreeSet<String>,
}

impl CorpusBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Validates and appends one record. A rejected record leaves the
    /// builder unchanged; the first occurrence of an id wins.
    pub fn push(&mut self, draft: RecordDraft) -> Result<(), CorpusError> {
        let record = DescriptionRecord::try_from(draft)?;
        if !self.seen.insert(record.record_id.clone()) {
            return Err(CorpusError::DuplicateRecordId(record.record_id));
        }
        self.records.push(record);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn finish(self) -> Vec<DescriptionRecord> {
        self.records
    }
}

/// Fields usable in grouping keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum KeyField {
    ImageId,
    Task,
    TaskGroup,
    Generality,
    Source,
    ModelFamily,
    ModelName,
    PromptType,
    EmbedderId,
}

impl KeyField {
    pub const ALL: [KeyField; 9] = [
        KeyField::ImageId,
        KeyField::Task,
        KeyField::TaskGroup,
        KeyField::Generality,
        KeyField::Source,
        KeyField::ModelFamily,
        KeyField::ModelName,
        KeyField::PromptType,
        KeyField::EmbedderId,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KeyField::ImageId => "image_id",
            KeyField::Task => "task",
            KeyField::TaskGroup => "task_group",
            KeyField::Generality => "generality",
            KeyField::Source => "source",
            KeyField::ModelFamily => "model_family",
            KeyField::ModelName => "model_name",
            KeyField::PromptType => "prompt_type",
            KeyField::EmbedderId => "embedder_id",
        }
    }

    pub fn parse(name: &str) -> Result<Self, CorpusError> {
        Self::ALL
            .into_iter()
            .find(|f| f.name() == name.trim())
            .ok_or_else(|| CorpusError::UnknownField(name.to_string()))
    }
}

impl fmt::Display for KeyField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An aggregation cell: an ordered list of `(field, value)` pairs.
///
/// Keys built from the same field list order lexicographically by value,
/// which gives every partition a deterministic iteration order.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroupKey {
    entries: Vec<(KeyField, Option<String>)>,
}

impl GroupKey {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, field: KeyField, value: Option<&str>) -> Self {
        self.set(field, value);
        self
    }

    pub fn set(&mut self, field: KeyField, value: Option<&str>) {
        let value = value.map(String::from);
        match self.entries.iter_mut().find(|(f, _)| *f == field) {
            Some(slot) => slot.1 = value,
            None => self.entries.push((field, value)),
        }
    }

    pub fn get(&self, field: KeyField) -> Option<&str> {
        let direct = self.entries.iter().find(|(f, _)| *f == field).and_then(|(_, v)| v.as_deref());
        if direct.is_none() && field == KeyField::TaskGroup {
            return self.get(KeyField::Task).and_then(|t| Task::parse(t).ok()).map(|t| t.group().name());
        }
        direct
    }

    pub fn entries(&self) -> &[(KeyField, Option<String>)] {
        &self.entries
    }

    /// Restricts the key to `fields`, in that order. `task_group` is
    /// derived from `task` when not stored explicitly.
    pub fn project(&self, fields: &[KeyField]) -> GroupKey {
        GroupKey { entries: fields.iter().map(|f| (*f, self.get(*f).map(String::from))).collect() }
    }

    pub fn of_record(record: &DescriptionRecord, fields: &[KeyField]) -> GroupKey {
        GroupKey { entries: fields.iter().map(|f| (*f, record.field(*f).map(String::from))).collect() }
    }

    /// All present values must be non-empty.
    pub fn is_valid(&self) -> bool {
        self.entries.iter().all(|(_, v)| v.as_deref().is_none_or(|s| !s.is_empty()))
    }
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (field, value)) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}={}", field, value.as_deref().unwrap_or("-"))?;
        }
        Ok(())
    }
}

pub fn parse_key_spec(names: &[&str]) -> Result<Vec<KeyField>, CorpusError> {
    names.iter().map(|n| KeyField::parse(n)).collect()
}

/// Splits `records` into cells keyed by the named fields. Every record
/// lands in exactly one cell; cells iterate in key order.
pub fn partition<'a>(
    records: &'a [DescriptionRecord],
    key_spec: &[&str],
) -> Result<BTreeMap<GroupKey, Vec<&'a DescriptionRecord>>, CorpusError> {
    let fields = parse_key_spec(key_spec)?;
    if fields.contains(&KeyField::EmbedderId) {
        return Err(CorpusError::UnknownField(KeyField::EmbedderId.name().to_string()));
    }
    Ok(partition_by(records, &fields))
}

pub fn partition_by<'a>(
    records: &'a [DescriptionRecord],
    fields: &[KeyField],
) -> BTreeMap<GroupKey, Vec<&'a DescriptionRecord>> {
    let mut cells: BTreeMap<GroupKey, Vec<&DescriptionRecord>> = BTreeMap::new();
    for record in records {
        cells.entry(GroupKey::of_record(record, fields)).or_default().push(record);
    }
    cells
}
