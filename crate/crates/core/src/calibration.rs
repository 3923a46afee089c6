//! Human calibration bounds and the human-calibrated cosine distance.
//!
//! For one image (within one task and one embedding space):
//!
//! * the human centroid is the re-normalized mean of the human vectors;
//! * the lower bound `lb` aggregates leave-one-out distances between each
//!   human vector and the centroid of the remaining humans;
//! * the upper bound `ub` is the 95th percentile of distances between this
//!   image's human vectors and the human centroids of every other image;
//! * `d_hm` aggregates model-to-human distances, and
//!   `hcd = (d_hm - lb) / (ub - lb)`.
//!
//! `hcd < 0` means the model answers sit tighter around the human centroid
//! than individual humans do; `hcd > 1` means they are farther from it than
//! human descriptions of a different image.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use alloc::collections::BTreeMap;

use crate::corpus::{DescriptionRecord, GroupKey, KeyField, Source, Task};
use crate::embed::{dot, l2_norm, unit_distance, EmbeddingMatrix};
use crate::stats;

/// Percentile used for the cross-image upper bound.
pub const UPPER_BOUND_PERCENTILE: f64 = 0.95;
/// Means with a smaller norm cannot be re-normalized.
pub const DEGENERATE_MEAN_NORM: f64 = 1e-9;
/// Bounds closer than this cannot scale a distance.
pub const DEGENERATE_BOUNDS_GAP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CalibrationError {
    #[error("need at least {required} human vectors, got {got}")]
    TooFewHumans { required: usize, got: usize },
    #[error("mean vector is (numerically) zero")]
    DegenerateMean,
    #[error("no other images to compare against")]
    NoOtherImages,
    #[error("no model vectors")]
    NoModelVectors,
    #[error("degenerate bounds: lb={lb}, ub={ub}")]
    DegenerateBounds { lb: f64, ub: f64 },
    #[error("empty input")]
    EmptyInput,
    #[error("vector dimensions disagree")]
    DimMismatch,
}

/// How model-to-human distances are aggregated into `d_hm`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DhmMode {
    /// Median over model vectors of the distance to the human centroid.
    #[default]
    Centroid,
    /// Median over every (human, model) pair.
    Pairwise,
}

/// How leave-one-out distances are aggregated into `lb`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LbMode {
    #[default]
    Median,
    Mean,
}

/// Which cross-image distances are pooled into `ub`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UbScope {
    /// Each image pools its own humans against the other centroids.
    #[default]
    PerImage,
    /// One percentile over the distances pooled from every image.
    Global,
}

impl DhmMode {
    pub fn name(self) -> &'static str {
        match self {
            DhmMode::Centroid => "centroid",
            DhmMode::Pairwise => "pairwise",
        }
    }
}

impl LbMode {
    pub fn name(self) -> &'static str {
        match self {
            LbMode::Median => "median",
            LbMode::Mean => "mean",
        }
    }
}

impl UbScope {
    pub fn name(self) -> &'static str {
        match self {
            UbScope::PerImage => "per-image",
            UbScope::Global => "global",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Classification {
    Generic,
    InRange,
    Catastrophic,
}

impl Classification {
    pub fn of(hcd: f64) -> Self {
        if hcd < 0.0 {
            Classification::Generic
        } else if hcd > 1.0 {
            Classification::Catastrophic
        } else {
            Classification::InRange
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Classification::Generic => "generic",
            Classification::InRange => "in_range",
            Classification::Catastrophic => "catastrophic",
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationBounds {
    /// image x task x embedder
    pub group: GroupKey,
    pub centroid: Vec<f64>,
    pub lb: f64,
    pub ub: f64,
    pub n_humans: usize,
}

impl CalibrationBounds {
    pub fn check(&self) -> Result<(), CalibrationError> {
        if self.n_humans < 2 {
            return Err(CalibrationError::TooFewHumans { required: 2, got: self.n_humans });
        }
        if !(self.ub - self.lb >= DEGENERATE_BOUNDS_GAP) {
            return Err(CalibrationError::DegenerateBounds { lb: self.lb, ub: self.ub });
        }
        Ok(())
    }

    pub fn scale(&self, d_hm: f64) -> f64 {
        (d_hm - self.lb) / (self.ub - self.lb)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HcdRecord {
    /// image x task x embedder x model_name x prompt_type
    pub group: GroupKey,
    pub n_human: usize,
    pub n_model: usize,
    pub lb: f64,
    pub ub: f64,
    pub d_hm: f64,
    pub hcd: f64,
    pub classification: Classification,
}

fn check_dims<V: AsRef<[f64]>>(vectors: &[V]) -> Result<usize, CalibrationError> {
    let dim = vectors.first().map(|v| v.as_ref().len()).ok_or(CalibrationError::EmptyInput)?;
    if vectors.iter().any(|v| v.as_ref().len() != dim) {
        return Err(CalibrationError::DimMismatch);
    }
    Ok(dim)
}

fn renormalize(mut sum: Vec<f64>, count: usize) -> Result<Vec<f64>, CalibrationError> {
    for x in sum.iter_mut() {
        *x /= count as f64;
    }
    let norm = l2_norm(&sum);
    if !(norm >= DEGENERATE_MEAN_NORM) {
        return Err(CalibrationError::DegenerateMean);
    }
    for x in sum.iter_mut() {
        *x /= norm;
    }
    Ok(sum)
}

/// Unit-normalized mean of unit vectors.
pub fn human_centroid<V: AsRef<[f64]>>(vectors: &[V]) -> Result<Vec<f64>, CalibrationError> {
    let dim = check_dims(vectors)?;
    let mut sum = alloc::vec![0.0; dim];
    for v in vectors {
        for (s, x) in sum.iter_mut().zip(v.as_ref()) {
            *s += x;
        }
    }
    renormalize(sum, vectors.len())
}

/// Distance from each vector to the centroid of all the others.
pub fn leave_one_out_distances<V: AsRef<[f64]>>(vectors: &[V]) -> Result<Vec<f64>, CalibrationError> {
    if vectors.len() < 2 {
        return Err(CalibrationError::TooFewHumans { required: 2, got: vectors.len() });
    }
    let dim = check_dims(vectors)?;
    let mut total = alloc::vec![0.0; dim];
    for v in vectors {
        for (s, x) in total.iter_mut().zip(v.as_ref()) {
            *s += x;
        }
    }
    let rest = vectors.len() - 1;
    vectors
        .iter()
        .map(|held_out| {
            let held_out = held_out.as_ref();
            let remaining: Vec<f64> = total.iter().zip(held_out).map(|(s, x)| s - x).collect();
            let centroid = renormalize(remaining, rest)?;
            Ok(unit_distance(held_out, &centroid))
        })
        .collect()
}

fn aggregate(values: &[f64], mode: LbMode) -> f64 {
    // inputs are finite distances, so the kernels cannot fail here
    match mode {
        LbMode::Median => stats::median(values).unwrap_or(f64::NAN),
        LbMode::Mean => stats::mean(values).unwrap_or(f64::NAN),
    }
}

/// Within-image human variability: the aggregated leave-one-out distance.
pub fn lower_bound<V: AsRef<[f64]>>(human_vectors: &[V], mode: LbMode) -> Result<f64, CalibrationError> {
    let distances = leave_one_out_distances(human_vectors)?;
    Ok(aggregate(&distances, mode))
}

/// Distances from each target-image human vector to each other-image centroid.
pub fn cross_image_distances<V: AsRef<[f64]>, W: AsRef<[f64]>>(
    target_image_humans: &[V],
    other_centroids: &[W],
) -> Result<Vec<f64>, CalibrationError> {
    if target_image_humans.is_empty() {
        return Err(CalibrationError::TooFewHumans { required: 1, got: 0 });
    }
    if other_centroids.is_empty() {
        return Err(CalibrationError::NoOtherImages);
    }
    let dim = check_dims(target_image_humans)?;
    if other_centroids.iter().any(|c| c.as_ref().len() != dim) {
        return Err(CalibrationError::DimMismatch);
    }
    let mut out = Vec::with_capacity(target_image_humans.len() * other_centroids.len());
    for h in target_image_humans {
        for c in other_centroids {
            out.push(unit_distance(h.as_ref(), c.as_ref()));
        }
    }
    Ok(out)
}

/// Cross-image benchmark: the 95th percentile (type 7) of the pooled
/// human-to-other-centroid distances.
pub fn upper_bound<V: AsRef<[f64]>, W: AsRef<[f64]>>(
    target_image_humans: &[V],
    other_centroids: &[W],
) -> Result<f64, CalibrationError> {
    let distances = cross_image_distances(target_image_humans, other_centroids)?;
    Ok(pooled_upper_bound(distances))
}

fn pooled_upper_bound(mut distances: Vec<f64>) -> f64 {
    distances.sort_by(f64::total_cmp);
    stats::percentile_sorted(&distances, UPPER_BOUND_PERCENTILE).unwrap_or(f64::NAN)
}

/// `d_hm` in [`DhmMode::Centroid`] mode.
pub fn d_hm_centroid<V: AsRef<[f64]>>(model_vectors: &[V], centroid: &[f64]) -> Result<f64, CalibrationError> {
    if model_vectors.is_empty() {
        return Err(CalibrationError::NoModelVectors);
    }
    if model_vectors.iter().any(|m| m.as_ref().len() != centroid.len()) {
        return Err(CalibrationError::DimMismatch);
    }
    let distances: Vec<f64> = model_vectors.iter().map(|m| unit_distance(m.as_ref(), centroid)).collect();
    Ok(stats::median(&distances).unwrap_or(f64::NAN))
}

/// `d_hm` in [`DhmMode::Pairwise`] mode.
pub fn d_hm_pairwise<V: AsRef<[f64]>, W: AsRef<[f64]>>(
    model_vectors: &[V],
    human_vectors: &[W],
) -> Result<f64, CalibrationError> {
    if model_vectors.is_empty() {
        return Err(CalibrationError::NoModelVectors);
    }
    if human_vectors.is_empty() {
        return Err(CalibrationError::TooFewHumans { required: 1, got: 0 });
    }
    let dim = check_dims(human_vectors)?;
    if model_vectors.iter().any(|m| m.as_ref().len() != dim) {
        return Err(CalibrationError::DimMismatch);
    }
    let mut distances = Vec::with_capacity(model_vectors.len() * human_vectors.len());
    for m in model_vectors {
        for h in human_vectors {
            distances.push(1.0 - dot(m.as_ref(), h.as_ref()));
        }
    }
    Ok(stats::median(&distances).unwrap_or(f64::NAN))
}

/// Scales an already aggregated `d_hm` against `bounds`.
pub fn hcd_from_dhm(
    d_hm: f64,
    bounds: &CalibrationBounds,
    group: GroupKey,
    n_model: usize,
) -> Result<HcdRecord, CalibrationError> {
    if !(bounds.ub - bounds.lb >= DEGENERATE_BOUNDS_GAP) {
        return Err(CalibrationError::DegenerateBounds { lb: bounds.lb, ub: bounds.ub });
    }
    let hcd = bounds.scale(d_hm);
    Ok(HcdRecord {
        group,
        n_human: bounds.n_humans,
        n_model,
        lb: bounds.lb,
        ub: bounds.ub,
        d_hm,
        hcd,
        classification: Classification::of(hcd),
    })
}

/// HCD of a set of model vectors, `d_hm` taken against the human centroid.
/// The record's group is the bounds' group.
pub fn compute_hcd<V: AsRef<[f64]>>(
    model_vectors: &[V],
    bounds: &CalibrationBounds,
) -> Result<HcdRecord, CalibrationError> {
    let d_hm = d_hm_centroid(model_vectors, &bounds.centroid)?;
    hcd_from_dhm(d_hm, bounds, bounds.group.clone(), model_vectors.len())
}

/// One image's human vectors inside a (task, embedder) partition.
#[derive(Debug, Clone)]
pub struct HumanCell<'a> {
    pub group: GroupKey,
    pub humans: Vec<&'a [f64]>,
}

/// A cell left out of calibration, with the reason.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcludedCell {
    pub group: GroupKey,
    pub reason: CalibrationError,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Calibration {
    pub bounds: Vec<CalibrationBounds>,
    pub excluded: Vec<ExcludedCell>,
}

/// Bounds for every image of one (task, embedder) partition.
///
/// Images whose humans have a well-defined centroid serve as "other
/// images" for everyone else, even when their own bounds are rejected.
/// Cells with fewer than two humans, a degenerate leave-one-out mean, no
/// other image, or `ub - lb` below [`DEGENERATE_BOUNDS_GAP`] are reported
/// in `excluded`, never zero-filled.
pub fn calibrate_partition(cells: &[HumanCell<'_>], lb_mode: LbMode, ub_scope: UbScope) -> Calibration {
    let centroids: Vec<Option<Vec<f64>>> =
        cells.iter().map(|c| if c.humans.is_empty() { None } else { human_centroid(&c.humans).ok() }).collect();

    let others_of = |i: usize| -> Vec<&[f64]> {
        centroids
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .filter_map(|(_, c)| c.as_deref())
            .collect()
    };

    let global_ub = match ub_scope {
        UbScope::PerImage => None,
        UbScope::Global => {
            let mut pooled = Vec::new();
            for (i, cell) in cells.iter().enumerate() {
                if cell.humans.is_empty() {
                    continue;
                }
                if let Ok(d) = cross_image_distances(&cell.humans, &others_of(i)) {
                    pooled.extend(d);
                }
            }
            Some(if pooled.is_empty() { Err(CalibrationError::NoOtherImages) } else { Ok(pooled_upper_bound(pooled)) })
        }
    };

    let mut out = Calibration::default();
    for (i, cell) in cells.iter().enumerate() {
        let result = (|| {
            if cell.humans.len() < 2 {
                return Err(CalibrationError::TooFewHumans { required: 2, got: cell.humans.len() });
            }
            let centroid = centroids[i].clone().ok_or(CalibrationError::DegenerateMean)?;
            let lb = lower_bound(&cell.humans, lb_mode)?;
            let ub = match &global_ub {
                Some(g) => g.clone()?,
                None => upper_bound(&cell.humans, &others_of(i))?,
            };
            let bounds = CalibrationBounds { group: cell.group.clone(), centroid, lb, ub, n_humans: cell.humans.len() };
            bounds.check()?;
            Ok(bounds)
        })();
        match result {
            Ok(b) => out.bounds.push(b),
            Err(reason) => out.excluded.push(ExcludedCell { group: cell.group.clone(), reason }),
        }
    }
    out
}

/// Share of generic (`hcd < 0`) and catastrophic (`hcd > 1`) outcomes per group.
#[derive(Debug, Clone, PartialEq)]
pub struct FailureRate {
    pub group: GroupKey,
    pub n: usize,
    pub generic: usize,
    pub catastrophic: usize,
    pub generic_rate: f64,
    pub catastrophic_rate: f64,
}

pub fn failure_rates(records: &[HcdRecord], group_by: &[KeyField]) -> Result<Vec<FailureRate>, CalibrationError> {
    if records.is_empty() {
        return Err(CalibrationError::EmptyInput);
    }
    let mut cells: alloc::collections::BTreeMap<GroupKey, (usize, usize, usize)> = Default::default();
    for r in records {
        let entry = cells.entry(r.group.project(group_by)).or_default();
        entry.0 += 1;
        match r.classification {
            Classification::Generic => entry.1 += 1,
            Classification::Catastrophic => entry.2 += 1,
            Classification::InRange => {}
        }
    }
    Ok(cells
        .into_iter()
        .map(|(group, (n, generic, catastrophic))| FailureRate {
            group,
            n,
            generic,
            catastrophic,
            generic_rate: generic as f64 / n as f64,
            catastrophic_rate: catastrophic as f64 / n as f64,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct HcdOptions {
    pub dhm_mode: DhmMode,
    pub lb_mode: LbMode,
    pub ub_scope: UbScope,
}

/// Output of [`evaluate_hcd`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HcdRun {
    /// Ordered by task, image, model name, prompt type.
    pub records: Vec<HcdRecord>,
    pub excluded: Vec<ExcludedCell>,
    /// Corpus records with no vector in the embedding matrix.
    pub missing_embeddings: Vec<String>,
}

/// HCD for every (image, model, prompt type) of one task in one
/// embedding space. `records` should all share a task; `embeddings` must
/// be unit-normalized.
pub fn evaluate_task(records: &[&DescriptionRecord], embeddings: &EmbeddingMatrix, options: HcdOptions) -> HcdRun {
    type ModelGroups<'a> = BTreeMap<(String, String), Vec<&'a [f64]>>;
    let mut images: BTreeMap<&str, (Vec<&[f64]>, ModelGroups<'_>, &str)> = BTreeMap::new();
    let mut run = HcdRun::default();
    for r in records {
        let Some(vector) = embeddings.get(&r.record_id) else {
            run.missing_embeddings.push(r.record_id.clone());
            continue;
        };
        let entry = images.entry(r.image_id.as_str()).or_insert_with(|| (Vec::new(), BTreeMap::new(), r.task.name()));
        match (&r.model, r.source()) {
            (Some(m), Source::Model) => {
                entry.1.entry((m.name.clone(), m.prompt_type.name().to_string())).or_default().push(vector)
            }
            _ => entry.0.push(vector),
        }
    }
    let embedder = embeddings.embedder_id();
    let cells: Vec<HumanCell<'_>> = images
        .iter()
        .map(|(image, (humans, _, task))| HumanCell { group: cell_key(image, task, embedder), humans: humans.clone() })
        .collect();
    let calibration = calibrate_partition(&cells, options.lb_mode, options.ub_scope);
    let by_group: BTreeMap<&GroupKey, &CalibrationBounds> = calibration.bounds.iter().map(|b| (&b.group, b)).collect();

    for (cell, (humans, models, _)) in cells.iter().zip(images.values()) {
        let Some(bounds) = by_group.get(&cell.group) else {
            continue;
        };
        for ((name, prompt), vectors) in models {
            let d_hm = match options.dhm_mode {
                DhmMode::Centroid => d_hm_centroid(vectors, &bounds.centroid),
                DhmMode::Pairwise => d_hm_pairwise(vectors, humans),
            };
            let record = d_hm.and_then(|d| hcd_from_dhm(d, bounds, model_key(&cell.group, name, prompt), vectors.len()));
            match record {
                Ok(r) => run.records.push(r),
                Err(reason) => run.excluded.push(ExcludedCell { group: model_key(&cell.group, name, prompt), reason }),
            }
        }
    }
    run.excluded.splice(0..0, calibration.excluded);
    run
}

/// [`evaluate_task`] over every task present in `records`, in task order.
pub fn evaluate_hcd(records: &[DescriptionRecord], embeddings: &EmbeddingMatrix, options: HcdOptions) -> HcdRun {
    let mut by_task: BTreeMap<Task, Vec<&DescriptionRecord>> = BTreeMap::new();
    for r in records {
        by_task.entry(r.task).or_default().push(r);
    }
    let mut run = HcdRun::default();
    for task_records in by_task.values() {
        let part = evaluate_task(task_records, embeddings, options);
        run.records.extend(part.records);
        run.excluded.extend(part.excluded);
        run.missing_embeddings.extend(part.missing_embeddings);
    }
    run
}

/// Group key for a calibration cell.
pub fn cell_key(image_id: &str, task: &str, embedder_id: &str) -> GroupKey {
    GroupKey::new()
        .with(KeyField::ImageId, Some(image_id))
        .with(KeyField::Task, Some(task))
        .with(KeyField::EmbedderId, Some(embedder_id))
}

/// Extends a cell key with the model identity.
pub fn model_key(cell: &GroupKey, model_name: &str, prompt_type: &str) -> GroupKey {
    cell.clone().with(KeyField::ModelName, Some(model_name)).with(KeyField::PromptType, Some(prompt_type))
}

impl fmt::Display for ExcludedCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.group, self.reason)
    }
}

impl ExcludedCell {
    pub fn reason_text(&self) -> String {
        self.reason.to_string()
    }
}
