//! Embedding-space geometry: PCA, kNN label purity, the coarse-vs-fine
//! divergence delta and 2-D projections.
//!
//! Purity is measured with cosine distance in the PCA-reduced space, after
//! re-normalizing each reduced vector. Neighbor ties break by ascending
//! record id.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::embed::dot;
use crate::linalg::{symmetric_eigen, DenseMatrix};

/// Eigenvalues below this fraction of the largest are treated as zero.
pub const RELATIVE_EIGEN_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("need more points ({points}) than components ({components}), and at least one component")]
    InvalidComponents { points: usize, components: usize },
    #[error("data has no nonzero variance direction")]
    RankDeficient,
    #[error("label {0:?} has a single member")]
    SingletonClass(String),
    #[error("need at least {required} points, got {got}")]
    TooFewPoints { required: usize, got: usize },
    #[error("k fraction must lie in (0, 1], got {0}")]
    BadKFraction(f64),
    #[error("points, labels and ids differ in length")]
    LengthMismatch,
}

/// Fewer nonzero-variance directions than requested components.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankWarning {
    pub requested: usize,
    pub available: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// One row per component, unit length, in decreasing variance order.
    pub components: DenseMatrix,
    pub explained_variance: Vec<f64>,
    /// Centered data projected on the components (`n x k`).
    pub scores: DenseMatrix,
    pub warning: Option<RankWarning>,
}

fn center(data: &DenseMatrix) -> (Vec<f64>, DenseMatrix) {
    let (n, d) = (data.rows(), data.cols());
    let mut mean = alloc::vec![0.0; d];
    for row in data.iter_rows() {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let mut centered = data.clone();
    for i in 0..n {
        for (x, m) in centered.row_mut(i).iter_mut().zip(&mean) {
            *x -= m;
        }
    }
    (mean, centered)
}

/// Fixes the sign of a component so its largest-magnitude loading is
/// positive (first such loading on exact ties).
fn fix_sign(component: &mut [f64]) {
    let mut best = 0usize;
    for (i, x) in component.iter().enumerate() {
        if libm::fabs(*x) > libm::fabs(component[best]) {
            best = i;
        }
    }
    if component.get(best).is_some_and(|x| *x < 0.0) {
        for x in component.iter_mut() {
            *x = -*x;
        }
    }
}

/// Eigenpairs of the sample covariance, largest first. Uses the `d x d`
/// covariance when `d <= n` and the `n x n` Gram matrix otherwise.
fn covariance_eigenpairs(centered: &DenseMatrix) -> (Vec<f64>, Vec<Vec<f64>>) {
    let (n, d) = (centered.rows(), centered.cols());
    let denom = (n as f64 - 1.0).max(1.0);
    if d <= n {
        let mut cov = DenseMatrix::zeros(d, d);
        for row in centered.iter_rows() {
            for i in 0..d {
                let ri = row[i];
                if ri == 0.0 {
                    continue;
                }
                for j in 0..=i {
                    let v = cov.get(i, j) + ri * row[j];
                    cov.set(i, j, v);
                }
            }
        }
        for i in 0..d {
            for j in 0..=i {
                let v = cov.get(i, j) / denom;
                cov.set(i, j, v);
            }
        }
        let eig = symmetric_eigen(&cov);
        let mut values = Vec::with_capacity(d);
        let mut vectors = Vec::with_capacity(d);
        for k in (0..d).rev() {
            values.push(eig.values[k].max(0.0));
            vectors.push((0..d).map(|r| eig.vectors.get(r, k)).collect());
        }
        (values, vectors)
    } else {
        let mut gram = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                gram.set(i, j, dot(centered.row(i), centered.row(j)) / denom);
            }
        }
        let eig = symmetric_eigen(&gram);
        let mut values = Vec::with_capacity(n);
        let mut vectors = Vec::with_capacity(n);
        for k in (0..n).rev() {
            let lambda = eig.values[k].max(0.0);
            // v = X^T u / sqrt((n-1) lambda)
            let mut v = alloc::vec![0.0; d];
            for i in 0..n {
                let ui = eig.vectors.get(i, k);
                for (vj, xij) in v.iter_mut().zip(centered.row(i)) {
                    *vj += ui * xij;
                }
            }
            let norm = libm::sqrt(dot(&v, &v));
            if norm > 0.0 {
                for x in v.iter_mut() {
                    *x /= norm;
                }
            }
            values.push(lambda);
            vectors.push(v);
        }
        (values, vectors)
    }
}

fn fit(data: &DenseMatrix, n_components: usize, keep_null: bool) -> Result<Pca, GeometryError> {
    let (n, d) = (data.rows(), data.cols());
    let (mean, centered) = center(data);
    let (values, vectors) = covariance_eigenpairs(&centered);
    let largest = values.first().copied().unwrap_or(0.0);
    let tol = largest * RELATIVE_EIGEN_TOLERANCE;
    let available = values.iter().take_while(|v| **v > tol && **v > 0.0).count();
    if available == 0 && !keep_null {
        return Err(GeometryError::RankDeficient);
    }
    let k = if keep_null { n_components } else { n_components.min(available) };
    let warning = (available < n_components).then_some(RankWarning { requested: n_components, available });

    let mut components = DenseMatrix::zeros(k, d);
    let mut explained = Vec::with_capacity(k);
    for c in 0..k {
        // null directions keep an all-zero loading row
        if c < available {
            let mut v = vectors[c].clone();
            fix_sign(&mut v);
            components.row_mut(c).copy_from_slice(&v);
            explained.push(values[c]);
        } else {
            explained.push(0.0);
        }
    }

    let mut scores = DenseMatrix::zeros(n, k);
    for i in 0..n {
        for c in 0..k {
            scores.set(i, c, dot(centered.row(i), components.row(c)));
        }
    }
    Ok(Pca { mean, components, explained_variance: explained, scores, warning })
}

/// Principal components of the mean-centered rows of `data`.
///
/// Requires `rows > n_components >= 1`. When fewer directions carry
/// nonzero variance than requested, the available ones are returned and
/// `warning` records the shortfall.
pub fn pca_reduce(data: &DenseMatrix, n_components: usize) -> Result<Pca, GeometryError> {
    if n_components == 0 || data.rows() <= n_components {
        return Err(GeometryError::InvalidComponents { points: data.rows(), components: n_components });
    }
    fit(data, n_components.min(data.cols()), false)
}

/// Scores on the first two principal components, one `(x, y)` per row.
/// Directions without variance yield a zero coordinate.
pub fn project_2d(data: &DenseMatrix) -> Result<Vec<(f64, f64)>, GeometryError> {
    if data.rows() < 3 {
        return Err(GeometryError::TooFewPoints { required: 3, got: data.rows() });
    }
    if data.cols() == 0 {
        return Err(GeometryError::RankDeficient);
    }
    let pca = fit(data, 2, true)?;
    let cols = pca.scores.cols();
    Ok((0..data.rows())
        .map(|i| {
            let x = if cols > 0 { pca.scores.get(i, 0) } else { 0.0 };
            let y = if cols > 1 { pca.scores.get(i, 1) } else { 0.0 };
            (x, y)
        })
        .collect())
}

/// `max(1, round_half_up(fraction * class_size))`.
pub fn neighbors_for(k_fraction: f64, class_size: usize) -> usize {
    let k = libm::floor(k_fraction * class_size as f64 + 0.5) as usize;
    k.max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LabelLevel {
    /// The 15 tasks.
    Fine,
    /// The 5 task groups.
    Coarse,
}

impl LabelLevel {
    pub fn name(self) -> &'static str {
        match self {
            LabelLevel::Fine => "fine",
            LabelLevel::Coarse => "coarse",
        }
    }
}

/// Mean kNN label purity at one neighborhood size.
#[derive(Debug, Clone, PartialEq)]
pub struct Purity {
    pub k_fraction: f64,
    pub purity: f64,
    pub n_points: usize,
    /// Neighbor count used for each label.
    pub k_by_label: Vec<(String, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PurityResult {
    pub source_id: String,
    pub level: LabelLevel,
    pub purity: Purity,
}

/// Unit-normalized points with labels, ready for neighbor queries.
#[derive(Debug, Clone)]
pub struct NeighborIndex {
    points: Vec<Vec<f64>>,
    label_of: Vec<usize>,
    labels: Vec<String>,
    class_sizes: Vec<usize>,
    /// Point indices in ascending id order; position is the tie-break rank.
    id_rank: Vec<usize>,
}

impl NeighborIndex {
    /// Rows are re-normalized to unit length; an all-zero row stays zero
    /// and sits at distance 1 from everything.
    pub fn new<L: AsRef<str>, I: AsRef<str>>(
        points: &DenseMatrix,
        labels: &[L],
        ids: &[I],
    ) -> Result<Self, GeometryError> {
        let n = points.rows();
        if labels.len() != n || ids.len() != n {
            return Err(GeometryError::LengthMismatch);
        }
        if n < 2 {
            return Err(GeometryError::TooFewPoints { required: 2, got: n });
        }
        let mut names: BTreeMap<&str, usize> = BTreeMap::new();
        for l in labels {
            *names.entry(l.as_ref()).or_default() += 1;
        }
        if let Some((name, _)) = names.iter().find(|(_, c)| **c < 2) {
            return Err(GeometryError::SingletonClass(name.to_string()));
        }
        let label_names: Vec<String> = names.keys().map(|s| s.to_string()).collect();
        let class_sizes: Vec<usize> = names.values().copied().collect();
        let label_of =
            labels.iter().map(|l| label_names.binary_search_by(|s| s.as_str().cmp(l.as_ref())).unwrap_or(0)).collect();

        let unit_points = points
            .iter_rows()
            .map(|row| {
                let norm = libm::sqrt(dot(row, row));
                if norm > 0.0 {
                    row.iter().map(|x| x / norm).collect()
                } else {
                    row.to_vec()
                }
            })
            .collect();

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|a, b| ids[*a].as_ref().cmp(ids[*b].as_ref()).then(a.cmp(b)));
        let mut id_rank = alloc::vec![0; n];
        for (rank, idx) in order.into_iter().enumerate() {
            id_rank[idx] = rank;
        }
        Ok(Self { points: unit_points, label_of, labels: label_names, class_sizes, id_rank })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Neighbor count for point `i` at `k_fraction`, capped at `n - 1`.
    pub fn k_for(&self, i: usize, k_fraction: f64) -> usize {
        neighbors_for(k_fraction, self.class_sizes[self.label_of[i]]).min(self.len() - 1)
    }

    /// Fraction of point `i`'s `k_i` nearest neighbors (self excluded)
    /// that share its label.
    pub fn point_purity(&self, i: usize, k_fraction: f64) -> f64 {
        let k = self.k_for(i, k_fraction);
        let me = &self.points[i];
        let mut candidates: Vec<(f64, usize)> = (0..self.len())
            .filter(|j| *j != i)
            .map(|j| (1.0 - dot(me, &self.points[j]), j))
            .collect();
        let rank = &self.id_rank;
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(rank[a.1].cmp(&rank[b.1]));
        if k < candidates.len() {
            candidates.select_nth_unstable_by(k - 1, cmp);
            candidates.truncate(k);
        }
        let same = candidates.iter().filter(|(_, j)| self.label_of[*j] == self.label_of[i]).count();
        same as f64 / k as f64
    }

    /// Mean purity over all points, summed in index order.
    pub fn purity(&self, k_fraction: f64) -> Result<Purity, GeometryError> {
        check_fraction(k_fraction)?;
        let per_point: Vec<f64> = (0..self.len()).map(|i| self.point_purity(i, k_fraction)).collect();
        Ok(self.summarize(k_fraction, &per_point))
    }

    /// Assembles a [`Purity`] from per-point values computed elsewhere
    /// (for instance in parallel), in index order.
    pub fn summarize(&self, k_fraction: f64, per_point: &[f64]) -> Purity {
        let mean = per_point.iter().sum::<f64>() / per_point.len() as f64;
        let k_by_label = self
            .labels
            .iter()
            .zip(&self.class_sizes)
            .map(|(l, size)| (l.clone(), neighbors_for(k_fraction, *size).min(self.len() - 1)))
            .collect();
        Purity { k_fraction, purity: mean, n_points: self.len(), k_by_label }
    }
}

pub fn check_fraction(k_fraction: f64) -> Result<(), GeometryError> {
    if k_fraction > 0.0 && k_fraction <= 1.0 {
        Ok(())
    } else {
        Err(GeometryError::BadKFraction(k_fraction))
    }
}

/// kNN label purity of `points` at one neighborhood fraction.
pub fn knn_purity<L: AsRef<str>, I: AsRef<str>>(
    points: &DenseMatrix,
    labels: &[L],
    ids: &[I],
    k_fraction: f64,
) -> Result<Purity, GeometryError> {
    check_fraction(k_fraction)?;
    NeighborIndex::new(points, labels, ids)?.purity(k_fraction)
}

/// Purity at each fraction of a sweep.
pub fn k_sweep<L: AsRef<str>, I: AsRef<str>>(
    points: &DenseMatrix,
    labels: &[L],
    ids: &[I],
    fractions: &[f64],
) -> Result<Vec<Purity>, GeometryError> {
    for f in fractions {
        check_fraction(*f)?;
    }
    let index = NeighborIndex::new(points, labels, ids)?;
    fractions.iter().map(|f| index.purity(*f)).collect()
}

/// `(H - M)_coarse - (H - M)_fine`; positive when humans and models
/// diverge more at the coarse level.
pub fn divergence_delta(human_fine: f64, human_coarse: f64, model_fine: f64, model_coarse: f64) -> f64 {
    (human_coarse - model_coarse) - (human_fine - model_fine)
}
