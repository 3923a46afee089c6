//! Brute-force reference implementations and fixture generators shared by
//! the integration tests. Everything here is written straight from the
//! definitions, without reusing library internals.
#![allow(dead_code)]

use std::collections::BTreeMap;

use hcd_core::corpus::{CorpusBuilder, DescriptionRecord, RecordDraft};
use hcd_core::EmbeddingMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| StandardNormal.sample(rng)).collect()
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let ab: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let aa: f64 = a.iter().map(|x| x * x).sum();
    let bb: f64 = b.iter().map(|x| x * x).sum();
    ab / (aa.sqrt() * bb.sqrt())
}

/// Cosine distance of raw (not necessarily unit) vectors.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    1.0 - cosine(a, b)
}

/// Direction of the mean of the unit-scaled inputs.
pub fn mean_direction(vectors: &[&Vec<f64>]) -> Vec<f64> {
    let dim = vectors[0].len();
    let mut mean = vec![0.0; dim];
    for v in vectors {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        for (m, x) in mean.iter_mut().zip(v.iter()) {
            *m += x / norm / vectors.len() as f64;
        }
    }
    mean
}

/// Type-7 quantile by explicit order statistics.
pub fn quantile7(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let h = (v.len() as f64 - 1.0) * p;
    let lo = h.floor();
    let hi = h.ceil();
    v[lo as usize] + (h - lo) * (v[hi as usize] - v[lo as usize])
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Raw vectors of one image: humans and per-model groups.
#[derive(Debug, Clone)]
pub struct ImageFixture {
    pub humans: Vec<Vec<f64>>,
    pub models: BTreeMap<String, Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleHcd {
    pub lb: f64,
    pub ub: f64,
    pub d_hm: f64,
    pub hcd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleModes {
    pub pairwise: bool,
    pub lb_mean: bool,
    pub ub_global: bool,
}

fn cross_distances(images: &[ImageFixture], target: usize) -> Vec<f64> {
    let mut out = Vec::new();
    for (j, other) in images.iter().enumerate() {
        if j == target {
            continue;
        }
        let refs: Vec<&Vec<f64>> = other.humans.iter().collect();
        let centroid = mean_direction(&refs);
        for h in &images[target].humans {
            out.push(cosine_distance(h, &centroid));
        }
    }
    out
}

/// HCD of every (image, model) by the textbook definitions, `None` for
/// images whose bounds are degenerate.
pub fn oracle_hcd(images: &[ImageFixture], modes: OracleModes) -> Vec<Option<BTreeMap<String, OracleHcd>>> {
    let global_ub = modes.ub_global.then(|| {
        let pooled: Vec<f64> = (0..images.len()).flat_map(|i| cross_distances(images, i)).collect();
        quantile7(&pooled, 0.95)
    });
    images
        .iter()
        .enumerate()
        .map(|(i, image)| {
            let humans = &image.humans;
            let all: Vec<&Vec<f64>> = humans.iter().collect();
            let centroid = mean_direction(&all);
            let loo: Vec<f64> = (0..humans.len())
                .map(|k| {
                    let rest: Vec<&Vec<f64>> = humans.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, v)| v).collect();
                    cosine_distance(&humans[k], &mean_direction(&rest))
                })
                .collect();
            let lb = if modes.lb_mean { mean(&loo) } else { median(&loo) };
            let ub = global_ub.unwrap_or_else(|| quantile7(&cross_distances(images, i), 0.95));
            if ub - lb < 1e-9 {
                return None;
            }
            let mut out = BTreeMap::new();
            for (name, models) in &image.models {
                let distances: Vec<f64> = if modes.pairwise {
                    models.iter().flat_map(|m| humans.iter().map(move |h| cosine_distance(m, h))).collect()
                } else {
                    models.iter().map(|m| cosine_distance(m, &centroid)).collect()
                };
                let d_hm = median(&distances);
                out.insert(name.clone(), OracleHcd { lb, ub, d_hm, hcd: (d_hm - lb) / (ub - lb) });
            }
            Some(out)
        })
        .collect()
}

/// Images whose descriptions scatter around an image-specific direction.
pub fn random_images(rng: &mut ChaCha8Rng) -> Vec<ImageFixture> {
    let n_images = rng.random_range(2..=6);
    let dim = rng.random_range(3..=16);
    let spread: f64 = rng.random_range(0.3..1.5);
    (0..n_images)
        .map(|_| {
            let center = gaussian(rng, dim);
            let jitter = |scale: f64, rng: &mut ChaCha8Rng| -> Vec<f64> {
                center.iter().map(|c| c + scale * Distribution::<f64>::sample(&StandardNormal, rng)).collect()
            };
            let humans = (0..rng.random_range(3..=8)).map(|_| jitter(spread, rng)).collect();
            let mut models = BTreeMap::new();
            let n_names = rng.random_range(1..=2);
            for m in 0..n_names {
                let k = rng.random_range(1..=6);
                let scale = spread * rng.random_range(0.2..2.5);
                models.insert(format!("model-{m}"), (0..k).map(|_| jitter(scale, rng)).collect());
            }
            ImageFixture { humans, models }
        })
        .collect()
}

/// Corpus and embedding matrix for `images` (one task, one embedder).
pub fn to_corpus(images: &[ImageFixture], task: &str) -> (Vec<DescriptionRecord>, EmbeddingMatrix) {
    let dim = images[0].humans[0].len();
    let mut builder = CorpusBuilder::new();
    let mut matrix = EmbeddingMatrix::new("emb", dim).unwrap();
    let draft = |id: &str, image: &str| RecordDraft {
        record_id: Some(id.into()),
        image_id: Some(image.into()),
        task: Some(task.into()),
        generality: Some("general".into()),
        source: Some("human".into()),
        text: Some("text".into()),
        ..Default::default()
    };
    for (i, image) in images.iter().enumerate() {
        let image_id = format!("img{i:02}");
        for (h, v) in image.humans.iter().enumerate() {
            let id = format!("{image_id}-{task}-h{h}");
            builder.push(draft(&id, &image_id)).unwrap();
            matrix.push(id, v).unwrap();
        }
        for (name, vectors) in &image.models {
            for (m, v) in vectors.iter().enumerate() {
                let id = format!("{image_id}-{task}-{name}-m{m}");
                let mut d = draft(&id, &image_id);
                d.source = Some("model".into());
                d.model_family = Some("fam".into());
                d.model_name = Some(name.clone());
                d.prompt_type = Some("custom".into());
                builder.push(d).unwrap();
                matrix.push(id, v).unwrap();
            }
        }
    }
    (builder.finish(), matrix)
}

/// Exact Wilcoxon signed-rank p by listing every sign pattern.
pub fn wilcoxon_enumerated(deltas: &[f64]) -> (f64, f64) {
    let nonzero: Vec<f64> = deltas.iter().copied().filter(|d| *d != 0.0).collect();
    let n = nonzero.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|a, b| nonzero[*a].abs().partial_cmp(&nonzero[*b].abs()).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && nonzero[order[j + 1]].abs() == nonzero[order[i]].abs() {
            j += 1;
        }
        let avg = (i + j + 2) as f64 / 2.0;
        for k in i..=j {
            ranks[order[k]] = avg;
        }
        i = j + 1;
    }
    let v: f64 = (0..n).filter(|k| nonzero[*k] > 0.0).map(|k| ranks[k]).sum();
    let (mut le, mut ge) = (0u64, 0u64);
    for mask in 0u64..(1 << n) {
        let s: f64 = (0..n).filter(|k| mask >> k & 1 == 1).map(|k| ranks[k]).sum();
        if s <= v + 1e-9 {
            le += 1;
        }
        if s >= v - 1e-9 {
            ge += 1;
        }
    }
    let total = (1u64 << n) as f64;
    let p = (2.0 * (le.min(ge) as f64) / total).min(1.0);
    (v, p)
}

/// Mean kNN purity by sorting every point's full neighbor list.
pub fn purity_bruteforce(points: &[Vec<f64>], labels: &[&str], ids: &[String], k_fraction: f64) -> f64 {
    let n = points.len();
    let mut sizes: BTreeMap<&str, usize> = BTreeMap::new();
    for l in labels {
        *sizes.entry(l).or_default() += 1;
    }
    let zero = |v: &Vec<f64>| v.iter().all(|x| *x == 0.0);
    let mut total = 0.0;
    for i in 0..n {
        let mut others: Vec<(f64, &String, usize)> = (0..n)
            .filter(|j| *j != i)
            .map(|j| {
                let d = if zero(&points[i]) || zero(&points[j]) { 1.0 } else { cosine_distance(&points[i], &points[j]) };
                (d, &ids[j], j)
            })
            .collect();
        others.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(b.1)));
        let raw = k_fraction * sizes[labels[i]] as f64;
        let k = ((raw + 0.5).floor() as usize).max(1).min(n - 1);
        let same = others[..k].iter().filter(|(_, _, j)| labels[*j] == labels[i]).count();
        total += same as f64 / k as f64;
    }
    total / n as f64
}

/// Pearson chi-squared of a 2x2 table from expected counts.
pub fn chi2_expected(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let n = a + b + c + d;
    let rows = [a + b, c + d];
    let cols = [a + c, b + d];
    let observed = [[a, b], [c, d]];
    let mut chi2 = 0.0;
    for r in 0..2 {
        for k in 0..2 {
            let e = rows[r] * cols[k] / n;
            chi2 += (observed[r][k] - e).powi(2) / e;
        }
    }
    chi2
}
