mod support;

use hcd_core::calibration::{evaluate_hcd, DhmMode, HcdOptions, HcdRun, LbMode, UbScope};
use hcd_core::corpus::KeyField;
use nalgebra::DMatrix;
use proptest::prelude::*;
use support::{oracle_hcd, random_images, rng, to_corpus, ImageFixture, OracleModes};

const TOL: f64 = 1e-9;

fn run(images: &[ImageFixture], options: HcdOptions) -> HcdRun {
    let (records, matrix) = to_corpus(images, "navigation");
    evaluate_hcd(&records, &matrix.normalize().unwrap(), options)
}

fn options_for(modes: OracleModes) -> HcdOptions {
    HcdOptions {
        dhm_mode: if modes.pairwise { DhmMode::Pairwise } else { DhmMode::Centroid },
        lb_mode: if modes.lb_mean { LbMode::Mean } else { LbMode::Median },
        ub_scope: if modes.ub_global { UbScope::Global } else { UbScope::PerImage },
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOL * b.abs().max(1.0)
}

/// Compares a pipeline run with the oracle; returns the number of scored
/// (image, model) pairs.
fn assert_matches_oracle(images: &[ImageFixture], modes: OracleModes) -> usize {
    let expected = oracle_hcd(images, modes);
    let got = run(images, options_for(modes));
    let mut checked = 0;
    for (i, image) in expected.iter().enumerate() {
        let image_id = format!("img{i:02}");
        let rows: Vec<_> = got.records.iter().filter(|r| r.group.get(KeyField::ImageId) == Some(&image_id)).collect();
        match image {
            None => {
                assert!(rows.is_empty(), "{image_id} should be excluded");
                assert!(got.excluded.iter().any(|e| e.group.get(KeyField::ImageId) == Some(&image_id)));
            }
            Some(models) => {
                assert_eq!(rows.len(), models.len());
                for r in rows {
                    let o = models[r.group.get(KeyField::ModelName).unwrap()];
                    assert!(close(r.lb, o.lb), "lb {} vs {}", r.lb, o.lb);
                    assert!(close(r.ub, o.ub), "ub {} vs {}", r.ub, o.ub);
                    assert!(close(r.d_hm, o.d_hm), "d_hm {} vs {}", r.d_hm, o.d_hm);
                    assert!(close(r.hcd, o.hcd), "hcd {} vs {}", r.hcd, o.hcd);
                    checked += 1;
                }
            }
        }
    }
    checked
}

#[test]
fn default_modes_match_oracle_on_200_fixtures() {
    let mut r = rng(20240611);
    let modes = OracleModes { pairwise: false, lb_mean: false, ub_global: false };
    let checked: usize = (0..200).map(|_| assert_matches_oracle(&random_images(&mut r), modes)).sum();
    assert!(checked > 200);
}

#[test]
fn alternative_modes_match_oracle() {
    let mut r = rng(7);
    for trial in 0..160 {
        let modes = OracleModes { pairwise: trial & 1 == 1, lb_mean: trial & 2 == 2, ub_global: trial & 4 == 4 };
        assert_matches_oracle(&random_images(&mut r), modes);
    }
}

fn random_orthogonal(r: &mut rand_chacha::ChaCha8Rng, dim: usize) -> DMatrix<f64> {
    let m = DMatrix::from_iterator(dim, dim, support::gaussian(r, dim * dim));
    m.qr().q()
}

fn transform(images: &[ImageFixture], mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Vec<ImageFixture> {
    images
        .iter()
        .map(|im| {
            let humans = im.humans.iter().map(|v| f(v)).collect();
            let models = im.models.iter().map(|(k, vs)| (k.clone(), vs.iter().map(|v| f(v)).collect())).collect();
            ImageFixture { humans, models }
        })
        .collect()
}

fn assert_same_outputs(a: &HcdRun, b: &HcdRun) {
    assert_eq!(a.records.len(), b.records.len());
    assert_eq!(a.excluded.len(), b.excluded.len());
    for (x, y) in a.records.iter().zip(&b.records) {
        assert_eq!(x.group, y.group);
        for (p, q) in [(x.lb, y.lb), (x.ub, y.ub), (x.d_hm, y.d_hm), (x.hcd, y.hcd)] {
            assert!(close(p, q), "{p} vs {q}");
        }
    }
}

#[test]
fn rotation_and_scaling_leave_outputs_unchanged() {
    let mut r = rng(99);
    for _ in 0..100 {
        let images = random_images(&mut r);
        let dim = images[0].humans[0].len();
        let q = random_orthogonal(&mut r, dim);
        let rotated = transform(&images, |v| (&q * nalgebra::DVector::from_column_slice(v)).as_slice().to_vec());
        let scale = rand::Rng::random_range(&mut r, 0.01..100.0);
        let scaled = transform(&images, |v| v.iter().map(|x| x * scale).collect());
        for options in [HcdOptions::default(), HcdOptions { dhm_mode: DhmMode::Pairwise, ..Default::default() }] {
            let base = run(&images, options);
            assert_same_outputs(&base, &run(&rotated, options));
            assert_same_outputs(&base, &run(&scaled, options));
        }
    }
}

#[test]
fn every_vector_per_record_scaled_independently() {
    // positive scaling of each raw vector separately is also harmless,
    // because vectors are unit-normalized before use
    let mut r = rng(5);
    for _ in 0..20 {
        let images = random_images(&mut r);
        let mut factors = std::iter::successors(Some(0.5_f64), |f| Some(if *f > 50.0 { 0.3 } else { f * 1.7 }));
        let scaled = transform(&images, |v| {
            let s = factors.next().unwrap();
            v.iter().map(|x| x * s).collect()
        });
        assert_same_outputs(&run(&images, HcdOptions::default()), &run(&scaled, HcdOptions::default()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn image_order_does_not_matter(seed in any::<u64>()) {
        let mut r = rng(seed);
        let images = random_images(&mut r);
        let mut reversed = images.clone();
        reversed.reverse();
        let n = images.len();
        let a = oracle_hcd(&images, OracleModes { pairwise: false, lb_mean: false, ub_global: false });
        let b = run(&reversed, HcdOptions::default());
        for (i, image) in a.iter().enumerate() {
            let id = format!("img{:02}", n - 1 - i);
            let rows: Vec<_> = b.records.iter().filter(|r| r.group.get(KeyField::ImageId) == Some(&id)).collect();
            prop_assert_eq!(rows.len(), image.as_ref().map_or(0, |m| m.len()));
            for r in rows {
                let o = image.as_ref().unwrap()[r.group.get(KeyField::ModelName).unwrap()];
                prop_assert!(close(r.hcd, o.hcd));
            }
        }
    }

    #[test]
    fn moving_models_onto_the_centroid_lowers_hcd(seed in any::<u64>(), t in 0.05f64..0.95) {
        let mut r = rng(seed);
        let images = random_images(&mut r);
        let before = run(&images, HcdOptions::default());
        // pull each model vector toward its image's human centroid direction
        let pulled: Vec<ImageFixture> = images
            .iter()
            .map(|im| {
                let refs: Vec<&Vec<f64>> = im.humans.iter().collect();
                let c = support::mean_direction(&refs);
                let cn = c.iter().map(|x| x * x).sum::<f64>().sqrt();
                let pull = |v: &Vec<f64>| {
                    let vn = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    v.iter().zip(&c).map(|(x, y)| (1.0 - t) * x / vn + t * y / cn).collect::<Vec<f64>>()
                };
                ImageFixture {
                    humans: im.humans.clone(),
                    models: im.models.iter().map(|(k, vs)| (k.clone(), vs.iter().map(pull).collect())).collect(),
                }
            })
            .collect();
        let after = run(&pulled, HcdOptions::default());
        prop_assert_eq!(before.records.len(), after.records.len());
        for (x, y) in before.records.iter().zip(&after.records) {
            prop_assert!(y.hcd <= x.hcd + 1e-12, "{} -> {}", x.hcd, y.hcd);
        }
    }

    #[test]
    fn classification_follows_hcd(seed in any::<u64>()) {
        let mut r = rng(seed);
        for rec in run(&random_images(&mut r), HcdOptions::default()).records {
            prop_assert_eq!(rec.classification, hcd_core::Classification::of(rec.hcd));
            prop_assert!(rec.ub - rec.lb >= 1e-9);
        }
    }
}

#[test]
fn single_human_image_is_reported_not_scored() {
    let mut r = rng(3);
    let mut images = random_images(&mut r);
    images[0].humans.truncate(1);
    let got = run(&images, HcdOptions::default());
    assert!(got.records.iter().all(|r| r.group.get(KeyField::ImageId) != Some("img00")));
    assert!(got.excluded.iter().any(|e| e.group.get(KeyField::ImageId) == Some("img00")));
}

#[test]
fn missing_embeddings_are_listed() {
    let mut r = rng(4);
    let images = random_images(&mut r);
    let (records, matrix) = to_corpus(&images, "sitting");
    let mut partial = hcd_core::EmbeddingMatrix::new("emb", matrix.dim()).unwrap();
    for (id, v) in matrix.rows().skip(1) {
        partial.push(id, v).unwrap();
    }
    let got = evaluate_hcd(&records, &partial.normalize().unwrap(), HcdOptions::default());
    assert_eq!(got.missing_embeddings, vec![matrix.ids()[0].clone()]);
}
