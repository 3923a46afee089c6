//! Deterministic statistical kernels shared by the analysis modules.
//!
//! Percentiles use linear interpolation between order statistics (the
//! "type 7" definition). Everything here is a pure function; the only
//! randomness is the explicitly seeded bootstrap.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Sign-pattern enumeration is exact up to this many nonzero deltas.
pub const WILCOXON_EXACT_MAX_N: usize = 25;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("empty input")]
    EmptyInput,
    #[error("percentile must lie in [0, 1], got {0}")]
    BadP(f64),
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("all deltas are zero")]
    AllZeros,
    #[error("2x2 table has an empty row or column")]
    DegenerateMargin,
    #[error("need at least two values, got {0}")]
    TooFewValues(usize),
    #[error("confidence level must lie in (0, 1), got {0}")]
    BadLevel(f64),
    #[error("number of resamples must be positive")]
    NoResamples,
}

/// Outcome of a hypothesis test.
#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub method: &'static str,
    pub n: usize,
    /// True only when the null distribution was enumerated exactly.
    pub exact: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Alternative {
    #[default]
    TwoSided,
    Greater,
    Less,
}

fn check_finite(values: &[f64]) -> Result<(), StatsError> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(StatsError::NonFinite(i)),
        None => Ok(()),
    }
}

/// Type-7 percentile of already ascending-sorted values.
pub fn percentile_sorted(sorted: &[f64], p: f64) -> Result<f64, StatsError> {
    if sorted.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(StatsError::BadP(p));
    }
    let h = (sorted.len() - 1) as f64 * p;
    let lo = libm::floor(h) as usize;
    let frac = h - lo as f64;
    if lo + 1 >= sorted.len() || frac == 0.0 {
        return Ok(sorted[lo]);
    }
    Ok(sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]))
}

/// Type-7 percentile: `h = (n-1)p`, linear interpolation between the
/// order statistics around `h`.
pub fn percentile(values: &[f64], p: f64) -> Result<f64, StatsError> {
    check_finite(values)?;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    percentile_sorted(&sorted, p)
}

/// Median; an even count averages the two central order statistics.
pub fn median(values: &[f64]) -> Result<f64, StatsError> {
    percentile(values, 0.5)
}

pub fn mean(values: &[f64]) -> Result<f64, StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    check_finite(values)?;
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / core::f64::consts::SQRT_2)
}

/// Ranks of `|deltas|` (nonzero entries only) with ties averaged, stored
/// doubled so that they stay integral.
fn doubled_abs_ranks(nonzero: &[f64]) -> (Vec<u64>, Vec<usize>) {
    let n = nonzero.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        libm::fabs(nonzero[a])
            .total_cmp(&libm::fabs(nonzero[b]))
            .then(a.cmp(&b))
    });
    let mut ranks = alloc::vec![0u64; n];
    let mut tie_sizes = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && libm::fabs(nonzero[order[j + 1]]) == libm::fabs(nonzero[order[i]]) {
            j += 1;
        }
        // positions i..=j hold ranks i+1..=j+1; their mean doubled is i+j+2
        let doubled = (i + j + 2) as u64;
        for &idx in &order[i..=j] {
            ranks[idx] = doubled;
        }
        tie_sizes.push(j - i + 1);
        i = j + 1;
    }
    (ranks, tie_sizes)
}

/// Wilcoxon signed-rank test.
///
/// Exact zeros are dropped. `V` is the rank sum of the positive deltas
/// (average ranks for tied magnitudes). Up to
/// [`WILCOXON_EXACT_MAX_N`] nonzero deltas the null distribution of `V`
/// over all `2^n` sign assignments is computed exactly (conditional on the
/// observed tie pattern); beyond that a normal approximation with tie and
/// continuity correction is used.
pub fn wilcoxon_signed_rank(deltas: &[f64], alternative: Alternative) -> Result<TestResult, StatsError> {
    check_finite(deltas)?;
    let nonzero: Vec<f64> = deltas.iter().copied().filter(|d| *d != 0.0).collect();
    if nonzero.is_empty() {
        return Err(StatsError::AllZeros);
    }
    let n = nonzero.len();
    let (ranks, tie_sizes) = doubled_abs_ranks(&nonzero);
    let v_doubled: u64 = nonzero
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| *r)
        .sum();
    let statistic = v_doubled as f64 / 2.0;

    if n <= WILCOXON_EXACT_MAX_N {
        let total: u64 = ranks.iter().sum();
        // counts[s]: number of sign assignments whose positive doubled-rank sum is s
        let mut counts = alloc::vec![0.0f64; total as usize + 1];
        counts[0] = 1.0;
        let mut reach = 0usize;
        for &r in &ranks {
            let r = r as usize;
            for s in (0..=reach).rev() {
                let c = counts[s];
                if c != 0.0 {
                    counts[s + r] += c;
                }
            }
            reach += r;
        }
        let all = libm::pow(2.0, n as f64);
        let v = v_doubled as usize;
        let lower: f64 = counts[..=v].iter().sum::<f64>() / all;
        let upper: f64 = counts[v..].iter().sum::<f64>() / all;
        let p = match alternative {
            Alternative::TwoSided => (2.0 * lower.min(upper)).min(1.0),
            Alternative::Greater => upper,
            Alternative::Less => lower,
        };
        return Ok(TestResult {
            statistic,
            p_value: p.clamp(0.0, 1.0),
            method: "wilcoxon signed-rank (exact)",
            n,
            exact: true,
        });
    }

    let nf = n as f64;
    let ties: f64 = tie_sizes
        .iter()
        .map(|&t| {
            let t = t as f64;
            t * t * t - t
        })
        .sum();
    let sigma = libm::sqrt(nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - ties / 48.0);
    let z0 = statistic - nf * (nf + 1.0) / 4.0;
    let correction = match alternative {
        Alternative::TwoSided => {
            if z0 > 0.0 {
                0.5
            } else if z0 < 0.0 {
                -0.5
            } else {
                0.0
            }
        }
        Alternative::Greater => 0.5,
        Alternative::Less => -0.5,
    };
    let z = (z0 - correction) / sigma;
    let p = match alternative {
        Alternative::TwoSided => 2.0 * normal_cdf(z).min(normal_cdf(-z)),
        Alternative::Greater => normal_cdf(-z),
        Alternative::Less => normal_cdf(z),
    };
    Ok(TestResult {
        statistic,
        p_value: p.clamp(0.0, 1.0),
        method: "wilcoxon signed-rank (normal approximation)",
        n,
        exact: false,
    })
}

/// Chi-squared test of a 2x2 table with Cramér's V.
#[derive(Debug, Clone, PartialEq)]
pub struct Chi2Result {
    pub test: TestResult,
    pub cramers_v: f64,
}

/// Pearson chi-squared for the table `[[a, b], [c, d]]`, no continuity
/// correction. `V = sqrt(chi2 / n)`.
pub fn chi2_2x2(a: u64, b: u64, c: u64, d: u64) -> Result<Chi2Result, StatsError> {
    let (af, bf, cf, df) = (a as f64, b as f64, c as f64, d as f64);
    let n = af + bf + cf + df;
    let margins = [af + bf, cf + df, af + cf, bf + df];
    if n == 0.0 || margins.contains(&0.0) {
        return Err(StatsError::DegenerateMargin);
    }
    let cross = af * df - bf * cf;
    // divide stepwise so the product of margins never overflows
    let chi2 = (cross / margins[0]) * (cross / margins[1]) * (n / margins[2]) / margins[3];
    let v = libm::sqrt(chi2 / n).min(1.0);
    Ok(Chi2Result {
        test: TestResult {
            statistic: chi2,
            p_value: chi2_sf(chi2, 1.0),
            method: "pearson chi-squared 2x2",
            n: (a + b + c + d) as usize,
            exact: false,
        },
        cramers_v: v,
    })
}

/// Upper tail of the chi-squared distribution with `df` degrees of freedom.
pub fn chi2_sf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    gamma_q(df / 2.0, x / 2.0)
}

const GAMMA_EPS: f64 = 1e-16;
const GAMMA_MAX_ITER: usize = 10_000;

/// Regularized upper incomplete gamma function `Q(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_continued_fraction(a, x)
    }
}

/// Regularized lower incomplete gamma function `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        gamma_p_series(a, x)
    } else {
        1.0 - gamma_q_continued_fraction(a, x)
    }
}

fn gamma_prefactor(a: f64, x: f64) -> f64 {
    libm::exp(-x + a * libm::log(x) - libm::lgamma(a))
}

fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..GAMMA_MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if libm::fabs(term) < libm::fabs(sum) * GAMMA_EPS {
            break;
        }
    }
    sum * gamma_prefactor(a, x)
}

// modified Lentz evaluation of the continued fraction for Q(a, x)
fn gamma_q_continued_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..GAMMA_MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if libm::fabs(d) < TINY {
            d = TINY;
        }
        c = b + an / c;
        if libm::fabs(c) < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if libm::fabs(delta - 1.0) < GAMMA_EPS {
            break;
        }
    }
    gamma_prefactor(a, x) * h
}

/// One bootstrap replicate: resample `values` with replacement using a
/// generator derived from `(seed, index)` and apply `statistic`.
///
/// Each replicate owns its stream, so replicates can be evaluated in any
/// order or in parallel and still reproduce the same interval.
pub fn bootstrap_replicate<F>(values: &[f64], statistic: &F, seed: u64, index: u64) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let n = values.len();
    let sample: Vec<f64> = (0..n).map(|_| values[rng.random_range(0..n)]).collect();
    statistic(&sample)
}

/// Percentile interval from already computed replicate statistics.
pub fn percentile_interval(replicates: &[f64], level: f64) -> Result<(f64, f64), StatsError> {
    if !(level > 0.0 && level < 1.0) {
        return Err(StatsError::BadLevel(level));
    }
    let alpha = (1.0 - level) / 2.0;
    let mut sorted = replicates.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok((percentile_sorted(&sorted, alpha)?, percentile_sorted(&sorted, 1.0 - alpha)?))
}

/// Percentile bootstrap confidence interval, deterministic given `seed`.
pub fn bootstrap_ci<F>(
    values: &[f64],
    statistic: F,
    n_resamples: usize,
    level: f64,
    seed: u64,
) -> Result<(f64, f64), StatsError>
where
    F: Fn(&[f64]) -> f64,
{
    if values.len() < 2 {
        return Err(StatsError::TooFewValues(values.len()));
    }
    check_finite(values)?;
    if n_resamples == 0 {
        return Err(StatsError::NoResamples);
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(StatsError::BadLevel(level));
    }
    let replicates: Vec<f64> = (0..n_resamples as u64)
        .map(|i| bootstrap_replicate(values, &statistic, seed, i))
        .collect();
    percentile_interval(&replicates, level)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_examples() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(percentile(&v, 0.5).unwrap(), 3.0);
        assert!((percentile(&v, 0.95).unwrap() - 4.8).abs() < 1e-12);
        assert_eq!(percentile(&[7.5], 0.33).unwrap(), 7.5);
        assert_eq!(percentile(&[], 0.5), Err(StatsError::EmptyInput));
        assert_eq!(percentile(&v, 1.5), Err(StatsError::BadP(1.5)));
        assert_eq!(percentile(&[1.0, f64::NAN], 0.5), Err(StatsError::NonFinite(1)));
    }

    #[test]
    fn median_even_count_averages_center() {
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]).unwrap(), 2.5);
    }

    #[test]
    fn wilcoxon_all_positive_eighteen() {
        let deltas: Vec<f64> = (1..=18).map(|i| 0.02 + 0.005 * i as f64).collect();
        let r = wilcoxon_signed_rank(&deltas, Alternative::TwoSided).unwrap();
        assert_eq!(r.statistic, 171.0);
        assert!(r.exact);
        assert!((r.p_value - 2.0 / 262_144.0).abs() < 1e-18);
        let g = wilcoxon_signed_rank(&deltas, Alternative::Greater).unwrap();
        assert!((g.p_value - 1.0 / 262_144.0).abs() < 1e-18);
    }

    #[test]
    fn wilcoxon_textbook_vector() {
        // |d| ranks: 0.2->1 0.3->2 0.5->3 0.9->4 1.1->5 2.0->6; positives 5+6+2+4
        let r = wilcoxon_signed_rank(&[1.1, -0.5, 2.0, 0.3, -0.2, 0.9], Alternative::TwoSided).unwrap();
        assert_eq!(r.statistic, 17.0);
        // subsets of {1..6} with sum >= 17 mirror those with sum <= 4: 7 of 64
        assert!((r.p_value - 14.0 / 64.0).abs() < 1e-15);
    }

    #[test]
    fn wilcoxon_symmetric_pairs() {
        let r = wilcoxon_signed_rank(&[1.0, -1.0, 2.0, -2.0, 3.0, -3.0], Alternative::TwoSided).unwrap();
        assert_eq!(r.statistic, 10.5);
        assert!(r.p_value > 0.9);
    }

    #[test]
    fn wilcoxon_zero_handling() {
        assert_eq!(
            wilcoxon_signed_rank(&[0.0, 0.0], Alternative::TwoSided),
            Err(StatsError::AllZeros)
        );
        let r = wilcoxon_signed_rank(&[0.0, 1.0, 2.0], Alternative::TwoSided).unwrap();
        assert_eq!(r.n, 2);
    }

    #[test]
    fn wilcoxon_large_sample_uses_normal_approximation() {
        let deltas: Vec<f64> = (1..=40).map(|i| if i % 3 == 0 { -(i as f64) } else { i as f64 }).collect();
        let r = wilcoxon_signed_rank(&deltas, Alternative::TwoSided).unwrap();
        assert!(!r.exact);
        assert!((0.0..=1.0).contains(&r.p_value));
    }

    #[test]
    fn chi2_examples() {
        let r = chi2_2x2(10, 20, 20, 10).unwrap();
        assert!((r.test.statistic - 20.0 / 3.0).abs() < 1e-12);
        assert!((r.cramers_v - 1.0 / 3.0).abs() < 1e-12);
        let p = chi2_2x2(10, 20, 30, 60).unwrap();
        assert_eq!(p.test.statistic, 0.0);
        assert_eq!(p.test.p_value, 1.0);
        assert_eq!(chi2_2x2(50, 0, 0, 50).unwrap().cramers_v, 1.0);
        assert_eq!(chi2_2x2(0, 0, 3, 4), Err(StatsError::DegenerateMargin));
    }

    #[test]
    fn chi2_sf_matches_erfc_route() {
        for &x in &[0.001, 0.5, 1.0, 3.841458820694124, 6.666666666666667, 20.0, 60.0, 150.0] {
            let direct = libm::erfc(libm::sqrt(x / 2.0));
            let via_gamma = chi2_sf(x, 1.0);
            assert!((direct - via_gamma).abs() <= 1e-10 * direct, "x={x}: {direct} vs {via_gamma}");
        }
    }

    #[test]
    fn gamma_p_plus_q_is_one() {
        for &(a, x) in &[(0.5, 0.2), (2.0, 3.0), (5.5, 1.0), (10.0, 14.0)] {
            assert!((gamma_p(a, x) + gamma_q(a, x) - 1.0).abs() < 1e-14);
        }
        // Q(1, x) = exp(-x)
        assert!((gamma_q(1.0, 2.5) - (-2.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn bootstrap_constant_and_seeded() {
        let mean_fn = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let (lo, hi) = bootstrap_ci(&[3.0; 8], mean_fn, 200, 0.95, 1).unwrap();
        assert_eq!((lo, hi), (3.0, 3.0));
        let data = [1.0, 4.0, 2.0, 8.0, 5.0, 7.0];
        let a = bootstrap_ci(&data, mean_fn, 500, 0.9, 42).unwrap();
        let b = bootstrap_ci(&data, mean_fn, 500, 0.9, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.0 < a.1);
        assert_eq!(bootstrap_ci(&[1.0], mean_fn, 10, 0.95, 0), Err(StatsError::TooFewValues(1)));
    }
}
