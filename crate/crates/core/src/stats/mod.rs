//! Goodness-of-fit tests and the seeded replica harness.

mod harness;
pub mod special;

pub use harness::{replica_rng, replicate, SimRng};

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distributions::{Lattice, Pmf};
use special::{chi_square_sf, kolmogorov_sf};

/// Default significance threshold for law tests.
pub const P_THRESHOLD: f64 = 1e-3;

/// Default minimum expected count per chi-square bin.
pub const MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("empty sample")]
    EmptySample,
    #[error("all mass pooled into a single bin")]
    Degenerate,
}

/// Outcome of one verification test, serialized as a report line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub test: String,
    pub statistic: f64,
    pub p_value: Option<f64>,
    pub abs_error: Option<f64>,
    pub pass: bool,
    pub seed: u64,
    pub replicas: usize,
}

impl TestReport {
    /// Passes when `p_value > threshold`.
    pub fn from_p_value(test: impl Into<String>, statistic: f64, p_value: f64, threshold: f64, seed: u64, replicas: usize) -> Self {
        TestReport {
            test: test.into(),
            statistic,
            p_value: Some(p_value),
            abs_error: None,
            pass: p_value > threshold,
            seed,
            replicas,
        }
    }

    /// Passes when `abs_error <= tolerance`.
    pub fn from_error(test: impl Into<String>, statistic: f64, abs_error: f64, tolerance: f64, seed: u64, replicas: usize) -> Self {
        TestReport {
            test: test.into(),
            statistic,
            p_value: None,
            abs_error: Some(abs_error),
            pass: abs_error <= tolerance,
            seed,
            replicas,
        }
    }

    /// Pass/fail check with no numeric statistic (exact identities).
    pub fn exact(test: impl Into<String>, failures: usize, seed: u64, replicas: usize) -> Self {
        TestReport::from_error(test, failures as f64, failures as f64, 0.0, seed, replicas)
    }
}

impl std::fmt::Display for TestReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {} statistic={:.6}", if self.pass { "PASS" } else { "FAIL" }, self.test, self.statistic)?;
        if let Some(p) = self.p_value {
            write!(f, " p={p:.3e}")?;
        }
        if let Some(e) = self.abs_error {
            write!(f, " err={e:.3e}")?;
        }
        write!(f, " replicas={} seed={}", self.replicas, self.seed)
    }
}

/// Occurrence counts of each distinct value.
pub fn counts<K: Ord + Clone>(samples: impl IntoIterator<Item = K>) -> BTreeMap<K, u64> {
    let mut out = BTreeMap::new();
    for s in samples {
        *out.entry(s).or_insert(0) += 1;
    }
    out
}

/// Normalized counts of lattice samples.
pub fn empirical_pmf(samples: &[Lattice]) -> Result<Pmf<f64>, StatsError> {
    let first = samples.first().ok_or(StatsError::EmptySample)?;
    let n = samples.len() as f64;
    Ok(Pmf::from_pairs(first.len(), counts(samples.iter().cloned()).into_iter().map(|(k, c)| (k, c as f64 / n))))
}

/// [`empirical_pmf`] with exact rational masses.
pub fn empirical_pmf_exact(samples: &[Lattice]) -> Result<Pmf<BigRational>, StatsError> {
    let first = samples.first().ok_or(StatsError::EmptySample)?;
    let n = BigInt::from(samples.len());
    Ok(Pmf::from_pairs(
        first.len(),
        counts(samples.iter().cloned())
            .into_iter()
            .map(|(k, c)| (k, BigRational::new(BigInt::from(c), n.clone()))),
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub bins: usize,
}

/// Bins with expected count below `min_expected` are moved, in key order,
/// into one tail bin. A tail bin still below the minimum is merged into the
/// remaining bin with the smallest expectation.
fn pool(mut bins: Vec<Vec<f64>>, tail: Vec<f64>, min_expected: f64) -> Result<Vec<Vec<f64>>, StatsError> {
    // bins: [expected..., observed...] columns, compared on the smallest expectation
    let small = |b: &Vec<f64>, width: usize| b[..width].iter().cloned().fold(f64::INFINITY, f64::min) < min_expected;
    let width = tail.len() / 2;
    let mut pooled = tail;
    bins.retain(|b| {
        if small(b, width) {
            for (p, v) in pooled.iter_mut().zip(b) {
                *p += v;
            }
            false
        } else {
            true
        }
    });
    let pooled_used = pooled.iter().any(|&v| v > 0.0);
    if pooled_used {
        if small(&pooled, width) && !bins.is_empty() {
            let target = (0..bins.len())
                .min_by(|&a, &b| bins[a][0].partial_cmp(&bins[b][0]).unwrap_or(std::cmp::Ordering::Equal))
                .unwrap();
            for (t, v) in bins[target].iter_mut().zip(&pooled) {
                *t += v;
            }
        } else {
            bins.push(pooled);
        }
    }
    if bins.len() < 2 {
        return Err(StatsError::Degenerate);
    }
    Ok(bins)
}

fn pearson(bins: &[Vec<f64>], width: usize) -> f64 {
    bins.iter()
        .map(|b| {
            (0..width)
                .map(|c| {
                    let (e, o) = (b[c], b[width + c]);
                    if e > 0.0 {
                        (o - e).powi(2) / e
                    } else if o > 0.0 {
                        f64::INFINITY
                    } else {
                        0.0
                    }
                })
                .sum::<f64>()
        })
        .sum()
}

/// Pearson goodness-of-fit of observed counts against a pmf. Observations
/// outside the pmf's keys and any missing mass form the tail bin.
pub fn chi_square_gof<K: Ord + Clone>(
    observed: &BTreeMap<K, u64>,
    expected: &BTreeMap<K, f64>,
    min_expected: f64,
) -> Result<ChiSquare, StatsError> {
    let n: u64 = observed.values().sum();
    if n == 0 {
        return Err(StatsError::EmptySample);
    }
    let n = n as f64;
    let mut bins = Vec::with_capacity(expected.len());
    let mut covered = 0.0;
    let mut seen = 0u64;
    for (k, &p) in expected {
        let o = observed.get(k).copied().unwrap_or(0);
        covered += p;
        seen += o;
        bins.push(vec![n * p, o as f64]);
    }
    let tail = vec![(n * (1.0 - covered)).max(0.0), n - seen as f64];
    let bins = pool(bins, tail, min_expected)?;
    let statistic = pearson(&bins, 1);
    let dof = bins.len() - 1;
    Ok(ChiSquare { statistic, dof, p_value: chi_square_sf(statistic, dof as f64), bins: bins.len() })
}

/// [`chi_square_gof`] against a lattice pmf.
pub fn chi_square_gof_pmf(samples: &[Lattice], expected: &Pmf<f64>, min_expected: f64) -> Result<ChiSquare, StatsError> {
    let observed = counts(samples.iter().cloned());
    let expected: BTreeMap<Lattice, f64> = expected.iter().map(|(k, w)| (k.clone(), *w)).collect();
    chi_square_gof(&observed, &expected, min_expected)
}

/// Chi-square test of homogeneity for two samples over the same categories.
pub fn chi_square_two_sample<K: Ord + Clone>(
    a: &BTreeMap<K, u64>,
    b: &BTreeMap<K, u64>,
    min_expected: f64,
) -> Result<ChiSquare, StatsError> {
    let na: u64 = a.values().sum();
    let nb: u64 = b.values().sum();
    if na == 0 || nb == 0 {
        return Err(StatsError::EmptySample);
    }
    let (na, nb) = (na as f64, nb as f64);
    let total = na + nb;
    let mut keys: Vec<&K> = a.keys().chain(b.keys()).collect();
    keys.sort();
    keys.dedup();
    let bins: Vec<Vec<f64>> = keys
        .into_iter()
        .map(|k| {
            let oa = a.get(k).copied().unwrap_or(0) as f64;
            let ob = b.get(k).copied().unwrap_or(0) as f64;
            let row = oa + ob;
            vec![na * row / total, nb * row / total, oa, ob]
        })
        .collect();
    let bins = pool(bins, vec![0.0; 4], min_expected)?;
    let statistic = pearson(&bins, 2);
    let dof = bins.len() - 1;
    Ok(ChiSquare { statistic, dof, p_value: chi_square_sf(statistic, dof as f64), bins: bins.len() })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KolmogorovSmirnov {
    pub statistic: f64,
    pub p_value: f64,
}

fn ks_p_value(statistic: f64, effective_n: f64) -> f64 {
    let root = effective_n.sqrt();
    kolmogorov_sf((root + 0.12 + 0.11 / root) * statistic)
}

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KolmogorovSmirnov, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut statistic: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        statistic = statistic.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(KolmogorovSmirnov { statistic, p_value: ks_p_value(statistic, na * nb / (na + nb)) })
}

/// One-sample Kolmogorov-Smirnov test against a continuous cdf.
pub fn ks_one_sample(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KolmogorovSmirnov, StatsError> {
    if sample.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let statistic = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    Ok(KolmogorovSmirnov { statistic, p_value: ks_p_value(statistic, n) })
}

/// Mean and standard error of the mean.
pub fn mean_and_standard_error(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

/// Number of binomial standard deviations between `successes / n` and `p`.
pub fn binomial_z(successes: usize, n: usize, p: f64) -> f64 {
    let sigma = (p * (1.0 - p) / n as f64).sqrt();
    (successes as f64 / n as f64 - p) / sigma
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    #[test]
    fn constant_sample_is_point_mass() {
        let p = empirical_pmf(&vec![vec![1, 2]; 7]).unwrap();
        assert_eq!(p.get(&[1, 2]), 1.0);
        assert_eq!(p.support_len(), 1);
        assert_eq!(empirical_pmf(&[]), Err(StatsError::EmptySample));
    }

    #[test]
    fn exact_masses_sum_to_one() {
        let samples: Vec<Lattice> = (0..7).map(|i| vec![i % 3]).collect();
        assert!(empirical_pmf_exact(&samples).unwrap().total().is_one());
    }

    #[test]
    fn perfect_fit_has_zero_statistic() {
        let expected: BTreeMap<i32, f64> = [(0, 0.25), (1, 0.5), (2, 0.25)].into();
        let observed: BTreeMap<i32, u64> = [(0, 25), (1, 50), (2, 25)].into();
        let r = chi_square_gof(&observed, &expected, MIN_EXPECTED).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.dof, 2);
    }

    #[test]
    fn pooling_merges_small_bins() {
        let expected: BTreeMap<i32, f64> = [(0, 0.5), (1, 0.47), (2, 0.02), (3, 0.01)].into();
        let observed: BTreeMap<i32, u64> = [(0, 50), (1, 47), (2, 2), (3, 1)].into();
        // bins 2 and 3 pool to expected 3, still small, so join bin 1
        let r = chi_square_gof(&observed, &expected, MIN_EXPECTED).unwrap();
        assert_eq!(r.bins, 2);
        assert!(r.statistic.abs() < 1e-12);
    }

    #[test]
    fn degenerate_pooling_is_an_error() {
        let expected: BTreeMap<i32, f64> = [(0, 0.5), (1, 0.5)].into();
        let observed: BTreeMap<i32, u64> = [(0, 2), (1, 2)].into();
        assert_eq!(chi_square_gof(&observed, &expected, MIN_EXPECTED), Err(StatsError::Degenerate));
    }

    #[test]
    fn observations_outside_support_are_pooled() {
        let expected: BTreeMap<i32, f64> = [(0, 0.5), (1, 0.5)].into();
        let observed: BTreeMap<i32, u64> = [(0, 40), (1, 50), (7, 10)].into();
        let r = chi_square_gof(&observed, &expected, MIN_EXPECTED).unwrap();
        assert_eq!(r.bins, 2);
        assert!(r.statistic.abs() < 1e-12);
    }

    #[test]
    fn two_sample_identical_counts() {
        let a: BTreeMap<i32, u64> = [(0, 40), (1, 60)].into();
        let r = chi_square_two_sample(&a, &a, MIN_EXPECTED).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.dof, 1);
    }

    #[test]
    fn ks_identical_samples() {
        let a = [0.3, 1.2, 0.7, 2.5];
        let r = ks_two_sample(&a, &a).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        let shifted: Vec<f64> = a.iter().map(|x| x + 10.0).collect();
        assert_eq!(ks_two_sample(&a, &shifted).unwrap().statistic, 1.0);
    }

    #[test]
    fn ks_one_sample_uniform_grid() {
        let n = 100;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let r = ks_one_sample(&xs, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!((r.statistic - 0.005).abs() < 1e-12);
        assert!(r.p_value > 0.99);
    }

    #[test]
    fn report_json_schema() {
        let r = TestReport::from_p_value("x", 1.5, 0.2, P_THRESHOLD, 7, 100);
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(keys.len(), 7);
        for k in ["test", "statistic", "p_value", "abs_error", "pass", "seed", "replicas"] {
            assert!(keys.contains(&k));
        }
        assert!(v["abs_error"].is_null());
        assert!(r.pass);
    }
}
