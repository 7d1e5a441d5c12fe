use std::collections::HashMap;

use super::{Lattice, Pmf, DEFAULT_SUPPORT_CAP};
use crate::stats::special::{gamma_q, ln_factorial};

const POISSON_TAIL: f64 = 1e-14;
const MAX_JUMPS: usize = 5_000;
const SERIES_TOLERANCE: f64 = 1e-17;

fn ln_poisson(mean: f64, m: usize) -> f64 {
    if mean == 0.0 {
        return if m == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    -mean + m as f64 * mean.ln() - ln_factorial(m as u64)
}

/// Smallest `m` such that the Poisson(`mean`) mass beyond `m` is below 1e-14.
pub fn poisson_cutoff(mean: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let mut m = mean.floor() as usize;
    loop {
        // beyond the mode the tail is dominated by a geometric series
        let next = ln_poisson(mean, m + 1).exp();
        let ratio = mean / (m + 2) as f64;
        if ratio < 1.0 && next / (1.0 - ratio) < POISSON_TAIL {
            return m;
        }
        m += 1;
    }
}

/// Marginal pmf of a compound Poisson process with jump law `μ` and rate
/// `λ`, with cached convolution powers `μ^{*m}`.
#[derive(Debug, Clone)]
pub struct CompoundPoissonPmf {
    rate: f64,
    powers: Vec<Pmf<f64>>,
    lower: Vec<i64>,
    upper: Vec<i64>,
    /// `μ^{*m}(k)` for `m = 0, 1, ...`, per queried `k`.
    coefficients: HashMap<Lattice, Vec<f64>>,
}

impl CompoundPoissonPmf {
    pub fn new(mu: &Pmf<f64>, rate: f64) -> Self {
        let d = mu.d();
        let mut lower = vec![i64::MAX; d];
        let mut upper = vec![i64::MIN; d];
        for (k, _) in mu.iter() {
            for j in 0..d {
                lower[j] = lower[j].min(k[j]);
                upper[j] = upper[j].max(k[j]);
            }
        }
        CompoundPoissonPmf {
            rate,
            powers: vec![Pmf::dirac(vec![0; d]), mu.clone()],
            lower,
            upper,
            coefficients: HashMap::new(),
        }
    }

    fn power(&mut self, m: usize) -> &Pmf<f64> {
        while self.powers.len() <= m {
            let next = self.powers.last().unwrap().convolve(&self.powers[1], DEFAULT_SUPPORT_CAP).expect("support cap");
            self.powers.push(next);
        }
        &self.powers[m]
    }

    /// Whether `m` jumps can sum to `k`, from per-coordinate step bounds.
    fn reachable(&self, m: usize, k: &[i64]) -> bool {
        let m = m as i64;
        k.iter().enumerate().all(|(j, &kj)| m * self.lower[j] <= kj && kj <= m * self.upper[j])
    }

    fn coefficients(&mut self, k: &[i64], up_to: usize) -> &[f64] {
        let mut coeffs = self.coefficients.remove(k).unwrap_or_default();
        for m in coeffs.len()..=up_to {
            let c = if self.reachable(m, k) { self.power(m).get(k) } else { 0.0 };
            coeffs.push(c);
        }
        self.coefficients.entry(k.to_vec()).or_insert(coeffs)
    }

    /// `P(X_t = k)`.
    pub fn pmf(&mut self, t: f64, k: &[i64]) -> f64 {
        if t <= 0.0 || self.powers[1].support_len() == 0 {
            return if k.iter().all(|&c| c == 0) { 1.0 } else { 0.0 };
        }
        let mean = self.rate * t;
        let cutoff = poisson_cutoff(mean);
        let coeffs = self.coefficients(k, cutoff);
        let ln_mean = mean.ln();
        let mut ln_weight = -mean;
        let mut total = 0.0;
        for (m, &c) in coeffs[..=cutoff].iter().enumerate() {
            if m > 0 {
                ln_weight += ln_mean - (m as f64).ln();
            }
            if c > 0.0 {
                total += ln_weight.exp() * c;
            }
        }
        total
    }

    /// `∫_a^b P(X_s = k) / s ds` for `k ≠ 0`; `b` may be infinite.
    ///
    /// Term by term, `∫_a^b P(N_s = m) / s ds = P(a < Γ(m, λ) < b) / m`.
    /// The series stops once the terms stay negligible or after
    /// 5000 jumps.
    pub fn time_integral(&mut self, k: &[i64], a: f64, b: f64) -> f64 {
        let a = a.max(0.0);
        if !(b > a) || self.powers[1].support_len() == 0 {
            return 0.0;
        }
        let last = if b.is_finite() { poisson_cutoff(self.rate * b).max(1) } else { MAX_JUMPS };
        let mut total = 0.0;
        let mut quiet = 0;
        let mut m = 1;
        while m <= last {
            let coeffs = self.coefficients(k, m);
            let c = coeffs[m];
            let term = if c > 0.0 {
                let mass = gamma_q(m as f64, self.rate * a) - if b.is_finite() { gamma_q(m as f64, self.rate * b) } else { 0.0 };
                c * mass / m as f64
            } else {
                0.0
            };
            total += term;
            if term <= SERIES_TOLERANCE * total && (total > 0.0 || !self.reachable_later(m, k)) {
                quiet += 1;
                if quiet >= 32 {
                    break;
                }
            } else {
                quiet = 0;
            }
            m += 1;
        }
        total
    }

    /// Whether some count beyond `m` can still reach `k`.
    fn reachable_later(&self, m: usize, k: &[i64]) -> bool {
        (m + 1..m + 64).any(|n| self.reachable(n, k))
    }

    /// The full (truncated) law of `X_t`.
    pub fn law(&mut self, t: f64) -> Pmf<f64> {
        let d = self.lower.len();
        if t <= 0.0 {
            return Pmf::dirac(vec![0; d]);
        }
        let mean = self.rate * t;
        let mut out = Pmf::empty(d);
        for m in 0..=poisson_cutoff(mean) {
            let weight = ln_poisson(mean, m).exp();
            let power: Vec<(Lattice, f64)> = self.power(m).iter().map(|(k, w)| (k.clone(), *w)).collect();
            for (k, w) in power {
                out.add(k, weight * w);
            }
        }
        out
    }
}

/// `P(X_t = k)` for the compound Poisson process with jump law `μ` and rate `λ`.
pub fn compound_poisson_pmf(mu: &Pmf<f64>, rate: f64, t: f64, k: &[i64]) -> f64 {
    CompoundPoissonPmf::new(mu, rate).pmf(t, k)
}

/// Truncated marginal law of `X_t`.
pub fn compound_poisson_law(mu: &Pmf<f64>, rate: f64, t: f64) -> Pmf<f64> {
    CompoundPoissonPmf::new(mu, rate).law(t)
}
