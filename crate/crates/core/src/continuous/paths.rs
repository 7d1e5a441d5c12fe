use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Distribution, Exp};
use serde::Serialize;

use crate::coding::CodingSequence;
use crate::distributions::{shift_and_jump, DistributionError, Lattice, ProgenyDistribution};
use crate::stats::{replica_rng, SimRng};

/// One compound Poisson stream: jump times in internal time and jump vectors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JumpStream {
    pub times: Vec<f64>,
    pub jumps: Vec<Lattice>,
    /// Internal time up to which the stream is known.
    pub horizon: f64,
    /// Stop marker `T^{(i)}`; when set, `times` ends at or before it.
    pub stop: Option<f64>,
}

impl JumpStream {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `X^{(i)}` after all listed jumps.
    pub fn terminal(&self, d: usize) -> Lattice {
        let mut acc = vec![0; d];
        for jump in &self.jumps {
            for (a, v) in acc.iter_mut().zip(jump) {
                *a += v;
            }
        }
        acc
    }
}

/// `d` compound Poisson paths `X^{(1)}, ..., X^{(d)}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JumpPathSet {
    pub d: usize,
    /// Visible jump rates, when known.
    pub rates: Option<Vec<f64>>,
    pub streams: Vec<JumpStream>,
}

impl JumpPathSet {
    /// The embedded walks: stream `i`'s jump vectors in order.
    pub fn embedded_walk(&self) -> CodingSequence {
        CodingSequence::new(self.d, self.streams.iter().map(|s| s.jumps.clone()).collect())
            .expect("jump vectors are skip-free")
    }

    /// Terminal matrix: row `i` is `X^{(i)}` after all listed jumps.
    pub fn terminal_matrix(&self) -> Vec<Lattice> {
        self.streams.iter().map(|s| s.terminal(self.d)).collect()
    }

    pub fn is_stopped(&self) -> bool {
        self.streams.iter().all(|s| s.stop.is_some())
    }

    /// Equal jump vectors, equal stop flags, and times within `tol`.
    pub fn matches(&self, other: &JumpPathSet, tol: f64) -> Result<(), String> {
        if self.d != other.d {
            return Err("dimensions differ".into());
        }
        for (i, (a, b)) in self.streams.iter().zip(&other.streams).enumerate() {
            if a.jumps != b.jumps {
                return Err(format!("stream {i}: jump vectors differ"));
            }
            for (k, (s, t)) in a.times.iter().zip(&b.times).enumerate() {
                if (s - t).abs() > tol {
                    return Err(format!("stream {i} jump {k}: times {s} vs {t}"));
                }
            }
            match (a.stop, b.stop) {
                (Some(s), Some(t)) if (s - t).abs() <= tol => {}
                (None, None) => {}
                (s, t) => return Err(format!("stream {i}: stop markers {s:?} vs {t:?}")),
            }
        }
        Ok(())
    }

    /// Largest absolute time difference against a structurally equal set.
    pub fn max_time_error(&self, other: &JumpPathSet) -> f64 {
        let mut err: f64 = 0.0;
        for (a, b) in self.streams.iter().zip(&other.streams) {
            for (s, t) in a.times.iter().zip(&b.times) {
                err = err.max((s - t).abs());
            }
            if let (Some(s), Some(t)) = (a.stop, b.stop) {
                err = err.max((s - t).abs());
            }
        }
        err
    }
}

/// Generates the streams jump by jump, one generator per stream, so that a
/// longer horizon extends the paths without changing their prefix.
#[derive(Debug, Clone)]
pub struct PathSampler {
    rates: Vec<f64>,
    support: Vec<Vec<Lattice>>,
    alias: Vec<Option<WeightedAliasIndex<f64>>>,
    rngs: Vec<SimRng>,
    /// Generated jumps, including the first one beyond the horizon.
    times: Vec<Vec<f64>>,
    jumps: Vec<Vec<Lattice>>,
    horizon: f64,
}

impl PathSampler {
    /// `rates[i]` is the lifetime rate `λ_i`; visible jumps occur at rate
    /// `λ_i (1 - ν_i(e_i))` with law `μ_i`.
    pub fn new(nu: &ProgenyDistribution, rates: &[f64], seed: u64, replica: u64) -> Result<Self, DistributionError> {
        let d = nu.d();
        if rates.len() != d {
            return Err(DistributionError::Dimension { expected: d, got: rates.len() });
        }
        let (_, mu) = shift_and_jump(nu)?;
        let mut support = Vec::with_capacity(d);
        let mut alias = Vec::with_capacity(d);
        for law in mu.laws() {
            let (keys, weights): (Vec<Lattice>, Vec<f64>) = law.iter().map(|(k, w)| (k.clone(), *w)).unzip();
            alias.push(WeightedAliasIndex::new(weights).ok());
            support.push(keys);
        }
        Ok(PathSampler {
            rates: (0..d).map(|i| mu.jump_rate(i, rates[i])).collect(),
            support,
            alias,
            rngs: (0..d).map(|i| replica_rng(seed, replica, 100 + i as u64)).collect(),
            times: vec![Vec::new(); d],
            jumps: vec![Vec::new(); d],
            horizon: 0.0,
        })
    }

    pub fn d(&self) -> usize {
        self.rates.len()
    }

    /// Visible jump rates.
    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Generates every stream up to internal time `horizon`.
    pub fn extend_to(&mut self, horizon: f64) {
        for i in 0..self.d() {
            let rate = self.rates[i];
            let Some(alias) = &self.alias[i] else { continue };
            if rate <= 0.0 {
                continue;
            }
            let exp = Exp::new(rate).expect("positive rate");
            let rng = &mut self.rngs[i];
            loop {
                let last = self.times[i].last().copied().unwrap_or(0.0);
                if last > horizon {
                    break;
                }
                let t = last + exp.sample(rng);
                let jump = self.support[i][alias.sample(rng)].clone();
                self.times[i].push(t);
                self.jumps[i].push(jump);
            }
        }
        self.horizon = self.horizon.max(horizon);
    }

    /// The paths on `[0, horizon]`.
    pub fn paths(&self) -> JumpPathSet {
        let streams = (0..self.d())
            .map(|i| {
                let n = self.times[i].partition_point(|&t| t <= self.horizon);
                JumpStream {
                    times: self.times[i][..n].to_vec(),
                    jumps: self.jumps[i][..n].to_vec(),
                    horizon: self.horizon,
                    stop: None,
                }
            })
            .collect();
        JumpPathSet { d: self.d(), rates: Some(self.rates.clone()), streams }
    }
}

/// Compound Poisson paths on `[0, horizon]` for the generator `(seed, replica)`.
pub fn sample_paths(
    nu: &ProgenyDistribution,
    rates: &[f64],
    horizon: f64,
    seed: u64,
    replica: u64,
) -> Result<JumpPathSet, DistributionError> {
    let mut sampler = PathSampler::new(nu, rates, seed, replica)?;
    sampler.extend_to(horizon);
    Ok(sampler.paths())
}

/// Draws `Exp(rate)` lifetimes.
pub(crate) fn exponential<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    Exp::new(rate).expect("positive rate").sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::Pmf;

    fn pure_death() -> ProgenyDistribution {
        ProgenyDistribution::new(vec![Pmf::from_pairs(1, [(vec![0], 1.0)])]).unwrap()
    }

    #[test]
    fn zero_horizon_is_empty() {
        let p = sample_paths(&pure_death(), &[1.0], 0.0, 1, 0).unwrap();
        assert!(p.streams[0].is_empty());
    }

    #[test]
    fn extension_preserves_prefix() {
        let mut s = PathSampler::new(&pure_death(), &[2.0], 5, 1).unwrap();
        s.extend_to(3.0);
        let short = s.paths();
        s.extend_to(10.0);
        let long = s.paths();
        let n = short.streams[0].len();
        assert_eq!(&long.streams[0].times[..n], &short.streams[0].times[..]);
        assert!(long.streams[0].len() >= n);
        assert_eq!(sample_paths(&pure_death(), &[2.0], 10.0, 5, 1).unwrap(), long);
    }

    #[test]
    fn invisible_jumps_reduce_the_rate() {
        let nu = ProgenyDistribution::new(vec![Pmf::from_pairs(1, [(vec![0], 0.25), (vec![1], 0.75)])]).unwrap();
        let s = PathSampler::new(&nu, &[2.0], 0, 0).unwrap();
        assert!((s.rates()[0] - 0.5).abs() < 1e-15);
    }
}
