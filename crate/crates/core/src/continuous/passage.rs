use serde::Serialize;
use thiserror::Error;

use super::paths::{JumpPathSet, PathSampler};
use crate::coding::{smallest_solution, Coord};
use crate::distributions::{DistributionError, Lattice, ProgenyDistribution};
use crate::stats::{ks_two_sample, replicate, TestReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PassageError {
    #[error("first passage unresolved up to internal time {horizon}")]
    Unresolved { horizon: f64 },
    #[error("start vector has length {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error(transparent)]
    Distribution(#[from] DistributionError),
    #[error("{resolved} of {wanted} replicas resolved")]
    InsufficientSamples { resolved: usize, wanted: usize },
}

/// First passage of the additive field `Σ_i X^{(i)}(t_i)` at `-x`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FirstPassage {
    /// Jump counts `s_i` at passage.
    pub s: Vec<Coord>,
    /// Passage times `T^{(i)}`, `None` when unresolved.
    pub t: Vec<Option<f64>>,
    /// `X^{i,j}(T^{(i)})`; rows of unresolved coordinates hold the value at the horizon.
    pub terminal: Vec<Lattice>,
}

impl FirstPassage {
    pub fn all_resolved(&self) -> bool {
        self.t.iter().all(Option::is_some)
    }

    pub fn times(&self) -> Option<Vec<f64>> {
        self.t.iter().copied().collect()
    }
}

/// Smallest solution of `(x, embedded walk)` read back in internal time.
///
/// A resolved coordinate `j` is demoted to unresolved while some unresolved
/// `i` has `X^{i,j} > 0` at its current value, so that the passage identity
/// `x_j + Σ_{i resolved} X^{i,j}(T^{(i)}) = 0` holds on what is reported.
pub fn first_passage(p: &JumpPathSet, x: &[usize]) -> Result<FirstPassage, PassageError> {
    let d = p.d;
    if x.len() != d {
        return Err(PassageError::Dimension { expected: d, got: x.len() });
    }
    let walk = p.embedded_walk();
    let cumulative = walk.cumulative();
    let mut s = smallest_solution(x, &walk).coords;
    let at = |c: Coord, i: usize| c.value().unwrap_or(cumulative[i].len() - 1);
    loop {
        let demote: Vec<usize> = (0..d)
            .filter(|&j| s[j].is_resolved())
            .filter(|&j| (0..d).any(|i| !s[i].is_resolved() && cumulative[i][at(s[i], i)][j] > 0))
            .collect();
        if demote.is_empty() {
            break;
        }
        for j in demote {
            s[j] = Coord::Unresolved { horizon: cumulative[j].len() - 1 };
        }
    }
    let t = (0..d)
        .map(|i| match s[i] {
            Coord::Resolved(0) => Some(0.0),
            Coord::Resolved(k) => Some(p.streams[i].times[k - 1]),
            Coord::Unresolved { .. } => None,
        })
        .collect();
    let terminal = (0..d).map(|i| cumulative[i][at(s[i], i)].clone()).collect();
    Ok(FirstPassage { s, t, terminal })
}

/// The paths truncated at a fully resolved passage, with stop markers.
pub fn stopped_at(p: &JumpPathSet, passage: &FirstPassage) -> Option<JumpPathSet> {
    let mut out = p.clone();
    for (i, stream) in out.streams.iter_mut().enumerate() {
        let k = passage.s[i].value()?;
        stream.times.truncate(k);
        stream.jumps.truncate(k);
        stream.stop = passage.t[i];
    }
    Some(out)
}

/// Samples paths, doubling the horizon until the passage at `-x` resolves
/// or the horizon would pass `max_horizon`. Returns the stopped paths.
pub fn sample_first_passage(
    nu: &ProgenyDistribution,
    rates: &[f64],
    x: &[usize],
    max_horizon: f64,
    seed: u64,
    replica: u64,
) -> Result<(JumpPathSet, FirstPassage), PassageError> {
    let mut sampler = PathSampler::new(nu, rates, seed, replica)?;
    let mean_rate = sampler.rates().iter().cloned().fold(0.0, f64::max).max(1e-12);
    let mut horizon = (x.iter().sum::<usize>().max(1) as f64 / mean_rate).min(max_horizon);
    loop {
        sampler.extend_to(horizon);
        let paths = sampler.paths();
        let passage = first_passage(&paths, x)?;
        if let Some(stopped) = stopped_at(&paths, &passage) {
            return Ok((stopped, passage));
        }
        if horizon >= max_horizon {
            return Err(PassageError::Unresolved { horizon });
        }
        horizon = (horizon * 2.0).min(max_horizon);
    }
}

/// Settings shared by the Monte Carlo passage checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassageConfig {
    pub max_horizon: f64,
    pub threshold: f64,
    pub threads: usize,
}

impl Default for PassageConfig {
    fn default() -> Self {
        PassageConfig { max_horizon: 1e4, threshold: crate::stats::P_THRESHOLD, threads: 1 }
    }
}

/// Compares `T_{x+y}` with `T_x + T̃_y` (independent copies), coordinate by
/// coordinate, with two-sample KS tests over resolved replicas.
pub fn additivity_check(
    nu: &ProgenyDistribution,
    rates: &[f64],
    x: &[usize],
    y: &[usize],
    replicas: usize,
    seed: u64,
    config: PassageConfig,
) -> Result<Vec<TestReport>, PassageError> {
    let d = nu.d();
    if x.len() != d || y.len() != d {
        return Err(PassageError::Dimension { expected: d, got: x.len().min(y.len()) });
    }
    let sum: Vec<usize> = x.iter().zip(y).map(|(a, b)| a + b).collect();
    let draw = |start: &[usize], replica: u64| {
        sample_first_passage(nu, rates, start, config.max_horizon, seed, replica)
            .ok()
            .and_then(|(_, fp)| fp.times())
    };
    let joint: Vec<Option<Vec<f64>>> = replicate(replicas, config.threads, |r| draw(&sum, 3 * r as u64));
    let split: Vec<Option<Vec<f64>>> = replicate(replicas, config.threads, |r| {
        let a = draw(x, 3 * r as u64 + 1)?;
        let b = draw(y, 3 * r as u64 + 2)?;
        Some(a.iter().zip(&b).map(|(u, v)| u + v).collect())
    });
    let joint: Vec<Vec<f64>> = joint.into_iter().flatten().collect();
    let split: Vec<Vec<f64>> = split.into_iter().flatten().collect();
    let wanted = replicas / 2;
    if joint.len() < wanted || split.len() < wanted {
        return Err(PassageError::InsufficientSamples { resolved: joint.len().min(split.len()), wanted: replicas });
    }
    let mut reports = Vec::with_capacity(d);
    for i in 0..d {
        let a: Vec<f64> = joint.iter().map(|t| t[i]).collect();
        let b: Vec<f64> = split.iter().map(|t| t[i]).collect();
        let ks = ks_two_sample(&a, &b).expect("nonempty samples");
        reports.push(TestReport::from_p_value(
            format!("additivity_T{}", i + 1),
            ks.statistic,
            ks.p_value,
            config.threshold,
            seed,
            replicas,
        ));
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::continuous::paths::JumpStream;

    fn stream(times: &[f64], jumps: &[&[i64]]) -> JumpStream {
        JumpStream {
            times: times.to_vec(),
            jumps: jumps.iter().map(|j| j.to_vec()).collect(),
            horizon: 10.0,
            stop: None,
        }
    }

    #[test]
    fn zero_start_passes_immediately() {
        let p = JumpPathSet { d: 1, rates: None, streams: vec![stream(&[0.5], &[&[-1]])] };
        let fp = first_passage(&p, &[0]).unwrap();
        assert_eq!(fp.t, vec![Some(0.0)]);
        assert_eq!(fp.s, vec![Coord::Resolved(0)]);
    }

    #[test]
    fn pure_death_passes_at_first_jump() {
        let p = JumpPathSet { d: 1, rates: None, streams: vec![stream(&[0.5, 0.9], &[&[-1], &[-1]])] };
        let fp = first_passage(&p, &[1]).unwrap();
        assert_eq!(fp.t, vec![Some(0.5)]);
        let stopped = stopped_at(&p, &fp).unwrap();
        assert_eq!(stopped.streams[0].times, vec![0.5]);
        assert_eq!(stopped.streams[0].stop, Some(0.5));
    }

    #[test]
    fn unresolved_coupling_demotes() {
        // stream 1 never reaches -1 but feeds type 2; type 2 would resolve on its own data
        let p = JumpPathSet {
            d: 2,
            rates: None,
            streams: vec![stream(&[0.1], &[&[0, 1]]), stream(&[0.2, 0.3], &[&[0, -1], &[0, -1]])],
        };
        let fp = first_passage(&p, &[1, 1]).unwrap();
        assert_eq!(fp.t, vec![None, None]);
        // no coupling: type 2 stays resolved
        let p = JumpPathSet {
            d: 2,
            rates: None,
            streams: vec![stream(&[0.1], &[&[1, 0]]), stream(&[0.2, 0.3], &[&[0, -1], &[0, -1]])],
        };
        let fp = first_passage(&p, &[1, 1]).unwrap();
        assert_eq!(fp.t, vec![None, Some(0.2)]);
    }

    #[test]
    fn passage_identity_on_sampled_paths() {
        let nu = ProgenyDistribution::new(vec![
            crate::distributions::Pmf::from_pairs(2, [(vec![0, 0], 0.5), (vec![0, 1], 0.3), (vec![2, 0], 0.2)]),
            crate::distributions::Pmf::from_pairs(2, [(vec![0, 0], 0.6), (vec![1, 0], 0.25), (vec![0, 2], 0.15)]),
        ])
        .unwrap();
        for replica in 0..100 {
            let (stopped, fp) = sample_first_passage(&nu, &[1.0, 2.0], &[2, 1], 1e4, 9, replica).unwrap();
            let k = stopped.terminal_matrix();
            assert_eq!(k, fp.terminal);
            for j in 0..2 {
                let col: i64 = (0..2).map(|i| k[i][j]).sum();
                assert_eq!(col, -[2, 1][j]);
                for i in 0..2 {
                    if i != j {
                        assert!(k[i][j] >= 0);
                    }
                }
            }
        }
    }
}
