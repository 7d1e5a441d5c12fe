//! Galton-Watson forests: direct sampling, the random-walk construction,
//! and the exact joint law of the coding walks and the population sizes.

mod ballot;
pub mod enumerate;

pub use ballot::{admissible_matrices, bareiss_determinant, joint_law_pmf, BallotLaw};

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use serde::Serialize;
use thiserror::Error;

use crate::coding::{decode, smallest_solution, CodingError, CodingSequence, SystemSolution};
use crate::distributions::{Lattice, ProgenyDistribution};
use crate::forest::TypedForest;
use crate::stats::{replica_rng, SimRng};

/// Alias tables for drawing offspring vectors of each type in O(1).
#[derive(Debug, Clone)]
pub struct OffspringSampler {
    support: Vec<Vec<Lattice>>,
    alias: Vec<WeightedAliasIndex<f64>>,
}

impl OffspringSampler {
    pub fn new(nu: &ProgenyDistribution) -> Self {
        let mut support = Vec::with_capacity(nu.d());
        let mut alias = Vec::with_capacity(nu.d());
        for law in nu.laws() {
            let (keys, weights): (Vec<Lattice>, Vec<f64>) = law.iter().map(|(k, w)| (k.clone(), *w)).unzip();
            alias.push(WeightedAliasIndex::new(weights).expect("validated progeny law"));
            support.push(keys);
        }
        OffspringSampler { support, alias }
    }

    pub fn d(&self) -> usize {
        self.support.len()
    }

    /// Offspring vector of a type-`ty` individual.
    pub fn sample<R: Rng + ?Sized>(&self, ty: usize, rng: &mut R) -> &Lattice {
        &self.support[ty][self.alias[ty].sample(rng)]
    }

    /// Walk increment `p - e_ty`.
    pub fn sample_increment<R: Rng + ?Sized>(&self, ty: usize, rng: &mut R) -> Lattice {
        let mut inc = self.sample(ty, rng).clone();
        inc[ty] -= 1;
        inc
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SampleCaps {
    pub max_vertices: usize,
    pub max_generation: usize,
}

impl Default for SampleCaps {
    fn default() -> Self {
        SampleCaps { max_vertices: 1_000_000, max_generation: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledForest {
    pub forest: TypedForest,
    /// Some vertex would have had children beyond a cap; its children were dropped.
    pub truncated: bool,
}

/// Branching forest with `roots[i]` type-`i` ancestors, expanded
/// breadth-first so that vertices come out in canonical order.
pub fn sample_forest<R: Rng + ?Sized>(
    sampler: &OffspringSampler,
    roots: &[usize],
    caps: SampleCaps,
    rng: &mut R,
) -> SampledForest {
    let d = sampler.d();
    let mut records: Vec<(usize, Option<usize>)> = Vec::new();
    let mut generation: Vec<usize> = Vec::new();
    for (ty, &r) in roots.iter().enumerate() {
        records.extend(std::iter::repeat_n((ty, None), r));
        generation.extend(std::iter::repeat_n(0, r));
    }
    let mut truncated = false;
    let mut head = 0;
    while head < records.len() {
        let ty = records[head].0;
        let offspring = sampler.sample(ty, rng);
        let born: usize = offspring.iter().map(|&c| c as usize).sum();
        if born > 0 {
            if generation[head] >= caps.max_generation || records.len() + born > caps.max_vertices {
                truncated = true;
                break;
            }
            for j in 0..d {
                records.extend(std::iter::repeat_n((j, Some(head)), offspring[j] as usize));
                generation.extend(std::iter::repeat_n(generation[head] + 1, offspring[j] as usize));
            }
        }
        head += 1;
    }
    SampledForest { forest: TypedForest::from_records(d, &records), truncated }
}

/// [`sample_forest`] driven by the generator for `(seed, replica)`.
pub fn sample_forest_seeded(
    nu: &ProgenyDistribution,
    roots: &[usize],
    caps: SampleCaps,
    seed: u64,
    replica: u64,
) -> SampledForest {
    sample_forest(&OffspringSampler::new(nu), roots, caps, &mut replica_rng(seed, replica, 0))
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WalkError {
    #[error("smallest solution not resolved within the sampled horizon: {0}")]
    Unresolved(SystemSolution),
    #[error(transparent)]
    Coding(#[from] CodingError),
}

/// Independent increment streams with step law `ν̃_i`, one generator per
/// stream so that extending a stream never changes its prefix.
#[derive(Debug, Clone)]
pub struct WalkSet {
    sampler: OffspringSampler,
    rngs: Vec<SimRng>,
    streams: Vec<Vec<Lattice>>,
}

impl WalkSet {
    pub fn new(nu: &ProgenyDistribution, seed: u64, replica: u64) -> Self {
        let d = nu.d();
        WalkSet {
            sampler: OffspringSampler::new(nu),
            rngs: (0..d).map(|i| replica_rng(seed, replica, 1 + i as u64)).collect(),
            streams: vec![Vec::new(); d],
        }
    }

    /// Extends stream `i` to at least `lengths[i]` increments.
    pub fn extend_to(&mut self, lengths: &[usize]) {
        for (i, &n) in lengths.iter().enumerate() {
            while self.streams[i].len() < n {
                let inc = self.sampler.sample_increment(i, &mut self.rngs[i]);
                self.streams[i].push(inc);
            }
        }
    }

    pub fn horizon(&self) -> Vec<usize> {
        self.streams.iter().map(Vec::len).collect()
    }

    pub fn coding(&self) -> CodingSequence {
        CodingSequence::new(self.streams.len(), self.streams.clone()).expect("offspring increments are skip-free")
    }
}

/// Truncates the walks at the smallest solution of `(r, x)` and decodes.
pub fn walks_to_forest(x: &CodingSequence, roots: &[usize]) -> Result<TypedForest, WalkError> {
    let solution = smallest_solution(roots, x);
    let lengths = solution.resolved_values().ok_or_else(|| WalkError::Unresolved(solution.clone()))?;
    Ok(decode(&x.truncated(&lengths), roots)?)
}

/// Forest built from walks, doubling the horizon until the smallest
/// solution resolves or a stream would exceed `max_horizon`.
pub fn sample_forest_by_walks(
    nu: &ProgenyDistribution,
    roots: &[usize],
    max_horizon: usize,
    seed: u64,
    replica: u64,
) -> Result<TypedForest, WalkError> {
    let mut walks = WalkSet::new(nu, seed, replica);
    let mut horizon = 16usize;
    loop {
        walks.extend_to(&vec![horizon; nu.d()]);
        match walks_to_forest(&walks.coding(), roots) {
            Err(WalkError::Unresolved(_)) if horizon < max_horizon => horizon = (horizon * 2).min(max_horizon),
            other => return other,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coding::encode;
    use crate::distributions::Pmf;

    fn nu(laws: Vec<Vec<(Vec<i64>, f64)>>) -> ProgenyDistribution {
        let d = laws.len();
        ProgenyDistribution::new(laws.into_iter().map(|l| Pmf::from_pairs(d, l)).collect()).unwrap()
    }

    #[test]
    fn sterile_law_gives_roots() {
        let n = nu(vec![vec![(vec![0, 0], 1.0)], vec![(vec![0, 0], 1.0)]]);
        let s = sample_forest_seeded(&n, &[2, 1], SampleCaps::default(), 3, 0);
        assert_eq!(s.forest, TypedForest::isolated_roots(&[2, 1]));
        assert!(!s.truncated);
    }

    #[test]
    fn seeded_sampling_is_deterministic() {
        let n = nu(vec![vec![(vec![0], 0.5), (vec![2], 0.5)]]);
        let a = sample_forest_seeded(&n, &[3], SampleCaps::default(), 11, 4);
        let b = sample_forest_seeded(&n, &[3], SampleCaps::default(), 11, 4);
        assert_eq!(a, b);
        assert!(a.forest.validate().is_valid());
    }

    #[test]
    fn caps_truncate_supercritical_growth() {
        let n = nu(vec![vec![(vec![3], 1.0)]]);
        let s = sample_forest_seeded(&n, &[1], SampleCaps { max_vertices: 1000, max_generation: 4 }, 1, 0);
        assert!(s.truncated);
        assert_eq!(s.forest.len(), 1 + 3 + 9 + 27 + 81);
        assert!(s.forest.validate().is_valid());
        let s = sample_forest_seeded(&n, &[1], SampleCaps { max_vertices: 20, max_generation: 100 }, 1, 0);
        assert!(s.truncated);
        assert!(s.forest.len() <= 20);
    }

    #[test]
    fn encoded_walks_decode_back() {
        let n = nu(vec![
            vec![(vec![0, 0], 0.5), (vec![0, 1], 0.3), (vec![2, 0], 0.2)],
            vec![(vec![0, 0], 0.6), (vec![1, 0], 0.25), (vec![0, 2], 0.15)],
        ]);
        for replica in 0..50 {
            let f = sample_forest_seeded(&n, &[1, 1], SampleCaps::default(), 5, replica).forest;
            assert_eq!(walks_to_forest(&encode(&f).unwrap(), &[1, 1]).unwrap(), f);
        }
    }

    #[test]
    fn walk_extension_keeps_prefix() {
        let n = nu(vec![vec![(vec![0], 0.5), (vec![2], 0.5)]]);
        let mut w = WalkSet::new(&n, 2, 0);
        w.extend_to(&[10]);
        let short = w.coding();
        w.extend_to(&[40]);
        assert_eq!(&w.coding().streams()[0][..10], &short.streams()[0][..]);
        let f = sample_forest_by_walks(&n, &[1], 1 << 20, 2, 0).unwrap();
        assert!(f.validate().is_valid());
    }
}
