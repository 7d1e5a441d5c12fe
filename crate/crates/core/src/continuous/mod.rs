//! Continuous-time branching: compound Poisson paths, their first passage,
//! the Lamperti time change and its inversion into forests.

mod density;
mod passage;
mod paths;
mod solve;

pub use density::{first_passage_density, PassageLaw};
pub use passage::{
    additivity_check, first_passage, sample_first_passage, stopped_at, FirstPassage, PassageConfig, PassageError,
};
pub use paths::{sample_paths, JumpPathSet, JumpStream, PathSampler};
pub use solve::{extract_paths, lamperti_solve, reconstruct_forest, CompensatedSum, SolveError};

use crate::discrete::{sample_forest, OffspringSampler, SampleCaps};
use crate::distributions::{DistributionError, ProgenyDistribution};
use crate::forest::EdgeLengthForest;
use crate::stats::replica_rng;

#[derive(Debug, Clone, PartialEq)]
pub struct SampledEdgeForest {
    pub forest: EdgeLengthForest,
    pub truncated: bool,
}

/// Discrete skeleton from `ν` with i.i.d. `Exp(λ_type)` lifetimes, drawn on
/// separate generators for `(seed, replica)`.
pub fn sample_edge_length_forest(
    nu: &ProgenyDistribution,
    rates: &[f64],
    x: &[usize],
    caps: SampleCaps,
    seed: u64,
    replica: u64,
) -> Result<SampledEdgeForest, DistributionError> {
    let d = nu.d();
    if rates.len() != d || x.len() != d {
        return Err(DistributionError::Dimension { expected: d, got: rates.len().min(x.len()) });
    }
    if let Some(i) = rates.iter().position(|&r| !(r > 0.0 && r.is_finite())) {
        return Err(DistributionError::Invalid { law: i, reason: "lifetime rate must be positive".into() });
    }
    let sampled = sample_forest(&OffspringSampler::new(nu), x, caps, &mut replica_rng(seed, replica, 0));
    let mut rng = replica_rng(seed, replica, 50);
    let lifetimes: Vec<f64> = sampled
        .forest
        .vertices()
        .iter()
        .map(|v| loop {
            // Exp draws of exactly zero are possible in floating point
            let l = paths::exponential(rates[v.ty], &mut rng);
            if l > 0.0 {
                break l;
            }
        })
        .collect();
    let forest = EdgeLengthForest::new(sampled.forest, lifetimes).expect("sampled skeleton is canonical");
    Ok(SampledEdgeForest { forest, truncated: sampled.truncated })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::Pmf;
    use crate::forest::alive_trajectory;

    fn two_type() -> ProgenyDistribution {
        ProgenyDistribution::new(vec![
            Pmf::from_pairs(2, [(vec![0, 0], 0.5), (vec![0, 1], 0.3), (vec![2, 0], 0.2)]),
            Pmf::from_pairs(2, [(vec![0, 0], 0.6), (vec![1, 0], 0.25), (vec![0, 2], 0.15)]),
        ])
        .unwrap()
    }

    #[test]
    fn sterile_roots_only() {
        let nu = ProgenyDistribution::new(vec![Pmf::from_pairs(1, [(vec![0], 1.0)])]).unwrap();
        let s = sample_edge_length_forest(&nu, &[3.0], &[4], SampleCaps::default(), 1, 0).unwrap();
        assert_eq!(s.forest.skeleton().len(), 4);
    }

    #[test]
    fn round_trips_on_sampled_forests() {
        let nu = two_type();
        for replica in 0..50 {
            let f = sample_edge_length_forest(&nu, &[1.0, 2.0], &[2, 1], SampleCaps::default(), 4, replica)
                .unwrap()
                .forest;
            let p = extract_paths(&f);
            let path = lamperti_solve(&p, &[2, 1]).unwrap();
            path.matches(&alive_trajectory(&f), 1e-9).unwrap();
            let g = reconstruct_forest(&p, &[2, 1], &mut replica_rng(4, replica, 7)).unwrap();
            extract_paths(&g).matches(&p, 1e-9).unwrap();
            alive_trajectory(&g).matches(&path, 1e-9).unwrap();
        }
    }

    #[test]
    fn stopped_paths_reconstruct() {
        let nu = two_type();
        for replica in 0..50 {
            let (p, _) = sample_first_passage(&nu, &[1.0, 2.0], &[1, 1], 1e4, 8, replica).unwrap();
            let g = reconstruct_forest(&p, &[1, 1], &mut replica_rng(8, replica, 7)).unwrap();
            extract_paths(&g).matches(&p, 1e-9).unwrap();
        }
    }
}
