use thiserror::Error;

use super::CodingSequence;
use crate::forest::GenerationChains;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LampertiError {
    #[error("stream {stream} exhausted at generation {generation} (needs index {needed}, has {available})")]
    StreamExhausted {
        generation: usize,
        stream: usize,
        needed: usize,
        available: usize,
        partial: GenerationChains,
    },
    #[error("negative population at generation {generation}")]
    NegativePopulation { generation: usize, partial: GenerationChains },
    #[error("root vector has length {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
}

/// Generation chains obtained by evaluating the coding streams at the
/// accumulated population sizes:
/// `zmat[n][i][j] = r_i 1{i=j} + x^{i,j}(z^{(i)}(0) + ... + z^{(i)}(n-1))`.
///
/// Runs until the first all-zero generation.
pub fn lamperti_discrete(x: &CodingSequence, roots: &[usize]) -> Result<GenerationChains, LampertiError> {
    let d = x.d();
    if roots.len() != d {
        return Err(LampertiError::Dimension { expected: d, got: roots.len() });
    }
    let cumulative = x.cumulative();
    let r: Vec<i64> = roots.iter().map(|&v| v as i64).collect();
    let mut chains = GenerationChains::default();
    let mut zmat0 = vec![vec![0i64; d]; d];
    for i in 0..d {
        zmat0[i][i] = r[i];
    }
    chains.z.push(r.clone());
    chains.zmat.push(zmat0);
    let mut consumed = vec![0usize; d];
    let mut generation = 0;
    while chains.z[generation].iter().any(|&v| v != 0) {
        for i in 0..d {
            consumed[i] += chains.z[generation][i] as usize;
        }
        generation += 1;
        let mut zmat = vec![vec![0i64; d]; d];
        for i in 0..d {
            let at = consumed[i];
            let Some(value) = cumulative[i].get(at) else {
                return Err(LampertiError::StreamExhausted {
                    generation,
                    stream: i,
                    needed: at,
                    available: cumulative[i].len() - 1,
                    partial: chains,
                });
            };
            zmat[i].copy_from_slice(value);
            zmat[i][i] += r[i];
        }
        let z: Vec<i64> = (0..d).map(|j| (0..d).map(|i| zmat[i][j]).sum()).collect();
        chains.z.push(z);
        chains.zmat.push(zmat);
        if chains.z[generation].iter().any(|&v| v < 0) {
            return Err(LampertiError::NegativePopulation { generation, partial: chains });
        }
    }
    Ok(chains)
}
