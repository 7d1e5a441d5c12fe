//! Breadth-first coding of multitype forests by integer sequences.
//!
//! The `k`-th type-`i` vertex in breadth-first order contributes the
//! increment `p(u) - e_i` to stream `i`, where `p(u)` is its offspring
//! vector. Decoding rebuilds the forest generation by generation from the
//! roots, consuming stream `i` once per type-`i` vertex.

mod lamperti;
mod solver;

pub use lamperti::{lamperti_discrete, LampertiError};
pub use solver::{fixed_point_iterates, smallest_solution, Coord, SystemSolution};

use thiserror::Error;

use crate::forest::{TypedForest, ValidationReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodingError {
    #[error("invalid forest: {0}")]
    InvalidForest(ValidationReport),
    #[error("stream {stream} step {step}: {reason}")]
    InvalidIncrement { stream: usize, step: usize, reason: &'static str },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("root vector must have a positive entry")]
    NoRoots,
    #[error("sequence lengths {lengths:?} are not the smallest solution ({solution})")]
    NotSmallestSolution { lengths: Vec<usize>, solution: SystemSolution },
    #[error("stream {stream} exhausted while decoding")]
    StreamExhausted { stream: usize },
}

/// `d` increment streams; `streams[i][k]` is the `(k+1)`-th increment of
/// stream `i`, a vector in `Z^d` with nonnegative off-diagonal entries and
/// diagonal entry at least `-1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodingSequence {
    d: usize,
    streams: Vec<Vec<Vec<i64>>>,
}

impl CodingSequence {
    pub fn new(d: usize, streams: Vec<Vec<Vec<i64>>>) -> Result<Self, CodingError> {
        if streams.len() != d {
            return Err(CodingError::Dimension { expected: d, got: streams.len() });
        }
        for (i, stream) in streams.iter().enumerate() {
            for (step, inc) in stream.iter().enumerate() {
                if inc.len() != d {
                    return Err(CodingError::Dimension { expected: d, got: inc.len() });
                }
                for (j, &v) in inc.iter().enumerate() {
                    if j == i && v < -1 {
                        return Err(CodingError::InvalidIncrement {
                            stream: i,
                            step,
                            reason: "diagonal increment below -1",
                        });
                    }
                    if j != i && v < 0 {
                        return Err(CodingError::InvalidIncrement {
                            stream: i,
                            step,
                            reason: "negative off-diagonal increment",
                        });
                    }
                }
            }
        }
        Ok(CodingSequence { d, streams })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn streams(&self) -> &[Vec<Vec<i64>>] {
        &self.streams
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.streams.iter().map(Vec::len).collect()
    }

    /// Keeps the first `lengths[i]` increments of each stream.
    pub fn truncated(&self, lengths: &[usize]) -> CodingSequence {
        let streams = self
            .streams
            .iter()
            .zip(lengths)
            .map(|(s, &n)| s[..n.min(s.len())].to_vec())
            .collect();
        CodingSequence { d: self.d, streams }
    }

    /// Prefix sums `x^{(i)}(k)` for `k = 0..=n_i`.
    pub fn cumulative(&self) -> Vec<Vec<Vec<i64>>> {
        self.streams
            .iter()
            .map(|stream| {
                let mut acc = vec![0i64; self.d];
                let mut out = Vec::with_capacity(stream.len() + 1);
                out.push(acc.clone());
                for inc in stream {
                    for (a, v) in acc.iter_mut().zip(inc) {
                        *a += v;
                    }
                    out.push(acc.clone());
                }
                out
            })
            .collect()
    }
}

/// Codes a valid finite forest by its breadth-first increment streams.
pub fn encode(forest: &TypedForest) -> Result<CodingSequence, CodingError> {
    let report = forest.validate();
    if !report.is_valid() {
        return Err(CodingError::InvalidForest(report));
    }
    let d = forest.d();
    let mut streams = vec![Vec::new(); d];
    for v in forest.vertices() {
        let mut inc: Vec<i64> = v.offspring.iter().map(|&c| c as i64).collect();
        inc[v.ty] -= 1;
        streams[v.ty].push(inc);
    }
    Ok(CodingSequence { d, streams })
}

/// Inverse of [`encode`] on sequences whose lengths form the smallest
/// solution of the system `(r, x)`.
pub fn decode(x: &CodingSequence, roots: &[usize]) -> Result<TypedForest, CodingError> {
    let d = x.d();
    if roots.len() != d {
        return Err(CodingError::Dimension { expected: d, got: roots.len() });
    }
    if roots.iter().all(|&r| r == 0) {
        return Err(CodingError::NoRoots);
    }
    let lengths = x.lengths();
    let solution = smallest_solution(roots, x);
    if solution.resolved_values().as_deref() != Some(&lengths[..]) {
        return Err(CodingError::NotSmallestSolution { lengths, solution });
    }
    let mut records: Vec<(usize, Option<usize>)> = Vec::new();
    for (ty, &r) in roots.iter().enumerate() {
        records.extend(std::iter::repeat_n((ty, None), r));
    }
    let mut used = vec![0usize; d];
    let mut head = 0;
    while head < records.len() {
        let ty = records[head].0;
        let inc = x.streams[ty].get(used[ty]).ok_or(CodingError::StreamExhausted { stream: ty })?;
        used[ty] += 1;
        for (j, &v) in inc.iter().enumerate() {
            let count = if j == ty { v + 1 } else { v };
            records.extend(std::iter::repeat_n((j, Some(head)), count as usize));
        }
        head += 1;
    }
    if used != lengths {
        return Err(CodingError::NotSmallestSolution { lengths, solution });
    }
    Ok(TypedForest::from_records(d, &records))
}
