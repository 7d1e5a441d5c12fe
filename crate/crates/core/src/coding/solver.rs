//! Smallest solution of the system `r_j + sum_i x^{i,j}(s_i) = 0`.
//!
//! Streams are finite; past its last increment stream `i` is frozen at
//! `x^{(i)}(n_i)`. A coordinate whose hitting level is never reached by the
//! frozen stream is reported as [`Coord::Unresolved`] with the available
//! horizon `n_i`: the data cannot tell whether it would be reached later.

use std::fmt;

use serde::Serialize;

use super::CodingSequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Coord {
    Resolved(usize),
    Unresolved { horizon: usize },
}

impl Coord {
    pub fn value(self) -> Option<usize> {
        match self {
            Coord::Resolved(v) => Some(v),
            Coord::Unresolved { .. } => None,
        }
    }

    pub fn is_resolved(self) -> bool {
        matches!(self, Coord::Resolved(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SystemSolution {
    pub coords: Vec<Coord>,
}

impl SystemSolution {
    pub fn all_resolved(&self) -> bool {
        self.coords.iter().all(|c| c.is_resolved())
    }

    /// The solution as plain counts, when every coordinate is resolved.
    pub fn resolved_values(&self) -> Option<Vec<usize>> {
        self.coords.iter().map(|c| c.value()).collect()
    }
}

impl fmt::Display for SystemSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .coords
            .iter()
            .map(|c| match c {
                Coord::Resolved(v) => v.to_string(),
                Coord::Unresolved { horizon } => format!("unresolved(>{horizon})"),
            })
            .collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// Cumulative streams plus first-hitting tables of the diagonal walks.
struct System {
    cumulative: Vec<Vec<Vec<i64>>>,
    /// `first_hit[i][v]`: first `k` with `x^{i,i}(k) = -v`.
    first_hit: Vec<Vec<usize>>,
}

impl System {
    fn new(x: &CodingSequence) -> Self {
        let cumulative = x.cumulative();
        let first_hit = cumulative
            .iter()
            .enumerate()
            .map(|(i, path)| {
                let mut table = vec![0usize];
                for (k, value) in path.iter().enumerate() {
                    // skip-free downwards: a new minimum is exactly one below the last
                    if -value[i] == table.len() as i64 {
                        table.push(k);
                    }
                }
                table
            })
            .collect();
        System { cumulative, first_hit }
    }

    fn horizon(&self, i: usize) -> usize {
        self.cumulative[i].len() - 1
    }

    fn value(&self, i: usize, at: Coord, j: usize) -> i64 {
        let k = at.value().unwrap_or(self.horizon(i));
        self.cumulative[i][k][j]
    }

    fn hit(&self, i: usize, level: i64) -> Coord {
        match self.first_hit[i].get(level as usize) {
            Some(&k) => Coord::Resolved(k),
            None => Coord::Unresolved { horizon: self.horizon(i) },
        }
    }

    fn sweep(&self, roots: &[usize], k: &[Coord]) -> Vec<Coord> {
        let d = roots.len();
        (0..d)
            .map(|j| {
                let level = roots[j] as i64
                    + (0..d).filter(|&i| i != j).map(|i| self.value(i, k[i], j)).sum::<i64>();
                self.hit(j, level)
            })
            .collect()
    }
}

/// The successive iterates `k^{(0)} = 0, k^{(1)}, ...` of the fixed-point
/// scheme, ending with the limit (listed once).
pub fn fixed_point_iterates(roots: &[usize], x: &CodingSequence) -> Vec<Vec<Coord>> {
    let system = System::new(x);
    let d = x.d();
    let mut trace = vec![vec![Coord::Resolved(0); d]];
    loop {
        let next = system.sweep(roots, trace.last().unwrap());
        if &next == trace.last().unwrap() {
            return trace;
        }
        trace.push(next);
    }
}

/// Smallest solution of `(r, x)`. With `r = 0` this is `s = 0`.
pub fn smallest_solution(roots: &[usize], x: &CodingSequence) -> SystemSolution {
    assert_eq!(roots.len(), x.d(), "root vector length must equal the number of types");
    let mut trace = fixed_point_iterates(roots, x);
    SystemSolution { coords: trace.pop().unwrap() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coding::encode;
    use crate::forest::TypedForest;

    #[test]
    fn zero_roots_give_zero() {
        let x = CodingSequence::new(2, vec![vec![vec![0, 1]], vec![vec![0, -1]]]).unwrap();
        let s = smallest_solution(&[0, 0], &x);
        assert_eq!(s.coords, vec![Coord::Resolved(0), Coord::Resolved(0)]);
    }

    #[test]
    fn four_vertex_system() {
        let f = TypedForest::new(2, &[(0, None), (1, None), (0, Some(0)), (1, Some(0))]).unwrap();
        let x = encode(&f).unwrap();
        let s = smallest_solution(&[1, 1], &x);
        assert_eq!(s.resolved_values(), Some(vec![2, 2]));
        // iterates: (0,0) -> (2,1) -> (2,2)
        let trace = fixed_point_iterates(&[1, 1], &x);
        let values: Vec<Vec<usize>> =
            trace.iter().map(|k| k.iter().map(|c| c.value().unwrap()).collect()).collect();
        assert_eq!(values, vec![vec![0, 0], vec![2, 1], vec![2, 2]]);
    }

    #[test]
    fn never_hitting_is_unresolved() {
        let x = CodingSequence::new(2, vec![vec![vec![0, 1]; 4], vec![]]).unwrap();
        let s = smallest_solution(&[1, 0], &x);
        assert_eq!(
            s.coords,
            vec![Coord::Unresolved { horizon: 4 }, Coord::Unresolved { horizon: 0 }]
        );
        assert!(!s.all_resolved());
        assert_eq!(s.to_string(), "(unresolved(>4), unresolved(>0))");
    }

    #[test]
    fn hit_at_last_step_is_resolved() {
        let x = CodingSequence::new(1, vec![vec![vec![1], vec![-1], vec![-1], vec![-1]]]).unwrap();
        // path 0, 1, 0, -1, -2
        assert_eq!(smallest_solution(&[1], &x).coords, vec![Coord::Resolved(3)]);
        assert_eq!(smallest_solution(&[2], &x).coords, vec![Coord::Resolved(4)]);
        assert_eq!(smallest_solution(&[3], &x).coords, vec![Coord::Unresolved { horizon: 4 }]);
    }
}
