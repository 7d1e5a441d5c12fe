use super::TypedForest;

/// Generation-indexed population chains of a finite forest.
///
/// `z[n][i]` is the number of type-`i` vertices at generation `n`, and
/// `zmat[n][i][j]` is the row-`i` bookkeeping chain: `r_i` on the diagonal at
/// `n = 0`, then each type-`i` vertex of generation `< n` adds its offspring
/// vector minus `e_i`. Columns of `zmat[n]` sum to `z[n]`. The chains are
/// recorded up to and including the first all-zero generation.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GenerationChains {
    pub z: Vec<Vec<i64>>,
    pub zmat: Vec<Vec<Vec<i64>>>,
}

impl GenerationChains {
    pub fn generations(&self) -> usize {
        self.z.len()
    }

    /// Column sums of `zmat[n]`, which equal `z[n]` on consistent chains.
    pub fn column_sums(&self, n: usize) -> Vec<i64> {
        let d = self.zmat[n].len();
        (0..d).map(|j| (0..d).map(|i| self.zmat[n][i][j]).sum()).collect()
    }
}

/// Population sizes per generation and the `d x d` decomposition, read off
/// the forest by direct traversal.
pub fn generation_chains(forest: &TypedForest) -> GenerationChains {
    let d = forest.d();
    let gens = forest.generations();
    let height = gens.iter().copied().max();
    let levels = height.map_or(1, |h| h + 2);
    let mut z = vec![vec![0i64; d]; levels];
    // per-generation increments of the bookkeeping rows
    let mut delta = vec![vec![vec![0i64; d]; d]; levels];
    for (v, &g) in forest.vertices().iter().zip(&gens) {
        z[g][v.ty] += 1;
        for j in 0..d {
            delta[g][v.ty][j] += v.offspring[j] as i64;
        }
        delta[g][v.ty][v.ty] -= 1;
    }
    let mut zmat = Vec::with_capacity(levels);
    let mut current = vec![vec![0i64; d]; d];
    for (i, row) in current.iter_mut().enumerate() {
        row[i] = forest.roots()[i] as i64;
    }
    zmat.push(current.clone());
    for step in delta.iter().take(levels - 1) {
        for i in 0..d {
            for j in 0..d {
                current[i][j] += step[i][j];
            }
        }
        zmat.push(current.clone());
    }
    GenerationChains { z, zmat }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn root_with_two_children() {
        let f = TypedForest::new(1, &[(0, None), (0, Some(0)), (0, Some(0))]).unwrap();
        let c = generation_chains(&f);
        assert_eq!(c.z, vec![vec![1], vec![2], vec![0]]);
        assert_eq!(c.zmat, vec![vec![vec![1]], vec![vec![2]], vec![vec![0]]]);
    }

    #[test]
    fn four_vertex_example() {
        let f = TypedForest::new(2, &[(0, None), (1, None), (0, Some(0)), (1, Some(0))]).unwrap();
        let c = generation_chains(&f);
        assert_eq!(c.z, vec![vec![1, 1], vec![1, 1], vec![0, 0]]);
        for n in 0..c.generations() {
            assert_eq!(c.column_sums(n), c.z[n]);
        }
        assert_eq!(c.zmat[1], vec![vec![1, 1], vec![0, 0]]);
    }

    #[test]
    fn empty_forest() {
        let f = TypedForest::isolated_roots(&[0, 0]);
        let c = generation_chains(&f);
        assert_eq!(c.z, vec![vec![0, 0]]);
    }
}
