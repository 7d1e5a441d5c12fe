use crate::distributions::{Pmf, ProgenyDistribution, Weight, DEFAULT_SUPPORT_CAP};

/// Determinant of an integer matrix by fraction-free (Bareiss) elimination.
pub fn bareiss_determinant(matrix: &[Vec<i64>]) -> i128 {
    let n = matrix.len();
    if n == 0 {
        return 1;
    }
    let mut a: Vec<Vec<i128>> = matrix.iter().map(|row| row.iter().map(|&v| v as i128).collect()).collect();
    let mut sign = 1i128;
    let mut previous = 1i128;
    for k in 0..n - 1 {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&i| a[i][k] != 0) {
                Some(i) => {
                    a.swap(i, k);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / previous;
            }
        }
        previous = a[k][k];
    }
    sign * a[n - 1][n - 1]
}

/// Joint law of the terminal walk values `K` and the population sizes `n`,
/// with cached convolution powers of each `ν_i`.
#[derive(Debug, Clone)]
pub struct BallotLaw<W: Weight> {
    nu: ProgenyDistribution<W>,
    powers: Vec<Vec<Pmf<W>>>,
}

impl<W: Weight> BallotLaw<W> {
    pub fn new(nu: &ProgenyDistribution<W>) -> Self {
        let powers = nu.laws().iter().map(|law| vec![Pmf::dirac(vec![0; law.d()])]).collect();
        BallotLaw { nu: nu.clone(), powers }
    }

    fn power(&mut self, i: usize, n: usize) -> &Pmf<W> {
        while self.powers[i].len() <= n {
            let next = self.powers[i].last().unwrap().convolve(self.nu.law(i), DEFAULT_SUPPORT_CAP).expect("support cap");
            self.powers[i].push(next);
        }
        &self.powers[i][n]
    }

    /// `det(-K) / (n_1 ... n_d) · Π_i ν_i^{*n_i}(k_i + n_i e_i)`, or zero when
    /// `K` violates the admissibility constraints or some `n_i = 0`.
    pub fn pmf(&mut self, roots: &[usize], n: &[usize], k: &[Vec<i64>]) -> W {
        let d = self.nu.d();
        if roots.len() != d || n.len() != d || k.len() != d || k.iter().any(|row| row.len() != d) {
            return W::zero();
        }
        if !admissible(roots, n, k) {
            return W::zero();
        }
        let minus_k: Vec<Vec<i64>> = k.iter().map(|row| row.iter().map(|v| -v).collect()).collect();
        let det = bareiss_determinant(&minus_k);
        if det == 0 {
            return W::zero();
        }
        let denominator: i64 = n.iter().map(|&v| v as i64).product();
        let mut value = W::from_ratio(i64::try_from(det).expect("determinant fits in i64"), denominator);
        for i in 0..d {
            let mut total = k[i].clone();
            total[i] += n[i] as i64;
            let mass = self.power(i, n[i]).get(&total);
            if mass.is_zero() {
                return W::zero();
            }
            value = value * mass;
        }
        value
    }
}

fn admissible(roots: &[usize], n: &[usize], k: &[Vec<i64>]) -> bool {
    let d = roots.len();
    if n.iter().any(|&v| v == 0) {
        return false;
    }
    for j in 0..d {
        let mut inflow = roots[j] as i64;
        for i in 0..d {
            if i != j {
                if k[i][j] < 0 {
                    return false;
                }
                inflow += k[i][j];
            }
        }
        if -k[j][j] != inflow || (n[j] as i64) < -k[j][j] {
            return false;
        }
    }
    true
}

/// One-shot [`BallotLaw::pmf`].
pub fn joint_law_pmf<W: Weight>(nu: &ProgenyDistribution<W>, roots: &[usize], n: &[usize], k: &[Vec<i64>]) -> W {
    BallotLaw::new(nu).pmf(roots, n, k)
}

/// All matrices `K` satisfying the constraints for `(r, n)` whose
/// off-diagonal entries are reachable by `n_i` draws from `ν_i`.
pub fn admissible_matrices<W: Weight>(nu: &ProgenyDistribution<W>, roots: &[usize], n: &[usize]) -> Vec<Vec<Vec<i64>>> {
    let d = nu.d();
    let mut ranges = Vec::new();
    for i in 0..d {
        for j in 0..d {
            if i != j {
                let max_child = nu.law(i).iter().map(|(k, _)| k[j]).max().unwrap_or(0);
                ranges.push((i, j, max_child * n[i] as i64));
            }
        }
    }
    let mut out = Vec::new();
    let mut k = vec![vec![0i64; d]; d];
    fill(&ranges, 0, &mut k, roots, n, &mut out);
    out
}

fn fill(
    ranges: &[(usize, usize, i64)],
    at: usize,
    k: &mut Vec<Vec<i64>>,
    roots: &[usize],
    n: &[usize],
    out: &mut Vec<Vec<Vec<i64>>>,
) {
    if at == ranges.len() {
        let d = roots.len();
        for j in 0..d {
            k[j][j] = -(roots[j] as i64) - (0..d).filter(|&i| i != j).map(|i| k[i][j]).sum::<i64>();
        }
        if admissible(roots, n, k) {
            out.push(k.clone());
        }
        return;
    }
    let (i, j, max) = ranges[at];
    for v in 0..=max {
        k[i][j] = v;
        fill(ranges, at + 1, k, roots, n, out);
    }
    k[i][j] = 0;
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use num_traits::Zero;

    #[test]
    fn determinants() {
        assert_eq!(bareiss_determinant(&[vec![2]]), 2);
        assert_eq!(bareiss_determinant(&[vec![1, 2], vec![3, 4]]), -2);
        assert_eq!(bareiss_determinant(&[vec![0, 1], vec![1, 0]]), -1);
        assert_eq!(bareiss_determinant(&[vec![2, 0, 1], vec![1, 3, 2], vec![1, 1, 2]]), 6);
        assert_eq!(bareiss_determinant(&[vec![1, 2], vec![2, 4]]), 0);
    }

    #[test]
    fn sterile_single_type() {
        let nu = ProgenyDistribution::new(vec![Pmf::from_pairs(1, [(vec![0], BigRational::from_ratio(1, 1))])]).unwrap();
        assert_eq!(joint_law_pmf(&nu, &[2], &[2], &[vec![-2]]), BigRational::from_ratio(1, 1));
    }

    #[test]
    fn binary_trees_with_three_vertices() {
        let half = BigRational::from_ratio(1, 2);
        let nu = ProgenyDistribution::new(vec![Pmf::from_pairs(1, [(vec![0], half.clone()), (vec![2], half)])]).unwrap();
        assert_eq!(joint_law_pmf(&nu, &[1], &[3], &[vec![-1]]), BigRational::from_ratio(1, 8));
        assert!(joint_law_pmf(&nu, &[1], &[0], &[vec![-1]]).is_zero());
        assert!(joint_law_pmf(&nu, &[1], &[3], &[vec![-2]]).is_zero());
        assert_eq!(admissible_matrices(&nu, &[1], &[3]), vec![vec![vec![-1]]]);
    }
}
