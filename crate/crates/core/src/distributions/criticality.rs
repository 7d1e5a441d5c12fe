use serde::Serialize;

use super::{DistributionError, ProgenyDistribution};

const POWER_TOLERANCE: f64 = 1e-12;
const POWER_MAX_ITERATIONS: usize = 100_000;
const CLASS_TOLERANCE: f64 = 1e-9;
const EXTINCTION_TOLERANCE: f64 = 1e-12;
const EXTINCTION_MAX_ITERATIONS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Criticality {
    Subcritical,
    Critical,
    Supercritical,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalityReport {
    pub mean_matrix: Vec<Vec<f64>>,
    pub perron_root: f64,
    pub class: Criticality,
    pub irreducible: bool,
}

/// Mean matrix, Perron root and irreducibility of `ν`.
pub fn criticality(nu: &ProgenyDistribution) -> Result<CriticalityReport, DistributionError> {
    let m = nu.mean_matrix();
    let perron_root = match power_iteration(&m) {
        Ok(rho) => rho,
        Err(err) if m.len() <= 3 => largest_real_root(&m).ok_or(err)?,
        Err(err) => return Err(err),
    };
    let class = if (perron_root - 1.0).abs() <= CLASS_TOLERANCE {
        Criticality::Critical
    } else if perron_root < 1.0 {
        Criticality::Subcritical
    } else {
        Criticality::Supercritical
    };
    Ok(CriticalityReport { irreducible: is_irreducible(&m), mean_matrix: m, perron_root, class })
}

/// Strong connectivity of the graph `i -> j` iff `m[i][j] > 0`.
pub fn is_irreducible(m: &[Vec<f64>]) -> bool {
    let d = m.len();
    if d == 1 {
        return true;
    }
    let mut reach: Vec<Vec<bool>> = m.iter().map(|row| row.iter().map(|&v| v > 0.0).collect()).collect();
    for k in 0..d {
        for i in 0..d {
            if reach[i][k] {
                for j in 0..d {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    reach.iter().all(|row| row.iter().all(|&r| r))
}

/// Power iteration on `M + I`, which has the same Perron vector and no
/// other eigenvalue of equal modulus, so periodic matrices converge too.
fn power_iteration(m: &[Vec<f64>]) -> Result<f64, DistributionError> {
    let d = m.len();
    let mut v = vec![1.0 / d as f64; d];
    let mut previous = f64::NAN;
    for _ in 0..POWER_MAX_ITERATIONS {
        let w: Vec<f64> = (0..d).map(|i| v[i] + (0..d).map(|j| m[i][j] * v[j]).sum::<f64>()).collect();
        let (mut lower, mut upper) = (f64::INFINITY, 0.0f64);
        for i in 0..d {
            if v[i] > 0.0 {
                let ratio = w[i] / v[i];
                lower = lower.min(ratio);
                upper = upper.max(ratio);
            }
        }
        let norm: f64 = w.iter().sum();
        // Collatz-Wielandt bounds certify the root; the norm ratio covers reducible M
        if upper - lower <= POWER_TOLERANCE * upper || (norm - previous).abs() <= POWER_TOLERANCE * 1e-2 * norm {
            return Ok((norm - 1.0).max(0.0));
        }
        previous = norm;
        v = w.into_iter().map(|x| x / norm).collect();
    }
    Err(DistributionError::NoConvergence { iterations: POWER_MAX_ITERATIONS })
}

/// Largest real root of the characteristic polynomial for `d <= 3`.
fn largest_real_root(m: &[Vec<f64>]) -> Option<f64> {
    let d = m.len();
    let trace: f64 = (0..d).map(|i| m[i][i]).sum();
    let coeffs: Vec<f64> = match d {
        1 => vec![1.0, -m[0][0]],
        2 => vec![1.0, -trace, m[0][0] * m[1][1] - m[0][1] * m[1][0]],
        3 => {
            let minors = m[0][0] * m[1][1] - m[0][1] * m[1][0] + m[0][0] * m[2][2] - m[0][2] * m[2][0]
                + m[1][1] * m[2][2]
                - m[1][2] * m[2][1];
            let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
            vec![1.0, -trace, minors, -det]
        }
        _ => return None,
    };
    let poly = |x: f64| coeffs.iter().fold(0.0, |acc, c| acc * x + c);
    let slope = |x: f64| {
        let n = coeffs.len() - 1;
        coeffs[..n].iter().enumerate().fold(0.0, |acc, (p, c)| acc * x + (n - p) as f64 * c)
    };
    // right of the Perron root the polynomial is increasing and convex, so
    // Newton's method from an upper bound decreases monotonically onto it
    let mut x = m.iter().map(|row| row.iter().sum::<f64>()).fold(0.0, f64::max) + 1.0;
    for _ in 0..10_000 {
        let (p, dp) = (poly(x), slope(x));
        if p <= 0.0 || dp <= 0.0 {
            break;
        }
        let next = x - p / dp;
        if next >= x {
            break;
        }
        x = next;
    }
    Some(x.max(0.0))
}

/// Offspring generating functions `f_i(s) = Σ_k ν_i(k) Π_j s_j^{k_j}`.
pub fn generating_function(nu: &ProgenyDistribution, s: &[f64]) -> Vec<f64> {
    nu.laws()
        .iter()
        .map(|law| {
            law.iter()
                .map(|(k, p)| p * k.iter().zip(s).map(|(&kj, &sj)| sj.powi(kj as i32)).product::<f64>())
                .sum()
        })
        .collect()
}

/// Extinction probabilities `q_i` from a single type-`i` ancestor.
///
/// Iterates `q <- f(q)` from zero. In the irreducible non-singular regime
/// with `ρ <= 1` the answer is all ones and is returned directly, since the
/// iteration converges only sublinearly at criticality.
pub fn extinction_vector(nu: &ProgenyDistribution) -> Vec<f64> {
    let d = nu.d();
    if let Ok(report) = criticality(nu) {
        let singular = nu.laws().iter().all(|law| law.iter().all(|(k, _)| k.iter().sum::<i64>() == 1));
        if report.irreducible && !singular && report.class != Criticality::Supercritical {
            return vec![1.0; d];
        }
    }
    let mut q = vec![0.0; d];
    for _ in 0..EXTINCTION_MAX_ITERATIONS {
        let next: Vec<f64> = generating_function(nu, &q).into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
        let change = next.iter().zip(&q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        q = next;
        if change <= EXTINCTION_TOLERANCE * 1e-3 {
            break;
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::Pmf;

    fn nu(laws: Vec<Vec<(Vec<i64>, f64)>>) -> ProgenyDistribution {
        let d = laws.len();
        ProgenyDistribution::new(laws.into_iter().map(|l| Pmf::from_pairs(d, l)).collect()).unwrap()
    }

    #[test]
    fn periodic_perron_example() {
        let n = nu(vec![vec![(vec![0, 2], 1.0)], vec![(vec![2, 0], 1.0)]]);
        let r = criticality(&n).unwrap();
        assert!((r.perron_root - 2.0).abs() < 1e-9);
        assert_eq!(r.class, Criticality::Supercritical);
        assert!(r.irreducible);
        assert_eq!(extinction_vector(&n), vec![0.0, 0.0]);
    }

    #[test]
    fn critical_binary_split() {
        let n = nu(vec![vec![(vec![0], 0.5), (vec![2], 0.5)]]);
        let r = criticality(&n).unwrap();
        assert!((r.perron_root - 1.0).abs() < 1e-12);
        assert_eq!(r.class, Criticality::Critical);
        assert_eq!(extinction_vector(&n), vec![1.0]);
    }

    #[test]
    fn zero_mean_matrix() {
        let n = nu(vec![vec![(vec![0, 0], 1.0)], vec![(vec![0, 0], 1.0)]]);
        let r = criticality(&n).unwrap();
        assert_eq!(r.perron_root, 0.0);
        assert_eq!(r.class, Criticality::Subcritical);
        assert!(!r.irreducible);
        assert_eq!(extinction_vector(&n), vec![1.0, 1.0]);
    }

    #[test]
    fn supercritical_extinction() {
        let n = nu(vec![vec![(vec![0], 0.25), (vec![2], 0.75)]]);
        let q = extinction_vector(&n);
        assert!((q[0] - 1.0 / 3.0).abs() < 1e-12);
        let f = generating_function(&n, &q);
        assert!((f[0] - q[0]).abs() < 1e-12);
    }

    #[test]
    fn reducible_jordan_block_uses_fallback() {
        // M = [[1, 1], [0, 1]]: power iteration converges only like 1/n
        let n = nu(vec![
            vec![(vec![0, 0], 0.5), (vec![2, 2], 0.5)],
            vec![(vec![0, 0], 0.5), (vec![0, 2], 0.5)],
        ]);
        let r = criticality(&n).unwrap();
        assert!((r.perron_root - 1.0).abs() < 1e-6, "{}", r.perron_root);
        assert!(!r.irreducible);
    }

    #[test]
    fn characteristic_polynomial_roots() {
        let m = vec![vec![0.0, 2.0], vec![2.0, 0.0]];
        assert!((largest_real_root(&m).unwrap() - 2.0).abs() < 1e-12);
        let m = vec![vec![0.5, 0.2, 0.0], vec![0.1, 0.3, 0.4], vec![0.0, 0.6, 0.2]];
        let rho = largest_real_root(&m).unwrap();
        assert!((power_iteration(&m).unwrap() - rho).abs() < 1e-10);
    }
}
