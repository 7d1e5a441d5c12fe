use crate::discrete::bareiss_determinant;
use crate::distributions::{shift_and_jump, CompoundPoissonPmf, DistributionError, ProgenyDistribution};

/// Joint law of the first-passage times `T_x` and the terminal matrix
/// `X^{i,j}(T^{(i)})`:
/// `det(-K) / (t_1 ... t_d) · Π_i P(X^{(i)}_{t_i} = k_i)`.
#[derive(Debug, Clone)]
pub struct PassageLaw {
    x: Vec<usize>,
    rates: Vec<f64>,
    streams: Vec<CompoundPoissonPmf>,
}

impl PassageLaw {
    /// `rates[i]` is the lifetime rate `λ_i`; streams jump at the visible rate.
    pub fn new(nu: &ProgenyDistribution, rates: &[f64], x: &[usize]) -> Result<Self, DistributionError> {
        let d = nu.d();
        if rates.len() != d || x.len() != d {
            return Err(DistributionError::Dimension { expected: d, got: rates.len().min(x.len()) });
        }
        let (_, mu) = shift_and_jump(nu)?;
        let rates: Vec<f64> = (0..d).map(|i| mu.jump_rate(i, rates[i])).collect();
        let streams = (0..d).map(|i| CompoundPoissonPmf::new(mu.law(i), rates[i])).collect();
        Ok(PassageLaw { x: x.to_vec(), rates, streams })
    }

    pub fn d(&self) -> usize {
        self.x.len()
    }

    /// Whether `K` lies in the support set: nonnegative off-diagonal,
    /// nonpositive diagonal, column sums `-x_j`.
    pub fn in_support(&self, k: &[Vec<i64>]) -> bool {
        let d = self.d();
        if k.len() != d || k.iter().any(|row| row.len() != d) {
            return false;
        }
        (0..d).all(|j| {
            let column: i64 = (0..d).map(|i| k[i][j]).sum();
            column == -(self.x[j] as i64) && (0..d).all(|i| if i == j { k[i][j] <= 0 } else { k[i][j] >= 0 })
        })
    }

    fn determinant(&self, k: &[Vec<i64>]) -> f64 {
        let minus: Vec<Vec<i64>> = k.iter().map(|row| row.iter().map(|v| -v).collect()).collect();
        bareiss_determinant(&minus) as f64
    }

    /// Density at `t` (componentwise positive) for terminal matrix `K`.
    pub fn density(&mut self, t: &[f64], k: &[Vec<i64>]) -> f64 {
        if !self.in_support(k) || t.len() != self.d() || t.iter().any(|&s| s <= 0.0) {
            return 0.0;
        }
        let mut value = self.determinant(k);
        for (i, stream) in self.streams.iter_mut().enumerate() {
            if value == 0.0 {
                break;
            }
            value *= stream.pmf(t[i], &k[i]) / t[i];
        }
        value
    }

    /// `∫_a^b P(X^{(i)}_s = k_i) / s ds`; `b` may be infinite.
    pub fn factor_integral(&mut self, i: usize, k_i: &[i64], a: f64, b: f64) -> f64 {
        if self.rates[i] <= 0.0 {
            return 0.0;
        }
        self.streams[i].time_integral(k_i, a, b)
    }

    /// Probability that `T_x` falls in the box `Π_i [a_i, b_i)` with terminal
    /// matrix `K`.
    pub fn box_probability(&mut self, k: &[Vec<i64>], bounds: &[(f64, f64)]) -> f64 {
        if !self.in_support(k) {
            return 0.0;
        }
        let mut value = self.determinant(k);
        for (i, &(a, b)) in bounds.iter().enumerate() {
            if value == 0.0 {
                break;
            }
            value *= self.factor_integral(i, &k[i], a, b);
        }
        value
    }
}

/// [`PassageLaw::density`] as a one-shot call.
pub fn first_passage_density(
    nu: &ProgenyDistribution,
    rates: &[f64],
    x: &[usize],
    t: &[f64],
    k: &[Vec<i64>],
) -> Result<f64, DistributionError> {
    Ok(PassageLaw::new(nu, rates, x)?.density(t, k))
}
