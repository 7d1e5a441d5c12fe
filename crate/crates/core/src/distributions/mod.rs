//! Progeny laws, their shifted and jump versions, and lattice pmf algebra.
//!
//! Pmfs are generic over the probability type so that determinant-style
//! identities can be checked exactly with [`BigRational`] weights, while the
//! simulators work with `f64`.

mod compound;
mod criticality;

pub use compound::{compound_poisson_law, compound_poisson_pmf, poisson_cutoff, CompoundPoissonPmf};
pub use criticality::{criticality, extinction_vector, Criticality, CriticalityReport};

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// A point of `Z^d`.
pub type Lattice = Vec<i64>;

/// Default bound on the support size of convolution powers.
pub const DEFAULT_SUPPORT_CAP: usize = 10_000_000;

/// Mass tolerance for floating-point laws.
pub const MASS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistributionError {
    #[error("law {law}: {reason}")]
    Invalid { law: usize, reason: String },
    #[error("expected {expected} laws/coordinates, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("type {0} reproduces itself with probability one")]
    DegenerateSelfReplacement(usize),
    #[error("support grew beyond {cap} points")]
    SupportOverflow { cap: usize },
    #[error("power iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
}

/// Probability weights: `f64` or exact rationals.
pub trait Weight:
    Clone
    + Debug
    + PartialEq
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Send
    + Sync
    + 'static
{
    fn from_ratio(num: i64, den: i64) -> Self;
    fn to_f64(&self) -> f64;
    /// Total mass acceptable as one (exact for rationals).
    fn is_unit_mass(&self) -> bool;
}

impl Weight for f64 {
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn is_unit_mass(&self) -> bool {
        (self - 1.0).abs() <= MASS_TOLERANCE
    }
}

impl Weight for BigRational {
    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn is_unit_mass(&self) -> bool {
        self.is_one()
    }
}

/// Parses a plain or scientific decimal literal into an exact rational.
pub fn decimal_to_rational(text: &str) -> Option<BigRational> {
    let text = text.trim();
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(pos) => (&text[..pos], text[pos + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (negative, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((a, b)) => (a, b),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let mut numer: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().ok()? };
    if negative {
        numer = -numer;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        BigRational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    Some(value)
}

/// Exact rational with the same shortest decimal representation as `x`.
pub fn f64_to_rational(x: f64) -> Option<BigRational> {
    if !x.is_finite() {
        return None;
    }
    decimal_to_rational(&format!("{x:?}"))
}

/// Finitely supported pmf on `Z^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf<W = f64> {
    d: usize,
    mass: BTreeMap<Lattice, W>,
}

impl<W: Weight> Pmf<W> {
    pub fn empty(d: usize) -> Self {
        Pmf { d, mass: BTreeMap::new() }
    }

    /// Unit mass at `point`.
    pub fn dirac(point: Lattice) -> Self {
        let mut p = Pmf::empty(point.len());
        p.mass.insert(point, W::one());
        p
    }

    pub fn from_pairs(d: usize, pairs: impl IntoIterator<Item = (Lattice, W)>) -> Self {
        let mut p = Pmf::empty(d);
        for (k, w) in pairs {
            p.add(k, w);
        }
        p
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Adds `w` to the mass at `k`; zero weights are not stored.
    pub fn add(&mut self, k: Lattice, w: W) {
        debug_assert_eq!(k.len(), self.d);
        if w.is_zero() {
            return;
        }
        let entry = self.mass.entry(k).or_insert_with(W::zero);
        *entry = entry.clone() + w;
    }

    pub fn get(&self, k: &[i64]) -> W {
        self.mass.get(k).cloned().unwrap_or_else(W::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Lattice, &W)> {
        self.mass.iter()
    }

    pub fn support_len(&self) -> usize {
        self.mass.len()
    }

    pub fn total(&self) -> W {
        self.mass.values().fold(W::zero(), |acc, w| acc + w.clone())
    }

    /// Translates the support by `shift`.
    pub fn translated(&self, shift: &[i64]) -> Self {
        let mass = self
            .mass
            .iter()
            .map(|(k, w)| (k.iter().zip(shift).map(|(a, b)| a + b).collect(), w.clone()))
            .collect();
        Pmf { d: self.d, mass }
    }

    pub fn convolve(&self, other: &Pmf<W>, cap: usize) -> Result<Pmf<W>, DistributionError> {
        let mut out = Pmf::empty(self.d);
        for (a, wa) in &self.mass {
            for (b, wb) in &other.mass {
                let k: Lattice = a.iter().zip(b).map(|(x, y)| x + y).collect();
                out.add(k, wa.clone() * wb.clone());
                if out.mass.len() > cap {
                    return Err(DistributionError::SupportOverflow { cap });
                }
            }
        }
        Ok(out)
    }

    pub fn to_f64(&self) -> Pmf<f64> {
        Pmf { d: self.d, mass: self.mass.iter().map(|(k, w)| (k.clone(), w.to_f64())).collect() }
    }
}

impl Pmf<f64> {
    /// Exact version of a float pmf, reading each weight as its shortest decimal.
    pub fn to_rational(&self) -> Option<Pmf<BigRational>> {
        let mut out = Pmf::empty(self.d);
        for (k, w) in &self.mass {
            out.add(k.clone(), f64_to_rational(*w)?);
        }
        Some(out)
    }
}

/// `n`-fold convolution of `pmf` with itself, by iterated sparse convolution.
/// `n = 0` gives the unit mass at the origin.
pub fn convolution_power<W: Weight>(pmf: &Pmf<W>, n: usize, cap: usize) -> Result<Pmf<W>, DistributionError> {
    let mut acc = Pmf::dirac(vec![0; pmf.d()]);
    for _ in 0..n {
        acc = acc.convolve(pmf, cap)?;
    }
    Ok(acc)
}

/// Offspring laws `ν_1, ..., ν_d` on `Z_+^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProgenyDistribution<W = f64> {
    laws: Vec<Pmf<W>>,
}

impl<W: Weight> ProgenyDistribution<W> {
    pub fn new(laws: Vec<Pmf<W>>) -> Result<Self, DistributionError> {
        let d = laws.len();
        if d == 0 {
            return Err(DistributionError::Dimension { expected: 1, got: 0 });
        }
        for (i, law) in laws.iter().enumerate() {
            let invalid = |reason: &str| DistributionError::Invalid { law: i, reason: reason.into() };
            if law.d() != d {
                return Err(DistributionError::Dimension { expected: d, got: law.d() });
            }
            for (k, w) in law.iter() {
                if k.iter().any(|&c| c < 0) {
                    return Err(invalid("offspring vector with a negative entry"));
                }
                if *w < W::zero() {
                    return Err(invalid("negative probability"));
                }
            }
            if !law.total().is_unit_mass() {
                return Err(invalid("probabilities do not sum to one"));
            }
            let mut unit = vec![0; d];
            unit[i] = 1;
            if law.get(&unit).is_unit_mass() {
                return Err(DistributionError::DegenerateSelfReplacement(i));
            }
        }
        Ok(ProgenyDistribution { laws })
    }

    pub fn d(&self) -> usize {
        self.laws.len()
    }

    pub fn laws(&self) -> &[Pmf<W>] {
        &self.laws
    }

    pub fn law(&self, i: usize) -> &Pmf<W> {
        &self.laws[i]
    }

    pub fn to_f64(&self) -> ProgenyDistribution<f64> {
        ProgenyDistribution { laws: self.laws.iter().map(Pmf::to_f64).collect() }
    }
}

impl ProgenyDistribution<f64> {
    pub fn to_rational(&self) -> Option<ProgenyDistribution<BigRational>> {
        let laws = self.laws.iter().map(Pmf::to_rational).collect::<Option<Vec<_>>>()?;
        ProgenyDistribution::new(laws).ok()
    }

    /// Mean matrix `m[i][j] = E[children of type j | parent of type i]`.
    pub fn mean_matrix(&self) -> Vec<Vec<f64>> {
        let d = self.d();
        self.laws
            .iter()
            .map(|law| {
                let mut row = vec![0.0; d];
                for (k, w) in law.iter() {
                    for j in 0..d {
                        row[j] += k[j] as f64 * w;
                    }
                }
                row
            })
            .collect()
    }
}

/// Jump laws `μ_i`: `ν̃_i` conditioned on a nonzero jump.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpDistribution<W = f64> {
    laws: Vec<Pmf<W>>,
    /// `ν̃_i(0) = ν_i(e_i)`, the mass of invisible (self-replacing) events.
    null_mass: Vec<W>,
}

impl<W: Weight> JumpDistribution<W> {
    pub fn d(&self) -> usize {
        self.laws.len()
    }

    pub fn laws(&self) -> &[Pmf<W>] {
        &self.laws
    }

    pub fn law(&self, i: usize) -> &Pmf<W> {
        &self.laws[i]
    }

    pub fn null_mass(&self, i: usize) -> &W {
        &self.null_mass[i]
    }
}

impl JumpDistribution<f64> {
    /// Rate of visible jumps on stream `i` when type-`i` individuals die at
    /// rate `lifetime_rate`: `lifetime_rate · (1 − ν_i(e_i))`.
    pub fn jump_rate(&self, i: usize, lifetime_rate: f64) -> f64 {
        lifetime_rate * (1.0 - self.null_mass[i])
    }
}

/// The shifted laws `ν̃_i(k) = ν_i(k + e_i)` and the jump laws
/// `μ_i(k) = ν̃_i(k) / (1 − ν̃_i(0))` for `k ≠ 0`, `μ_i(0) = 0`.
pub fn shift_and_jump<W: Weight>(
    nu: &ProgenyDistribution<W>,
) -> Result<(Vec<Pmf<W>>, JumpDistribution<W>), DistributionError> {
    let d = nu.d();
    let mut shifted = Vec::with_capacity(d);
    let mut jumps = Vec::with_capacity(d);
    let mut null_mass = Vec::with_capacity(d);
    for i in 0..d {
        let mut minus_unit = vec![0; d];
        minus_unit[i] = -1;
        let tilde = nu.law(i).translated(&minus_unit);
        let origin = vec![0; d];
        let stay = tilde.get(&origin);
        let remaining = W::one() - stay.clone();
        if remaining <= W::zero() {
            return Err(DistributionError::DegenerateSelfReplacement(i));
        }
        let jump = Pmf::from_pairs(
            d,
            tilde
                .iter()
                .filter(|(k, _)| k.iter().any(|&c| c != 0))
                .map(|(k, w)| (k.clone(), w.clone() / remaining.clone())),
        );
        shifted.push(tilde);
        jumps.push(jump);
        null_mass.push(stay);
    }
    Ok((shifted, JumpDistribution { laws: jumps, null_mass }))
}

/// Rational helper used in tests and the CLI: `num/den` as a weight.
pub fn ratio<W: Weight>(num: i64, den: i64) -> W {
    W::from_ratio(num, den)
}

/// Absolute value helper for rational comparisons.
pub fn abs_diff(a: &BigRational, b: &BigRational) -> BigRational {
    (a - b).abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binary_split() -> ProgenyDistribution {
        ProgenyDistribution::new(vec![Pmf::from_pairs(1, [(vec![0], 0.5), (vec![2], 0.5)])]).unwrap()
    }

    #[test]
    fn shift_of_binary_split() {
        let (tilde, mu) = shift_and_jump(&binary_split()).unwrap();
        assert_eq!(tilde[0].get(&[-1]), 0.5);
        assert_eq!(tilde[0].get(&[1]), 0.5);
        assert_eq!(mu.law(0), &tilde[0]);
        assert_eq!(*mu.null_mass(0), 0.0);
    }

    #[test]
    fn shift_two_type_example() {
        let nu = ProgenyDistribution::new(vec![
            Pmf::from_pairs(2, [(vec![1, 0], 0.5), (vec![0, 1], 0.5)]),
            Pmf::from_pairs(2, [(vec![0, 0], 1.0)]),
        ])
        .unwrap();
        let (tilde, mu) = shift_and_jump(&nu).unwrap();
        assert_eq!(tilde[0].get(&[0, 0]), 0.5);
        assert_eq!(tilde[0].get(&[-1, 1]), 0.5);
        assert_eq!(mu.law(0).get(&[-1, 1]), 1.0);
        assert_eq!(mu.law(0).support_len(), 1);
        assert_eq!(mu.jump_rate(0, 2.0), 1.0);
        // un-shifting recovers the progeny law
        assert_eq!(&tilde[0].translated(&[1, 0]), nu.law(0));
    }

    #[test]
    fn rejects_invalid_laws() {
        assert!(ProgenyDistribution::new(vec![Pmf::from_pairs(1, [(vec![1], 1.0)])]).is_err());
        assert!(ProgenyDistribution::new(vec![Pmf::from_pairs(1, [(vec![0], 0.6)])]).is_err());
        assert!(ProgenyDistribution::new(vec![Pmf::from_pairs(1, [(vec![-1], 1.0)])]).is_err());
        assert!(ProgenyDistribution::<f64>::new(vec![]).is_err());
    }

    #[test]
    fn convolution_powers() {
        let nu = binary_split();
        let p0 = convolution_power(nu.law(0), 0, DEFAULT_SUPPORT_CAP).unwrap();
        assert_eq!(p0, Pmf::dirac(vec![0]));
        let p3 = convolution_power(nu.law(0), 3, DEFAULT_SUPPORT_CAP).unwrap();
        assert_eq!(p3.get(&[2]), 3.0 / 8.0);
        assert!((p3.total() - 1.0).abs() < 1e-15);
        let small_cap = convolution_power(nu.law(0), 5, 3);
        assert!(matches!(small_cap, Err(DistributionError::SupportOverflow { cap: 3 })));
    }

    #[test]
    fn exact_rationals() {
        assert_eq!(decimal_to_rational("0.25").unwrap(), ratio::<BigRational>(1, 4));
        assert_eq!(decimal_to_rational("1e-3").unwrap(), ratio::<BigRational>(1, 1000));
        assert_eq!(decimal_to_rational("-2.5E1").unwrap(), ratio::<BigRational>(-25, 1));
        assert_eq!(f64_to_rational(0.1).unwrap(), ratio::<BigRational>(1, 10));
        assert!(decimal_to_rational("abc").is_none());
        let exact = binary_split().to_rational().unwrap();
        let p3 = convolution_power(exact.law(0), 3, DEFAULT_SUPPORT_CAP).unwrap();
        assert_eq!(p3.get(&[2]), ratio(3, 8));
        assert!(p3.total().is_one());
    }
}
