//! Reference progeny laws used by the verification suites and examples.

use num_rational::BigRational;

use crate::distributions::{ratio, Pmf, ProgenyDistribution, Weight};

fn law<W: Weight>(d: usize, atoms: &[(&[i64], i64, i64)]) -> Pmf<W> {
    Pmf::from_pairs(d, atoms.iter().map(|&(k, num, den)| (k.to_vec(), ratio(num, den))))
}

/// Subcritical two-type law:
/// `ν_1 = 0.5 δ_(0,0) + 0.3 δ_(0,1) + 0.2 δ_(2,0)`,
/// `ν_2 = 0.6 δ_(0,0) + 0.25 δ_(1,0) + 0.15 δ_(0,2)`.
pub fn two_type_subcritical() -> ProgenyDistribution {
    ProgenyDistribution::new(vec![
        law(2, &[(&[0, 0], 1, 2), (&[0, 1], 3, 10), (&[2, 0], 1, 5)]),
        law(2, &[(&[0, 0], 3, 5), (&[1, 0], 1, 4), (&[0, 2], 3, 20)]),
    ])
    .expect("valid law")
}

/// Lifetime rates paired with [`two_type_subcritical`].
pub const TWO_TYPE_RATES: [f64; 2] = [1.0, 2.0];

/// Alternating two-type law with exact weights: a type-1 individual has no
/// children w.p. 1/3 or one type-2 child, a type-2 individual has no
/// children or one type-1 child w.p. 1/2 each.
pub fn alternating_exact() -> ProgenyDistribution<BigRational> {
    ProgenyDistribution::new(vec![
        law(2, &[(&[0, 0], 1, 3), (&[0, 1], 2, 3)]),
        law(2, &[(&[0, 0], 1, 2), (&[1, 0], 1, 2)]),
    ])
    .expect("valid law")
}

/// One type, no children.
pub fn pure_death() -> ProgenyDistribution {
    ProgenyDistribution::new(vec![law(1, &[(&[0], 1, 1)])]).expect("valid law")
}

/// One type, `ν(0) = 1/4`, `ν(2) = 3/4`; extinction probability 1/3.
pub fn supercritical_binary() -> ProgenyDistribution {
    ProgenyDistribution::new(vec![law(1, &[(&[0], 1, 4), (&[2], 3, 4)])]).expect("valid law")
}

/// One type, `ν(0) = ν(2) = 1/2`.
pub fn critical_binary() -> ProgenyDistribution {
    ProgenyDistribution::new(vec![law(1, &[(&[0], 1, 2), (&[2], 1, 2)])]).expect("valid law")
}

/// Deterministic two-type law with mean matrix `[[0, 2], [2, 0]]`.
pub fn swap_pairs() -> ProgenyDistribution {
    ProgenyDistribution::new(vec![law(2, &[(&[0, 2], 1, 1)]), law(2, &[(&[2, 0], 1, 1)])]).expect("valid law")
}
