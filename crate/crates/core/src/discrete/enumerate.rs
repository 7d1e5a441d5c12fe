//! Exhaustive enumeration of small forests, built directly from offspring
//! choices in breadth-first order. Used as an oracle for the coding and the
//! exact laws.

use crate::distributions::{Lattice, ProgenyDistribution, Weight};
use crate::forest::TypedForest;

/// All vectors in `Z_+^d` with entries summing to at most `budget`.
pub fn bounded_vectors(d: usize, budget: usize) -> Vec<Lattice> {
    let mut out = Vec::new();
    let mut current = vec![0i64; d];
    fn rec(j: usize, left: usize, current: &mut Lattice, out: &mut Vec<Lattice>) {
        if j == current.len() {
            out.push(current.clone());
            return;
        }
        for v in 0..=left {
            current[j] = v as i64;
            rec(j + 1, left - v, current, out);
        }
        current[j] = 0;
    }
    rec(0, budget, &mut current, &mut out);
    out
}

/// Every forest with the given roots and at most `max_vertices` vertices
/// whose offspring vectors are drawn from `choices(type)`, each paired with
/// the product of the weights of its offspring choices.
pub fn enumerate_weighted<W: Clone>(
    d: usize,
    roots: &[usize],
    max_vertices: usize,
    one: W,
    choices: &dyn Fn(usize) -> Vec<(Lattice, W)>,
    mul: &dyn Fn(&W, &W) -> W,
) -> Vec<(TypedForest, W)> {
    let mut records: Vec<(usize, Option<usize>)> = Vec::new();
    for (ty, &r) in roots.iter().enumerate() {
        records.extend(std::iter::repeat_n((ty, None), r));
    }
    let mut out = Vec::new();
    if records.len() > max_vertices {
        return out;
    }
    let tables: Vec<Vec<(Lattice, W)>> = (0..d).map(choices).collect();
    expand(d, max_vertices, &tables, mul, &mut records, 0, one, &mut out);
    out
}

#[allow(clippy::too_many_arguments)]
fn expand<W: Clone>(
    d: usize,
    max_vertices: usize,
    tables: &[Vec<(Lattice, W)>],
    mul: &dyn Fn(&W, &W) -> W,
    records: &mut Vec<(usize, Option<usize>)>,
    head: usize,
    weight: W,
    out: &mut Vec<(TypedForest, W)>,
) {
    if head == records.len() {
        out.push((TypedForest::from_records(d, records), weight));
        return;
    }
    let ty = records[head].0;
    for (offspring, w) in &tables[ty] {
        let born: usize = offspring.iter().map(|&c| c as usize).sum();
        if records.len() + born > max_vertices {
            continue;
        }
        let mark = records.len();
        for (j, &c) in offspring.iter().enumerate() {
            records.extend(std::iter::repeat_n((j, Some(head)), c as usize));
        }
        expand(d, max_vertices, tables, mul, records, head + 1, mul(&weight, w), out);
        records.truncate(mark);
    }
}

/// Every forest with the given roots and at most `max_vertices` vertices.
pub fn enumerate_forests(d: usize, roots: &[usize], max_vertices: usize) -> Vec<TypedForest> {
    let choices = |_: usize| bounded_vectors(d, max_vertices).into_iter().map(|v| (v, ())).collect();
    enumerate_weighted(d, roots, max_vertices, (), &choices, &|_, _| ())
        .into_iter()
        .map(|(f, _)| f)
        .collect()
}

/// Every forest with at most `max_vertices` vertices that has positive
/// probability under `ν`, with its probability.
pub fn enumerate_with_law<W: Weight>(nu: &ProgenyDistribution<W>, roots: &[usize], max_vertices: usize) -> Vec<(TypedForest, W)> {
    let choices = |ty: usize| nu.law(ty).iter().map(|(k, w)| (k.clone(), w.clone())).collect();
    enumerate_weighted(nu.d(), roots, max_vertices, W::one(), &choices, &|a, b| a.clone() * b.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::Pmf;

    #[test]
    fn counts_of_small_single_type_forests() {
        // plane trees with n vertices: Catalan(n - 1)
        let trees = enumerate_forests(1, &[1], 5);
        let mut by_size = [0usize; 6];
        for t in &trees {
            by_size[t.len()] += 1;
        }
        assert_eq!(&by_size[1..], &[1, 1, 2, 5, 14]);
        assert!(trees.iter().all(|t| t.validate().is_valid()));
    }

    #[test]
    fn forests_are_distinct_and_canonical() {
        let forests = enumerate_forests(2, &[1, 1], 4);
        for (i, a) in forests.iter().enumerate() {
            assert!(a.validate().is_valid());
            assert!(forests[i + 1..].iter().all(|b| a != b));
        }
    }

    #[test]
    fn law_weights_of_binary_trees() {
        let nu = ProgenyDistribution::new(vec![Pmf::from_pairs(1, [(vec![0], 0.5), (vec![2], 0.5)])]).unwrap();
        let trees = enumerate_with_law(&nu, &[1], 5);
        // sizes 1, 3, 5: 1 + 1 + 2 trees
        assert_eq!(trees.len(), 4);
        let total: f64 = trees.iter().map(|(_, w)| w).sum();
        assert!((total - (0.5 + 0.125 + 2.0 / 32.0)).abs() < 1e-15);
    }

    #[test]
    fn bounded_vector_count() {
        // C(budget + d, d)
        assert_eq!(bounded_vectors(2, 3).len(), 10);
        assert_eq!(bounded_vectors(3, 2).len(), 10);
    }
}
