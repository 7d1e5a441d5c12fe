use proptest::prelude::*;

use ramify::coding::{decode, encode, fixed_point_iterates, lamperti_discrete, smallest_solution, CodingSequence, Coord};
use ramify::continuous::{extract_paths, lamperti_solve, reconstruct_forest};
use ramify::distributions::{convolution_power, Pmf};
use ramify::forest::{alive_trajectory, discretize, generation_chains, EdgeLengthForest, TypedForest};
use ramify::io::{parse_forest, ForestFile};
use ramify::stats::replica_rng;

const MAX_VERTICES: usize = 60;

/// Breadth-first forest whose `k`-th vertex takes `choices[k]` as offspring
/// (capped at 2 per type); vertices past the choice list or the size cap are
/// leaves.
fn forest_from_choices(d: usize, roots: &[usize], choices: &[Vec<u8>]) -> TypedForest {
    let mut records: Vec<(usize, Option<usize>)> = Vec::new();
    for (ty, &n) in roots.iter().enumerate() {
        records.extend(std::iter::repeat_n((ty, None), n));
    }
    let mut head = 0;
    while head < records.len() {
        if let Some(choice) = choices.get(head) {
            for ty in 0..d {
                let n = choice.get(ty).copied().unwrap_or(0) as usize % 3;
                for _ in 0..n {
                    if records.len() < MAX_VERTICES {
                        records.push((ty, Some(head)));
                    }
                }
            }
        }
        head += 1;
    }
    TypedForest::new(d, &records).expect("breadth-first construction is canonical")
}

fn forest_strategy() -> impl Strategy<Value = TypedForest> {
    sized_forest_strategy(40)
}

fn sized_forest_strategy(max_choices: usize) -> impl Strategy<Value = TypedForest> {
    (1usize..=3)
        .prop_flat_map(move |d| {
            (
                Just(d),
                prop::collection::vec(0usize..=2, d),
                prop::collection::vec(prop::collection::vec(0u8..=4, d), 0..max_choices),
            )
        })
        .prop_map(|(d, mut roots, choices)| {
            if roots.iter().all(|&r| r == 0) {
                roots[0] = 1;
            }
            forest_from_choices(d, &roots, &choices)
        })
}

fn edge_forest_strategy() -> impl Strategy<Value = EdgeLengthForest> {
    with_lifetimes(forest_strategy())
}

fn with_lifetimes(forests: impl Strategy<Value = TypedForest>) -> impl Strategy<Value = EdgeLengthForest> {
    forests.prop_flat_map(|f| {
        let n = f.len();
        (Just(f), prop::collection::vec(0.01f64..5.0, n))
            .prop_map(|(f, lifetimes)| EdgeLengthForest::new(f, lifetimes).unwrap())
    })
}

fn coding_strategy() -> impl Strategy<Value = (Vec<usize>, CodingSequence)> {
    (1usize..=3).prop_flat_map(|d| {
        let streams = prop::collection::vec(prop::collection::vec(prop::collection::vec(0i64..=2, d), 0..10), d);
        (prop::collection::vec(0usize..=3, d), streams).prop_map(move |(roots, mut streams)| {
            for (i, stream) in streams.iter_mut().enumerate() {
                for inc in stream.iter_mut() {
                    inc[i] -= 1;
                }
            }
            (roots, CodingSequence::new(d, streams).unwrap())
        })
    })
}

proptest! {
    #[test]
    fn coding_is_a_bijection(f in forest_strategy()) {
        let x = encode(&f).unwrap();
        let g = decode(&x, f.roots()).unwrap();
        prop_assert!(g.validate().is_valid());
        prop_assert_eq!(&g, &f);
        prop_assert_eq!(encode(&g).unwrap(), x);
    }

    #[test]
    fn coding_lengths_are_the_smallest_solution(f in forest_strategy()) {
        let x = encode(&f).unwrap();
        let s = smallest_solution(f.roots(), &x);
        prop_assert_eq!(s.resolved_values().unwrap(), x.lengths());
        prop_assert_eq!(x.lengths(), f.type_counts());
    }

    #[test]
    fn discrete_lamperti_identity(f in forest_strategy()) {
        let x = encode(&f).unwrap();
        let chains = generation_chains(&f);
        prop_assert_eq!(lamperti_discrete(&x, f.roots()).unwrap(), chains.clone());
        let generations = f.generations();
        for n in 0..chains.generations() {
            prop_assert_eq!(chains.column_sums(n), chains.z[n].clone());
            let direct: Vec<i64> = (0..f.d())
                .map(|ty| f.vertices().iter().zip(&generations).filter(|(v, &g)| g == n && v.ty == ty).count() as i64)
                .collect();
            prop_assert_eq!(&chains.z[n], &direct);
        }
    }

    #[test]
    fn fixed_point_iteration_is_monotone((roots, x) in coding_strategy()) {
        let iterates = fixed_point_iterates(&roots, &x);
        let rank = |c: &Coord| match c {
            Coord::Resolved(v) => *v,
            Coord::Unresolved { .. } => usize::MAX,
        };
        for w in iterates.windows(2) {
            for (a, b) in w[0].iter().zip(&w[1]) {
                prop_assert!(rank(a) <= rank(b));
            }
        }
        prop_assert_eq!(iterates.last().unwrap(), &smallest_solution(&roots, &x).coords);
    }

    #[test]
    fn resolved_coordinates_solve_the_system((roots, x) in coding_strategy()) {
        let s = smallest_solution(&roots, &x);
        let cumulative = x.cumulative();
        let d = x.d();
        for j in 0..d {
            if !s.coords[j].is_resolved() {
                continue;
            }
            let total: i64 = (0..d)
                .map(|i| cumulative[i][s.coords[i].value().unwrap_or(cumulative[i].len() - 1)][j])
                .sum();
            prop_assert_eq!(roots[j] as i64 + total, 0);
        }
    }

    #[test]
    fn alive_trajectory_accounts_for_births(f in edge_forest_strategy()) {
        let path = alive_trajectory(&f);
        path.check_invariants().unwrap();
        let skeleton = f.skeleton();
        let d = f.d();
        let mut births = vec![0i64; d];
        for w in path.events.windows(2) {
            for i in 0..d {
                for j in (0..d).filter(|&j| j != i) {
                    let step = w[1].zmat[i][j] - w[0].zmat[i][j];
                    prop_assert!(step >= 0);
                    births[j] += step;
                }
            }
        }
        let non_root_cross: Vec<i64> = (0..d)
            .map(|j| {
                skeleton
                    .vertices()
                    .iter()
                    .filter(|v| v.ty == j && v.parent.is_some_and(|p| skeleton.vertices()[p].ty != j))
                    .count() as i64
            })
            .collect();
        prop_assert_eq!(births, non_root_cross);
        prop_assert!(path.final_state().z.iter().all(|&z| z == 0));
    }

    #[test]
    fn discretization_matches_alive_counts(f in with_lifetimes(sized_forest_strategy(6))) {
        let delta = f.min_event_gap().min(1.0) / 2.0;
        let length: f64 = f.lifetimes().iter().sum();
        prop_assume!(delta > 1e-4 && length / delta < 20_000.0);
        let slices = discretize(&f, delta).unwrap();
        prop_assert!(slices.validate().is_valid());
        let path = alive_trajectory(&f);
        let generations = slices.generations();
        let depth = generations.iter().max().copied().unwrap_or(0);
        for n in 0..=depth + 1 {
            let counts: Vec<i64> = (0..f.d())
                .map(|ty| slices.vertices().iter().zip(&generations).filter(|(v, &g)| g == n && v.ty == ty).count() as i64)
                .collect();
            prop_assert_eq!(&path.state_at(n as f64 * delta).z, &counts);
        }
    }

    #[test]
    fn continuous_round_trip(f in edge_forest_strategy(), seed in any::<u64>()) {
        let roots = f.skeleton().roots().to_vec();
        let p = extract_paths(&f);
        let path = lamperti_solve(&p, &roots).unwrap();
        prop_assert!(path.matches(&alive_trajectory(&f), 1e-9).is_ok());
        let g = reconstruct_forest(&p, &roots, &mut replica_rng(seed, 0, 0)).unwrap();
        prop_assert!(g.skeleton().validate().is_valid());
        prop_assert!(extract_paths(&g).matches(&p, 1e-9).is_ok());
    }

    #[test]
    fn forest_json_round_trip(f in edge_forest_strategy()) {
        let file = ForestFile::EdgeLength(f);
        let text = file.to_json();
        let back = parse_forest(&text).unwrap();
        prop_assert_eq!(&back, &file);
        prop_assert_eq!(back.to_json(), text);
    }

    #[test]
    fn convolution_powers_keep_unit_mass(
        weights in prop::collection::vec(1u32..10, 1..5),
        n in 0usize..8,
    ) {
        let total: u32 = weights.iter().sum();
        let law = Pmf::from_pairs(
            2,
            weights.iter().enumerate().map(|(k, &w)| (vec![k as i64 - 1, (k % 2) as i64], w as f64 / total as f64)),
        );
        let power = convolution_power(&law, n, 1_000_000).unwrap();
        prop_assert!((power.total() - 1.0).abs() < 1e-12);
    }
}
