//! Verification suites: exact identities and Monte Carlo law checks, each
//! producing [`TestReport`]s.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::Zero;
use rand::Rng;
use thiserror::Error;

use crate::coding::{decode, encode, lamperti_discrete, smallest_solution, CodingSequence};
use crate::continuous::{
    additivity_check, extract_paths, lamperti_solve, reconstruct_forest, sample_edge_length_forest,
    sample_first_passage, PassageConfig, PassageError, PassageLaw,
};
use crate::discrete::enumerate::{enumerate_forests, enumerate_with_law};
use crate::discrete::{admissible_matrices, sample_forest_seeded, BallotLaw, SampleCaps};
use crate::distributions::{criticality, extinction_vector, DistributionError, Lattice, ProgenyDistribution};
use crate::forest::{alive_trajectory, discretize, generation_chains, TypedForest};
use crate::laws;
use crate::stats::{
    binomial_z, chi_square_gof, chi_square_two_sample, counts, ks_one_sample, mean_and_standard_error,
    replica_rng, replicate, StatsError, TestReport, MIN_EXPECTED, P_THRESHOLD,
};

/// Generator lane for the uniform choices of [`reconstruct_forest`].
const RECONSTRUCT_LANE: u64 = 60;
/// Generator lane for random coding sequences.
const CODING_LANE: u64 = 70;
/// Absolute tolerance on event times in the round-trip checks.
pub const TIME_TOLERANCE: f64 = 1e-9;
/// Tolerance on deterministic numerical values.
pub const VALUE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("model has {got} types, this check needs {expected}")]
    Dimension { expected: usize, got: usize },
    #[error(transparent)]
    Passage(#[from] PassageError),
    #[error(transparent)]
    Distribution(#[from] DistributionError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Replica count, seed and thresholds shared by every check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyConfig {
    pub replicas: usize,
    pub seed: u64,
    pub threads: usize,
    /// p-value threshold of the statistical tests.
    pub threshold: f64,
    /// Width of the acceptance band, in standard errors.
    pub sigmas: f64,
}

impl VerifyConfig {
    pub fn new(replicas: usize, seed: u64) -> Self {
        VerifyConfig { replicas, seed, threads: 1, threshold: P_THRESHOLD, sigmas: 3.0 }
    }

    fn passage(&self) -> PassageConfig {
        PassageConfig { threshold: self.threshold, threads: self.threads, ..PassageConfig::default() }
    }
}

/// Progeny law and lifetime rates the Monte Carlo checks run on.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub nu: ProgenyDistribution,
    pub rates: Vec<f64>,
}

impl Default for Model {
    fn default() -> Self {
        Model { nu: laws::two_type_subcritical(), rates: laws::TWO_TYPE_RATES.to_vec() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Roundtrip,
    Ballot,
    Passage,
    Additivity,
    Discretization,
    Extinction,
}

impl Suite {
    pub const ALL: [Suite; 6] =
        [Suite::Roundtrip, Suite::Ballot, Suite::Passage, Suite::Additivity, Suite::Discretization, Suite::Extinction];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Roundtrip => "roundtrip",
            Suite::Ballot => "ballot",
            Suite::Passage => "passage",
            Suite::Additivity => "additivity",
            Suite::Discretization => "discretization",
            Suite::Extinction => "extinction",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::ALL.into_iter().find(|suite| suite.name() == s).ok_or_else(|| format!("unknown suite `{s}`"))
    }
}

pub fn run_suite(suite: Suite, model: &Model, config: &VerifyConfig) -> Result<Vec<TestReport>, VerifyError> {
    match suite {
        Suite::Roundtrip => Ok(roundtrip(model, config)),
        Suite::Ballot => ballot(model, config),
        Suite::Passage => passage(model, config),
        Suite::Additivity => additivity(model, config),
        Suite::Discretization => discretization(model, config),
        Suite::Extinction => extinction(config),
    }
}

fn default_roots(d: usize) -> Vec<usize> {
    let mut roots = vec![1; d];
    roots[0] = 2;
    roots
}

fn unit(d: usize, i: usize) -> Vec<usize> {
    (0..d).map(|j| usize::from(i == j)).collect()
}

/// Report for an identity checked on every replica, with the worst time error.
fn identity_report(test: &str, failures: usize, error: f64, tolerance: f64, config: &VerifyConfig) -> TestReport {
    let mut report = TestReport::from_error(test, failures as f64, error, tolerance, config.seed, config.replicas);
    report.pass &= failures == 0;
    report
}

/// Report for a sample mean checked against its exact value within
/// `sigmas` standard errors.
fn mean_report(test: &str, mean: f64, exact: f64, standard_error: f64, config: &VerifyConfig, n: usize) -> TestReport {
    let z = (mean - exact) / standard_error;
    TestReport::from_error(test, z, (mean - exact).abs(), config.sigmas * standard_error, config.seed, n)
}

// Round trips.

#[derive(Debug, Default, Clone, Copy)]
struct RoundTrip {
    coding: bool,
    lamperti: bool,
    solve: bool,
    solve_error: f64,
    reconstruct: bool,
    reconstruct_error: f64,
}

fn roundtrip_replica(model: &Model, roots: &[usize], seed: u64, replica: u64) -> RoundTrip {
    let mut out = RoundTrip::default();
    let f = sample_forest_seeded(&model.nu, roots, SampleCaps::default(), seed, replica).forest;
    if let Ok(x) = encode(&f) {
        out.coding = decode(&x, roots).is_ok_and(|g| g == f && g.validate().is_valid());
        out.lamperti = lamperti_discrete(&x, roots).is_ok_and(|chains| chains == generation_chains(&f));
    }
    let Ok(sampled) = sample_edge_length_forest(&model.nu, &model.rates, roots, SampleCaps::default(), seed, replica)
    else {
        return out;
    };
    let f = sampled.forest;
    let p = extract_paths(&f);
    let alive = alive_trajectory(&f);
    if let Ok(path) = lamperti_solve(&p, roots) {
        out.solve = path.matches(&alive, TIME_TOLERANCE).is_ok();
        if path.events.len() == alive.events.len() {
            out.solve_error = path.max_time_error(&alive);
        }
    }
    let mut rng = replica_rng(seed, replica, RECONSTRUCT_LANE);
    if let Ok(g) = reconstruct_forest(&p, roots, &mut rng) {
        let q = extract_paths(&g);
        out.reconstruct = q.matches(&p, TIME_TOLERANCE).is_ok();
        out.reconstruct_error = q.max_time_error(&p);
    }
    out
}

/// Coding bijection and both Lamperti identities on sampled forests.
pub fn roundtrip(model: &Model, config: &VerifyConfig) -> Vec<TestReport> {
    let roots = default_roots(model.nu.d());
    let outcomes = replicate(config.replicas, config.threads, |r| {
        roundtrip_replica(model, &roots, config.seed, r as u64)
    });
    let failures = |f: fn(&RoundTrip) -> bool| outcomes.iter().filter(|o| !f(o)).count();
    let worst = |f: fn(&RoundTrip) -> f64| outcomes.iter().map(f).fold(0.0, f64::max);
    vec![
        TestReport::exact("roundtrip_coding", failures(|o| o.coding), config.seed, config.replicas),
        TestReport::exact("roundtrip_discrete_lamperti", failures(|o| o.lamperti), config.seed, config.replicas),
        identity_report(
            "roundtrip_continuous_lamperti",
            failures(|o| o.solve),
            worst(|o| o.solve_error),
            TIME_TOLERANCE,
            config,
        ),
        identity_report(
            "roundtrip_reconstruct",
            failures(|o| o.reconstruct),
            worst(|o| o.reconstruct_error),
            TIME_TOLERANCE,
            config,
        ),
    ]
}

/// `decode ∘ encode` and `encode ∘ decode` on every two-type forest with at
/// most `max_vertices` vertices, for each root vector in `roots`.
pub fn enumerated_bijection(roots: &[Vec<usize>], max_vertices: usize) -> TestReport {
    let mut failures = 0;
    let mut checked = 0;
    for r in roots {
        for f in enumerate_forests(r.len(), r, max_vertices) {
            checked += 1;
            let ok = encode(&f).is_ok_and(|x| {
                decode(&x, r).is_ok_and(|g| g == f && encode(&g).as_ref() == Ok(&x))
            });
            failures += usize::from(!ok);
        }
    }
    TestReport::exact("bijection_enumerated", failures, 0, checked)
}

fn random_coding<R: Rng>(rng: &mut R, d: usize, max_len: usize) -> CodingSequence {
    let streams = (0..d)
        .map(|i| {
            let len = rng.random_range(0..=max_len);
            (0..len)
                .map(|_| (0..d).map(|j| if i == j { rng.random_range(-1..=1) } else { rng.random_range(0..=1) }).collect())
                .collect()
        })
        .collect();
    CodingSequence::new(d, streams).expect("skip-free increments")
}

/// Whether `s` (with `None` = infinite) solves the system with frozen streams.
fn solves(roots: &[usize], cumulative: &[Vec<Lattice>], s: &[Option<usize>]) -> bool {
    let d = roots.len();
    (0..d).filter(|&j| s[j].is_some()).all(|j| {
        let total: i64 = (0..d)
            .map(|i| {
                let at = s[i].unwrap_or(cumulative[i].len() - 1);
                cumulative[i][at][j]
            })
            .sum();
        roots[j] as i64 + total == 0
    })
}

fn below_or_equal(a: &[Option<usize>], b: &[Option<usize>]) -> bool {
    a.iter().zip(b).all(|(x, y)| match (x, y) {
        (_, None) => true,
        (None, Some(_)) => false,
        (Some(x), Some(y)) => x <= y,
    })
}

/// The solver output solves the system and lies below every solution found
/// by scanning all multi-indices, on `count` random small coding sequences.
pub fn smallest_solution_minimality(count: usize, seed: u64) -> TestReport {
    let mut failures = 0;
    for r in 0..count as u64 {
        let mut rng = replica_rng(seed, r, CODING_LANE);
        let d = 2;
        let x = random_coding(&mut rng, d, 8);
        let roots: Vec<usize> = (0..d).map(|_| rng.random_range(0..=2)).collect();
        let cumulative = x.cumulative();
        let s: Vec<Option<usize>> = smallest_solution(&roots, &x).coords.iter().map(|c| c.value()).collect();
        let mut ok = solves(&roots, &cumulative, &s);
        let options: Vec<Vec<Option<usize>>> =
            x.lengths().iter().map(|&n| (0..=n).map(Some).chain([None]).collect()).collect();
        for a in &options[0] {
            for b in &options[1] {
                let candidate = [*a, *b];
                if solves(&roots, &cumulative, &candidate) && !below_or_equal(&s, &candidate) {
                    ok = false;
                }
            }
        }
        failures += usize::from(!ok);
    }
    TestReport::exact("smallest_solution_minimality", failures, seed, count)
}

/// Discrete Lamperti identity `lamperti_discrete(encode(f)) = generation_chains(f)`
/// on sampled forests.
pub fn discrete_lamperti(model: &Model, config: &VerifyConfig) -> TestReport {
    let roots = default_roots(model.nu.d());
    let failures = replicate(config.replicas, config.threads, |r| {
        let f = sample_forest_seeded(&model.nu, &roots, SampleCaps::default(), config.seed, r as u64).forest;
        encode(&f).is_ok_and(|x| lamperti_discrete(&x, &roots).is_ok_and(|c| c == generation_chains(&f)))
    })
    .into_iter()
    .filter(|ok| !ok)
    .count();
    TestReport::exact("discrete_lamperti", failures, config.seed, config.replicas)
}

// Ballot formula.

type BallotKey = (Vec<usize>, Vec<Lattice>);

fn enumerated_joint_law(
    nu: &ProgenyDistribution<BigRational>,
    roots: &[usize],
    max_vertices: usize,
) -> BTreeMap<BallotKey, BigRational> {
    let mut law: BTreeMap<BallotKey, BigRational> = BTreeMap::new();
    for (forest, p) in enumerate_with_law(nu, roots, max_vertices) {
        let x = encode(&forest).expect("enumerated forests are valid");
        let k = x.cumulative().iter().map(|c| c.last().unwrap().clone()).collect();
        *law.entry((x.lengths(), k)).or_insert_with(BigRational::zero) += p;
    }
    law
}

/// Exact comparison of the determinant formula with enumeration over all
/// forests with `n_1 + ... + n_d <= max_total`.
pub fn ballot_exactness(nu: &ProgenyDistribution<BigRational>, roots: &[usize], max_total: usize) -> TestReport {
    let enumerated = enumerated_joint_law(nu, roots, max_total);
    let mut ballot = BallotLaw::new(nu);
    let mut failures = 0;
    let mut checked = 0;
    let d = nu.d();
    for n in crate::discrete::enumerate::bounded_vectors(d, max_total) {
        if n.iter().any(|&v| v <= 0) {
            continue;
        }
        let n: Vec<usize> = n.iter().map(|&v| v as usize).collect();
        for k in admissible_matrices(nu, roots, &n) {
            checked += 1;
            let exact = enumerated.get(&(n.clone(), k.clone())).cloned().unwrap_or_else(BigRational::zero);
            failures += usize::from(ballot.pmf(roots, &n, &k) != exact);
        }
    }
    for ((n, k), p) in &enumerated {
        checked += 1;
        failures += usize::from(&ballot.pmf(roots, n, k) != p);
    }
    TestReport::exact("ballot_exact", failures, 0, checked)
}

/// Exact check on the alternating law, plus a chi-square test of sampled
/// `(n, K)` against the formula for the model law.
pub fn ballot(model: &Model, config: &VerifyConfig) -> Result<Vec<TestReport>, VerifyError> {
    let mut reports = vec![ballot_exactness(&laws::alternating_exact(), &[1, 1], 6)];
    let d = model.nu.d();
    let roots = vec![1; d];
    let samples: Vec<BallotKey> = replicate(config.replicas, config.threads, |r| {
        let f = sample_forest_seeded(&model.nu, &roots, SampleCaps::default(), config.seed, r as u64);
        let x = encode(&f.forest).expect("sampled forests are valid");
        (x.lengths(), x.cumulative().iter().map(|c| c.last().unwrap().clone()).collect())
    });
    let observed = counts(samples);
    let mut ballot = BallotLaw::new(&model.nu);
    let budget = if d <= 2 { 14 } else { 6 };
    let mut expected = BTreeMap::new();
    for n in crate::discrete::enumerate::bounded_vectors(d, budget) {
        if n.iter().any(|&v| v <= 0) {
            continue;
        }
        let n: Vec<usize> = n.iter().map(|&v| v as usize).collect();
        for k in admissible_matrices(&model.nu, &roots, &n) {
            let p = ballot.pmf(&roots, &n, &k);
            if p > 0.0 {
                expected.insert((n.clone(), k), p);
            }
        }
    }
    let chi = chi_square_gof(&observed, &expected, MIN_EXPECTED)?;
    reports.push(TestReport::from_p_value(
        "ballot_sampled",
        chi.statistic,
        chi.p_value,
        config.threshold,
        config.seed,
        config.replicas,
    ));
    Ok(reports)
}

// First passage.

/// Pure-death passage time: mean within the band around `1/λ` and a
/// one-sample KS test against `Exp(λ)`.
pub fn passage_pure_death(rate: f64, config: &VerifyConfig) -> Result<Vec<TestReport>, VerifyError> {
    let nu = laws::pure_death();
    let times: Vec<f64> = replicate(config.replicas, config.threads, |r| {
        sample_first_passage(&nu, &[rate], &[1], f64::INFINITY, config.seed, r as u64)
            .ok()
            .and_then(|(_, fp)| fp.t[0])
    })
    .into_iter()
    .flatten()
    .collect();
    if times.len() < config.replicas {
        return Err(PassageError::InsufficientSamples { resolved: times.len(), wanted: config.replicas }.into());
    }
    let (mean, _) = mean_and_standard_error(&times);
    let n = times.len();
    let exact_se = 1.0 / (rate * (n as f64).sqrt());
    let ks = ks_one_sample(&times, |t| 1.0 - (-rate * t).exp())?;
    Ok(vec![
        mean_report("passage_pure_death_mean", mean, 1.0 / rate, exact_se, config, n),
        TestReport::from_p_value("passage_pure_death_ks", ks.statistic, ks.p_value, config.threshold, config.seed, n),
    ])
}

/// Time bin edges for coordinate `i`, in units of the mean gap `1/λ_i`.
const TIME_EDGES: [f64; 5] = [0.0, 0.5, 1.0, 2.0, 4.0];

fn time_bin(t: f64, scale: f64) -> usize {
    TIME_EDGES.iter().rposition(|&e| t >= e * scale).unwrap_or(0)
}

fn bin_bounds(b: usize, scale: f64) -> (f64, f64) {
    let hi = TIME_EDGES.get(b + 1).map_or(f64::INFINITY, |e| e * scale);
    (TIME_EDGES[b] * scale, hi)
}

/// Off-diagonal entries of `K`, row by row.
fn off_diagonal(k: &[Lattice]) -> Vec<i64> {
    let d = k.len();
    (0..d).flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| k[i][j])).collect()
}

/// `K` with the given off-diagonal entries and column sums `-x`.
fn with_off_diagonal(off: &[i64], x: &[usize]) -> Vec<Lattice> {
    let d = x.len();
    let mut k = vec![vec![0i64; d]; d];
    let mut it = off.iter();
    for (i, row) in k.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            if i != j {
                *v = *it.next().unwrap();
            }
        }
    }
    for j in 0..d {
        let inflow: i64 = (0..d).filter(|&i| i != j).map(|i| k[i][j]).sum();
        k[j][j] = -(x[j] as i64) - inflow;
    }
    k
}

type PassageKey = (Vec<i64>, Vec<usize>);

/// Binned `(T_x, K)` histogram of sampled passages against the density
/// integrated over the bins; every bin not listed is pooled into the tail.
pub fn passage_histogram(model: &Model, x: &[usize], config: &VerifyConfig) -> Result<TestReport, VerifyError> {
    passage_histogram_against(model, model, x, config)
}

/// [`passage_histogram`] with passages sampled from `sampled` and the
/// expected counts taken from `model`.
pub fn passage_histogram_against(
    sampled: &Model,
    model: &Model,
    x: &[usize],
    config: &VerifyConfig,
) -> Result<TestReport, VerifyError> {
    let d = model.nu.d();
    if x.len() != d || model.rates.len() != d {
        return Err(VerifyError::Dimension { expected: d, got: x.len().min(model.rates.len()) });
    }
    if sampled.nu.d() != d || sampled.rates.len() != d {
        return Err(VerifyError::Dimension { expected: d, got: sampled.nu.d().min(sampled.rates.len()) });
    }
    let mut law = PassageLaw::new(&model.nu, &model.rates, x)?;
    let (_, mu) = crate::distributions::shift_and_jump(&model.nu)?;
    let scales: Vec<f64> = (0..d).map(|i| 1.0 / mu.jump_rate(i, model.rates[i])).collect();
    let draws: Vec<Option<PassageKey>> = replicate(config.replicas, config.threads, |r| {
        let (_, fp) = sample_first_passage(&sampled.nu, &sampled.rates, x, 1e4, config.seed, r as u64).ok()?;
        let t = fp.times()?;
        Some((off_diagonal(&fp.terminal), (0..d).map(|i| time_bin(t[i], scales[i])).collect()))
    });
    let samples: Vec<PassageKey> = draws.into_iter().flatten().collect();
    if samples.len() < config.replicas {
        return Err(PassageError::InsufficientSamples { resolved: samples.len(), wanted: config.replicas }.into());
    }
    let observed = counts(samples);

    let max_entry: i64 = if d <= 2 { 10 } else { 3 };
    let entries = d * (d - 1);
    let bins = TIME_EDGES.len();
    let mut factors: HashMap<(usize, Lattice, usize), f64> = HashMap::new();
    let mut expected: BTreeMap<PassageKey, f64> = BTreeMap::new();
    let mut off = vec![0i64; entries];
    loop {
        let k = with_off_diagonal(&off, x);
        if law.in_support(&k) {
            let mut bin = vec![0usize; d];
            loop {
                let mut p = crate::discrete::bareiss_determinant(
                    &k.iter().map(|row| row.iter().map(|v| -v).collect()).collect::<Vec<_>>(),
                ) as f64;
                for i in 0..d {
                    if p == 0.0 {
                        break;
                    }
                    let key = (i, k[i].clone(), bin[i]);
                    let f = match factors.get(&key) {
                        Some(&f) => f,
                        None => {
                            let (a, b) = bin_bounds(bin[i], scales[i]);
                            let f = law.factor_integral(i, &k[i], a, b);
                            factors.insert(key, f);
                            f
                        }
                    };
                    p *= f;
                }
                if p > 0.0 {
                    expected.insert((off.clone(), bin.clone()), p);
                }
                if !advance(&mut bin, bins - 1) {
                    break;
                }
            }
        }
        if !advance_i64(&mut off, max_entry) {
            break;
        }
    }
    let chi = chi_square_gof(&observed, &expected, MIN_EXPECTED)?;
    Ok(TestReport::from_p_value(
        "passage_histogram",
        chi.statistic,
        chi.p_value,
        config.threshold,
        config.seed,
        config.replicas,
    ))
}

fn advance(v: &mut [usize], max: usize) -> bool {
    for e in v.iter_mut() {
        if *e < max {
            *e += 1;
            return true;
        }
        *e = 0;
    }
    false
}

fn advance_i64(v: &mut [i64], max: i64) -> bool {
    for e in v.iter_mut() {
        if *e < max {
            *e += 1;
            return true;
        }
        *e = 0;
    }
    false
}

pub fn passage(model: &Model, config: &VerifyConfig) -> Result<Vec<TestReport>, VerifyError> {
    let mut reports = passage_pure_death(1.5, config)?;
    let x = vec![1; model.nu.d()];
    reports.push(passage_histogram(model, &x, config)?);
    Ok(reports)
}

/// `T_{x+y}` against `T_x + T̃_y` with `x = y = e_1`.
pub fn additivity(model: &Model, config: &VerifyConfig) -> Result<Vec<TestReport>, VerifyError> {
    let x = unit(model.nu.d(), 0);
    Ok(additivity_check(&model.nu, &model.rates, &x, &x, config.replicas, config.seed, config.passage())?)
}

// Discretization.

/// Offspring of the type-`i` vertices of generation 1 in `D_δ(F)`, `F`
/// started from `e_i`, against `Z_δ` from `e_i` solved from compound Poisson
/// paths, by a two-sample chi-square test per type.
pub fn discretization_progeny(model: &Model, delta: f64, config: &VerifyConfig) -> Result<Vec<TestReport>, VerifyError> {
    let d = model.nu.d();
    let mut reports = Vec::with_capacity(d);
    for i in 0..d {
        let start = unit(d, i);
        let pooled: Vec<Vec<Lattice>> = replicate(config.replicas, config.threads, |r| {
            let Ok(sampled) =
                sample_edge_length_forest(&model.nu, &model.rates, &start, SampleCaps::default(), config.seed, r as u64)
            else {
                return Vec::new();
            };
            let Ok(slices) = discretize(&sampled.forest, delta) else { return Vec::new() };
            let generations = slices.generations();
            slices
                .vertices()
                .iter()
                .zip(&generations)
                .filter(|(v, &g)| g == 1 && v.ty == i)
                .map(|(v, _)| v.offspring.iter().map(|&c| c as i64).collect())
                .collect()
        });
        let lamperti: Vec<Option<Lattice>> = replicate(config.replicas, config.threads, |r| {
            let (paths, _) = sample_first_passage(&model.nu, &model.rates, &start, 1e4, config.seed, r as u64).ok()?;
            let path = lamperti_solve(&paths, &start).ok()?;
            Some(path.state_at(delta).z.clone())
        });
        let a = counts(pooled.into_iter().flatten());
        let b = counts(lamperti.into_iter().flatten());
        let chi = chi_square_two_sample(&a, &b, MIN_EXPECTED)?;
        reports.push(TestReport::from_p_value(
            format!("discretization_progeny_T{}", i + 1),
            chi.statistic,
            chi.p_value,
            config.threshold,
            config.seed,
            config.replicas,
        ));
    }
    Ok(reports)
}

/// Generation counts of `D_δ(f)` against `Z(nδ)` of `f`, with `δ` half the
/// minimal event gap, on `forests` sampled forests of at most 40 vertices
/// whose minimal gap is at least `1e-3`.
pub fn discretization_counts(model: &Model, forests: usize, config: &VerifyConfig) -> TestReport {
    let roots = default_roots(model.nu.d());
    let caps = SampleCaps { max_vertices: 40, ..SampleCaps::default() };
    let mut failures = 0;
    let mut found = 0;
    let mut replica = 0u64;
    while found < forests && replica < 1000 * forests as u64 {
        let sampled = sample_edge_length_forest(&model.nu, &model.rates, &roots, caps, config.seed, replica);
        replica += 1;
        let Ok(sampled) = sampled else { break };
        let f = sampled.forest;
        let gap = f.min_event_gap();
        if sampled.truncated || gap < 1e-3 {
            continue;
        }
        found += 1;
        let delta = gap / 2.0;
        let ok = discretize(&f, delta).is_ok_and(|slices| {
            let alive = alive_trajectory(&f);
            generation_counts(&slices)
                .iter()
                .enumerate()
                .all(|(n, z)| alive.state_at(n as f64 * delta).z == *z)
                && alive.state_at(generation_counts(&slices).len() as f64 * delta).z.iter().all(|&v| v == 0)
        });
        failures += usize::from(!ok);
    }
    failures += forests - found;
    TestReport::exact("discretization_generation_counts", failures, config.seed, forests)
}

fn generation_counts(f: &TypedForest) -> Vec<Vec<i64>> {
    let mut out: Vec<Vec<i64>> = Vec::new();
    for (v, g) in f.vertices().iter().zip(f.generations()) {
        if out.len() <= g {
            out.resize(g + 1, vec![0; f.d()]);
        }
        out[g][v.ty] += 1;
    }
    out
}

pub fn discretization(model: &Model, config: &VerifyConfig) -> Result<Vec<TestReport>, VerifyError> {
    let mut reports = discretization_progeny(model, 0.1, config)?;
    reports.push(discretization_counts(model, 100, config));
    Ok(reports)
}

// Extinction and criticality.

/// Vertex cap beyond which a supercritical run counts as surviving.
pub const SURVIVAL_CAP: usize = 1_000;

pub fn extinction(config: &VerifyConfig) -> Result<Vec<TestReport>, VerifyError> {
    let nu = laws::supercritical_binary();
    let q = extinction_vector(&nu)[0];
    let exact = 1.0 / 3.0;
    let caps = SampleCaps { max_vertices: SURVIVAL_CAP, ..SampleCaps::default() };
    let extinct = replicate(config.replicas, config.threads, |r| {
        !sample_forest_seeded(&nu, &[1], caps, config.seed, r as u64).truncated
    })
    .into_iter()
    .filter(|&e| e)
    .count();
    let n = config.replicas;
    let frequency = extinct as f64 / n as f64;
    let se = (exact * (1.0 - exact) / n as f64).sqrt();
    let rho = criticality(&laws::swap_pairs())?.perron_root;
    Ok(vec![
        TestReport::from_error("extinction_vector", q, (q - exact).abs(), VALUE_TOLERANCE, config.seed, 0),
        TestReport::from_error(
            "extinction_frequency",
            binomial_z(extinct, n, exact),
            (frequency - exact).abs(),
            config.sigmas * se,
            config.seed,
            n,
        ),
        TestReport::from_error("perron_root", rho, (rho - 2.0).abs(), VALUE_TOLERANCE, config.seed, 0),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(replicas: usize) -> VerifyConfig {
        VerifyConfig::new(replicas, 11)
    }

    #[test]
    fn suite_names_parse() {
        for suite in Suite::ALL {
            assert_eq!(suite.name().parse::<Suite>().unwrap(), suite);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn off_diagonal_round_trip() {
        let k = with_off_diagonal(&[3, 1], &[1, 2]);
        assert_eq!(k, vec![vec![-2, 3], vec![1, -5]]);
        assert_eq!(off_diagonal(&k), vec![3, 1]);
    }

    #[test]
    fn time_bins() {
        assert_eq!(time_bin(0.0, 2.0), 0);
        assert_eq!(time_bin(1.0, 2.0), 1);
        assert_eq!(time_bin(100.0, 2.0), 4);
        assert_eq!(bin_bounds(4, 2.0), (8.0, f64::INFINITY));
    }

    #[test]
    fn small_suites_pass() {
        let model = Model::default();
        for report in roundtrip(&model, &quick(50)) {
            assert!(report.pass, "{report}");
        }
        assert!(enumerated_bijection(&[vec![1, 1]], 4).pass);
        assert!(smallest_solution_minimality(200, 3).pass);
        assert!(discrete_lamperti(&model, &quick(50)).pass);
        assert!(discretization_counts(&model, 10, &quick(0)).pass);
    }
}
