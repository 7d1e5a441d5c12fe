use rand::Rng;
use thiserror::Error;

use super::paths::{JumpPathSet, JumpStream};
use crate::distributions::Lattice;
use crate::forest::{EdgeLengthForest, ForestBuilder, ForestError};
use crate::trajectory::PopulationTrajectory;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("start vector has length {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("streams ran out at calendar time {t} with population {z:?} still alive")]
    Exhausted { t: f64, z: Vec<i64> },
    #[error("negative population {z:?} at calendar time {t}")]
    NegativePopulation { t: f64, z: Vec<i64> },
    #[error(transparent)]
    Forest(#[from] ForestError),
}

/// Neumaier compensated sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn set(&mut self, x: f64) {
        self.sum = x;
        self.compensation = 0.0;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Drives the time change: internal clock `θ_i` runs at speed `Z^{(i)}`, and
/// the next jump of stream `i` fires once `θ_i` reaches its internal time.
/// `on_event(i, jump, t)` is called for every jump, in calendar order; ties
/// go to the smallest type.
fn event_loop(
    p: &JumpPathSet,
    x: &[usize],
    mut on_event: impl FnMut(usize, &Lattice, f64),
) -> Result<PopulationTrajectory, SolveError> {
    let d = p.d;
    if x.len() != d {
        return Err(SolveError::Dimension { expected: d, got: x.len() });
    }
    let start: Vec<i64> = x.iter().map(|&v| v as i64).collect();
    let mut path = PopulationTrajectory::start(&start);
    let mut zmat = path.events[0].zmat.clone();
    let mut z = start;
    let mut clock = vec![CompensatedSum::default(); d];
    let mut next = vec![0usize; d];
    let mut t = CompensatedSum::default();
    loop {
        let mut best: Option<(f64, usize)> = None;
        for i in 0..d {
            if z[i] > 0 && next[i] < p.streams[i].len() {
                let wait = ((p.streams[i].times[next[i]] - clock[i].value()) / z[i] as f64).max(0.0);
                if best.is_none_or(|(w, _)| wait < w) {
                    best = Some((wait, i));
                }
            }
        }
        let Some((wait, i)) = best else { break };
        for j in 0..d {
            if j != i {
                clock[j].add(z[j] as f64 * wait);
            }
        }
        clock[i].set(p.streams[i].times[next[i]]);
        t.add(wait);
        let now = t.value();
        let jump = &p.streams[i].jumps[next[i]];
        next[i] += 1;
        for j in 0..d {
            zmat[i][j] += jump[j];
            z[j] += jump[j];
        }
        if z.iter().any(|&v| v < 0) {
            return Err(SolveError::NegativePopulation { t: now, z });
        }
        on_event(i, jump, now);
        path.record(now, &zmat);
    }
    if z.iter().any(|&v| v != 0) {
        return Err(SolveError::Exhausted { t: t.value(), z });
    }
    Ok(path)
}

/// Solves `Z^{i,j}(t) = x_i 1{i=j} + X^{i,j}(∫_0^t Z^{(i)}(s) ds)` for paths
/// stopped at the first passage at `-x`.
pub fn lamperti_solve(p: &JumpPathSet, x: &[usize]) -> Result<PopulationTrajectory, SolveError> {
    event_loop(p, x, |_, _, _| {})
}

/// Reads the compound Poisson paths off an edge-length forest: a type-`i`
/// death with offspring `k` at calendar time `σ` is a jump `k - e_i` of
/// stream `i` at internal time `∫_0^σ Z^{(i)}`. Self-replacements (`k = e_i`)
/// are not jumps. Stop markers are the total branch lengths per type.
pub fn extract_paths(f: &EdgeLengthForest) -> JumpPathSet {
    let d = f.d();
    let skeleton = f.skeleton();
    let deaths = f.death_times();
    let mut order: Vec<usize> = (0..deaths.len()).collect();
    order.sort_by(|&a, &b| deaths[a].total_cmp(&deaths[b]).then(a.cmp(&b)));
    let mut z: Vec<i64> = skeleton.roots().iter().map(|&r| r as i64).collect();
    let mut clock = vec![CompensatedSum::default(); d];
    let mut now = 0.0;
    let mut streams = vec![JumpStream { times: Vec::new(), jumps: Vec::new(), horizon: 0.0, stop: None }; d];
    for idx in order {
        let sigma = deaths[idx];
        let span = sigma - now;
        if span > 0.0 {
            for j in 0..d {
                clock[j].add(z[j] as f64 * span);
            }
            now = sigma;
        }
        let v = &skeleton.vertices()[idx];
        let mut jump: Lattice = v.offspring.iter().map(|&c| c as i64).collect();
        jump[v.ty] -= 1;
        for j in 0..d {
            z[j] += jump[j];
        }
        if jump.iter().any(|&c| c != 0) {
            streams[v.ty].times.push(clock[v.ty].value());
            streams[v.ty].jumps.push(jump);
        }
    }
    for (i, s) in streams.iter_mut().enumerate() {
        let total = clock[i].value();
        s.horizon = total;
        s.stop = Some(total);
    }
    JumpPathSet { d, rates: None, streams }
}

/// Builds an edge-length forest whose paths are `p`: at each type-`i` event
/// a uniformly chosen alive type-`i` individual dies with offspring
/// `jump + e_i`.
pub fn reconstruct_forest<R: Rng + ?Sized>(
    p: &JumpPathSet,
    x: &[usize],
    rng: &mut R,
) -> Result<EdgeLengthForest, SolveError> {
    let d = p.d;
    let mut builder = ForestBuilder::new(d);
    let mut birth: Vec<f64> = Vec::new();
    let mut death: Vec<f64> = Vec::new();
    let mut alive: Vec<Vec<usize>> = vec![Vec::new(); d];
    for (ty, &count) in x.iter().enumerate() {
        for _ in 0..count {
            alive[ty].push(builder.add_root(ty));
            birth.push(0.0);
            death.push(f64::NAN);
        }
    }
    event_loop(p, x, |i, jump, t| {
        let pick = rng.random_range(0..alive[i].len());
        let u = alive[i].swap_remove(pick);
        death[u] = t;
        for ty in 0..d {
            let count = jump[ty] + i64::from(ty == i);
            for _ in 0..count {
                alive[ty].push(builder.add_child(u, ty));
                birth.push(t);
                death.push(f64::NAN);
            }
        }
    })?;
    let (skeleton, order) = builder.build();
    let lifetimes = order.iter().map(|&id| death[id] - birth[id]).collect();
    Ok(EdgeLengthForest::new(skeleton, lifetimes)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::{alive_trajectory, TypedForest};
    use crate::stats::replica_rng;

    fn one_jump(t: f64) -> JumpPathSet {
        JumpPathSet {
            d: 1,
            rates: None,
            streams: vec![JumpStream { times: vec![t], jumps: vec![vec![-1]], horizon: t, stop: Some(t) }],
        }
    }

    #[test]
    fn zero_start_has_no_events() {
        let path = lamperti_solve(&one_jump(1.0), &[0]).unwrap();
        assert_eq!(path.events.len(), 1);
        assert_eq!(path.final_state().z, vec![0]);
    }

    #[test]
    fn unit_population_runs_in_calendar_time() {
        let path = lamperti_solve(&one_jump(0.7), &[1]).unwrap();
        assert_eq!(path.events.len(), 2);
        assert_eq!(path.events[1].t, 0.7);
        assert_eq!(path.events[1].z, vec![0]);
    }

    #[test]
    fn single_root_round_trip() {
        let f = EdgeLengthForest::new(TypedForest::new(2, &[(1, None)]).unwrap(), vec![1.25]).unwrap();
        let p = extract_paths(&f);
        assert_eq!(p.streams[1].times, vec![1.25]);
        assert_eq!(p.streams[1].jumps, vec![vec![0, -1]]);
        assert_eq!(p.streams[1].stop, Some(1.25));
        assert_eq!(p.streams[0].stop, Some(0.0));
        let g = reconstruct_forest(&p, &[0, 1], &mut replica_rng(0, 0, 0)).unwrap();
        assert_eq!(g, f);
    }

    #[test]
    fn exhausted_streams_are_reported() {
        assert!(matches!(lamperti_solve(&one_jump(1.0), &[2]), Err(SolveError::Exhausted { .. })));
    }

    #[test]
    fn figure_forest_paths() {
        let f = crate::forest::edge::tests::figure_forest();
        let p = extract_paths(&f);
        let deaths_by_type = |ty: usize| {
            let unit: Vec<usize> = (0..2).map(|j| usize::from(j == ty)).collect();
            f.skeleton().vertices().iter().filter(|v| v.ty == ty && v.offspring != unit).count()
        };
        assert_eq!(p.streams[0].len(), deaths_by_type(0));
        assert_eq!(p.streams[1].len(), deaths_by_type(1));
        let k = p.terminal_matrix();
        for j in 0..2 {
            assert_eq!(k[0][j] + k[1][j], -2);
        }
        let stops: Vec<f64> = p.streams.iter().map(|s| s.stop.unwrap()).collect();
        let lengths = f.branch_lengths();
        for i in 0..2 {
            assert!((stops[i] - lengths[i]).abs() < 1e-12);
        }
        let path = lamperti_solve(&p, &[2, 2]).unwrap();
        path.matches(&alive_trajectory(&f), 1e-12).unwrap();
    }
}
