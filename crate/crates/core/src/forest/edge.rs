use super::{ForestError, TypedForest};
use crate::trajectory::PopulationTrajectory;

/// A [`TypedForest`] whose vertices carry strictly positive lifetimes.
///
/// Roots are born at time 0; a child is born when its parent dies, i.e. at
/// `birth(parent) + lifetime(parent)`. A vertex is alive on
/// `[birth, birth + lifetime)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeLengthForest {
    skeleton: TypedForest,
    lifetimes: Vec<f64>,
}

impl EdgeLengthForest {
    pub fn new(skeleton: TypedForest, lifetimes: Vec<f64>) -> Result<Self, ForestError> {
        let report = skeleton.validate();
        if !report.is_valid() {
            return Err(ForestError::Invalid(report));
        }
        if lifetimes.len() != skeleton.len() {
            return Err(ForestError::LifetimeCount { expected: skeleton.len(), got: lifetimes.len() });
        }
        if let Some((vertex, &value)) =
            lifetimes.iter().enumerate().find(|(_, l)| !(l.is_finite() && **l > 0.0))
        {
            return Err(ForestError::BadLifetime { vertex, value });
        }
        Ok(EdgeLengthForest { skeleton, lifetimes })
    }

    pub fn skeleton(&self) -> &TypedForest {
        &self.skeleton
    }

    pub fn lifetimes(&self) -> &[f64] {
        &self.lifetimes
    }

    pub fn d(&self) -> usize {
        self.skeleton.d()
    }

    pub fn birth_times(&self) -> Vec<f64> {
        let mut birth = vec![0.0; self.lifetimes.len()];
        for (idx, v) in self.skeleton.vertices().iter().enumerate() {
            if let Some(p) = v.parent {
                birth[idx] = birth[p] + self.lifetimes[p];
            }
        }
        birth
    }

    pub fn death_times(&self) -> Vec<f64> {
        self.birth_times().iter().zip(&self.lifetimes).map(|(b, l)| b + l).collect()
    }

    /// Smallest positive gap between distinct birth/death times (including 0).
    pub fn min_event_gap(&self) -> f64 {
        let mut times: Vec<f64> = self.death_times();
        times.push(0.0);
        times.sort_by(f64::total_cmp);
        times.dedup();
        times.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }

    /// Total branch length of each type.
    pub fn branch_lengths(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.d()];
        for (v, l) in self.skeleton.vertices().iter().zip(&self.lifetimes) {
            out[v.ty] += l;
        }
        out
    }
}

/// The alive-population path of an edge-length forest.
///
/// `Z^{(i)}(t)` counts type-`i` vertices alive at `t`; row `i` of the
/// decomposition starts at `r_i e_i` and each death of a type-`i` vertex adds
/// its offspring vector minus `e_i` (children are born at that instant).
/// Deaths at the same instant are merged and deaths that leave the state
/// unchanged (one child of the parent's own type) produce no event.
pub fn alive_trajectory(f: &EdgeLengthForest) -> PopulationTrajectory {
    let d = f.d();
    let skeleton = f.skeleton();
    let x: Vec<i64> = skeleton.roots().iter().map(|&r| r as i64).collect();
    let mut path = PopulationTrajectory::start(&x);
    let deaths = f.death_times();
    let mut order: Vec<usize> = (0..deaths.len()).collect();
    order.sort_by(|&a, &b| deaths[a].total_cmp(&deaths[b]).then(a.cmp(&b)));
    let mut zmat = path.events[0].zmat.clone();
    for idx in order {
        let v = &skeleton.vertices()[idx];
        for j in 0..d {
            zmat[v.ty][j] += v.offspring[j] as i64;
        }
        zmat[v.ty][v.ty] -= 1;
        path.record(deaths[idx], &zmat);
    }
    path
}

/// Slices the forest at depths `0, δ, 2δ, ...`.
///
/// Generation `n` of the result holds one vertex for every original vertex
/// alive at `nδ`, with the same type. A vertex at depth `nδ` is the parent of
/// the vertices at depth `(n+1)δ` on the same branch; sibling groups are
/// sorted by type, then by original storage index.
pub fn discretize(f: &EdgeLengthForest, delta: f64) -> Result<TypedForest, ForestError> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(ForestError::BadSpan(delta));
    }
    let skeleton = f.skeleton();
    let deaths = f.death_times();
    let children = skeleton.children();
    let types: Vec<usize> = skeleton.vertices().iter().map(|v| v.ty).collect();

    // (original vertex, parent slot in output)
    let mut slots: Vec<(usize, Option<usize>)> = Vec::new();
    let mut generation: Vec<usize> =
        (0..skeleton.len()).filter(|&u| skeleton.vertices()[u].parent.is_none()).collect();
    for &u in &generation {
        slots.push((u, None));
    }
    let mut level_start = 0;
    let mut n = 0u64;
    let mut stack = Vec::new();
    while !generation.is_empty() {
        n += 1;
        let depth = n as f64 * delta;
        let mut next = Vec::new();
        for (k, &u) in generation.iter().enumerate() {
            let parent_slot = level_start + k;
            let mut alive = Vec::new();
            stack.push(u);
            while let Some(w) = stack.pop() {
                if depth < deaths[w] {
                    alive.push(w);
                } else {
                    stack.extend(children[w].iter().copied());
                }
            }
            alive.sort_by_key(|&w| (types[w], w));
            for w in alive {
                slots.push((w, Some(parent_slot)));
                next.push(w);
            }
        }
        level_start += generation.len();
        generation = next;
    }
    let records: Vec<_> = slots.iter().map(|&(u, p)| (types[u], p)).collect();
    Ok(TypedForest::from_records(skeleton.d(), &records))
}
