//! Piecewise-constant population paths `Z(t)` with their `d x d` decomposition.

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryEvent {
    pub t: f64,
    pub z: Vec<i64>,
    pub zmat: Vec<Vec<i64>>,
}

/// Right-continuous step path. `events[0]` is the initial state at `t = 0`;
/// each later event is a time where the state changes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopulationTrajectory {
    pub x: Vec<i64>,
    pub events: Vec<TrajectoryEvent>,
}

impl PopulationTrajectory {
    pub(crate) fn start(x: &[i64]) -> Self {
        let d = x.len();
        let mut zmat = vec![vec![0i64; d]; d];
        for (i, row) in zmat.iter_mut().enumerate() {
            row[i] = x[i];
        }
        PopulationTrajectory {
            x: x.to_vec(),
            events: vec![TrajectoryEvent { t: 0.0, z: x.to_vec(), zmat }],
        }
    }

    /// Records a new state at time `t`. A state recorded at the same time
    /// as the previous one replaces it; a state equal to the previous one is
    /// dropped.
    pub(crate) fn record(&mut self, t: f64, zmat: &[Vec<i64>]) {
        let d = zmat.len();
        let z: Vec<i64> = (0..d).map(|j| (0..d).map(|i| zmat[i][j]).sum()).collect();
        let len = self.events.len();
        if let Some(last) = self.events.last_mut() {
            if last.t == t && len > 1 {
                last.z = z;
                last.zmat = zmat.to_vec();
                let n = self.events.len();
                if self.events[n - 2].zmat == self.events[n - 1].zmat {
                    self.events.pop();
                }
                return;
            }
            if last.zmat == zmat {
                return;
            }
        }
        self.events.push(TrajectoryEvent { t, z, zmat: zmat.to_vec() });
    }

    pub fn d(&self) -> usize {
        self.x.len()
    }

    /// The state in force at time `t` (the last event with time `<= t`).
    pub fn state_at(&self, t: f64) -> &TrajectoryEvent {
        let idx = self.events.partition_point(|e| e.t <= t);
        &self.events[idx.saturating_sub(1)]
    }

    pub fn final_state(&self) -> &TrajectoryEvent {
        self.events.last().expect("trajectory always has an initial state")
    }

    /// Checks the structural invariants: column sums of `zmat` equal `z`,
    /// populations are nonnegative and event times strictly increase.
    pub fn check_invariants(&self) -> Result<(), String> {
        let d = self.d();
        for (k, e) in self.events.iter().enumerate() {
            for j in 0..d {
                let col: i64 = (0..d).map(|i| e.zmat[i][j]).sum();
                if col != e.z[j] {
                    return Err(format!("event {k}: column {j} sums to {col}, Z is {}", e.z[j]));
                }
                if e.z[j] < 0 {
                    return Err(format!("event {k}: negative population"));
                }
            }
            if k > 0 && self.events[k - 1].t >= e.t {
                return Err(format!("event {k}: time not increasing"));
            }
        }
        Ok(())
    }

    /// Same states in the same order, with event times within `tol`.
    pub fn matches(&self, other: &PopulationTrajectory, tol: f64) -> Result<(), String> {
        if self.x != other.x {
            return Err("initial states differ".into());
        }
        if self.events.len() != other.events.len() {
            return Err(format!(
                "event counts differ: {} vs {}",
                self.events.len(),
                other.events.len()
            ));
        }
        for (k, (a, b)) in self.events.iter().zip(&other.events).enumerate() {
            if (a.t - b.t).abs() > tol {
                return Err(format!("event {k}: times {} vs {}", a.t, b.t));
            }
            if a.zmat != b.zmat || a.z != b.z {
                return Err(format!("event {k}: states differ"));
            }
        }
        Ok(())
    }

    /// Largest absolute event-time difference against a structurally equal path.
    pub fn max_time_error(&self, other: &PopulationTrajectory) -> f64 {
        self.events
            .iter()
            .zip(&other.events)
            .map(|(a, b)| (a.t - b.t).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_merges_and_drops() {
        let mut p = PopulationTrajectory::start(&[1]);
        p.record(1.0, &[vec![1]]);
        assert_eq!(p.events.len(), 1);
        p.record(1.0, &[vec![2]]);
        p.record(1.0, &[vec![3]]);
        assert_eq!(p.events.len(), 2);
        assert_eq!(p.events[1].z, vec![3]);
        p.record(2.0, &[vec![0]]);
        assert_eq!(p.state_at(1.5).z, vec![3]);
        assert_eq!(p.state_at(2.0).z, vec![0]);
        assert_eq!(p.state_at(0.5).z, vec![1]);
        assert!(p.check_invariants().is_ok());
    }
}
