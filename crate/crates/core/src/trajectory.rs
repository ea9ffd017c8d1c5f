//! Uniformly sampled state sequences.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// A sequence of `dim`-dimensional states sampled every `dt` starting at `t0`.
///
/// States are stored contiguously, row-major: state `i` occupies
/// `data[i * dim..(i + 1) * dim]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory<T> {
    dim: usize,
    dt: T,
    t0: T,
    data: Vec<T>,
}

impl<T: Scalar> Trajectory<T> {
    /// Starts a trajectory from a single initial state.
    pub fn from_initial(initial: &[T], dt: T, t0: T) -> Self {
        assert!(!initial.is_empty(), "state dimension must be at least one");
        Self {
            dim: initial.len(),
            dt,
            t0,
            data: initial.to_vec(),
        }
    }

    /// Builds a trajectory from a list of states of equal length.
    pub fn from_states<S: AsRef<[T]>>(states: &[S], dt: T, t0: T) -> Self {
        assert!(!states.is_empty(), "trajectory must hold at least one state");
        let dim = states[0].as_ref().len();
        let mut data = Vec::with_capacity(dim * states.len());
        for s in states {
            let s = s.as_ref();
            assert_eq!(s.len(), dim, "all states must share one dimension");
            data.extend_from_slice(s);
        }
        Self { dim, dt, t0, data }
    }

    /// Builds a one-dimensional trajectory from a scalar series.
    pub fn from_series(series: &[T], dt: T, t0: T) -> Self {
        assert!(!series.is_empty(), "trajectory must hold at least one state");
        Self {
            dim: 1,
            dt,
            t0,
            data: series.to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn t0(&self) -> T {
        self.t0
    }

    /// Number of states.
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn state(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn last(&self) -> &[T] {
        self.state(self.len() - 1)
    }

    pub fn time(&self, i: usize) -> T {
        self.t0 + self.dt * T::from_count(i)
    }

    pub fn states(&self) -> impl ExactSizeIterator<Item = &[T]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn push(&mut self, state: &[T]) {
        assert_eq!(state.len(), self.dim);
        self.data.extend_from_slice(state);
    }

    /// Keeps the first `len` states.
    pub fn truncate(&mut self, len: usize) {
        self.data.truncate(len * self.dim);
    }

    /// Copies states `start..end` into a new trajectory with the matching start time.
    pub fn slice(&self, start: usize, end: usize) -> Self {
        assert!(start < end && end <= self.len(), "invalid slice {start}..{end}");
        Self {
            dim: self.dim,
            dt: self.dt,
            t0: self.time(start),
            data: self.data[start * self.dim..end * self.dim].to_vec(),
        }
    }

    /// Scalar series of one state component.
    pub fn component(&self, index: usize) -> Vec<T> {
        assert!(index < self.dim, "component {index} out of range");
        self.states().map(|s| s[index]).collect()
    }

    pub fn as_flat(&self) -> &[T] {
        &self.data
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_and_slicing() {
        let mut tr = Trajectory::from_initial(&[1.0, 2.0], 0.5, 1.0);
        tr.push(&[3.0, 4.0]);
        tr.push(&[5.0, 6.0]);
        assert_eq!(tr.len(), 3);
        assert_eq!(tr.state(1), &[3.0, 4.0]);
        assert_eq!(tr.component(1), vec![2.0, 4.0, 6.0]);
        let s = tr.slice(1, 3);
        assert_eq!(s.t0(), 1.5);
        assert_eq!(s.state(0), &[3.0, 4.0]);
        tr.truncate(1);
        assert_eq!(tr.last(), &[1.0, 2.0]);
    }
}
