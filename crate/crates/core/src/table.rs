//! Value functions tabulated at the decision times of a partition.

use crate::error::{Error, Result};
use crate::linalg;

/// `values[n][k]` is the value at time `times[n]` and point `k` (a state, a
/// belief-grid point or a state-grid node, depending on the producer). The
/// last time is the truncation horizon. Between times the table is linear.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl ValueTable {
    pub fn new(times: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        if times.len() != values.len() || times.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                got: values.len(),
            });
        }
        let width = values[0].len();
        if let Some(row) = values.iter().find(|r| r.len() != width) {
            return Err(Error::DimensionMismatch {
                expected: width,
                got: row.len(),
            });
        }
        Ok(ValueTable { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn at_node(&self, n: usize) -> &[f64] {
        &self.values[n]
    }

    /// Values at `t = 0`.
    pub fn initial(&self) -> &[f64] {
        &self.values[0]
    }

    pub fn num_points(&self) -> usize {
        self.values[0].len()
    }

    /// Linear interpolation in time; constant outside the tabulated range.
    pub fn value_at(&self, t: f64, k: usize) -> f64 {
        let (n, w) = self.locate(t);
        if w == 0.0 {
            self.values[n][k]
        } else {
            (1.0 - w) * self.values[n][k] + w * self.values[n + 1][k]
        }
    }

    pub fn slice_at(&self, t: f64) -> Vec<f64> {
        (0..self.num_points())
            .map(|k| self.value_at(t, k))
            .collect()
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let last = self.times.len() - 1;
        if t <= self.times[0] {
            return (0, 0.0);
        }
        if t >= self.times[last] {
            return (last, 0.0);
        }
        let n = self.times.partition_point(|&x| x <= t) - 1;
        let w = (t - self.times[n]) / (self.times[n + 1] - self.times[n]);
        (n, w)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values
            .iter()
            .map(|r| linalg::sup_norm(r))
            .fold(0.0, f64::max)
    }

    /// Largest difference quotient `|v(t_{n+1}, k) − v(t_n, k)| / δ_n`.
    pub fn max_time_quotient(&self) -> f64 {
        let mut best: f64 = 0.0;
        for n in 0..self.times.len() - 1 {
            let dt = self.times[n + 1] - self.times[n];
            let d = linalg::sup_dist(&self.values[n], &self.values[n + 1]);
            best = best.max(d / dt);
        }
        best
    }

    /// Sup-norm distance to a table of identical shape.
    pub fn sup_diff(&self, other: &ValueTable) -> Result<f64> {
        if self.values.len() != other.values.len() || self.num_points() != other.num_points() {
            return Err(Error::DimensionMismatch {
                expected: self.values.len() * self.num_points(),
                got: other.values.len() * other.num_points(),
            });
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| linalg::sup_dist(a, b))
            .fold(0.0, f64::max))
    }
}

/// Interpolation weights of a point over the vertices of its grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
}

impl Stencil {
    pub fn apply(&self, values: &[f64]) -> f64 {
        self.indices
            .iter()
            .zip(&self.weights)
            .map(|(&k, &w)| w * values[k])
            .sum()
    }
}
