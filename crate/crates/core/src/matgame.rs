//! Value and optimal mixed strategies of finite zero-sum matrix games.
//!
//! The row player maximizes. After shifting the matrix so every entry is at
//! least one, the game reduces to the linear program
//!
//! ```text
//! maximize  Σ_j q_j   subject to  M' q ≤ 1,  q ≥ 0
//! ```
//!
//! whose optimum is `1 / val(M')`. The column strategy is `q` rescaled, the
//! row strategy comes from the dual prices of the slack columns. Pivoting uses
//! Bland's rule, so the method terminates on degenerate games.

use crate::error::{Error, Result};
use crate::linalg::Matrix;

const PIVOT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixGameSolution {
    pub value: f64,
    /// Optimal strategy of the maximizing row player.
    pub x: Vec<f64>,
    /// Optimal strategy of the minimizing column player.
    pub y: Vec<f64>,
}

impl MatrixGameSolution {
    /// `(min_j x·M[:,j], max_i M[i,:]·y)`: guaranteed payoffs of the two
    /// strategies, bracketing the value.
    pub fn certificate(&self, m: &Matrix) -> (f64, f64) {
        certificate(m, &self.x, &self.y)
    }
}

fn certificate(m: &Matrix, x: &[f64], y: &[f64]) -> (f64, f64) {
    let lower = m.left_mul_vec(x).into_iter().fold(f64::INFINITY, f64::min);
    let upper = m.mul_vec(y).into_iter().fold(f64::NEG_INFINITY, f64::max);
    (lower, upper)
}

/// `(max_i min_j M, min_j max_i M)` over pure actions, with the maximizing
/// row and minimizing column.
pub fn pure_bounds(m: &Matrix) -> ((f64, usize), (f64, usize)) {
    let mut maxmin = (f64::NEG_INFINITY, 0);
    for i in 0..m.rows() {
        let row_min = m.row(i).iter().copied().fold(f64::INFINITY, f64::min);
        if row_min > maxmin.0 {
            maxmin = (row_min, i);
        }
    }
    let mut minmax = (f64::INFINITY, 0);
    for j in 0..m.cols() {
        let col_max = (0..m.rows())
            .map(|i| m[(i, j)])
            .fold(f64::NEG_INFINITY, f64::max);
        if col_max < minmax.0 {
            minmax = (col_max, j);
        }
    }
    (maxmin, minmax)
}

pub fn solve(m: &Matrix) -> Result<MatrixGameSolution> {
    let (rows, cols) = (m.rows(), m.cols());
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidArgument("empty payoff matrix".into()));
    }
    for i in 0..rows {
        for j in 0..cols {
            if !m[(i, j)].is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }

    let ((lo, row), (hi, col)) = pure_bounds(m);
    if lo == hi {
        let mut x = vec![0.0; rows];
        let mut y = vec![0.0; cols];
        x[row] = 1.0;
        y[col] = 1.0;
        return Ok(MatrixGameSolution { value: lo, x, y });
    }

    let min = m.as_slice().iter().copied().fold(f64::INFINITY, f64::min);
    let shift = 1.0 - min;
    let (x, y) = simplex(m, shift)?;
    let (lower, upper) = certificate(m, &x, &y);
    Ok(MatrixGameSolution {
        value: 0.5 * (lower + upper),
        x,
        y,
    })
}

/// Value only.
pub fn value(m: &Matrix) -> Result<f64> {
    solve(m).map(|s| s.value)
}

fn simplex(m: &Matrix, shift: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let (rows, cols) = (m.rows(), m.cols());
    let width = cols + rows + 1;
    let rhs = cols + rows;
    let mut t = Matrix::zeros(rows, width);
    for i in 0..rows {
        for j in 0..cols {
            t[(i, j)] = m[(i, j)] + shift;
        }
        t[(i, cols + i)] = 1.0;
        t[(i, rhs)] = 1.0;
    }
    let mut obj = vec![0.0; width];
    obj[..cols].fill(1.0);
    let mut basis: Vec<usize> = (cols..cols + rows).collect();

    let cap = 50 * width * width;
    let mut iterations = 0;
    while let Some(enter) = (0..rhs).find(|&k| obj[k] > PIVOT_EPS) {
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..rows {
            let a = t[(r, enter)];
            if a <= PIVOT_EPS {
                continue;
            }
            let ratio = t[(r, rhs)] / a;
            leave = match leave {
                None => Some((r, ratio)),
                Some((best, best_ratio)) => {
                    let tie = (ratio - best_ratio).abs() <= PIVOT_EPS * best_ratio.abs().max(1.0);
                    if (tie && basis[r] < basis[best]) || (!tie && ratio < best_ratio) {
                        Some((r, ratio))
                    } else {
                        Some((best, best_ratio))
                    }
                }
            };
        }
        // The feasible region is bounded since every entry of M' is positive.
        let (pivot_row, _) = leave.expect("bounded linear program");
        pivot(&mut t, &mut obj, pivot_row, enter);
        basis[pivot_row] = enter;
        iterations += 1;
        if iterations > cap {
            return Err(Error::NonConvergence {
                what: "matrix game simplex",
                iterations,
                last_step: f64::NAN,
            });
        }
    }

    let mut q = vec![0.0; cols];
    for (r, &v) in basis.iter().enumerate() {
        if v < cols {
            q[v] = t[(r, rhs)].max(0.0);
        }
    }
    let p: Vec<f64> = (0..rows).map(|i| (-obj[cols + i]).max(0.0)).collect();
    Ok((normalize(p), normalize(q)))
}

fn pivot(t: &mut Matrix, obj: &mut [f64], pr: usize, pc: usize) {
    let width = t.cols();
    let p = t[(pr, pc)];
    for k in 0..width {
        t[(pr, k)] /= p;
    }
    t[(pr, pc)] = 1.0;
    for r in 0..t.rows() {
        if r == pr {
            continue;
        }
        let f = t[(r, pc)];
        if f == 0.0 {
            continue;
        }
        for k in 0..width {
            let delta = f * t[(pr, k)];
            t[(r, k)] -= delta;
        }
        t[(r, pc)] = 0.0;
    }
    let f = obj[pc];
    if f != 0.0 {
        for (k, o) in obj.iter_mut().enumerate() {
            *o -= f * t[(pr, k)];
        }
        obj[pc] = 0.0;
    }
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    }
    v
}

/// Whether `solve(M + c).value == solve(M).value + c` within 1e-9.
pub fn value_shift_check(m: &Matrix, c: f64) -> bool {
    let shifted = Matrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)] + c);
    match (value(m), value(&shifted)) {
        (Ok(a), Ok(b)) => (b - (a + c)).abs() <= 1e-9,
        _ => false,
    }
}
