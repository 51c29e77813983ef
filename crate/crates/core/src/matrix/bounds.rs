//! Closed-form permanent bounds and the doubly-stochastic check.

use serde::{Deserialize, Serialize};

use super::{log_factorial, LogValue, Matrix};
use crate::error::{Error, Result};

/// Lower and upper bounds `(n!/n^n, 1)` on the permanent of an `n x n`
/// doubly stochastic matrix. The lower bound is attained at `J_n`.
pub fn vdw_bounds(n: usize) -> (f64, f64) {
    let n = n.max(1);
    let log_lower = log_factorial(n) - n as f64 * (n as f64).ln();
    (log_lower.exp(), 1.0)
}

/// `ln prod_i (r_i!)^(1/r_i)` for a 0/1 matrix with row sums `r_i`.
pub fn bregman_minc_bound(b: &Matrix) -> Result<LogValue> {
    let n = b.n();
    let mut total = 0.0;
    for i in 0..n {
        let mut r = 0usize;
        for (j, &v) in b.row(i).iter().enumerate() {
            if v == 1.0 {
                r += 1;
            } else if v != 0.0 {
                return Err(Error::NonBinaryEntry { row: i, col: j, value: v });
            }
        }
        if r == 0 {
            return Err(Error::ZeroRow(i));
        }
        total += log_factorial(r) / r as f64;
    }
    Ok(LogValue::from_ln(total))
}

/// `ln(e^(2 lambda) * n^((lambda - 1)/2) * n!)`, an upper bound on the
/// permanent of any `A` in `n * S_n` (row sums `n`) with entries at most `lambda`.
pub fn stochastic_upper_bound(n: usize, lambda: f64) -> Result<LogValue> {
    if n == 0 {
        return Err(Error::EmptyMatrix);
    }
    if !(lambda > 1.0) {
        return Err(Error::InvalidParameter(format!("lambda must exceed 1, got {lambda}")));
    }
    let nf = n as f64;
    Ok(LogValue::from_ln(2.0 * lambda + 0.5 * (lambda - 1.0) * nf.ln() + log_factorial(n)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StochasticityReport {
    pub max_row_deviation: f64,
    pub max_col_deviation: f64,
    pub min_entry: f64,
    pub max_entry: f64,
    pub pass: bool,
}

pub fn check_doubly_stochastic(m: &Matrix, tol: f64) -> StochasticityReport {
    let dev = |s: Vec<f64>| s.into_iter().map(|x| (x - 1.0).abs()).fold(0.0, f64::max);
    let max_row_deviation = dev(m.row_sums());
    let max_col_deviation = dev(m.col_sums());
    let min_entry = m.min_entry();
    let max_entry = m.max_entry();
    let pass = max_row_deviation <= tol
        && max_col_deviation <= tol
        && min_entry >= 0.0
        && max_entry <= 1.0 + tol;
    StochasticityReport { max_row_deviation, max_col_deviation, min_entry, max_entry, pass }
}
