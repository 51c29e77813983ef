//! Dense non-negative square matrices, exact permanents and the classical
//! permanent bounds.
//!
//! All permanents are returned as [`LogValue`] so that values near `n!` for
//! large `n` never overflow.

mod bounds;
mod permanent;

pub use bounds::{
    bregman_minc_bound, check_doubly_stochastic, stochastic_upper_bound, vdw_bounds,
    StochasticityReport,
};
pub use permanent::{
    perm_bruteforce, perm_glynn, perm_ryser, permanent, permanental_mean, BRUTEFORCE_MAX_N,
    RYSER_MAX_N,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Natural log of a non-negative quantity, with an explicit zero marker.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogValue {
    pub log_magnitude: f64,
    pub is_zero: bool,
}

impl LogValue {
    pub const ZERO: LogValue = LogValue { log_magnitude: f64::NEG_INFINITY, is_zero: true };

    pub fn from_ln(log_magnitude: f64) -> Self {
        LogValue { log_magnitude, is_zero: false }
    }

    /// Wraps a plain value; anything `<= 0` maps to the zero marker.
    pub fn from_value(v: f64) -> Self {
        if v > 0.0 {
            Self::from_ln(v.ln())
        } else {
            Self::ZERO
        }
    }

    /// `None` when the value is zero.
    pub fn ln(&self) -> Option<f64> {
        if self.is_zero {
            None
        } else {
            Some(self.log_magnitude)
        }
    }

    /// The plain value; may overflow to infinity.
    pub fn value(&self) -> f64 {
        if self.is_zero {
            0.0
        } else {
            self.log_magnitude.exp()
        }
    }
}

/// `ln(n!)` by direct summation of logarithms.
pub fn log_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Square matrix of non-negative reals, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds an `n x n` matrix from row-major data, rejecting negative or
    /// non-finite entries.
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyMatrix);
        }
        if data.len() != n * n {
            return Err(Error::ShapeMismatch { n, expected: n * n, got: data.len() });
        }
        for (k, &v) in data.iter().enumerate() {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::NegativeEntry { row: k / n, col: k % n, value: v });
            }
        }
        Ok(Matrix { n, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            let r = r.as_ref();
            if r.len() != n {
                return Err(Error::ShapeMismatch { n, expected: n, got: r.len() });
            }
            data.extend_from_slice(r);
        }
        Matrix::new(n, data)
    }

    /// Builds a matrix from an entry function `f(i, j)`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Matrix::new(n, data)
    }

    pub fn filled(n: usize, value: f64) -> Result<Self> {
        Matrix::new(n, vec![value; n * n])
    }

    pub fn ones(n: usize) -> Result<Self> {
        Self::filled(n, 1.0)
    }

    /// `J_n`, every entry `1/n`.
    pub fn uniform_stochastic(n: usize) -> Result<Self> {
        Self::filled(n, 1.0 / n as f64)
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::from_fn(n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    /// Permutation matrix with a one at `(i, perm[i])`.
    pub fn permutation(perm: &[usize]) -> Result<Self> {
        Self::from_fn(perm.len(), |i, j| if perm[i] == j { 1.0 } else { 0.0 })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Overwrites an entry. Callers are responsible for non-negativity.
    #[inline]
    pub(crate) fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.n];
        for i in 0..self.n {
            for (acc, v) in s.iter_mut().zip(self.row(i)) {
                *acc += v;
            }
        }
        s
    }

    pub fn min_entry(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_entry(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn transpose(&self) -> Matrix {
        let n = self.n;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                data[j * n + i] = self.get(i, j);
            }
        }
        Matrix { n, data }
    }

    /// `c * self`.
    pub fn scaled(&self, c: f64) -> Result<Matrix> {
        Matrix::new(self.n, self.data.iter().map(|v| v * c).collect())
    }

    /// `diag(d) * self * diag(e)`.
    pub fn diag_scaled(&self, d: &[f64], e: &[f64]) -> Result<Matrix> {
        if d.len() != self.n || e.len() != self.n {
            return Err(Error::DimensionMismatch(self.n, d.len().max(e.len())));
        }
        Matrix::from_fn(self.n, |i, j| d[i] * self.get(i, j) * e[j])
    }

    /// Row `i` of the result is row `rows[i]` of `self`, column `j` is column `cols[j]`.
    pub fn permuted(&self, rows: &[usize], cols: &[usize]) -> Result<Matrix> {
        Matrix::from_fn(self.n, |i, j| self.get(rows[i], cols[j]))
    }

    /// Square submatrix on the given row and column index lists.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Result<Matrix> {
        if rows.len() != cols.len() {
            return Err(Error::DimensionMismatch(rows.len(), cols.len()));
        }
        let m = rows.len();
        Matrix::from_fn(m, |i, j| self.get(rows[i], cols[j]))
    }

    /// Entrywise L1 distance.
    pub fn l1_distance(&self, other: &Matrix) -> Result<f64> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(self.n, other.n));
        }
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).sum())
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &Matrix) -> Result<f64> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(self.n, other.n));
        }
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }

    /// Renders the matrix text format: a line with `n`, then `n` rows.
    pub fn to_text(&self) -> String {
        self.to_string()
    }

    /// Parses the matrix text format. Blank lines and `#` comments are skipped.
    pub fn parse_text(text: &str) -> Result<Matrix> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());

        let (line_no, header) =
            lines.next().ok_or(Error::Parse { line: 0, msg: "empty input".into() })?;
        let n: usize = header.parse().map_err(|_| Error::Parse {
            line: line_no,
            msg: format!("expected matrix size, got {header:?}"),
        })?;
        if n == 0 {
            return Err(Error::EmptyMatrix);
        }

        let mut data = Vec::with_capacity(n * n);
        for _ in 0..n {
            let (line_no, row) = lines.next().ok_or(Error::Parse {
                line: line_no,
                msg: format!("expected {n} rows"),
            })?;
            let mut count = 0;
            for tok in row.split_whitespace() {
                let v: f64 = tok.parse().map_err(|_| Error::Parse {
                    line: line_no,
                    msg: format!("bad number {tok:?}"),
                })?;
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("negative or non-finite entry {tok}"),
                    });
                }
                data.push(v);
                count += 1;
            }
            if count != n {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("ragged row: expected {n} entries, got {count}"),
                });
            }
        }
        if let Some((line_no, _)) = lines.next() {
            return Err(Error::Parse { line: line_no, msg: "trailing data after matrix".into() });
        }
        Matrix::new(n, data)
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.n)?;
        for i in 0..self.n {
            let row: Vec<String> = self.row(i).iter().map(|v| format!("{v}")).collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

impl FromStr for Matrix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Matrix::parse_text(s)
    }
}
