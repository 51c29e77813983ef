//! Constructive approximation of a nearly doubly stochastic matrix by an
//! exact member of `n * Omega_n`.
//!
//! Given `x` with entries in `[1/lambda, lambda]` whose row and column sums
//! are within `(1 +- eps) n` except for at most `eps n` rows and columns, the
//! pipeline
//!
//! 1. removes `ceil(eps n)` rows and columns (all exceptional ones),
//! 2. rescales each remaining row to sum exactly `m = n - ceil(eps n)`,
//! 3. balances columns pairwise by moving mass inside rows,
//! 4. scales the balanced block by `n / m` and glues `n I` into the removed
//!    rows and columns,
//!
//! producing `X'` in `n * Omega_n` with `sum |x - x'| <= 16 eps lambda^2 n^2`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{permanent, Matrix};

/// Row and column sums classified against `[(1 - eps) n, (1 + eps) n]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumReport {
    pub epsilon: f64,
    pub row_sums: Vec<f64>,
    pub col_sums: Vec<f64>,
    pub bad_rows: Vec<usize>,
    pub bad_cols: Vec<usize>,
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    Ok(())
}

pub fn row_col_sum_report(m: &Matrix, epsilon: f64) -> Result<SumReport> {
    check_epsilon(epsilon)?;
    let n = m.n() as f64;
    let (lo, hi) = ((1.0 - epsilon) * n, (1.0 + epsilon) * n);
    let bad = |sums: &[f64]| -> Vec<usize> {
        sums.iter().enumerate().filter(|(_, &s)| s < lo || s > hi).map(|(i, _)| i).collect()
    };
    let row_sums = m.row_sums();
    let col_sums = m.col_sums();
    Ok(SumReport { epsilon, bad_rows: bad(&row_sums), bad_cols: bad(&col_sums), row_sums, col_sums })
}

/// `ceil(eps n)`, ignoring floating noise when `eps n` is an integer.
pub fn truncation_count(epsilon: f64, n: usize) -> usize {
    ((epsilon * n as f64 - 1e-9).ceil() as usize).max(1)
}

/// Smallest `eps = k / n` for which at most `k` rows and at most `k` columns
/// fall outside `[(1 - eps) n, (1 + eps) n]`.
pub fn admissible_epsilon(m: &Matrix) -> f64 {
    let n = m.n();
    let rows = m.row_sums();
    let cols = m.col_sums();
    let nf = n as f64;
    for k in 1..n {
        let eps = k as f64 / nf;
        let (lo, hi) = ((1.0 - eps) * nf, (1.0 + eps) * nf);
        let count = |s: &[f64]| s.iter().filter(|&&v| v < lo || v > hi).count();
        if count(&rows) <= k && count(&cols) <= k {
            return eps;
        }
    }
    1.0
}

/// Validity window `4 lambda eps < 1`, under which every interval used by
/// the construction is non-degenerate.
pub fn check_window(epsilon: f64, lambda: f64) -> Result<()> {
    check_epsilon(epsilon)?;
    if !(lambda >= 1.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda must be >= 1, got {lambda}")));
    }
    if 4.0 * lambda * epsilon >= 1.0 {
        return Err(Error::EpsilonTooLarge {
            epsilon,
            lambda,
            reason: "4 lambda eps < 1 required".into(),
        });
    }
    Ok(())
}

fn check_band(m: &Matrix, lo: f64, hi: f64) -> Result<()> {
    let slack = 1e-12;
    for i in 0..m.n() {
        for (j, &v) in m.row(i).iter().enumerate() {
            if v < lo - slack || v > hi + slack {
                return Err(Error::OutOfBand { row: i, col: j, value: v, lo, hi });
            }
        }
    }
    Ok(())
}

/// Output of the truncation and row-rescaling stage.
#[derive(Debug, Clone, PartialEq)]
pub struct Truncation {
    /// The `m x m` rescaled block `Y_m`; every row sums to `m`.
    pub y: Matrix,
    pub kept_rows: Vec<usize>,
    pub kept_cols: Vec<usize>,
    pub removed_rows: Vec<usize>,
    pub removed_cols: Vec<usize>,
    /// Per-row multipliers applied to the kept rows.
    pub factors: Vec<f64>,
}

/// Indices to remove: every exceptional one, then the lowest-index regular
/// ones until `count` are chosen.
fn removal_set(bad: &[usize], n: usize, count: usize) -> Vec<usize> {
    let mut removed = bad.to_vec();
    removed.extend((0..n).filter(|i| !bad.contains(i)).take(count - bad.len()));
    removed.sort_unstable();
    removed
}

pub fn truncate_and_rescale(x: &Matrix, epsilon: f64, lambda: f64) -> Result<Truncation> {
    check_window(epsilon, lambda)?;
    check_band(x, 1.0 / lambda, lambda)?;
    let n = x.n();
    let report = row_col_sum_report(x, epsilon)?;
    let k = truncation_count(epsilon, n);
    if k >= n {
        return Err(Error::EpsilonTooLarge { epsilon, lambda, reason: format!("ceil(eps n) = {k} >= n") });
    }
    if report.bad_rows.len() > k || report.bad_cols.len() > k {
        return Err(Error::InvalidParameter(format!(
            "{} exceptional rows and {} exceptional columns exceed ceil(eps n) = {k}",
            report.bad_rows.len(),
            report.bad_cols.len()
        )));
    }
    let removed_rows = removal_set(&report.bad_rows, n, k);
    let removed_cols = removal_set(&report.bad_cols, n, k);
    let kept_rows: Vec<usize> = (0..n).filter(|i| !removed_rows.contains(i)).collect();
    let kept_cols: Vec<usize> = (0..n).filter(|j| !removed_cols.contains(j)).collect();
    let m = n - k;
    let mf = m as f64;

    let block = x.submatrix(&kept_rows, &kept_cols)?;
    let factors: Vec<f64> = block.row_sums().iter().map(|s| mf / s).collect();
    let (f_lo, f_hi) = (1.0 - 2.0 * epsilon, 1.0 + 2.0 * lambda * epsilon);
    if let Some(f) = factors.iter().find(|&&f| f < f_lo || f > f_hi) {
        return Err(Error::EpsilonTooLarge {
            epsilon,
            lambda,
            reason: format!("row factor {f} outside [{f_lo}, {f_hi}]"),
        });
    }
    let ones = vec![1.0; m];
    let y = block.diag_scaled(&factors, &ones)?;
    check_band(&y, 0.5 / lambda, 2.0 * lambda).map_err(|e| Error::EpsilonTooLarge {
        epsilon,
        lambda,
        reason: format!("rescaled block leaves [(2 lambda)^-1, 2 lambda]: {e}"),
    })?;
    Ok(Truncation { y, kept_rows, kept_cols, removed_rows, removed_cols, factors })
}

/// Output of the pairwise column balancing.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnBalance {
    /// The balanced block, in `m * Omega_m`.
    pub y: Matrix,
    pub iterations: usize,
    /// Total entrywise change `sum |y - y'|`.
    pub l1_change: f64,
}

/// Balances column sums to `m` by repeatedly pairing the lowest-index
/// deficient column `i` with the lowest-index surplus column `j` and moving
/// mass from `j` to `i` row by row, keeping entries in
/// `[(2 lambda)^-1, 2 lambda]`:
///
/// * if `s_i + s_j >= 2m`, fill column `i` up to exactly `m`;
/// * otherwise drain column `j` down to exactly `m`.
///
/// Each pass fixes at least one column, so at most `m` passes are needed.
pub fn pairwise_column_balance(y: &Matrix, lambda: f64) -> Result<ColumnBalance> {
    balance_columns(y, 0.5 / lambda, 2.0 * lambda)
}

/// Column balancing with entries kept in `[lo, hi]`. Donor columns never
/// receive mass, so the fill always completes as long as `hi` dominates
/// every entry of the input.
fn balance_columns(y: &Matrix, lo: f64, hi: f64) -> Result<ColumnBalance> {
    let m = y.n();
    let mf = m as f64;
    let tol = 1e-9 * mf;
    check_band(y, lo, hi)?;
    let row_targets = y.row_sums();
    if let Some((i, s)) = row_targets.iter().enumerate().find(|(_, &s)| (s - mf).abs() > tol) {
        return Err(Error::InvalidParameter(format!("row {i} sums to {s}, expected {m}")));
    }

    let mut out = y.clone();
    let mut iterations = 0;
    let balanced = |s: &[f64]| s.iter().filter(|&&v| (v - mf).abs() <= tol).count();
    loop {
        let sums = out.col_sums();
        let before = balanced(&sums);
        let deficient = sums.iter().position(|&s| s < mf - tol);
        let surplus = sums.iter().position(|&s| s > mf + tol);
        let (i, j) = match (deficient, surplus) {
            (None, None) => break,
            (Some(i), Some(j)) => (i, j),
            // Imbalance on one side sits within tolerance on the other:
            // pair with the most extreme column.
            (Some(i), None) => (i, argmax(&sums)),
            (None, Some(j)) => (argmin(&sums), j),
        };
        if !(sums[i] < mf && sums[j] > mf) {
            return Err(Error::Invariant(format!(
                "no transferable pair: column {i} sums to {}, column {j} to {}",
                sums[i], sums[j]
            )));
        }
        if iterations == m {
            return Err(Error::Invariant(format!("column balancing exceeded {m} passes")));
        }

        let fill_deficient = sums[i] + sums[j] >= 2.0 * mf;
        let mut remaining = if fill_deficient { mf - sums[i] } else { sums[j] - mf };
        for k in 0..m {
            if remaining <= 1e-15 * mf {
                break;
            }
            let (a, b) = (out.get(k, i), out.get(k, j));
            let amount = remaining.min(hi - a).min(b - lo);
            if amount <= 1e-15 * mf {
                continue;
            }
            out.set(k, i, a + amount);
            out.set(k, j, b - amount);
            remaining -= amount;
        }
        if remaining > tol {
            return Err(Error::Invariant(format!(
                "pass {iterations} on columns ({i}, {j}) stalled with {remaining:e} left to move"
            )));
        }
        iterations += 1;

        let after = out.col_sums();
        if balanced(&after) <= before {
            return Err(Error::Invariant(format!("pass {iterations} did not balance a new column")));
        }
        for (r, s) in out.row_sums().iter().enumerate() {
            if (s - mf).abs() > tol {
                return Err(Error::Invariant(format!("row {r} sum drifted to {s}")));
            }
        }
    }
    let l1_change = y.l1_distance(&out)?;
    Ok(ColumnBalance { y: out, iterations, l1_change })
}

fn argmax(v: &[f64]) -> usize {
    (0..v.len()).fold(0, |best, k| if v[k] > v[best] { k } else { best })
}

fn argmin(v: &[f64]) -> usize {
    (0..v.len()).fold(0, |best, k| if v[k] < v[best] { k } else { best })
}

/// One line of the pipeline diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub name: String,
    pub metrics: Vec<(String, f64)>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageLog {
    pub stages: Vec<Stage>,
}

impl StageLog {
    fn push(&mut self, name: &str, metrics: &[(&str, f64)]) {
        self.stages.push(Stage {
            name: name.to_string(),
            metrics: metrics.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        });
    }

    pub fn metric(&self, stage: &str, key: &str) -> Option<f64> {
        self.stages
            .iter()
            .find(|s| s.name == stage)?
            .metrics
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| *v)
    }
}

/// One stage per line: `name key=value ...`.
impl fmt::Display for StageLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.stages {
            write!(f, "{}", s.name)?;
            for (k, v) in &s.metrics {
                write!(f, " {k}={v}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BalanceResult {
    /// `X'` in `n * Omega_n`.
    pub approximant: Matrix,
    /// `sum_ij |x_ij - x'_ij|`.
    pub l1_distance: f64,
    /// `16 eps lambda^2 n^2`.
    pub l1_bound: f64,
    pub stage_log: StageLog,
    pub kept_rows: Vec<usize>,
    pub kept_cols: Vec<usize>,
}

impl BalanceResult {
    /// The `(n/m) Y'` block of the approximant, without the glued diagonal.
    pub fn core(&self) -> Result<Matrix> {
        self.approximant.submatrix(&self.kept_rows, &self.kept_cols)
    }
}

pub fn ds_approximate(x: &Matrix, epsilon: f64, lambda: f64) -> Result<BalanceResult> {
    let n = x.n();
    let nf = n as f64;
    let mut log = StageLog::default();
    let report = row_col_sum_report(x, epsilon)?;
    log.push(
        "report",
        &[
            ("epsilon", epsilon),
            ("lambda", lambda),
            ("bad_rows", report.bad_rows.len() as f64),
            ("bad_cols", report.bad_cols.len() as f64),
        ],
    );

    let t = truncate_and_rescale(x, epsilon, lambda)?;
    let m = t.kept_rows.len();
    let mf = m as f64;
    let cs = t.y.col_sums();
    log.push("truncate", &[("removed", (n - m) as f64), ("m", mf)]);
    log.push(
        "rescale",
        &[
            ("factor_min", t.factors.iter().copied().fold(f64::INFINITY, f64::min)),
            ("factor_max", t.factors.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
            ("col_sum_min", cs.iter().copied().fold(f64::INFINITY, f64::min) / mf),
            ("col_sum_max", cs.iter().copied().fold(f64::NEG_INFINITY, f64::max) / mf),
        ],
    );

    // Cap at 2 lambda m / n so the final n / m rescale stays inside the band.
    let mut cap = 2.0 * lambda * mf / nf;
    while cap * (nf / mf) > 2.0 * lambda {
        cap = cap.next_down();
    }
    let bal = balance_columns(&t.y, 0.5 / lambda, cap).map_err(|e| match e {
        Error::OutOfBand { .. } => Error::EpsilonTooLarge {
            epsilon,
            lambda,
            reason: format!("rescaled block exceeds the balancing cap {cap}: {e}"),
        },
        e => e,
    })?;
    log.push(
        "column_balance",
        &[("iterations", bal.iterations as f64), ("l1_change", bal.l1_change)],
    );

    let mut data = vec![0.0; n * n];
    let scale = nf / mf;
    debug_assert!(cap * scale <= 2.0 * lambda);
    for (a, &r) in t.kept_rows.iter().enumerate() {
        for (b, &c) in t.kept_cols.iter().enumerate() {
            data[r * n + c] = scale * bal.y.get(a, b);
        }
    }
    for (&r, &c) in t.removed_rows.iter().zip(&t.removed_cols) {
        data[r * n + c] = nf;
    }
    let approximant = Matrix::new(n, data)?;
    let core = approximant.submatrix(&t.kept_rows, &t.kept_cols)?;
    log.push(
        "glue",
        &[
            ("glued_entries", (n - m) as f64),
            ("glued_value", nf),
            ("core_min", core.min_entry()),
            ("core_max", core.max_entry()),
        ],
    );

    let l1_distance = x.l1_distance(&approximant)?;
    let l1_bound = 16.0 * epsilon * lambda * lambda * nf * nf;
    log.push("result", &[("l1_distance", l1_distance), ("l1_bound", l1_bound)]);

    let tol = 1e-9 * nf;
    for (what, sums) in [("row", approximant.row_sums()), ("column", approximant.col_sums())] {
        if let Some((k, s)) = sums.iter().enumerate().find(|(_, &s)| (s - nf).abs() > tol) {
            return Err(Error::Invariant(format!("{what} {k} of X' sums to {s}, expected {n}")));
        }
    }
    check_band(&core, 0.5 / lambda, 2.0 * lambda)
        .map_err(|e| Error::Invariant(format!("core block of X' out of band: {e}")))?;
    if l1_distance > l1_bound {
        return Err(Error::Invariant(format!("L1 distance {l1_distance} exceeds {l1_bound}")));
    }

    Ok(BalanceResult {
        approximant,
        l1_distance,
        l1_bound,
        stage_log: log,
        kept_rows: t.kept_rows,
        kept_cols: t.kept_cols,
    })
}

/// `(|ln per(x) - ln per(y)|, (lambda^5 / n^2) sum |x_ij - y_ij|)` for
/// matrices with entries in `[1/lambda, lambda]`; the first never exceeds
/// the second.
pub fn perm_continuity_gap(x: &Matrix, y: &Matrix, lambda: f64) -> Result<(f64, f64)> {
    const MAX_N: usize = 12;
    let n = x.n();
    if y.n() != n {
        return Err(Error::DimensionMismatch(n, y.n()));
    }
    if n > MAX_N {
        return Err(Error::SizeExceeded { what: "perm_continuity_gap", n, limit: MAX_N });
    }
    if !(lambda >= 1.0) {
        return Err(Error::InvalidParameter(format!("lambda must be >= 1, got {lambda}")));
    }
    check_band(x, 1.0 / lambda, lambda)?;
    check_band(y, 1.0 / lambda, lambda)?;
    let lx = permanent(x)?.ln().ok_or(Error::ZeroPermanent)?;
    let ly = permanent(y)?.ln().ok_or(Error::ZeroPermanent)?;
    let nf = n as f64;
    let lhs = (lx - ly).abs() / nf;
    let rhs = lambda.powi(5) / (nf * nf) * x.l1_distance(y)?;
    Ok((lhs, rhs))
}
