//! Monte-Carlo checks of two permanent identities.
//!
//! * Gaussian determinants: with `x_ij = sqrt(a_ij) g_ij` for iid standard
//!   normals, `E det(X)^2 = perm(A)`.
//! * Random bipartite graphs: keeping edge `(i, j)` with probability `p_ij`,
//!   the expected number of perfect matchings is `perm(P)`.
//!
//! Sample `k` of a run with seed `s` draws from the counter-based substream
//! `(s, k)`, so runs are reproducible and independent of thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::environments::{box_matrix, Environment};
use crate::error::{Error, Result};
use crate::matrix::{log_factorial, perm_ryser, permanent, LogValue, Matrix};
use crate::rng::{CounterRng, Domain};

/// Largest size for which the exact target permanent is computed.
pub const MC_MAX_N: usize = 12;
pub const MATCHING_MAX_N: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub samples: usize,
    pub mean: f64,
    /// Standard error of the mean.
    pub stderr: f64,
    pub target: f64,
    /// `(mean - target) / stderr`.
    pub z_score: f64,
}

fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 64 {
        xs.iter().sum()
    } else {
        let (a, b) = xs.split_at(xs.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

fn summarize(values: &[f64], target: f64) -> Result<McSummary> {
    let samples = values.len();
    if samples < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 samples, got {samples}")));
    }
    let mean = pairwise_sum(values) / samples as f64;
    let dev: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&dev) / (samples - 1) as f64;
    let stderr = (var / samples as f64).sqrt();
    let z_score = if stderr > 0.0 {
        (mean - target) / stderr
    } else if mean == target {
        0.0
    } else {
        f64::INFINITY.copysign(mean - target)
    };
    Ok(McSummary { samples, mean, stderr, target, z_score })
}

/// `ln det(X)^2` for a row-major `n x n` matrix, by Gaussian elimination with
/// partial pivoting.
pub fn log_det_squared(x: &[f64], n: usize) -> LogValue {
    debug_assert_eq!(x.len(), n * n);
    let mut a = x.to_vec();
    let mut log_abs = 0.0;
    for k in 0..n {
        let (p, pivot) = (k..n)
            .map(|i| (i, a[i * n + k].abs()))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pivot == 0.0 {
            return LogValue::ZERO;
        }
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
        }
        let akk = a[k * n + k];
        log_abs += akk.abs().ln();
        for i in k + 1..n {
            let f = a[i * n + k] / akk;
            if f != 0.0 {
                for j in k + 1..n {
                    a[i * n + j] -= f * a[k * n + j];
                }
            }
        }
    }
    LogValue::from_ln(2.0 * log_abs)
}

/// `X` with `x_ij = sqrt(a_ij) g_ij` for sample `sample` of seed `seed`.
pub fn gaussian_matrix(a: &Matrix, seed: u64, sample: u64) -> Vec<f64> {
    let rng = CounterRng::new(seed, Domain::Gaussian, sample);
    let n = a.n();
    let mut x = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            x.push(a.get(i, j).sqrt() * rng.normal(i as u64, j as u64));
        }
    }
    x
}

fn det_sample(a: &Matrix, seed: u64, sample: u64) -> LogValue {
    log_det_squared(&gaussian_matrix(a, seed, sample), a.n())
}

/// One draw of `det(X)^2`, an unbiased estimate of `perm(a)`.
pub fn gaussian_det_sample(a: &Matrix, seed: u64) -> LogValue {
    det_sample(a, seed, 0)
}

/// Mean of `samples` independent determinant draws against the exact permanent.
pub fn bgg_estimate(a: &Matrix, samples: usize, seed: u64) -> Result<McSummary> {
    let n = a.n();
    let target = if n <= MC_MAX_N { permanent(a)?.value() } else { f64::NAN };
    let values: Vec<f64> =
        (0..samples as u64).into_par_iter().map(|k| det_sample(a, seed, k).value()).collect();
    summarize(&values, target)
}

/// Empirical law of `ln det(X)^2` for `a` in `n * Omega_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationSummary {
    pub samples: usize,
    pub median: f64,
    pub lower_quartile: f64,
    pub upper_quartile: f64,
    pub iqr: f64,
    pub log_n_factorial: f64,
    /// `|median - ln n!|`.
    pub median_deviation: f64,
    /// `sqrt(lambda n)`, the deviation scale up to unspecified polylog factors.
    pub deviation_scale: f64,
    /// Smallest and largest entries of `a`.
    pub epsilon: f64,
    pub lambda: f64,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let t = pos - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] * (1.0 - t) + sorted[hi] * t
    }
}

pub fn logdet_concentration_experiment(
    a: &Matrix,
    samples: usize,
    seed: u64,
) -> Result<ConcentrationSummary> {
    let n = a.n();
    let nf = n as f64;
    let tol = 1e-9 * nf;
    let off_sum = a
        .row_sums()
        .into_iter()
        .chain(a.col_sums())
        .any(|s| (s - nf).abs() > tol);
    if off_sum {
        return Err(Error::InvalidParameter("matrix is not in n * Omega_n".into()));
    }
    let epsilon = a.min_entry();
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter("entries must be bounded away from zero".into()));
    }
    if samples < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 samples, got {samples}")));
    }
    let mut logs: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|k| det_sample(a, seed, k).ln().unwrap_or(f64::NEG_INFINITY))
        .collect();
    logs.sort_by(f64::total_cmp);
    let median = quantile(&logs, 0.5);
    let lower_quartile = quantile(&logs, 0.25);
    let upper_quartile = quantile(&logs, 0.75);
    let log_n_factorial = log_factorial(n);
    let lambda = a.max_entry();
    Ok(ConcentrationSummary {
        samples,
        median,
        lower_quartile,
        upper_quartile,
        iqr: upper_quartile - lower_quartile,
        log_n_factorial,
        median_deviation: (median - log_n_factorial).abs(),
        deviation_scale: (lambda * nf).sqrt(),
        epsilon,
        lambda,
    })
}

fn check_probabilities(p: &Matrix) -> Result<()> {
    for i in 0..p.n() {
        for (j, &v) in p.row(i).iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::ProbabilityOutOfRange { row: i, col: j, value: v });
            }
        }
    }
    Ok(())
}

fn matching_count(p: &Matrix, seed: u64, sample: u64) -> Result<u64> {
    let rng = CounterRng::new(seed, Domain::Matching, sample);
    let adj = Matrix::from_fn(p.n(), |i, j| {
        if rng.uniform(i as u64, j as u64) < p.get(i, j) {
            1.0
        } else {
            0.0
        }
    })?;
    Ok(perm_ryser(&adj)?.value().round() as u64)
}

/// Number of perfect matchings of one random bipartite graph with edge
/// probabilities `p`.
pub fn matching_count_sample(p: &Matrix, seed: u64) -> Result<u64> {
    if p.n() > MATCHING_MAX_N {
        return Err(Error::SizeExceeded { what: "matching_count_sample", n: p.n(), limit: MATCHING_MAX_N });
    }
    check_probabilities(p)?;
    matching_count(p, seed, 0)
}

/// Mean matching count over `samples` graphs drawn in the fixed environment
/// window `p = Box_n`, against the exact `perm(p)`.
pub fn matching_expectation_experiment(
    env: &Environment,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<McSummary> {
    if n > MC_MAX_N {
        return Err(Error::SizeExceeded { what: "matching_expectation_experiment", n, limit: MC_MAX_N });
    }
    let p = box_matrix(env, n)?;
    check_probabilities(&p)?;
    let target = permanent(&p)?.value();
    let counts: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|k| matching_count(&p, seed, k).map(|c| c as f64))
        .collect::<Result<_>>()?;
    summarize(&counts, target)
}
