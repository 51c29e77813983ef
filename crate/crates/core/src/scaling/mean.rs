use super::geometric_mean;
use super::sinkhorn::{sinkhorn, DEFAULT_MAX_ITER};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// `sm(M) = gm(d) gm(e) / n` from the Sinkhorn decomposition `M = D G E`;
/// a doubly stochastic core has scaling mean exactly `1/n`.
pub fn scaling_mean(m: &Matrix, tol: f64) -> Result<f64> {
    let dec = sinkhorn(m, tol, DEFAULT_MAX_ITER)?;
    Ok(geometric_mean(&dec.d)? * geometric_mean(&dec.e)? / m.n() as f64)
}

/// Objective values of the alternating minimization of
/// `x^T M y / (n^2 gm(x) gm(y))`, starting at `x = y = 1` and recording the
/// value after every sweep (`iters + 1` entries).
///
/// For fixed `y` the optimal `x` is proportional to `1 / (M y)_i`; both
/// vectors are renormalized to geometric mean 1 after each update.
pub fn scaling_mean_direct_trace(m: &Matrix, iters: usize) -> Result<Vec<f64>> {
    let n = m.n();
    for i in 0..n {
        for j in 0..n {
            if !(m.get(i, j) > 0.0) {
                return Err(Error::ZeroEntry { row: i, col: j });
            }
        }
    }
    let nn = (n * n) as f64;
    let objective = |x: &[f64], y: &[f64]| -> Result<f64> {
        let mut num = 0.0;
        for i in 0..n {
            num += x[i] * m.row(i).iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
        }
        Ok(num / (nn * geometric_mean(x)? * geometric_mean(y)?))
    };
    let normalize = |v: Vec<f64>| -> Result<Vec<f64>> {
        let g = geometric_mean(&v)?;
        Ok(v.into_iter().map(|x| x / g).collect())
    };

    let mut x = vec![1.0; n];
    let mut y = vec![1.0; n];
    let mut trace = Vec::with_capacity(iters + 1);
    trace.push(objective(&x, &y)?);
    for _ in 0..iters {
        let my: Vec<f64> = (0..n).map(|i| m.row(i).iter().zip(&y).map(|(a, b)| a * b).sum()).collect();
        x = normalize(my.iter().map(|v| 1.0 / v).collect())?;
        let mut mtx = vec![0.0; n];
        for (i, xi) in x.iter().enumerate() {
            for (o, a) in mtx.iter_mut().zip(m.row(i)) {
                *o += a * xi;
            }
        }
        y = normalize(mtx.iter().map(|v| 1.0 / v).collect())?;
        trace.push(objective(&x, &y)?);
    }
    Ok(trace)
}

/// Scaling mean from its variational definition, for strictly positive `m`.
pub fn scaling_mean_direct(m: &Matrix, iters: usize) -> Result<f64> {
    Ok(*scaling_mean_direct_trace(m, iters)?.last().expect("trace is non-empty"))
}
