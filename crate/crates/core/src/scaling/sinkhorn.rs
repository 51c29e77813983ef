use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::support::support_report;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 100_000;

/// `M = diag(d) * g * diag(e)` with `g` doubly stochastic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinkhornDecomposition {
    pub d: Vec<f64>,
    pub e: Vec<f64>,
    pub g: Matrix,
    /// Row-then-column normalization sweeps performed.
    pub iterations: usize,
    /// Max over rows and columns of `|sum - 1|` on `g`.
    pub residual: f64,
}

fn mat_vec(m: &Matrix, v: &[f64]) -> Vec<f64> {
    (0..m.n()).map(|i| m.row(i).iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

fn mat_t_vec(m: &Matrix, u: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; m.n()];
    for (i, ui) in u.iter().enumerate() {
        for (o, a) in out.iter_mut().zip(m.row(i)) {
            *o += a * ui;
        }
    }
    out
}

fn max_deviation(sums: impl Iterator<Item = f64>) -> f64 {
    sums.map(|s| (s - 1.0).abs()).fold(0.0, f64::max)
}

/// Alternating row and column normalization. The iteration is carried on
/// the scaling vectors `u = 1/d`, `v = 1/e` against the untouched input, so
/// the core is formed once at the end and reconstructs `m` to rounding.
pub fn sinkhorn(m: &Matrix, tol: f64, max_iter: usize) -> Result<SinkhornDecomposition> {
    if !(tol > 0.0) {
        return Err(Error::NonPositive { name: "tol", value: tol });
    }
    let report = support_report(m);
    if !report.has_total_support {
        return Err(Error::NoTotalSupport { offending: report.offending_entries.len() });
    }

    let n = m.n();
    let mut u = vec![1.0; n];
    let mut v = vec![1.0; n];
    let mut iterations = 0;
    loop {
        let mv = mat_vec(m, &v);
        let mtu = mat_t_vec(m, &u);
        let residual = max_deviation(u.iter().zip(&mv).map(|(a, b)| a * b))
            .max(max_deviation(v.iter().zip(&mtu).map(|(a, b)| a * b)));
        if residual <= tol {
            break;
        }
        if iterations == max_iter {
            return Err(Error::MaxIterations { iterations, residual });
        }
        u = mv.iter().map(|x| 1.0 / x).collect();
        v = mat_t_vec(m, &u).iter().map(|x| 1.0 / x).collect();
        iterations += 1;
    }

    let g = m.diag_scaled(&u, &v)?;
    let residual = max_deviation(g.row_sums().into_iter()).max(max_deviation(g.col_sums().into_iter()));
    log::debug!("sinkhorn n={n} converged after {iterations} sweeps, residual {residual:e}");
    Ok(SinkhornDecomposition {
        d: u.iter().map(|x| 1.0 / x).collect(),
        e: v.iter().map(|x| 1.0 / x).collect(),
        g,
        iterations,
        residual,
    })
}

pub fn sinkhorn_default(m: &Matrix) -> Result<SinkhornDecomposition> {
    sinkhorn(m, DEFAULT_TOL, DEFAULT_MAX_ITER)
}

fn diagonal(v: &[f64]) -> Result<Matrix> {
    Matrix::from_fn(v.len(), |i, j| if i == j { v[i] } else { 0.0 })
}

impl SinkhornDecomposition {
    pub fn n(&self) -> usize {
        self.g.n()
    }

    /// `diag(d) * g * diag(e)`.
    pub fn reconstruct(&self) -> Result<Matrix> {
        self.g.diag_scaled(&self.d, &self.e)
    }

    /// Plain-text record: sections `D`, `G`, `E` in the matrix text format,
    /// then a line `iterations residual`.
    pub fn to_text(&self) -> Result<String> {
        let mut out = String::new();
        for (name, m) in [("D", diagonal(&self.d)?), ("G", self.g.clone()), ("E", diagonal(&self.e)?)] {
            out.push_str(name);
            out.push('\n');
            out.push_str(&m.to_text());
        }
        writeln!(out, "{} {}", self.iterations, self.residual).expect("write to string");
        Ok(out)
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        fn section(lines: &[&str], pos: &mut usize, name: &str) -> Result<Matrix> {
            let err = |line: usize, msg: String| Error::Parse { line, msg };
            let start = *pos;
            match lines.get(start) {
                Some(l) if l.trim() == name => {}
                _ => return Err(err(start + 1, format!("expected section {name}"))),
            }
            let n: usize = lines
                .get(start + 1)
                .and_then(|l| l.trim().parse().ok())
                .ok_or_else(|| err(start + 2, "expected matrix size".into()))?;
            let end = start + 2 + n;
            if end > lines.len() {
                return Err(err(lines.len(), format!("section {name} truncated")));
            }
            let m = Matrix::parse_text(&lines[start + 1..end].join("\n")).map_err(|e| match e {
                Error::Parse { line, msg } => err(start + line, msg),
                other => other,
            })?;
            *pos = end;
            Ok(m)
        }

        let lines: Vec<&str> = text.lines().collect();
        let mut pos = 0;
        let dm = section(&lines, &mut pos, "D")?;
        let g = section(&lines, &mut pos, "G")?;
        let em = section(&lines, &mut pos, "E")?;
        let bad_meta = || Error::Parse { line: pos + 1, msg: "expected `iterations residual`".into() };
        let meta: Vec<&str> = lines.get(pos).map(|l| l.split_whitespace().collect()).unwrap_or_default();
        if meta.len() != 2 {
            return Err(bad_meta());
        }
        let iterations = meta[0].parse().map_err(|_| bad_meta())?;
        let residual = meta[1].parse().map_err(|_| bad_meta())?;
        let n = g.n();
        if dm.n() != n || em.n() != n {
            return Err(Error::DimensionMismatch(n, dm.n().max(em.n())));
        }
        Ok(SinkhornDecomposition {
            d: (0..n).map(|i| dm.get(i, i)).collect(),
            e: (0..n).map(|i| em.get(i, i)).collect(),
            g,
            iterations,
            residual,
        })
    }
}
