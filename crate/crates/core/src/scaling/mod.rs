//! Sinkhorn scaling to doubly stochastic form and the scaling mean.
//!
//! A matrix `M` with total support factors uniquely as `M = D G E` with
//! positive diagonals `D`, `E` and doubly stochastic `G`. The scaling mean
//! `sm(M)` is then `gm(d) gm(e) / n`; [`scaling_mean_direct`] computes the
//! same number straight from its variational definition.

mod mean;
mod sinkhorn;
mod support;

pub use mean::{scaling_mean, scaling_mean_direct, scaling_mean_direct_trace};
pub use sinkhorn::{sinkhorn, sinkhorn_default, SinkhornDecomposition, DEFAULT_MAX_ITER, DEFAULT_TOL};
pub use support::{has_support, support_report, SupportReport};

use crate::error::{Error, Result};

/// `(prod_i v_i)^(1/n)`, computed as the exponential of the mean log.
pub fn geometric_mean(v: &[f64]) -> Result<f64> {
    if v.is_empty() {
        return Err(Error::InvalidParameter("geometric mean of an empty vector".into()));
    }
    let mut log_sum = 0.0;
    for &x in v {
        if !(x > 0.0) {
            return Err(Error::NonPositive { name: "geometric mean component", value: x });
        }
        log_sum += x.ln();
    }
    Ok((log_sum / v.len() as f64).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_mean_examples() {
        assert_eq!(geometric_mean(&[1.0, 1.0, 1.0]).unwrap(), 1.0);
        assert!((geometric_mean(&[2.0, 8.0]).unwrap() - 4.0).abs() < 1e-14);
        let g = geometric_mean(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((g - 24f64.powf(0.25)).abs() < 1e-14);
        assert!((g - 2.21336).abs() < 1e-5);
    }

    #[test]
    fn geometric_mean_rejects_non_positive() {
        assert!(matches!(geometric_mean(&[1.0, 0.0]), Err(Error::NonPositive { .. })));
        assert!(matches!(geometric_mean(&[-2.0]), Err(Error::NonPositive { .. })));
        assert!(geometric_mean(&[]).is_err());
    }
}
