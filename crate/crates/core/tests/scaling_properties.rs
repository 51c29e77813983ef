use approx::assert_relative_eq;
use permlaw_core::matrix::{log_factorial, permanental_mean};
use permlaw_core::scaling::{
    geometric_mean, scaling_mean, scaling_mean_direct, sinkhorn_default, support_report, DEFAULT_TOL,
};
use permlaw_core::Matrix;
use proptest::prelude::*;

fn positive_matrix(sizes: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Matrix> {
    sizes.prop_flat_map(|n| prop::collection::vec(0.05f64..5.0, n * n).prop_map(move |v| Matrix::new(n, v).unwrap()))
}

fn positive_vec(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.1f64..10.0, n)
}

#[test]
fn closed_form_two_by_two() {
    // Cross-ratio determines the core: g = sqrt(ad) / (sqrt(ad) + sqrt(bc)).
    let m = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
    let g = sinkhorn_default(&m).unwrap().g;
    let expected = 2.0 / (2.0 + 6f64.sqrt());
    assert_relative_eq!(g.get(0, 0), expected, epsilon = 1e-12);
    assert_relative_eq!(g.get(0, 1), 1.0 - expected, epsilon = 1e-12);
}

#[test]
fn support_examples() {
    let r = support_report(&Matrix::from_rows(&[[1.0, 1.0], [0.0, 1.0]]).unwrap());
    assert!(r.has_support && !r.has_total_support);
    assert_eq!(r.offending_entries, vec![(0, 1)]);
    assert!(support_report(&Matrix::ones(4).unwrap()).has_total_support);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn core_is_unique_under_diagonal_scaling(
        (m, d, e) in (2usize..=7).prop_flat_map(|n| (
            prop::collection::vec(0.05f64..5.0, n * n).prop_map(move |v| Matrix::new(n, v).unwrap()),
            positive_vec(n),
            positive_vec(n),
        )),
    ) {
        let g1 = sinkhorn_default(&m).unwrap().g;
        let g2 = sinkhorn_default(&m.diag_scaled(&d, &e).unwrap()).unwrap().g;
        prop_assert!(g1.max_abs_diff(&g2).unwrap() <= 1e-8);
    }

    #[test]
    fn decomposition_reconstructs(m in positive_matrix(1..=8)) {
        let dec = sinkhorn_default(&m).unwrap();
        let r = dec.reconstruct().unwrap();
        prop_assert!(r.max_abs_diff(&m).unwrap() <= 1e-9 * m.max_entry());
    }

    #[test]
    fn scaling_mean_is_homogeneous(m in positive_matrix(1..=7), c in 0.01f64..100.0) {
        let a = scaling_mean(&m, DEFAULT_TOL).unwrap();
        let b = scaling_mean(&m.scaled(c).unwrap(), DEFAULT_TOL).unwrap();
        prop_assert!((b - c * a).abs() <= 1e-9 * c * a);
    }

    #[test]
    fn scaling_mean_of_diagonal_scaling(
        (m, d, e) in (2usize..=6).prop_flat_map(|n| (
            prop::collection::vec(0.05f64..5.0, n * n).prop_map(move |v| Matrix::new(n, v).unwrap()),
            positive_vec(n),
            positive_vec(n),
        )),
    ) {
        let a = scaling_mean(&m, DEFAULT_TOL).unwrap();
        let b = scaling_mean(&m.diag_scaled(&d, &e).unwrap(), DEFAULT_TOL).unwrap();
        let expected = a * geometric_mean(&d).unwrap() * geometric_mean(&e).unwrap();
        prop_assert!((b - expected).abs() <= 1e-9 * expected);
    }

    #[test]
    fn n_times_doubly_stochastic_has_unit_mean(m in positive_matrix(1..=10)) {
        let g = sinkhorn_default(&m).unwrap().g;
        let sm = scaling_mean(&g.scaled(g.n() as f64).unwrap(), DEFAULT_TOL).unwrap();
        prop_assert!((sm - 1.0).abs() <= 1e-8);
    }

    #[test]
    fn routes_agree(m in positive_matrix(1..=6)) {
        let a = scaling_mean(&m, DEFAULT_TOL).unwrap();
        let b = scaling_mean_direct(&m, 2000).unwrap();
        prop_assert!((a - b).abs() <= 1e-6 * a, "{a} vs {b}");
    }

    #[test]
    fn permanental_mean_sandwich(m in positive_matrix(1..=8)) {
        let n = m.n();
        let ratio = permanental_mean(&m).unwrap() / scaling_mean(&m, DEFAULT_TOL).unwrap();
        let upper = n as f64 / (log_factorial(n) / n as f64).exp();
        prop_assert!(ratio >= 1.0 - 1e-8 && ratio <= upper + 1e-8, "{ratio} not in [1, {upper}]");
    }
}
