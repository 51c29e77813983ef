use permlaw_core::balance::{
    admissible_epsilon, ds_approximate, pairwise_column_balance, perm_continuity_gap,
    truncate_and_rescale,
};
use permlaw_core::environments::{box_matrix, iid_environment};
use permlaw_core::Matrix;
use proptest::prelude::*;

fn band_matrix(n: usize, lambda: f64) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(1.0 / lambda..=lambda, n * n).prop_map(move |v| Matrix::new(n, v).unwrap())
}

fn check_pipeline(x: &Matrix, lambda: f64) {
    let n = x.n();
    let nf = n as f64;
    let eps = admissible_epsilon(x);
    let r = ds_approximate(x, eps, lambda).unwrap();
    for s in r.approximant.row_sums().into_iter().chain(r.approximant.col_sums()) {
        assert!((s - nf).abs() <= 1e-9 * nf, "sum {s}");
    }
    let core = r.core().unwrap();
    assert!(core.min_entry() >= 0.5 / lambda && core.max_entry() <= 2.0 * lambda);
    assert!(r.l1_distance <= 16.0 * eps * lambda * lambda * nf * nf);
    let m = r.kept_rows.len() as f64;
    let balance_change = r.stage_log.metric("column_balance", "l1_change").unwrap();
    assert!(balance_change <= 4.0 * eps * lambda * lambda * m * m, "{balance_change}");
}

#[test]
fn iid_box_pipeline() {
    for seed in 0..4 {
        for n in [50, 100] {
            let x = box_matrix(&iid_environment(0.5, 1.5, seed).unwrap(), n).unwrap();
            check_pipeline(&x, 2.0);
        }
    }
}

#[test]
fn mild_column_imbalance_is_fixed_locally() {
    // Row sums exact; column sums deviate by up to 10%.
    let n = 20;
    let x = Matrix::from_fn(n, |i, j| {
        let shift = if j % 2 == 0 { 0.1 } else { -0.1 };
        1.0 + if i % 2 == 0 { shift } else { 0.0 }
    })
    .unwrap();
    let t = truncate_and_rescale(&x, 0.1, 1.5).unwrap();
    let b = pairwise_column_balance(&t.y, 1.5).unwrap();
    for s in b.y.col_sums() {
        assert!((s - t.y.n() as f64).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn pipeline_invariants_on_perturbed_ones(
        noise in prop::collection::vec(-0.3f64..0.3, 30 * 30),
    ) {
        let x = Matrix::new(30, noise.iter().map(|e| 1.0 + e).collect()).unwrap();
        let eps = admissible_epsilon(&x);
        prop_assume!(4.0 * 1.5 * eps < 1.0);
        check_pipeline(&x, 1.5);
    }

    #[test]
    fn continuity_gap(
        (x, y, lambda) in (prop::sample::select(vec![4usize, 6, 8]), prop::sample::select(vec![1.5f64, 2.0]))
            .prop_flat_map(|(n, l)| (band_matrix(n, l), band_matrix(n, l), Just(l))),
    ) {
        let (lhs, rhs) = perm_continuity_gap(&x, &y, lambda).unwrap();
        prop_assert!(lhs <= rhs, "{lhs} > {rhs}");
    }
}
