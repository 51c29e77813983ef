use approx::assert_relative_eq;
use permlaw_core::environments::{
    analytic_scaling_mean, box_matrix, iid_environment, llp_ratio_series, product_rotation_environment,
    separable_profile_environment, Environment, FieldSpec, Profile, GOLDEN_ANGLE, SILVER_ANGLE,
};
use permlaw_core::matrix::permanental_mean;
use permlaw_core::scaling::{geometric_mean, scaling_mean, DEFAULT_TOL};
use proptest::prelude::*;

#[test]
fn iid_mean_over_a_million_entries() {
    let env = iid_environment(0.5, 1.5, 2024).unwrap();
    let b = box_matrix(&env, 1000).unwrap();
    let mean = b.as_slice().iter().sum::<f64>() / 1e6;
    assert!((mean - 1.0).abs() < 0.002, "{mean}");
    assert!(b.min_entry() >= 0.5 && b.max_entry() <= 1.5);
}

#[test]
fn affine_sine_quadrature_matches_closed_form() {
    for a in [0.0, 0.3, 0.5, 0.9] {
        let p = Profile::AffineSine(a);
        let closed = (1.0 + (1.0 - a * a).sqrt()) / 2.0;
        assert_relative_eq!(p.geometric_mean(), closed, max_relative = 1e-12);
        assert_relative_eq!(p.geometric_mean_quadrature(10_000), closed, max_relative = 1e-8);
    }
    assert_relative_eq!(Profile::ExpSine(0.7).geometric_mean_quadrature(10_000), 1.0, epsilon = 1e-12);
}

#[test]
fn separable_window_is_exactly_rank_one() {
    let (phi, psi) = (Profile::AffineSine(0.5), Profile::ExpSine(0.4));
    let env = separable_profile_environment(phi, psi, GOLDEN_ANGLE, SILVER_ANGLE, 0.2, 0.7).unwrap();
    let n = 9;
    let b = box_matrix(&env, n).unwrap();
    let rows: Vec<f64> = (0..n).map(|i| phi.eval(0.2 + i as f64 * GOLDEN_ANGLE)).collect();
    let cols: Vec<f64> = (0..n).map(|j| psi.eval(0.7 + j as f64 * SILVER_ANGLE)).collect();
    let expected = geometric_mean(&rows).unwrap() * geometric_mean(&cols).unwrap();
    // per(diag(r) J diag(c)) = n! prod r prod c, so per = gm(r) gm(c) = sm.
    assert_relative_eq!(permanental_mean(&b).unwrap(), expected, max_relative = 1e-10);
    assert_relative_eq!(scaling_mean(&b, DEFAULT_TOL).unwrap(), expected, max_relative = 1e-10);
}

#[test]
fn constant_field_ratio_is_one() {
    let env = product_rotation_environment(GOLDEN_ANGLE, SILVER_ANGLE, 0.0, 0.0, FieldSpec::Constant(1.0)).unwrap();
    for r in llp_ratio_series(&env, &[2, 4, 7]).unwrap() {
        assert_relative_eq!(r.ratio, 1.0, epsilon = 1e-12);
    }
}

#[test]
fn coupled_field_falls_back_to_window_mean() {
    let f = FieldSpec::ExpSineCoupled { a: 0.3, b: 0.2, c: 0.4 };
    let env = product_rotation_environment(GOLDEN_ANGLE, SILVER_ANGLE, 0.1, 0.3, f).unwrap();
    assert!(analytic_scaling_mean(&env).is_err());
    let recs = llp_ratio_series(&env, &[6]).unwrap();
    assert!(!recs[0].sm_analytic);
    // Finite-n sandwich 1 <= per/sm.
    assert!(recs[0].ratio >= 1.0 - 1e-9);
}

#[test]
fn iid_ratio_trends_towards_one() {
    let dev = |n: usize| -> f64 {
        (0..8u64)
            .map(|s| {
                let env = iid_environment(0.5, 1.5, s).unwrap();
                (llp_ratio_series(&env, &[n]).unwrap()[0].ratio - 1.0).abs()
            })
            .sum::<f64>()
            / 8.0
    };
    let (small, large) = (dev(3), dev(14));
    assert!(large < small, "{large} >= {small}");
}

fn any_env() -> impl Strategy<Value = Environment> {
    prop_oneof![
        (0.1f64..1.0, 1.0f64..3.0, any::<u64>()).prop_map(|(lo, hi, s)| iid_environment(lo, hi, s).unwrap()),
        (-0.9f64..0.9, -1.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0).prop_map(|(a, b, x0, y0)| {
            separable_profile_environment(Profile::AffineSine(a), Profile::ExpSine(b), GOLDEN_ANGLE, SILVER_ANGLE, x0, y0)
                .unwrap()
        }),
        (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, 0.0f64..1.0).prop_map(|(a, b, c, x0)| {
            product_rotation_environment(GOLDEN_ANGLE, SILVER_ANGLE, x0, 0.5, FieldSpec::ExpSineCoupled { a, b, c })
                .unwrap()
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn windows_are_deterministic_and_nested(env in any_env(), n in 2usize..12) {
        let big = box_matrix(&env, n + 3).unwrap();
        let again = box_matrix(&env.clone(), n + 3).unwrap();
        prop_assert_eq!(&big, &again);
        let idx: Vec<usize> = (0..n).collect();
        prop_assert_eq!(big.submatrix(&idx, &idx).unwrap(), box_matrix(&env, n).unwrap());
    }

    #[test]
    fn entries_stay_in_band(env in any_env(), n in 1usize..16) {
        let b = box_matrix(&env, n).unwrap();
        let l = env.lambda();
        prop_assert!(b.min_entry() >= 1.0 / l * (1.0 - 1e-12));
        prop_assert!(b.max_entry() <= l * (1.0 + 1e-12));
    }

    #[test]
    fn rotations_commute(env in any_env(), i in 0u64..1000, j in 0u64..1000) {
        if let Some((x, y)) = env.orbit_point(i, j) {
            let (x1, y1) = env.orbit_point(i + 1, j).unwrap();
            let (x2, y2) = env.orbit_point(i, j + 1).unwrap();
            let (x12, y12) = env.orbit_point(i + 1, j + 1).unwrap();
            prop_assert_eq!((x12 - x2 - x1 + x).rem_euclid(1.0).min((x1 + x2 - x - x12).rem_euclid(1.0)) < 1e-9, true);
            prop_assert_eq!(y1, y);
            prop_assert_eq!(x2, x);
            prop_assert!((y12 - y2).abs() < 1e-12);
        }
    }

    #[test]
    fn spec_round_trip(env in any_env()) {
        let text = toml::to_string(&env).unwrap();
        let back: Environment = toml::from_str(&text).unwrap();
        prop_assert_eq!(back, env);
    }
}
