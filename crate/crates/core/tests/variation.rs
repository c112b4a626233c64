use newsvendor::demand::{demand_variation, demand_variation_dp, exponent_of, prediction_error};
use proptest::prelude::*;

mod common;

use common::brute_force;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

fn thetas() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.5), Just(1.0), Just(1.5), Just(2.0), Just(3.0)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn dp_matches_brute_force(seq in prop::collection::vec(-5.0f64..5.0, 1..=12), theta in thetas()) {
        let dp = demand_variation_dp(&seq, theta).unwrap();
        prop_assert!(close(dp, brute_force(&seq, theta)), "dp {} brute {}", dp, brute_force(&seq, theta));
    }

    #[test]
    fn integer_sequences_match_brute_force(seq in prop::collection::vec(0i32..4, 1..=12), theta in thetas()) {
        // ties and repeated values exercise the pruning boundaries
        let seq: Vec<f64> = seq.into_iter().map(f64::from).collect();
        let fast = demand_variation(&seq, theta).unwrap();
        prop_assert!(close(fast, brute_force(&seq, theta)));
    }

    #[test]
    fn fast_path_matches_dp(seq in prop::collection::vec(-100.0f64..100.0, 1..=200), theta in thetas()) {
        let fast = demand_variation(&seq, theta).unwrap();
        let dp = demand_variation_dp(&seq, theta).unwrap();
        prop_assert!(close(fast, dp), "fast {} dp {}", fast, dp);
    }

    #[test]
    fn squared_variation_dominates_consecutive_sum(seq in prop::collection::vec(-10.0f64..10.0, 2..60)) {
        let consecutive: f64 = seq.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
        let total = (seq[seq.len() - 1] - seq[0]).powi(2);
        let v = demand_variation(&seq, 2.0).unwrap();
        prop_assert!(v + 1e-9 >= consecutive);
        prop_assert!(v + 1e-9 >= total);
    }

    #[test]
    fn exponent_is_in_unit_interval(v in 0.0f64..1e12, t in 2usize..100_000) {
        let e = exponent_of(v, t);
        prop_assert!((0.0..=1.0).contains(&e));
    }

    #[test]
    fn prediction_error_is_a_metric(a in prop::collection::vec(-5.0f64..5.0, 1..30)) {
        let b: Vec<f64> = a.iter().map(|x| x * 0.5 + 1.0).collect();
        let ab = prediction_error(&a, &b).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(ab, prediction_error(&b, &a).unwrap());
        prop_assert_eq!(prediction_error(&a, &a).unwrap(), 0.0);
    }
}
