mod common {
    pub mod oracles;
}

use common::oracles::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tal_core::metrics::{
    aupr, aurc, auroc, eaurc, fpr_at_95tpr, BinaryScoredSet, FailureMetrics, Polarity, ScoredItem,
};

#[test]
fn metrics_agree_with_oracles_on_random_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..200 {
        let set = random_set(&mut rng);
        assert!((auroc(&set).unwrap() - auroc_pairs(&set)).abs() <= 1e-12);
        assert!((aurc(&set).unwrap() - aurc_prefix(&set)).abs() <= 1e-12);
        assert!((eaurc(&set).unwrap() - eaurc_prefix(&set)).abs() <= 1e-12);
        assert_eq!(aupr(&set, Polarity::Success).unwrap(), aupr_success_oracle(&set));
        assert_eq!(aupr(&set, Polarity::Error).unwrap(), aupr_error_oracle(&set));
    }
}

#[test]
fn risk_coverage_closed_form() {
    let set = BinaryScoredSet::from_pairs([(4.0, true), (3.0, true), (2.0, false), (1.0, true)]).unwrap();
    assert!((aurc(&set).unwrap() - 7.0 / 48.0).abs() <= 1e-15);
}

fn transformed(set: &BinaryScoredSet, f: impl Fn(f64) -> f64) -> BinaryScoredSet {
    BinaryScoredSet::new(set.items().iter().map(|i| ScoredItem { score: f(i.score), positive: i.positive }).collect())
        .unwrap()
}

proptest! {
    #[test]
    fn strictly_increasing_transforms_leave_metrics_unchanged(seed in any::<u64>(), a in 0.1f64..5.0, b in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let set = random_set(&mut rng);
        let before = FailureMetrics::compute(&set);
        for after in [
            FailureMetrics::compute(&transformed(&set, |s| a * s + b)),
            FailureMetrics::compute(&transformed(&set, f64::exp)),
        ] {
            prop_assert_eq!(before.values(), after.values());
        }
    }

    #[test]
    fn fpr95_is_a_fraction_of_negatives(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let set = random_set(&mut rng);
        let fpr = fpr_at_95tpr(&set).unwrap();
        let n = set.negatives() as f64;
        prop_assert!((0.0..=1.0).contains(&fpr));
        prop_assert_eq!((fpr * n).round() / n, fpr);
    }

    #[test]
    fn eaurc_is_nonnegative(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        prop_assert!(eaurc(&random_set(&mut rng)).unwrap() >= -1e-15);
    }
}
