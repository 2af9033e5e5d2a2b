mod common;

use common::{masks, rng, sample_universe, small_shape, Fixture};
use proptest::prelude::*;
use ulsched::oracle::{
    max_weighted_rate_by_corners, verify_rate_region_membership, verify_submodular, OracleBudget,
    ORACLE_TOLERANCE,
};
use ulsched::rank::{CappedRank, GaussianRank};
use ulsched::utility::Utility;

fn fixture(seed: u64) -> Fixture {
    let mut r = rng(seed);
    let shape = small_shape(&mut r, 24);
    Fixture::random(&mut r, shape, 0.5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn utility_is_the_best_corner_and_lies_in_the_region(seed in any::<u64>()) {
        let fx = fixture(seed);
        let f = GaussianRank::new(&fx.ground, &fx.channels).unwrap();
        let fc = CappedRank::new(&f).unwrap();
        let h = Utility::new(&fc, fx.weights.clone()).unwrap();
        let universe = sample_universe(&mut rng(seed ^ 9), &fx.ground, 5);
        for (_, s) in masks(&universe) {
            let value = h.value(&s).unwrap();
            let corners = max_weighted_rate_by_corners(&h, &fc, &s).unwrap();
            prop_assert!((value - corners).abs() <= ORACLE_TOLERANCE, "{value} vs {corners}");
            let rates = h.corner_point_rates(&s).unwrap();
            prop_assert!(verify_rate_region_membership(&fc, &s, &rates, OracleBudget::default()).unwrap());
            prop_assert!((h.weighted_sum(&rates) - value).abs() <= ORACLE_TOLERANCE);
        }
    }

    #[test]
    fn utility_is_submodular_and_subadditive(seed in any::<u64>()) {
        let fx = fixture(seed);
        let f = GaussianRank::new(&fx.ground, &fx.channels).unwrap();
        let fc = CappedRank::new(&f).unwrap();
        let h = Utility::new(&fc, fx.weights.clone()).unwrap();
        let universe = sample_universe(&mut rng(seed ^ 10), &fx.ground, 6);
        prop_assert_eq!(verify_submodular(universe.len(), |m| h.value(&universe.select(m))).unwrap(), None);
        for (_, a) in masks(&universe) {
            for (_, b) in masks(&universe) {
                let joint = h.value(&a.union(&b)).unwrap();
                prop_assert!(joint <= h.value(&a).unwrap() + h.value(&b).unwrap() + ORACLE_TOLERANCE);
            }
        }
    }

    #[test]
    fn scaling_weights_scales_utility(seed in any::<u64>(), c in 0.01f64..100.0) {
        let fx = fixture(seed);
        let f = GaussianRank::new(&fx.ground, &fx.channels).unwrap();
        let h = Utility::new(&f, fx.weights.clone()).unwrap();
        let scaled = Utility::new(&f, fx.weights.iter().map(|w| w * c).collect()).unwrap();
        let universe = sample_universe(&mut rng(seed ^ 11), &fx.ground, 5);
        for (_, s) in masks(&universe) {
            let (a, b) = (h.value(&s).unwrap(), scaled.value(&s).unwrap());
            prop_assert!((a * c - b).abs() <= 1e-9 * (1.0 + b.abs()));
            prop_assert_eq!(h.corner_point_rates(&s).unwrap(), scaled.corner_point_rates(&s).unwrap());
        }
    }

    #[test]
    fn unit_weights_give_the_rank(seed in any::<u64>()) {
        let fx = fixture(seed);
        let f = GaussianRank::new(&fx.ground, &fx.channels).unwrap();
        let fc = CappedRank::new(&f).unwrap();
        let h = Utility::new(&fc, vec![1.0; fx.ground.n_users()]).unwrap();
        let universe = sample_universe(&mut rng(seed ^ 12), &fx.ground, 5);
        use ulsched::rank::Rank;
        for (_, s) in masks(&universe) {
            prop_assert!((h.value(&s).unwrap() - fc.value(&s).unwrap()).abs() <= ORACLE_TOLERANCE);
        }
    }
}

#[test]
fn invalid_weights_are_rejected() {
    let fx = fixture(1);
    let f = GaussianRank::new(&fx.ground, &fx.channels).unwrap();
    let k = fx.ground.n_users();
    assert!(Utility::new(&f, vec![1.0; k + 1]).is_err());
    let mut w = vec![1.0; k];
    w[0] = -1.0;
    assert!(Utility::new(&f, w.clone()).is_err());
    w[0] = f64::NAN;
    assert!(Utility::new(&f, w).is_err());
}
