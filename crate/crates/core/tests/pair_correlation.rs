//! Pair-correlation estimator on synthetic point clouds.

use std::f64::consts::PI;

use deformed_ginibre::localstats::{
    circle_fraction_inside, pair_correlation, poisson_cloud, universal_g, RadialBins, RescaledCloud,
};
use deformed_ginibre::rng::{stream, Domain};
use deformed_ginibre::Complex64;
use proptest::prelude::*;
use rand::Rng;

fn clouds(intensity: f64, window: f64, count: u64, seed: u64) -> Vec<RescaledCloud> {
    (0..count).map(|t| poisson_cloud(intensity, window, &mut stream(seed, Domain::Synthetic, t)).unwrap()).collect()
}

#[test]
fn poisson_clouds_are_uncorrelated() {
    let bins = RadialBins::uniform(0.25, 4.0).unwrap();
    let est = pair_correlation(&clouds(1.0, 6.0, 400, 1), &bins, 0.0).unwrap();
    for (k, (g, se)) in est.g_hat.iter().zip(&est.std_err).enumerate() {
        assert!((g - 1.0).abs() < 4.0 * se + 1e-9, "bin {k}: g = {g} +- {se}");
    }
    let sup = est.g_hat.iter().map(|g| (g - 1.0).abs()).fold(0.0, f64::max);
    assert!(sup < 0.15, "sup |g - 1| = {sup}");
    assert!((est.density_hat - 1.0).abs() < 4.0 * est.density_std_err);
}

#[test]
fn edge_correction_matches_erosion_in_expectation() {
    let bins = RadialBins::uniform(0.5, 3.0).unwrap();
    let cl = clouds(2.0, 5.0, 300, 2);
    let corrected = pair_correlation(&cl, &bins, 0.0).unwrap();
    let eroded = pair_correlation(&cl, &bins, 3.0).unwrap();
    for k in 0..bins.len() {
        let se = corrected.std_err[k].hypot(eroded.std_err[k]);
        assert!((corrected.g_hat[k] - eroded.g_hat[k]).abs() < 4.0 * se + 1e-9);
    }
}

#[test]
fn too_few_clouds_are_rejected() {
    let bins = RadialBins::uniform(0.5, 3.0).unwrap();
    assert!(pair_correlation(&clouds(1.0, 5.0, 1, 3), &bins, 0.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The arc fraction agrees with a direct count of points on the circle.
    #[test]
    fn circle_fraction_matches_sampling(s in 0.0f64..6.0, r in 0.01f64..6.0, seed in any::<u64>()) {
        let w = 4.0;
        prop_assume!(s <= w);
        let mut rng = stream(seed, Domain::Synthetic, 0);
        let samples = 4000;
        let inside = (0..samples)
            .filter(|_| (Complex64::new(s, 0.0) + Complex64::from_polar(r, 2.0 * PI * rng.random::<f64>())).norm() <= w)
            .count();
        let empirical = inside as f64 / samples as f64;
        prop_assert!((circle_fraction_inside(s, r, w) - empirical).abs() < 0.03);
    }

    #[test]
    fn universal_curve_is_a_probability(rho in 0.01f64..2.0, r in 0.0f64..10.0) {
        let g = universal_g(rho, r);
        prop_assert!((0.0..=1.0).contains(&g));
        prop_assert!(universal_g(rho, r + 0.1) >= g);
    }
}
