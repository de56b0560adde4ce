//! Saturation model: closed forms against independent formulas, invariants
//! as properties, and the simulator against its own exact law.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::function::beta::ln_beta;
use vf_core::saturation::{
    asymptotic_limit, beta_params_from, dr_bound, fit_saturation, n_eff, no_detection_probability, read_curve_csv,
    sample_detections, simulate_exchangeable, Generator, SaturationError,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn bound_rises_with_n_and_stays_below_its_limit(p in 0.001f64..0.999, rho in 0.001f64..1.0, n in 1u64..5000) {
        let here = dr_bound(n, p, rho).unwrap();
        let next = dr_bound(n + 1, p, rho).unwrap();
        let limit = asymptotic_limit(p, rho).unwrap();
        prop_assert!(next >= here);
        prop_assert!(here >= p - 1e-12, "one test already detects with probability p");
        prop_assert!(here <= limit + 1e-12);
        // strictly below 1 in exact arithmetic; f64 rounds 1 - e^-700 up
        prop_assert!(limit <= 1.0);
    }

    #[test]
    fn bound_falls_as_correlation_grows(p in 0.001f64..0.999, r1 in 0.0f64..1.0, r2 in 0.0f64..1.0, n in 2u64..1000) {
        let (lo, hi) = if r1 < r2 { (r1, r2) } else { (r2, r1) };
        prop_assert!(dr_bound(n, p, lo).unwrap() >= dr_bound(n, p, hi).unwrap() - 1e-12);
        let ne = n_eff(n, lo).unwrap();
        prop_assert!((1.0..=n as f64 + 1e-9).contains(&ne));
    }

    #[test]
    fn mixture_no_detection_matches_beta_function(p in 0.01f64..0.99, rho in 0.01f64..0.99, n in 0u64..400) {
        let (a, b) = beta_params_from(p, rho).unwrap();
        let oracle = (ln_beta(a, b + n as f64) - ln_beta(a, b)).exp();
        let got = no_detection_probability(a, b, n);
        prop_assert!((got - oracle).abs() <= 1e-9 * oracle.max(1e-300) + 1e-14);
    }

    #[test]
    fn fit_recovers_parameters_of_its_own_model(p in 0.02f64..0.6, rho in 0.02f64..0.9) {
        let curve: Vec<(u64, f64)> = (1..=200).map(|n| (n, dr_bound(n, p, rho).unwrap())).collect();
        let fit = fit_saturation(&curve).unwrap();
        prop_assert!((fit.p_hat - p).abs() < 1e-3, "p {} vs {}", fit.p_hat, p);
        prop_assert!((fit.rho_hat - rho).abs() < 1e-3, "rho {} vs {}", fit.rho_hat, rho);
        prop_assert!(fit.rmse < 1e-6);
    }
}

#[test]
fn regime_endpoints() {
    for p in [0.05f64, 0.3, 0.9] {
        for n in [1u64, 2, 10, 100] {
            let independent = 1.0 - (1.0 - p).powi(n as i32);
            assert!((dr_bound(n, p, 0.0).unwrap() - independent).abs() < 1e-12);
            assert!((dr_bound(n, p, 1.0).unwrap() - p).abs() < 1e-12);
        }
        assert_eq!(asymptotic_limit(p, 0.0), Err(SaturationError::IndependenceLimit));
        assert!(asymptotic_limit(p, 0.5).unwrap() < 1.0);
        // at rho = 1 a test suite is as good as one test
        assert!((asymptotic_limit(p, 1.0).unwrap() - p).abs() < 1e-12);
    }
    // n_eff tends to 1/rho
    assert!((n_eff(10_000_000, 0.25).unwrap() - 4.0).abs() < 1e-5);
    assert!(dr_bound(0, 0.5, 0.5).is_err());
    assert!(dr_bound(3, 1.5, 0.5).is_err());
    assert!(dr_bound(3, 0.5, -0.1).is_err());
}

#[test]
fn mixture_draws_have_the_requested_moments() {
    let (p, rho) = (0.2, 0.3);
    let generator = Generator::new(p, rho).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let trials = 200_000;
    let (mut first, mut both, mut second) = (0.0, 0.0, 0.0);
    for _ in 0..trials {
        let d = sample_detections(&generator, 2, &mut rng);
        first += f64::from(u8::from(d[0]));
        second += f64::from(u8::from(d[1]));
        both += f64::from(u8::from(d[0] && d[1]));
    }
    let (e1, e2, e12) = (first / trials as f64, second / trials as f64, both / trials as f64);
    let corr = (e12 - e1 * e2) / (e1 * (1.0 - e1) * e2 * (1.0 - e2)).sqrt();
    assert!((e1 - p).abs() < 0.005, "mean {e1}");
    assert!((corr - rho).abs() < 0.02, "correlation {corr}");
}

#[test]
fn simulation_tracks_the_exact_mixture_curve() {
    let trials = 40_000;
    for (p, rho) in [(0.2, 0.3), (0.05, 0.1), (0.5, 0.0), (0.4, 1.0)] {
        let sim = simulate_exchangeable(100, p, rho, trials, 3).unwrap();
        let generator = Generator::new(p, rho).unwrap();
        for &(n, dr) in &sim.points {
            let exact = generator.detection_probability(n);
            let sigma = (exact * (1.0 - exact) / trials as f64).sqrt();
            assert!((dr - exact).abs() <= 5.0 * sigma + 1e-9, "p={p} rho={rho} n={n}: {dr} vs {exact}");
        }
        assert_eq!(sim, simulate_exchangeable(100, p, rho, trials, 3).unwrap());
    }
}

#[test]
fn curve_csv_round_trip() {
    let sim = simulate_exchangeable(20, 0.3, 0.2, 500, 9).unwrap();
    let parsed = read_curve_csv(&sim.to_csv()).unwrap();
    assert_eq!(parsed, sim.points);
    assert!(matches!(read_curve_csv("n,dr\n1,abc\n"), Err(SaturationError::Parse { line: 2, .. })));
    assert!(read_curve_csv("x,y\n1,2\n").is_err());
}
