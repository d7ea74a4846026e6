use invreg_core::rate::{normal_cdf, rate_test, weighted_slope_fit, RateSample};
use invreg_core::rng::{replication_seed, NormalStream};

/// `erf` by its Taylor series; converges fast for moderate arguments.
fn erf_series(x: f64) -> f64 {
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= -x * x / n;
        let add = term / (2.0 * n + 1.0);
        sum += add;
        if add.abs() <= 1e-18 * sum.abs() {
            break;
        }
    }
    sum * 2.0 / std::f64::consts::PI.sqrt()
}

#[test]
fn normal_cdf_matches_series() {
    for i in -300..=300 {
        let x = i as f64 / 100.0;
        let expected = 0.5 * (1.0 + erf_series(x / std::f64::consts::SQRT_2));
        assert!((normal_cdf(x) - expected).abs() < 1e-7, "x = {x}");
    }
    assert_eq!(normal_cdf(0.0), 0.5);
}

#[test]
fn slope_fit_recovers_exact_power_law() {
    let sigmas: Vec<f64> = (15..=21).map(|e| 2f64.powi(-e)).collect();
    let logs: Vec<f64> = sigmas.iter().map(|s| s.ln()).collect();
    let means: Vec<f64> = logs.iter().map(|l| 0.75 * l + 1.5).collect();
    let fit = weighted_slope_fit(&logs, &means, &[0.1; 7]).unwrap();
    assert!((fit.theta_hat - 0.75).abs() < 1e-12);
    assert!((fit.rho_hat - 1.5).abs() < 1e-10);
}

#[test]
fn rate_test_on_simulated_power_law() {
    // e = sigma^theta * (1 + small multiplicative noise)
    let mut noise = NormalStream::new(11);
    let samples: Vec<RateSample> = (15..=21)
        .map(|e| {
            let sigma = 2f64.powi(-e);
            let errors = (0..200)
                .map(|_| sigma.powf(0.8) * (1.0 + 0.2 * noise.normal()).abs())
                .collect();
            RateSample::new(sigma, errors).unwrap()
        })
        .collect();
    let res = rate_test(&samples, 0.8).unwrap();
    assert!((res.theta_hat - 0.8).abs() < 0.05, "{res:?}");
    assert!(!res.reject_at(0.01));
    let strict = rate_test(&samples, 1.2).unwrap();
    assert!(strict.reject_at(0.01), "{strict:?}");
}

#[test]
fn replication_seeds_are_distinct() {
    let mut seen = std::collections::HashSet::new();
    for row in 0..20 {
        for rep in 0..500 {
            assert!(seen.insert(replication_seed(42, row, rep)));
        }
    }
    assert_ne!(replication_seed(1, 0, 0), replication_seed(2, 0, 0));
}
