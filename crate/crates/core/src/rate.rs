//! Empirical convergence rates.
//!
//! Log mean errors are modelled as `log e_i = theta log sigma_i + rho + eps_i`
//! with `eps_i ~ N(0, delta_i^2)`. The slope is the weighted least-squares
//! estimate with weights `delta_i^{-2}`, and `H0: theta >= theta_o` is tested
//! against `H1: theta < theta_o` with the standardized slope, whose p-value
//! is `Phi(T)`. `H0` is rejected at level `a` when the p-value falls below
//! `a`.

use crate::error::{invalid, Error, Result};

/// Per-noise-level replication errors with their mean and the delta-method
/// standard deviation of the log mean.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSample {
    pub sigma: f64,
    pub errors: Vec<f64>,
    pub mean: f64,
    pub delta: f64,
}

impl RateSample {
    pub fn new(sigma: f64, errors: Vec<f64>) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(invalid(format!("sigma must be positive, got {sigma}")));
        }
        let delta = estimate_delta(&errors)?;
        let mean = errors.iter().sum::<f64>() / errors.len() as f64;
        Ok(Self {
            sigma,
            errors,
            mean,
            delta,
        })
    }
}

/// `delta = sqrt(sum_j (e_j - mean)^2) / (sqrt(m) |mean|)`.
pub fn estimate_delta(errors: &[f64]) -> Result<f64> {
    let m = errors.len();
    if m < 2 {
        return Err(invalid(format!("need at least two replications, got {m}")));
    }
    if errors.iter().any(|e| !e.is_finite()) {
        return Err(invalid("replication errors must be finite"));
    }
    let mean = errors.iter().sum::<f64>() / m as f64;
    if mean == 0.0 {
        return Err(invalid("mean error is zero"));
    }
    let ss: f64 = errors.iter().map(|e| (e - mean) * (e - mean)).sum();
    if ss == 0.0 {
        return Err(Error::DegenerateVariance(format!(
            "all {m} replication errors equal {mean}"
        )));
    }
    Ok(ss.sqrt() / ((m as f64).sqrt() * mean.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub theta_hat: f64,
    pub rho_hat: f64,
}

/// Weighted sums of the design: `(sum w, sum w x, sum w x^2)`.
fn design_sums(xs: &[f64], weights: &[f64]) -> (f64, f64, f64) {
    xs.iter()
        .zip(weights)
        .fold((0.0, 0.0, 0.0), |(s0, s1, s2), (&x, &w)| {
            (s0 + w, s1 + w * x, s2 + w * x * x)
        })
}

fn check_inputs(log_sigmas: &[f64], log_means: &[f64], deltas: &[f64]) -> Result<Vec<f64>> {
    let n = log_sigmas.len();
    if n < 2 || log_means.len() != n || deltas.len() != n {
        return Err(invalid(format!(
            "need at least two points of equal length, got {}, {}, {}",
            n,
            log_means.len(),
            deltas.len()
        )));
    }
    if deltas.iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
        return Err(invalid("deltas must be positive and finite"));
    }
    if log_sigmas.iter().chain(log_means).any(|v| !v.is_finite()) {
        return Err(invalid("log values must be finite"));
    }
    if log_sigmas.iter().all(|&x| x == log_sigmas[0]) {
        return Err(Error::SingularDesign("all noise levels are equal".into()));
    }
    Ok(deltas.iter().map(|d| 1.0 / (d * d)).collect())
}

/// Bracketed design term `(sum w)(sum w x^2) - (sum w x)^2`.
fn design_determinant(s0: f64, s1: f64, s2: f64) -> f64 {
    s0 * s2 - s1 * s1
}

/// Weighted least-squares slope and intercept with weights `delta^{-2}`.
pub fn weighted_slope_fit(
    log_sigmas: &[f64],
    log_means: &[f64],
    deltas: &[f64],
) -> Result<SlopeFit> {
    let weights = check_inputs(log_sigmas, log_means, deltas)?;
    let (s0, s1, s2) = design_sums(log_sigmas, &weights);
    let det = design_determinant(s0, s1, s2);
    if !(det > 0.0) {
        return Err(Error::SingularDesign(format!("design determinant {det}")));
    }
    let (sy, sxy) = log_sigmas
        .iter()
        .zip(log_means)
        .zip(&weights)
        .fold((0.0, 0.0), |(sy, sxy), ((&x, &y), &w)| {
            (sy + w * y, sxy + w * x * y)
        });
    let theta_hat = (s0 * sxy - s1 * sy) / det;
    let rho_hat = (sy - theta_hat * s1) / s0;
    Ok(SlopeFit { theta_hat, rho_hat })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateTestResult {
    pub theta_hat: f64,
    pub rho_hat: f64,
    pub statistic: f64,
    pub p_value: f64,
    pub theta_target: f64,
}

impl RateTestResult {
    /// Whether `H0: theta >= theta_target` is rejected at `level`.
    pub fn reject_at(&self, level: f64) -> bool {
        self.p_value < level
    }
}

/// One-sided test of `H0: theta >= theta_target` on per-noise-level samples.
pub fn rate_test(samples: &[RateSample], theta_target: f64) -> Result<RateTestResult> {
    if samples.len() < 3 {
        return Err(invalid(format!(
            "need at least three noise levels, got {}",
            samples.len()
        )));
    }
    for s in samples {
        if !(s.delta > 0.0) {
            return Err(Error::DegenerateVariance(format!(
                "delta at sigma = {} is {}",
                s.sigma, s.delta
            )));
        }
        if !(s.mean > 0.0) {
            return Err(invalid(format!(
                "mean error at sigma = {} is not positive",
                s.sigma
            )));
        }
    }
    let log_sigmas: Vec<f64> = samples.iter().map(|s| s.sigma.ln()).collect();
    let log_means: Vec<f64> = samples.iter().map(|s| s.mean.ln()).collect();
    let deltas: Vec<f64> = samples.iter().map(|s| s.delta).collect();
    rate_test_from_logs(&log_sigmas, &log_means, &deltas, theta_target)
}

/// [`rate_test`] on precomputed logs and deltas.
pub fn rate_test_from_logs(
    log_sigmas: &[f64],
    log_means: &[f64],
    deltas: &[f64],
    theta_target: f64,
) -> Result<RateTestResult> {
    let fit = weighted_slope_fit(log_sigmas, log_means, deltas)?;
    let weights: Vec<f64> = deltas.iter().map(|d| 1.0 / (d * d)).collect();
    let (s0, s1, s2) = design_sums(log_sigmas, &weights);
    let statistic = (fit.theta_hat - theta_target) * (design_determinant(s0, s1, s2) / s0).sqrt();
    Ok(RateTestResult {
        theta_hat: fit.theta_hat,
        rho_hat: fit.rho_hat,
        statistic,
        p_value: normal_cdf(statistic),
        theta_target,
    })
}

/// Standard normal distribution function `Phi(x) = erfc(-x / sqrt 2) / 2`.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn delta_examples() {
        assert!(matches!(
            estimate_delta(&[1.0, 1.0, 1.0]),
            Err(Error::DegenerateVariance(_))
        ));
        assert_relative_eq!(
            estimate_delta(&[1.0, 3.0]).unwrap(),
            0.5,
            max_relative = 1e-15
        );
        assert!(estimate_delta(&[1.0, -1.0]).is_err());
        assert!(estimate_delta(&[1.0]).is_err());
    }

    #[test]
    fn delta_is_scale_free() {
        let e = [0.3, 0.7, 1.1, 0.25, 0.9];
        let base = estimate_delta(&e).unwrap();
        for c in [0.5, 2.0, 4.0, 0.125] {
            let scaled: Vec<f64> = e.iter().map(|x| x * c).collect();
            // powers of two scale exactly
            assert_eq!(estimate_delta(&scaled).unwrap(), base);
        }
        let scaled: Vec<f64> = e.iter().map(|x| x * 3.7).collect();
        assert_relative_eq!(estimate_delta(&scaled).unwrap(), base, max_relative = 1e-14);
    }

    #[test]
    fn two_point_slope_interpolates() {
        let fit = weighted_slope_fit(&[-2.0, -5.0], &[0.3, -1.2], &[0.1, 0.1]).unwrap();
        assert_relative_eq!(
            fit.theta_hat,
            (-1.2 - 0.3) / (-5.0 + 2.0),
            max_relative = 1e-14
        );
    }

    #[test]
    fn exact_line_is_recovered() {
        let xs: Vec<f64> = (10..=20)
            .map(|e| -(e as f64) * std::f64::consts::LN_2)
            .collect();
        let ys: Vec<f64> = xs.iter().map(|x| 0.75 * x + 1.3).collect();
        let deltas: Vec<f64> = (0..xs.len()).map(|i| 0.01 + 0.03 * i as f64).collect();
        let fit = weighted_slope_fit(&xs, &ys, &deltas).unwrap();
        assert!((fit.theta_hat - 0.75).abs() < 1e-12);
        assert!((fit.rho_hat - 1.3).abs() < 1e-10);
    }

    #[test]
    fn singular_design() {
        assert!(matches!(
            weighted_slope_fit(&[1.0, 1.0, 1.0], &[0.0, 1.0, 2.0], &[1.0; 3]),
            Err(Error::SingularDesign(_))
        ));
    }

    #[test]
    fn exact_target_line_gives_half() {
        let sigmas: Vec<f64> = (15..=21).map(|e| 2f64.powi(-e)).collect();
        let r = rate_test_from_logs(
            &sigmas.iter().map(|s| s.ln()).collect::<Vec<_>>(),
            &sigmas
                .iter()
                .map(|s| 0.75 * s.ln() - 2.0)
                .collect::<Vec<_>>(),
            &[0.05; 7],
            0.75,
        )
        .unwrap();
        assert!(r.statistic.abs() < 1e-9);
        assert!((r.p_value - 0.5).abs() < 1e-9);
        assert!(!r.reject_at(0.10));
    }

    #[test]
    fn steep_decay_is_never_rejected() {
        let xs: Vec<f64> = (0..6).map(|i| -(i as f64)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x).collect();
        let r = rate_test_from_logs(&xs, &ys, &[0.01; 6], 0.75).unwrap();
        assert!(r.statistic > 0.0);
        assert!(r.p_value > 0.999);
        assert!(!r.reject_at(0.10) && !r.reject_at(0.5));
    }

    #[test]
    fn shallow_decay_is_rejected() {
        let xs: Vec<f64> = (0..6).map(|i| -(i as f64)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 0.2 * x).collect();
        let r = rate_test_from_logs(&xs, &ys, &[0.01; 6], 0.75).unwrap();
        assert!(r.reject_at(0.10));
    }

    #[test]
    fn rate_test_needs_three_levels() {
        let s = RateSample::new(0.1, vec![1.0, 2.0]).unwrap();
        assert!(rate_test(&[s.clone(), s], 0.5).is_err());
    }

    #[test]
    fn cdf_basics() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!(normal_cdf(-40.0) >= 0.0 && normal_cdf(40.0) <= 1.0);
        assert!((normal_cdf(1.6448536) - 0.95).abs() < 1e-6);
        for i in 0..200 {
            let x = -8.0 + 0.08 * i as f64;
            assert!((normal_cdf(x) + normal_cdf(-x) - 1.0).abs() < 1e-12);
        }
    }
}
