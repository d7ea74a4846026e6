//! Exact risk functionals and the empirical prediction-risk score.

use crate::error::{invalid, Result};
use crate::spectral::{
    check_len, q_unchecked, s_unchecked, validate_eigenvalues, validate_sigma, FilterSpec,
    Observations, SpectralProblem,
};
use crate::sum::sum_ascending;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskDecomposition {
    pub bias_term: f64,
    pub variance_term: f64,
    pub total: f64,
}

impl RiskDecomposition {
    fn new(bias_term: f64, variance_term: f64) -> Self {
        Self {
            bias_term,
            variance_term,
            total: bias_term + variance_term,
        }
    }
}

fn check_alpha(spec: &FilterSpec, alpha: f64, lambda_max: f64) -> Result<()> {
    // validates alpha and, for Landweber, the spectrum bound
    crate::spectral::filter_value(spec, alpha, lambda_max).map(|_| ())
}

/// Prediction risk `E||T(f_alpha - f)||^2` over the stored modes.
pub fn prediction_risk(
    problem: &SpectralProblem,
    spec: &FilterSpec,
    alpha: f64,
) -> Result<RiskDecomposition> {
    check_alpha(spec, alpha, problem.lambda_max())?;
    let s: Vec<f64> = problem
        .eigenvalues()
        .iter()
        .map(|&l| s_unchecked(spec.family(), alpha, l))
        .collect();
    Ok(prediction_risk_from_s(problem, &s))
}

pub(crate) fn prediction_risk_from_s(problem: &SpectralProblem, s: &[f64]) -> RiskDecomposition {
    let lambda = problem.eigenvalues();
    let f = problem.truth();
    let bias = sum_ascending(s.len(), |k| {
        let r = 1.0 - s[k];
        lambda[k] * r * r * f[k] * f[k]
    });
    let sigma2 = problem.sigma() * problem.sigma();
    let var = sigma2 * sum_ascending(s.len(), |k| s[k] * s[k]);
    RiskDecomposition::new(bias, var)
}

/// Direct risk `E||f_alpha - f||^2`; exact for diagonal linear filters.
pub fn direct_risk(
    problem: &SpectralProblem,
    spec: &FilterSpec,
    alpha: f64,
) -> Result<RiskDecomposition> {
    check_alpha(spec, alpha, problem.lambda_max())?;
    let family = spec.family();
    let (q, s): (Vec<f64>, Vec<f64>) = problem
        .eigenvalues()
        .iter()
        .map(|&l| (q_unchecked(family, alpha, l), s_unchecked(family, alpha, l)))
        .unzip();
    Ok(direct_risk_from_filter(problem, &q, &s))
}

pub(crate) fn direct_risk_from_filter(
    problem: &SpectralProblem,
    q: &[f64],
    s: &[f64],
) -> RiskDecomposition {
    let lambda = problem.eigenvalues();
    let f = problem.truth();
    let bias = sum_ascending(s.len(), |k| {
        let r = 1.0 - s[k];
        r * r * f[k] * f[k]
    });
    let sigma2 = problem.sigma() * problem.sigma();
    let var = sigma2 * sum_ascending(q.len(), |k| lambda[k] * q[k] * q[k]);
    RiskDecomposition::new(bias, var)
}

/// Empirical prediction-risk score
/// `sum s^2 Y^2 - 2 sum s Y^2 + 2 sigma^2 sum s`, whose expectation is the
/// prediction risk minus the constant `sum lambda_k f_k^2`.
pub fn empirical_prediction_risk(
    eigenvalues: &[f64],
    sigma: f64,
    spec: &FilterSpec,
    alpha: f64,
    obs: &Observations,
) -> Result<f64> {
    validate_eigenvalues(eigenvalues)?;
    validate_sigma(sigma)?;
    check_len(eigenvalues.len(), obs)?;
    check_alpha(spec, alpha, eigenvalues[0])?;
    let s: Vec<f64> = eigenvalues
        .iter()
        .map(|&l| s_unchecked(spec.family(), alpha, l))
        .collect();
    let y2: Vec<f64> = obs.values().iter().map(|y| y * y).collect();
    Ok(score_from_s(&s, &y2, sigma))
}

pub(crate) fn score_from_s(s: &[f64], y2: &[f64], sigma: f64) -> f64 {
    let fit = sum_ascending(s.len(), |k| s[k] * s[k] * y2[k]);
    let cross = sum_ascending(s.len(), |k| s[k] * y2[k]);
    let dof = sum_ascending(s.len(), |k| s[k]);
    fit - 2.0 * cross + 2.0 * sigma * sigma * dof
}

/// Lepskii threshold `4 sigma sqrt(sum lambda_k q_{alpha}(lambda_k)^2)`, the
/// noise-calibrated tolerance attached to the less regularized estimate.
pub fn lepskii_threshold(
    eigenvalues: &[f64],
    sigma: f64,
    spec: &FilterSpec,
    alpha_tilde: f64,
) -> Result<f64> {
    validate_eigenvalues(eigenvalues)?;
    validate_sigma(sigma)?;
    check_alpha(spec, alpha_tilde, eigenvalues[0])?;
    let q: Vec<f64> = eigenvalues
        .iter()
        .map(|&l| q_unchecked(spec.family(), alpha_tilde, l))
        .collect();
    Ok(threshold_from_q(eigenvalues, &q, sigma))
}

pub(crate) fn threshold_from_q(eigenvalues: &[f64], q: &[f64], sigma: f64) -> f64 {
    4.0 * sigma * sum_ascending(q.len(), |k| eigenvalues[k] * q[k] * q[k]).sqrt()
}

/// `sum_k lambda_k f_k^2 = ||Tf||^2`, the constant separating the score from
/// the prediction risk.
pub fn signal_energy(problem: &SpectralProblem) -> f64 {
    let lambda = problem.eigenvalues();
    let f = problem.truth();
    sum_ascending(lambda.len(), |k| lambda[k] * f[k] * f[k])
}

/// Rejects nonpositive noise levels with a uniform message.
pub(crate) fn require_positive(name: &str, value: f64) -> Result<()> {
    if !(value > 0.0) || !value.is_finite() {
        return Err(invalid(format!(
            "{name} must be positive and finite, got {value}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{estimate_coefficients, s_value, sample_observations};
    use approx::assert_relative_eq;

    fn families() -> Vec<FilterSpec> {
        vec![
            FilterSpec::spectral_cutoff(),
            FilterSpec::tikhonov(),
            FilterSpec::iterated_tikhonov(3).unwrap(),
            FilterSpec::landweber(),
            FilterSpec::showalter(),
        ]
    }

    fn ten_modes(sigma: f64) -> SpectralProblem {
        let lambda: Vec<f64> = (1..=10).map(|k| (k as f64).powi(-2)).collect();
        let f: Vec<f64> = (1..=10).map(|k| (-1f64).powi(k) / k as f64).collect();
        SpectralProblem::new(lambda, f, sigma).unwrap()
    }

    #[test]
    fn prediction_risk_examples() {
        let zero = SpectralProblem::new(vec![0.8, 0.3, 0.05], vec![0.0; 3], 0.2).unwrap();
        let spec = FilterSpec::tikhonov();
        let r = prediction_risk(&zero, &spec, 0.1).unwrap();
        assert_eq!(r.bias_term, 0.0);
        let expected: f64 = 0.04
            * zero
                .eigenvalues()
                .iter()
                .map(|&l| s_value(&spec, 0.1, l).unwrap().powi(2))
                .sum::<f64>();
        assert_relative_eq!(r.total, expected, max_relative = 1e-14);

        let p = SpectralProblem::new(vec![0.8, 0.3, 0.05], vec![1.0, -2.0, 0.5], 0.2).unwrap();
        let r = prediction_risk(&p, &FilterSpec::spectral_cutoff(), 0.9).unwrap();
        assert_eq!(r.variance_term, 0.0);
        assert_relative_eq!(
            r.bias_term,
            0.8 + 0.3 * 4.0 + 0.05 * 0.25,
            max_relative = 1e-14
        );

        let single = SpectralProblem::new(vec![0.5], vec![2.0], 0.1).unwrap();
        let r = prediction_risk(&single, &spec, 0.5).unwrap();
        assert_relative_eq!(r.bias_term, 0.5, max_relative = 1e-14);
        assert_relative_eq!(r.variance_term, 0.0025, max_relative = 1e-14);
        assert_eq!(r.total, r.bias_term + r.variance_term);

        assert!(prediction_risk(&single, &spec, 0.0).is_err());
    }

    #[test]
    fn direct_risk_examples() {
        let lambda = vec![0.8, 0.3, 0.05];
        let zero = SpectralProblem::new(lambda.clone(), vec![0.0; 3], 0.2).unwrap();
        let r = direct_risk(&zero, &FilterSpec::spectral_cutoff(), 0.05).unwrap();
        let expected = 0.04 * lambda.iter().map(|l| 1.0 / l).sum::<f64>();
        assert_relative_eq!(r.total, expected, max_relative = 1e-14);

        let p = SpectralProblem::new(lambda, vec![1.0, -2.0, 0.5], 0.2).unwrap();
        let r = direct_risk(&p, &FilterSpec::spectral_cutoff(), 0.9).unwrap();
        assert_relative_eq!(r.total, 1.0 + 4.0 + 0.25, max_relative = 1e-14);

        let single = SpectralProblem::new(vec![0.5], vec![2.0], 0.1).unwrap();
        let r = direct_risk(&single, &FilterSpec::tikhonov(), 0.5).unwrap();
        assert_relative_eq!(r.bias_term, 1.0, max_relative = 1e-14);
        assert_relative_eq!(r.variance_term, 0.005, max_relative = 1e-14);
        assert!(direct_risk(&single, &FilterSpec::tikhonov(), -1.0).is_err());
    }

    #[test]
    fn score_examples() {
        let lambda = [0.9, 0.2, 0.01];
        let spec = FilterSpec::showalter();
        let zero = Observations::new(vec![0.0; 3]);
        let mut last = f64::NEG_INFINITY;
        for alpha in [1.0, 0.3, 0.1, 0.01, 0.001] {
            let r = empirical_prediction_risk(&lambda, 0.5, &spec, alpha, &zero).unwrap();
            let dof: f64 = lambda
                .iter()
                .map(|&l| s_value(&spec, alpha, l).unwrap())
                .sum();
            assert_relative_eq!(r, 2.0 * 0.25 * dof, max_relative = 1e-14);
            assert!(r > last);
            last = r;
        }
        assert!(
            empirical_prediction_risk(&lambda, 0.5, &spec, 0.1, &Observations::new(vec![1.0]))
                .is_err()
        );
    }

    #[test]
    fn threshold_examples() {
        let t = lepskii_threshold(&[1.0], 1.0, &FilterSpec::tikhonov(), 1.0).unwrap();
        assert_relative_eq!(t, 2.0, max_relative = 1e-15);
        let t = lepskii_threshold(&[0.5, 0.1], 1.0, &FilterSpec::spectral_cutoff(), 0.6).unwrap();
        assert_eq!(t, 0.0);
        assert!(lepskii_threshold(&[0.5], 0.0, &FilterSpec::tikhonov(), 0.1).is_err());
        assert!(lepskii_threshold(&[0.5], 1.0, &FilterSpec::tikhonov(), 0.0).is_err());

        let lambda: Vec<f64> = (1..=30).map(|k| (k as f64).powi(-3)).collect();
        for spec in families() {
            let mut prev = f64::INFINITY;
            for j in 0..40 {
                let alpha = 1e-7 * 1.5f64.powi(j);
                let t = lepskii_threshold(&lambda, 0.1, &spec, alpha).unwrap();
                assert!(t <= prev, "{spec:?} at {alpha}");
                prev = t;
            }
        }
    }

    #[test]
    fn risk_terms_are_monotone_in_alpha() {
        let p = ten_modes(0.05);
        for spec in families() {
            let mut prev: Option<RiskDecomposition> = None;
            for j in 0..60 {
                let alpha = 1e-5 * 1.25f64.powi(j);
                let r = prediction_risk(&p, &spec, alpha).unwrap();
                if let Some(prev) = prev {
                    assert!(r.bias_term >= prev.bias_term, "{spec:?}");
                    assert!(r.variance_term <= prev.variance_term, "{spec:?}");
                }
                prev = Some(r);
            }
        }
    }

    #[test]
    fn score_is_scale_equivariant() {
        let p = ten_modes(0.05);
        let y = sample_observations(&p, 4);
        let c = 3.5;
        let yc = y.scaled(c);
        for alpha in [1e-4, 1e-3, 1e-2, 0.1] {
            let a = empirical_prediction_risk(
                p.eigenvalues(),
                0.05,
                &FilterSpec::tikhonov(),
                alpha,
                &y,
            )
            .unwrap();
            let b = empirical_prediction_risk(
                p.eigenvalues(),
                0.05 * c,
                &FilterSpec::tikhonov(),
                alpha,
                &yc,
            )
            .unwrap();
            assert_relative_eq!(b, c * c * a, max_relative = 1e-12);
        }
    }

    #[test]
    fn direct_risk_matches_monte_carlo() {
        let p = ten_modes(0.05);
        let m = 2000;
        for spec in families() {
            let alpha = 0.01;
            let errs: Vec<f64> = (0..m)
                .map(|i| {
                    let y = sample_observations(&p, 1000 + i as u64);
                    estimate_coefficients(&p, &spec, alpha, &y)
                        .unwrap()
                        .squared_distance(p.truth())
                })
                .collect();
            let mean = errs.iter().sum::<f64>() / m as f64;
            let sd =
                (errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (m as f64 - 1.0)).sqrt();
            let se = sd / (m as f64).sqrt();
            let exact = direct_risk(&p, &spec, alpha).unwrap().total;
            assert!(
                (mean - exact).abs() <= 4.0 * se,
                "{spec:?}: {mean} vs {exact} (se {se})"
            );
        }
    }

    #[test]
    fn score_is_unbiased_up_to_signal_energy() {
        let p = ten_modes(0.05);
        let spec = FilterSpec::tikhonov();
        let m = 2000;
        let energy = signal_energy(&p);
        for alpha in [1e-3, 1e-2, 1e-1] {
            let vals: Vec<f64> = (0..m)
                .map(|i| {
                    let y = sample_observations(&p, 7 + i as u64);
                    empirical_prediction_risk(p.eigenvalues(), p.sigma(), &spec, alpha, &y).unwrap()
                })
                .collect();
            let mean = vals.iter().sum::<f64>() / m as f64;
            let sd =
                (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m as f64 - 1.0)).sqrt();
            let exact = prediction_risk(&p, &spec, alpha).unwrap().total;
            assert!((mean + energy - exact).abs() <= 4.0 * sd / (m as f64).sqrt());
        }
    }
}
