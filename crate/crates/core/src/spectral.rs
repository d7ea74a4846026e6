//! Spectral filters, the sequence model and the filter estimator.
//!
//! A filter `q_alpha(lambda)` replaces `1/lambda` in the least-squares
//! solution; `s_alpha(lambda) = lambda q_alpha(lambda)` is the corresponding
//! smoothing factor in image space. Larger `alpha` means stronger smoothing.

use crate::error::{invalid, Result};
use crate::rng::NormalStream;

/// Below this value of `lambda / alpha` the Showalter filter switches to its
/// two-term Taylor expansion.
const SHOWALTER_TAYLOR_BELOW: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FilterFamily {
    SpectralCutoff,
    Tikhonov,
    /// `m`-times iterated Tikhonov, `m >= 1`.
    IteratedTikhonov(u32),
    /// Landweber iteration with `floor(1/alpha)` steps; requires `lambda <= 1`.
    Landweber,
    Showalter,
}

/// One of the ordered filter families together with its bound constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FilterSpec {
    family: FilterFamily,
}

impl FilterSpec {
    pub fn new(family: FilterFamily) -> Result<Self> {
        if let FilterFamily::IteratedTikhonov(0) = family {
            return Err(invalid("iterated Tikhonov needs m >= 1"));
        }
        Ok(Self { family })
    }

    pub fn spectral_cutoff() -> Self {
        Self {
            family: FilterFamily::SpectralCutoff,
        }
    }

    pub fn tikhonov() -> Self {
        Self {
            family: FilterFamily::Tikhonov,
        }
    }

    pub fn iterated_tikhonov(m: u32) -> Result<Self> {
        Self::new(FilterFamily::IteratedTikhonov(m))
    }

    pub fn landweber() -> Self {
        Self {
            family: FilterFamily::Landweber,
        }
    }

    pub fn showalter() -> Self {
        Self {
            family: FilterFamily::Showalter,
        }
    }

    pub fn family(&self) -> FilterFamily {
        self.family
    }

    /// Constant `C'` in `alpha |q_alpha(lambda)| <= C'`.
    pub fn c_prime(&self) -> f64 {
        match self.family {
            FilterFamily::IteratedTikhonov(m) => m as f64,
            _ => 1.0,
        }
    }

    /// Constant `C''` in `lambda |q_alpha(lambda)| <= C''`.
    pub fn c_double_prime(&self) -> f64 {
        1.0
    }

    /// Classical qualification index `v0` (`f64::INFINITY` when unbounded).
    pub fn qualification_index(&self) -> f64 {
        match self.family {
            FilterFamily::SpectralCutoff | FilterFamily::Landweber | FilterFamily::Showalter => {
                f64::INFINITY
            }
            FilterFamily::Tikhonov => 1.0,
            FilterFamily::IteratedTikhonov(m) => m as f64,
        }
    }

    /// Constant `C_v` of the Hölder qualification bound
    /// `sup lambda^v |1 - s_alpha(lambda)| <= C_v alpha^v`, for `0 < v <= v0`.
    /// For Landweber the bound holds with `alpha` replaced by `1/N`,
    /// `N = floor(1/alpha)` the step count.
    pub fn qualification_constant(&self, v: f64) -> Option<f64> {
        if !(v > 0.0) || v > self.qualification_index() {
            return None;
        }
        Some(match self.family {
            FilterFamily::SpectralCutoff => 1.0,
            FilterFamily::Tikhonov => v.powf(v) * (1.0 - v).powf(1.0 - v),
            FilterFamily::IteratedTikhonov(m) => {
                let m = m as f64;
                (v / m).powf(v) * (1.0 - v / m).powf(m - v)
            }
            FilterFamily::Landweber | FilterFamily::Showalter => (v / std::f64::consts::E).powf(v),
        })
    }

    pub fn name(&self) -> String {
        match self.family {
            FilterFamily::SpectralCutoff => "spectral_cutoff".into(),
            FilterFamily::Tikhonov => "tikhonov".into(),
            FilterFamily::IteratedTikhonov(m) => format!("iterated_tikhonov_{m}"),
            FilterFamily::Landweber => "landweber".into(),
            FilterFamily::Showalter => "showalter".into(),
        }
    }
}

fn check_args(spec: &FilterSpec, alpha: f64, lambda: f64) -> Result<()> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(invalid(format!(
            "alpha must be positive and finite, got {alpha}"
        )));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(invalid(format!(
            "lambda must be nonnegative and finite, got {lambda}"
        )));
    }
    if spec.family == FilterFamily::Landweber && lambda > 1.0 {
        return Err(invalid(format!(
            "Landweber needs lambda <= 1, got {lambda}"
        )));
    }
    Ok(())
}

fn landweber_steps(alpha: f64) -> f64 {
    (1.0 / alpha).floor()
}

/// `q_alpha(lambda)` for arguments already validated.
pub(crate) fn q_unchecked(family: FilterFamily, alpha: f64, lambda: f64) -> f64 {
    match family {
        FilterFamily::SpectralCutoff => {
            if lambda >= alpha && lambda > 0.0 {
                1.0 / lambda
            } else {
                0.0
            }
        }
        FilterFamily::Tikhonov => 1.0 / (lambda + alpha),
        FilterFamily::IteratedTikhonov(m) => {
            if lambda == 0.0 {
                m as f64 / alpha
            } else {
                s_unchecked(family, alpha, lambda) / lambda
            }
        }
        FilterFamily::Landweber => {
            let steps = landweber_steps(alpha);
            if steps == 0.0 {
                0.0
            } else if lambda == 0.0 {
                // limit of the geometric sum: every term equals one
                steps
            } else {
                s_unchecked(family, alpha, lambda) / lambda
            }
        }
        FilterFamily::Showalter => {
            let ratio = lambda / alpha;
            if ratio < SHOWALTER_TAYLOR_BELOW {
                (1.0 - 0.5 * ratio) / alpha
            } else {
                -(-ratio).exp_m1() / lambda
            }
        }
    }
}

/// `s_alpha(lambda) = lambda q_alpha(lambda)` for arguments already validated.
pub(crate) fn s_unchecked(family: FilterFamily, alpha: f64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    match family {
        FilterFamily::SpectralCutoff => {
            if lambda >= alpha {
                1.0
            } else {
                0.0
            }
        }
        FilterFamily::Tikhonov => lambda / (lambda + alpha),
        FilterFamily::IteratedTikhonov(m) => {
            // 1 - (alpha / (lambda + alpha))^m
            let t = lambda / (lambda + alpha);
            -(m as f64 * (-t).ln_1p()).exp_m1()
        }
        FilterFamily::Landweber => {
            let steps = landweber_steps(alpha);
            if steps == 0.0 {
                0.0
            } else if lambda == 1.0 {
                1.0
            } else {
                -(steps * (-lambda).ln_1p()).exp_m1()
            }
        }
        FilterFamily::Showalter => {
            let ratio = lambda / alpha;
            if ratio < SHOWALTER_TAYLOR_BELOW {
                ratio * (1.0 - 0.5 * ratio)
            } else {
                -(-ratio).exp_m1()
            }
        }
    }
}

/// Filter value `q_alpha(lambda)`.
pub fn filter_value(spec: &FilterSpec, alpha: f64, lambda: f64) -> Result<f64> {
    check_args(spec, alpha, lambda)?;
    Ok(q_unchecked(spec.family, alpha, lambda))
}

/// Smoothing factor `s_alpha(lambda) = lambda q_alpha(lambda)`, in `[0, 1]`.
pub fn s_value(spec: &FilterSpec, alpha: f64, lambda: f64) -> Result<f64> {
    check_args(spec, alpha, lambda)?;
    Ok(s_unchecked(spec.family, alpha, lambda))
}

/// A diagonalized inverse problem: spectrum of `T*T`, truth coefficients in
/// the eigenbasis and the noise level.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralProblem {
    eigenvalues: Vec<f64>,
    truth: Vec<f64>,
    sigma: f64,
}

impl SpectralProblem {
    pub fn new(eigenvalues: Vec<f64>, truth: Vec<f64>, sigma: f64) -> Result<Self> {
        validate_eigenvalues(&eigenvalues)?;
        if truth.len() != eigenvalues.len() {
            return Err(invalid(format!(
                "{} truth coefficients for {} eigenvalues",
                truth.len(),
                eigenvalues.len()
            )));
        }
        if truth.iter().any(|f| !f.is_finite()) {
            return Err(invalid("truth coefficients must be finite"));
        }
        validate_sigma(sigma)?;
        Ok(Self {
            eigenvalues,
            truth,
            sigma,
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn truth(&self) -> &[f64] {
        &self.truth
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Largest eigenvalue, i.e. `||T*T||`.
    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Same operator and truth at a different noise level.
    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        validate_sigma(sigma)?;
        Ok(Self {
            sigma,
            ..self.clone()
        })
    }
}

pub(crate) fn validate_eigenvalues(eigenvalues: &[f64]) -> Result<()> {
    if eigenvalues.is_empty() {
        return Err(invalid("at least one eigenvalue is required"));
    }
    if eigenvalues.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
        return Err(invalid("eigenvalues must be positive and finite"));
    }
    if eigenvalues.windows(2).any(|w| w[1] > w[0]) {
        return Err(invalid("eigenvalues must be non-increasing"));
    }
    Ok(())
}

pub(crate) fn validate_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(invalid(format!(
            "sigma must be positive and finite, got {sigma}"
        )));
    }
    Ok(())
}

/// Data `Y_1..Y_n` in the sequence model.
#[derive(Debug, Clone, PartialEq)]
pub struct Observations {
    values: Vec<f64>,
}

impl Observations {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Multiplies every observation by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            values: self.values.iter().map(|y| c * y).collect(),
        }
    }
}

pub(crate) fn check_len(expected: usize, obs: &Observations) -> Result<()> {
    if obs.len() != expected {
        return Err(invalid(format!(
            "observation length {} does not match problem length {expected}",
            obs.len()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateCoefficients {
    pub values: Vec<f64>,
}

impl EstimateCoefficients {
    /// Squared Euclidean distance to `other`.
    pub fn squared_distance(&self, other: &[f64]) -> f64 {
        crate::sum::sum_ascending(self.values.len(), |k| {
            let d = self.values[k] - other[k];
            d * d
        })
    }
}

/// `(f_alpha)_k = sqrt(lambda_k) q_alpha(lambda_k) Y_k`.
pub fn estimate_coefficients(
    problem: &SpectralProblem,
    spec: &FilterSpec,
    alpha: f64,
    obs: &Observations,
) -> Result<EstimateCoefficients> {
    check_len(problem.len(), obs)?;
    check_args(spec, alpha, problem.lambda_max())?;
    let values = problem
        .eigenvalues
        .iter()
        .zip(obs.values())
        .map(|(&l, &y)| l.sqrt() * q_unchecked(spec.family, alpha, l) * y)
        .collect();
    Ok(EstimateCoefficients { values })
}

/// Draws `Y_k = sqrt(lambda_k) f_k + sigma xi_k` from the normal stream seeded
/// with `replicate_seed`.
pub fn sample_observations(problem: &SpectralProblem, replicate_seed: u64) -> Observations {
    let mut noise = NormalStream::new(replicate_seed);
    let values = problem
        .eigenvalues
        .iter()
        .zip(&problem.truth)
        .map(|(&l, &f)| l.sqrt() * f + problem.sigma * noise.normal())
        .collect();
    Observations { values }
}
