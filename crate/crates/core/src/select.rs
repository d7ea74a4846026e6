//! Candidate grid and parameter-choice rules.
//!
//! All grid-based rules scan the geometric grid `sigma^2 r^j` and break exact
//! ties toward the smallest index.

use crate::error::{invalid, Result};
use crate::risk::{direct_risk_from_filter, require_positive, score_from_s, threshold_from_q};
use crate::spectral::{
    check_len, filter_value, q_unchecked, s_unchecked, validate_eigenvalues, validate_sigma,
    FilterFamily, FilterSpec, Observations, SpectralProblem,
};
use crate::sum::sum_ascending;

/// Relative slack when deciding whether `sigma^2 r^K` still lies below
/// `lambda_max`; absorbs rounding in the logarithms.
const GRID_EDGE_SLACK: f64 = 1e-12;

/// Geometric grid `sigma^2 r^j`, `j = 0..=K`, covering `[sigma^2, lambda_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterGrid {
    ratio: f64,
    values: Vec<f64>,
}

impl ParameterGrid {
    pub fn ratio(&self) -> f64 {
        self.ratio
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
}

/// Default grid ratio.
pub const DEFAULT_GRID_RATIO: f64 = 1.2;

pub fn build_grid(sigma: f64, lambda_max: f64, ratio: f64) -> Result<ParameterGrid> {
    validate_sigma(sigma)?;
    require_positive("lambda_max", lambda_max)?;
    if !(ratio > 1.0) || !ratio.is_finite() {
        return Err(invalid(format!("grid ratio must exceed 1, got {ratio}")));
    }
    let base = sigma * sigma;
    if base >= lambda_max {
        return Err(invalid(format!(
            "empty grid: sigma^2 = {base} is not below lambda_max = {lambda_max}"
        )));
    }
    let limit = lambda_max * (1.0 + GRID_EDGE_SLACK);
    let mut top = ((lambda_max / base).ln() / ratio.ln()).floor() as i64;
    while base * ratio.powi((top + 1) as i32) <= limit {
        top += 1;
    }
    while top > 0 && base * ratio.powi(top as i32) > limit {
        top -= 1;
    }
    let values = (0..=top).map(|j| base * ratio.powi(j as i32)).collect();
    Ok(ParameterGrid { ratio, values })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    Oracle,
    Pred,
    Lepskii,
    APriori,
}

/// A chosen regularization parameter.
///
/// `score` is the quantity that decided the choice: the direct risk for
/// [`Rule::Oracle`], the empirical score for [`Rule::Pred`], and for
/// [`Rule::Lepskii`] the largest ratio of distance to threshold over all
/// less regularized candidates (at most one).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub alpha: f64,
    pub grid_index: usize,
    pub rule: Rule,
    pub score: f64,
}

/// Filter values of one family on every (grid point, mode) pair.
#[derive(Debug, Clone)]
pub(crate) struct GridFilters {
    alphas: Vec<f64>,
    sqrt_lambda: Vec<f64>,
    eigenvalues: Vec<f64>,
    q: Vec<Vec<f64>>,
    s: Vec<Vec<f64>>,
}

impl GridFilters {
    pub(crate) fn new(
        eigenvalues: &[f64],
        spec: &FilterSpec,
        grid: &ParameterGrid,
    ) -> Result<Self> {
        validate_eigenvalues(eigenvalues)?;
        if grid.is_empty() {
            return Err(invalid("empty parameter grid"));
        }
        // validates Landweber's spectrum bound once
        filter_value(spec, grid.values[0], eigenvalues[0])?;
        let family: FilterFamily = spec.family();
        let q = grid
            .values
            .iter()
            .map(|&a| {
                eigenvalues
                    .iter()
                    .map(|&l| q_unchecked(family, a, l))
                    .collect()
            })
            .collect();
        let s = grid
            .values
            .iter()
            .map(|&a| {
                eigenvalues
                    .iter()
                    .map(|&l| s_unchecked(family, a, l))
                    .collect()
            })
            .collect();
        Ok(Self {
            alphas: grid.values.clone(),
            sqrt_lambda: eigenvalues.iter().map(|l| l.sqrt()).collect(),
            eigenvalues: eigenvalues.to_vec(),
            q,
            s,
        })
    }

    fn select(&self, index: usize, rule: Rule, score: f64) -> Selection {
        Selection {
            alpha: self.alphas[index],
            grid_index: index,
            rule,
            score,
        }
    }

    pub(crate) fn oracle(&self, problem: &SpectralProblem) -> Selection {
        let risks = (0..self.alphas.len())
            .map(|j| direct_risk_from_filter(problem, &self.q[j], &self.s[j]).total);
        let (index, score) = argmin(risks);
        self.select(index, Rule::Oracle, score)
    }

    pub(crate) fn pred(&self, obs: &Observations, sigma: f64) -> Selection {
        let y2: Vec<f64> = obs.values().iter().map(|y| y * y).collect();
        let scores = self.s.iter().map(|s| score_from_s(s, &y2, sigma));
        let (index, score) = argmin(scores);
        self.select(index, Rule::Pred, score)
    }

    pub(crate) fn thresholds(&self, sigma: f64) -> Vec<f64> {
        self.q
            .iter()
            .map(|q| threshold_from_q(&self.eigenvalues, q, sigma))
            .collect()
    }

    pub(crate) fn estimate(&self, index: usize, obs: &Observations) -> Vec<f64> {
        let q = &self.q[index];
        self.sqrt_lambda
            .iter()
            .zip(q)
            .zip(obs.values())
            .map(|((r, q), y)| r * q * y)
            .collect()
    }

    /// Largest index `i` with `||f_j - f_i|| <= threshold_j` for all `j < i`.
    /// Rows are tried from the top down so the first admissible row is the
    /// answer; index 0 is admissible vacuously.
    pub(crate) fn lepskii(&self, obs: &Observations, thresholds: &[f64]) -> Selection {
        let estimates: Vec<Vec<f64>> = (0..self.alphas.len())
            .map(|j| self.estimate(j, obs))
            .collect();
        for i in (1..self.alphas.len()).rev() {
            let mut worst = 0.0f64;
            let mut admissible = true;
            for j in 0..i {
                let dist = distance(&estimates[j], &estimates[i]);
                if dist > thresholds[j] {
                    admissible = false;
                    break;
                }
                if dist > 0.0 {
                    worst = worst.max(dist / thresholds[j]);
                }
            }
            if admissible {
                return self.select(i, Rule::Lepskii, worst);
            }
        }
        self.select(0, Rule::Lepskii, 0.0)
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    sum_ascending(a.len(), |k| {
        let d = a[k] - b[k];
        d * d
    })
    .sqrt()
}

/// Index and value of the first minimum; NaN entries never win.
fn argmin(values: impl Iterator<Item = f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, v) in values.enumerate() {
        if v < best.1 {
            best = (j, v);
        }
    }
    best
}

/// Grid minimizer of the exact direct risk; needs the truth.
pub fn choose_oracle(
    problem: &SpectralProblem,
    spec: &FilterSpec,
    grid: &ParameterGrid,
) -> Result<Selection> {
    Ok(GridFilters::new(problem.eigenvalues(), spec, grid)?.oracle(problem))
}

/// Grid minimizer of the empirical prediction-risk score.
pub fn choose_pred(
    eigenvalues: &[f64],
    sigma: f64,
    spec: &FilterSpec,
    grid: &ParameterGrid,
    obs: &Observations,
) -> Result<Selection> {
    validate_sigma(sigma)?;
    check_len(eigenvalues.len(), obs)?;
    Ok(GridFilters::new(eigenvalues, spec, grid)?.pred(obs, sigma))
}

/// Lepskii balancing principle on the grid.
pub fn choose_lepskii(
    eigenvalues: &[f64],
    sigma: f64,
    spec: &FilterSpec,
    grid: &ParameterGrid,
    obs: &Observations,
) -> Result<Selection> {
    validate_sigma(sigma)?;
    check_len(eigenvalues.len(), obs)?;
    let table = GridFilters::new(eigenvalues, spec, grid)?;
    let thresholds = table.thresholds(sigma);
    Ok(table.lepskii(obs, &thresholds))
}

/// A-priori choice `C_a^{1/(1+a+b)} sigma^{2a/(1+a+b)}` for eigenvalues
/// `C_a k^{-a}` and truth smoothness `b`, balancing `alpha phi(alpha)^2`
/// against `sigma^2 S(alpha)` with `phi(x) = x^{b/(2a)}` and
/// `S(alpha) = (alpha/C_a)^{-1/a}`.
pub fn apriori_alpha_polynomial(a: f64, c_a: f64, b: f64, sigma: f64) -> Result<f64> {
    if !(a > 1.0) || !a.is_finite() {
        return Err(invalid(format!(
            "eigenvalue decay a must exceed 1, got {a}"
        )));
    }
    require_positive("C_a", c_a)?;
    require_positive("b", b)?;
    validate_sigma(sigma)?;
    let denom = 1.0 + a + b;
    Ok(c_a.powf(1.0 / denom) * sigma.powf(2.0 * a / denom))
}
