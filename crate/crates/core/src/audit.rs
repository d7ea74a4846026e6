//! Randomized checks of the filter properties on log-uniform `(alpha, lambda)`
//! pairs.

use crate::error::{invalid, Result};
use crate::rng::NormalStream;
use crate::spectral::{q_unchecked, s_unchecked, FilterFamily, FilterSpec};

/// Smoothness indices at which the qualification bound is checked.
pub const QUALIFICATION_INDICES: [f64; 3] = [0.25, 0.5, 1.0];

/// Relative slack allowed for rounding in every comparison.
const SLACK: f64 = 1e-9;

/// Violation counts per property over `pairs` random draws.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterAudit {
    pub spec: FilterSpec,
    pub pairs: usize,
    /// `q` increased when `alpha` grew.
    pub monotonicity: usize,
    /// `alpha q > C'`.
    pub c_prime: usize,
    /// `lambda q > C''`.
    pub c_double_prime: usize,
    /// `s` outside `[0, 1]`.
    pub range: usize,
    /// `lambda^v (1 - s) > C_v alpha^v` for some checked `v <= v0`.
    pub qualification: usize,
}

impl FilterAudit {
    pub fn violations(&self) -> usize {
        self.monotonicity + self.c_prime + self.c_double_prime + self.range + self.qualification
    }
}

/// Draws `pairs` pairs with `alpha` in `[1e-8, 1]` and `lambda` in
/// `[1e-10, 1]` (log-uniform) and counts property violations.
pub fn audit_filter(spec: &FilterSpec, pairs: usize, seed: u64) -> Result<FilterAudit> {
    if pairs == 0 {
        return Err(invalid("audit needs at least one pair"));
    }
    let family = spec.family();
    let mut rng = NormalStream::new(seed);
    let mut audit = FilterAudit {
        spec: *spec,
        pairs,
        monotonicity: 0,
        c_prime: 0,
        c_double_prime: 0,
        range: 0,
        qualification: 0,
    };
    let constants: Vec<(f64, f64)> = QUALIFICATION_INDICES
        .iter()
        .filter_map(|&v| spec.qualification_constant(v).map(|c| (v, c)))
        .collect();
    for _ in 0..pairs {
        let alpha = 10f64.powf(-8.0 * rng.uniform());
        let lambda = 10f64.powf(-10.0 * rng.uniform());
        let larger = alpha * 10f64.powf(rng.uniform());
        let q = q_unchecked(family, alpha, lambda);
        let s = s_unchecked(family, alpha, lambda);
        if q_unchecked(family, larger, lambda) > q * (1.0 + SLACK) {
            audit.monotonicity += 1;
        }
        if alpha * q > spec.c_prime() * (1.0 + SLACK) {
            audit.c_prime += 1;
        }
        if lambda * q > spec.c_double_prime() * (1.0 + SLACK) {
            audit.c_double_prime += 1;
        }
        if !(0.0..=1.0).contains(&s) {
            audit.range += 1;
        }
        // Landweber runs floor(1/alpha) steps, so its bound is in 1/steps
        let scale = match family {
            FilterFamily::Landweber => 1.0 / (1.0 / alpha).floor(),
            _ => alpha,
        };
        if constants
            .iter()
            .any(|&(v, c)| lambda.powf(v) * (1.0 - s) > c * scale.powf(v) * (1.0 + SLACK))
        {
            audit.qualification += 1;
        }
    }
    Ok(audit)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_families_pass() {
        let specs = [
            FilterSpec::spectral_cutoff(),
            FilterSpec::tikhonov(),
            FilterSpec::iterated_tikhonov(4).unwrap(),
            FilterSpec::landweber(),
            FilterSpec::showalter(),
        ];
        for spec in specs {
            let audit = audit_filter(&spec, 5000, 9).unwrap();
            assert_eq!(audit.violations(), 0, "{audit:?}");
        }
    }

    #[test]
    fn zero_pairs_rejected() {
        assert!(audit_filter(&FilterSpec::tikhonov(), 0, 1).is_err());
    }
}
