//! Seeded Monte Carlo replication engine.
//!
//! Each replication draws its own seed from `(master_seed, row, replication)`
//! (see [`crate::rng::replication_seed`]); replications run on the ambient
//! rayon pool and are reduced in replication order, so tables are
//! bit-identical for any number of worker threads.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::problems::{make_diagonal_problem, make_green_problem_with, GreenNoise, TestFunction};
use crate::rate::RateSample;
use crate::rng::{replication_seed, substream};
use crate::select::{build_grid, GridFilters, ParameterGrid, Rule, Selection};
use crate::spectral::{sample_observations, FilterSpec, SpectralProblem};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProblemDescriptor {
    /// The grid always starts at the nominal `sigma^2`, whichever way
    /// `noise` maps `sigma` to the coefficients.
    Green {
        truth: TestFunction,
        modes: usize,
        noise: GreenNoise,
    },
    /// Singular values `k^{-a}`, truth decay `k^{-nu}`, redrawn per replication.
    Diagonal { n: usize, a: f64, nu: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemDescriptor,
    pub filter: FilterSpec,
    pub sigmas: Vec<f64>,
    pub replications: usize,
    pub grid_ratio: f64,
    pub master_seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications < 2 {
            return Err(invalid("at least two replications are required"));
        }
        if self.sigmas.is_empty() {
            return Err(invalid("sigmas must not be empty"));
        }
        if self.sigmas.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(invalid("sigmas must be positive and finite"));
        }
        if !(self.grid_ratio > 1.0) {
            return Err(invalid(format!(
                "grid ratio must exceed 1, got {}",
                self.grid_ratio
            )));
        }
        Ok(())
    }
}

/// Squared errors of one replication under the three rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicationErrors {
    pub err_or: f64,
    pub err_pred: f64,
    pub err_lep: f64,
}

impl ReplicationErrors {
    pub fn get(&self, rule: Rule) -> Option<f64> {
        match rule {
            Rule::Oracle => Some(self.err_or),
            Rule::Pred => Some(self.err_pred),
            Rule::Lepskii => Some(self.err_lep),
            Rule::APriori => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskRow {
    pub sigma: f64,
    pub r_or: f64,
    pub se_or: f64,
    pub r_pred: f64,
    pub se_pred: f64,
    pub r_lep: f64,
    pub se_lep: f64,
}

impl RiskRow {
    /// Aggregates replications: means and standard errors `sd / sqrt(m)`.
    pub fn from_errors(sigma: f64, errors: &[ReplicationErrors]) -> Self {
        let (r_or, se_or) = mean_and_se(errors.iter().map(|e| e.err_or));
        let (r_pred, se_pred) = mean_and_se(errors.iter().map(|e| e.err_pred));
        let (r_lep, se_lep) = mean_and_se(errors.iter().map(|e| e.err_lep));
        Self {
            sigma,
            r_or,
            se_or,
            r_pred,
            se_pred,
            r_lep,
            se_lep,
        }
    }

    pub fn risk(&self, rule: Rule) -> Option<(f64, f64)> {
        match rule {
            Rule::Oracle => Some((self.r_or, self.se_or)),
            Rule::Pred => Some((self.r_pred, self.se_pred)),
            Rule::Lepskii => Some((self.r_lep, self.se_lep)),
            Rule::APriori => None,
        }
    }
}

/// Sample mean and standard error, accumulated in iteration order.
pub fn mean_and_se(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let (count, total) = values
        .clone()
        .fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    let mean = total / count as f64;
    let ss = values.fold(0.0, |acc, v| acc + (v - mean) * (v - mean));
    let sd = (ss / (count as f64 - 1.0)).sqrt();
    (mean, sd / (count as f64).sqrt())
}

/// Empirical risks per noise level, in the order of the configured sigmas.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskTable {
    pub rows: Vec<RiskRow>,
    /// Per-row replication errors in replication order, when retained.
    pub per_rep_errors: Option<Vec<Vec<ReplicationErrors>>>,
}

impl RiskTable {
    /// Recomputes every row from the retained replication errors.
    pub fn from_replications(sigmas: &[f64], errors: Vec<Vec<ReplicationErrors>>) -> Self {
        let rows = sigmas
            .iter()
            .zip(&errors)
            .map(|(&s, e)| RiskRow::from_errors(s, e))
            .collect();
        Self {
            rows,
            per_rep_errors: Some(errors),
        }
    }

    /// Rate-test inputs for one rule; needs retained replication errors.
    pub fn rate_samples(&self, rule: Rule) -> Result<Vec<RateSample>> {
        let per_rep = self
            .per_rep_errors
            .as_ref()
            .ok_or_else(|| invalid("risk table does not retain per-replication errors"))?;
        self.rows
            .iter()
            .zip(per_rep)
            .map(|(row, reps)| {
                let errors: Vec<f64> = reps
                    .iter()
                    .map(|e| {
                        e.get(rule)
                            .ok_or_else(|| invalid("rule has no replication errors"))
                    })
                    .collect::<Result<_>>()?;
                RateSample::new(row.sigma, errors)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfficiencyRow {
    pub sigma: f64,
    pub eff_pred: f64,
    pub eff_lep: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyTable {
    pub rows: Vec<EfficiencyRow>,
    /// The underlying risk table the ratios were formed from.
    pub risks: RiskTable,
}

/// Precomputed filter tables, oracle choice and Lepskii thresholds for one
/// problem and grid.
pub struct Replicator<'a> {
    problem: &'a SpectralProblem,
    filters: GridFilters,
    oracle: Selection,
    thresholds: Vec<f64>,
}

impl<'a> Replicator<'a> {
    pub fn new(
        problem: &'a SpectralProblem,
        spec: &FilterSpec,
        grid: &ParameterGrid,
    ) -> Result<Self> {
        let filters = GridFilters::new(problem.eigenvalues(), spec, grid)?;
        let oracle = filters.oracle(problem);
        let thresholds = filters.thresholds(problem.sigma());
        Ok(Self {
            problem,
            filters,
            oracle,
            thresholds,
        })
    }

    pub fn oracle(&self) -> Selection {
        self.oracle
    }

    pub fn replicate(&self, seed: u64) -> Result<ReplicationErrors> {
        self.replicate_with_selections(seed)
            .map(|(errors, _)| errors)
    }

    /// Errors together with the `(pred, lepskii)` selections.
    pub fn replicate_with_selections(
        &self,
        seed: u64,
    ) -> Result<(ReplicationErrors, (Selection, Selection))> {
        replicate_on(
            &self.filters,
            self.problem,
            self.oracle.grid_index,
            &self.thresholds,
            seed,
        )
    }
}

fn replicate_on(
    filters: &GridFilters,
    problem: &SpectralProblem,
    oracle_index: usize,
    thresholds: &[f64],
    seed: u64,
) -> Result<(ReplicationErrors, (Selection, Selection))> {
    let obs = sample_observations(problem, seed);
    let pred = filters.pred(&obs, problem.sigma());
    let lep = filters.lepskii(&obs, thresholds);
    let truth = problem.truth();
    let err = |index: usize| -> Result<f64> {
        let est = filters.estimate(index, &obs);
        let e = crate::sum::sum_ascending(est.len(), |k| {
            let d = est[k] - truth[k];
            d * d
        });
        if e.is_finite() && e >= 0.0 {
            Ok(e)
        } else {
            Err(Error::NumericFailure(format!(
                "non-finite squared error {e}"
            )))
        }
    };
    let errors = ReplicationErrors {
        err_or: err(oracle_index)?,
        err_pred: err(pred.grid_index)?,
        err_lep: err(lep.grid_index)?,
    };
    Ok((errors, (pred, lep)))
}

/// One replication: sample data, choose `alpha` by the three rules and return
/// the squared distances of the resulting estimates to the truth.
pub fn replicate_once(
    problem: &SpectralProblem,
    spec: &FilterSpec,
    grid: &ParameterGrid,
    replicate_seed: u64,
) -> Result<ReplicationErrors> {
    Replicator::new(problem, spec, grid)?.replicate(replicate_seed)
}

fn run_rows<F>(config: &ExperimentConfig, row: F) -> Result<Vec<Vec<ReplicationErrors>>>
where
    F: Fn(usize, f64) -> Result<Vec<ReplicationErrors>>,
{
    config
        .sigmas
        .iter()
        .enumerate()
        .map(|(i, &sigma)| row(i, sigma))
        .collect()
}

/// Risk table for a fixed Green-kernel truth across the noise ladder.
pub fn run_rate_experiment(config: &ExperimentConfig) -> Result<RiskTable> {
    config.validate()?;
    let (truth, modes, noise) = match config.problem {
        ProblemDescriptor::Green {
            truth,
            modes,
            noise,
        } => (truth, modes, noise),
        ProblemDescriptor::Diagonal { .. } => {
            return Err(invalid("rate experiments need a Green-kernel problem"))
        }
    };
    let errors = run_rows(config, |row, sigma| {
        let problem = make_green_problem_with(modes, truth, sigma, noise)?;
        let grid = build_grid(sigma, problem.lambda_max(), config.grid_ratio)?;
        let replicator = Replicator::new(&problem, &config.filter, &grid)?;
        (0..config.replications)
            .into_par_iter()
            .map(|rep| {
                replicator.replicate(replication_seed(config.master_seed, row as u64, rep as u64))
            })
            .collect()
    })?;
    Ok(RiskTable::from_replications(&config.sigmas, errors))
}

/// Oracle efficiencies `R_or / R_pred` and `R_or / R_LEP` on the diagonal
/// problem with Tikhonov regularization, redrawing the truth every
/// replication.
pub fn run_efficiency_experiment(config: &ExperimentConfig) -> Result<EfficiencyTable> {
    config.validate()?;
    let (n, a, nu) = match config.problem {
        ProblemDescriptor::Diagonal { n, a, nu } => (n, a, nu),
        ProblemDescriptor::Green { .. } => {
            return Err(invalid("efficiency experiments need a diagonal problem"))
        }
    };
    let spec = FilterSpec::tikhonov();
    let errors = run_rows(config, |row, sigma| {
        // the spectrum does not depend on the truth draw
        let template = make_diagonal_problem(n, a, nu, sigma, 0)?;
        let grid = build_grid(sigma, template.lambda_max(), config.grid_ratio)?;
        let filters = GridFilters::new(template.eigenvalues(), &spec, &grid)?;
        let thresholds = filters.thresholds(sigma);
        (0..config.replications)
            .into_par_iter()
            .map(|rep| {
                let seed = replication_seed(config.master_seed, row as u64, rep as u64);
                let problem = make_diagonal_problem(n, a, nu, sigma, substream(seed, 0x7472_7574))?;
                let oracle = filters.oracle(&problem);
                replicate_on(
                    &filters,
                    &problem,
                    oracle.grid_index,
                    &thresholds,
                    substream(seed, 0x6e6f_6973),
                )
                .map(|(errors, _)| errors)
            })
            .collect()
    })?;
    let risks = RiskTable::from_replications(&config.sigmas, errors);
    let rows = risks
        .rows
        .iter()
        .map(|r| EfficiencyRow {
            sigma: r.sigma,
            eff_pred: r.r_or / r.r_pred,
            eff_lep: r.r_or / r.r_lep,
        })
        .collect();
    Ok(EfficiencyTable { rows, risks })
}

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::NumericFailure(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Noise ladder `2^{-from}, ..., 2^{-to}`.
pub fn dyadic_ladder(from: i32, to: i32) -> Vec<f64> {
    (from..=to).map(|e| 2f64.powi(-e)).collect()
}

/// Noise ladder `10^{-from}, ..., 10^{-to}`.
pub fn decimal_ladder(from: i32, to: i32) -> Vec<f64> {
    (from..=to).map(|e| 10f64.powi(-e)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::risk::direct_risk;

    fn small_problem(sigma: f64) -> SpectralProblem {
        let lambda: Vec<f64> = (1..=10).map(|k| (k as f64).powi(-4)).collect();
        let f: Vec<f64> = (1..=10).map(|k| (k as f64).powi(-2)).collect();
        SpectralProblem::new(lambda, f, sigma).unwrap()
    }

    #[test]
    fn noise_free_limit() {
        let p = small_problem(1e-150);
        let spec = FilterSpec::tikhonov();
        // the grid itself is built for a moderate noise level so that the
        // biases stay far above rounding
        let grid = build_grid(1e-3, p.lambda_max(), 1.2).unwrap();
        let rep = Replicator::new(&p, &spec, &grid).unwrap();
        let errs = rep.replicate(3).unwrap();
        let bias = |a: f64| direct_risk(&p, &spec, a).unwrap().bias_term;
        let min_bias = grid
            .values()
            .iter()
            .map(|&a| bias(a))
            .fold(f64::INFINITY, f64::min);
        assert!(
            (errs.err_or - min_bias).abs() <= 1e-9 * min_bias,
            "{} vs {min_bias}",
            errs.err_or
        );
        assert!(errs.err_pred >= errs.err_or * (1.0 - 1e-12));
    }

    #[test]
    fn same_seed_same_triple() {
        let p = small_problem(0.01);
        let grid = build_grid(0.01, p.lambda_max(), 1.2).unwrap();
        let a = replicate_once(&p, &FilterSpec::showalter(), &grid, 17).unwrap();
        let b = replicate_once(&p, &FilterSpec::showalter(), &grid, 17).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn oracle_error_matches_closed_form() {
        let p = small_problem(1e-3);
        let spec = FilterSpec::tikhonov();
        let grid = build_grid(p.sigma(), p.lambda_max(), 1.2).unwrap();
        let rep = Replicator::new(&p, &spec, &grid).unwrap();
        let errs: Vec<f64> = (0..2000)
            .map(|s| rep.replicate(s).unwrap().err_or)
            .collect();
        let (mean, se) = mean_and_se(errs.iter().copied());
        let exact = direct_risk(&p, &spec, rep.oracle().alpha).unwrap().total;
        assert!((mean - exact).abs() <= 4.0 * se, "{mean} vs {exact} ± {se}");
    }

    #[test]
    fn config_validation() {
        let mut cfg = ExperimentConfig {
            problem: ProblemDescriptor::Green {
                truth: TestFunction::HatFunction,
                modes: 16,
                noise: GreenNoise::Coefficient,
            },
            filter: FilterSpec::tikhonov(),
            sigmas: vec![1e-3],
            replications: 1,
            grid_ratio: 1.2,
            master_seed: 0,
        };
        assert!(run_rate_experiment(&cfg).is_err());
        cfg.replications = 4;
        cfg.sigmas = vec![];
        assert!(cfg.validate().is_err());
        cfg.sigmas = vec![1e-3, -1.0];
        assert!(cfg.validate().is_err());
        cfg.sigmas = vec![1e-3];
        assert!(run_efficiency_experiment(&cfg).is_err());
        assert!(run_rate_experiment(&cfg).is_ok());
    }

    #[test]
    fn aggregation_reproduces_from_retained_errors() {
        let cfg = ExperimentConfig {
            problem: ProblemDescriptor::Green {
                truth: TestFunction::Indicator,
                modes: 64,
                noise: GreenNoise::Coefficient,
            },
            filter: FilterSpec::tikhonov(),
            sigmas: dyadic_ladder(8, 10),
            replications: 20,
            grid_ratio: 1.2,
            master_seed: 5,
        };
        let table = run_rate_experiment(&cfg).unwrap();
        let again =
            RiskTable::from_replications(&cfg.sigmas, table.per_rep_errors.clone().unwrap());
        assert_eq!(table, again);
        for row in table.per_rep_errors.as_ref().unwrap() {
            for e in row {
                for v in [e.err_or, e.err_pred, e.err_lep] {
                    assert!(v.is_finite() && v >= 0.0);
                }
            }
        }
    }

    #[test]
    fn worker_count_does_not_change_tables() {
        let cfg = ExperimentConfig {
            problem: ProblemDescriptor::Green {
                truth: TestFunction::HatFunction,
                modes: 128,
                noise: GreenNoise::Sampled,
            },
            filter: FilterSpec::showalter(),
            sigmas: dyadic_ladder(10, 12),
            replications: 24,
            grid_ratio: 1.2,
            master_seed: 99,
        };
        let one = with_workers(1, || run_rate_experiment(&cfg))
            .unwrap()
            .unwrap();
        let two = with_workers(2, || run_rate_experiment(&cfg))
            .unwrap()
            .unwrap();
        let eight = with_workers(8, || run_rate_experiment(&cfg))
            .unwrap()
            .unwrap();
        assert_eq!(one, two);
        assert_eq!(one, eight);
    }

    #[test]
    fn efficiency_ratios_are_positive() {
        let cfg = ExperimentConfig {
            problem: ProblemDescriptor::Diagonal {
                n: 50,
                a: 2.0,
                nu: 2.0,
            },
            filter: FilterSpec::tikhonov(),
            sigmas: decimal_ladder(2, 3),
            replications: 30,
            grid_ratio: 1.2,
            master_seed: 1,
        };
        let t = run_efficiency_experiment(&cfg).unwrap();
        assert_eq!(t.rows.len(), 2);
        for r in &t.rows {
            assert!(r.eff_pred > 0.0 && r.eff_lep > 0.0);
        }
    }
}
