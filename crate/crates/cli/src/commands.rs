use std::path::{Path, PathBuf};
use std::time::Instant;

use invreg_core::audit::{audit_filter, FilterAudit};
use invreg_core::montecarlo::{
    decimal_ladder, dyadic_ladder, run_efficiency_experiment, run_rate_experiment, with_workers,
    ExperimentConfig, ProblemDescriptor,
};
use invreg_core::problems::make_green_problem_with;
use invreg_core::rate::{rate_test, RateSample};
use invreg_core::risk::empirical_prediction_risk;
use invreg_core::rng::replication_seed;
use invreg_core::select::build_grid;
use invreg_core::{sample_observations, FilterFamily, FilterSpec};
use serde_json::json;

use crate::config::{field, FiltersCheck, RunConfig, SimulateEfficiency};
use crate::tables;
use crate::{CliError, Command};

pub const RISK_TABLE_FILE: &str = "risk_table.csv";
pub const PER_REP_FILE: &str = "per_rep_errors.csv";
pub const EFFICIENCY_FILE: &str = "efficiency_table.csv";
pub const SCORE_CURVE_FILE: &str = "score_curve.csv";
pub const FILTERS_CHECK_FILE: &str = "filters_check.csv";
pub const RATE_TEST_FILE: &str = "rate_test.json";
pub const METADATA_FILE: &str = "metadata.json";

const RATES_REPLICATIONS: usize = 200;
const EFFICIENCY_REPLICATIONS: usize = 500;

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub command: Command,
    pub config_path: PathBuf,
    pub output_dir: PathBuf,
    pub master_seed_override: Option<u64>,
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub outputs: Vec<PathBuf>,
    pub message: String,
}

/// Everything a command produces before it touches the file system.
struct Outcome {
    files: Vec<(&'static str, String)>,
    sigmas: Option<Vec<f64>>,
    message: String,
    /// Set when the run completed but found a numeric violation.
    failure: Option<String>,
}

pub fn run_config(manifest: &RunManifest) -> Result<RunSummary, CliError> {
    let started = Instant::now();
    let config = RunConfig::load(&manifest.config_path)?;
    config.validate(manifest.command)?;
    if manifest.workers == Some(0) {
        return Err(CliError::Config("--workers must be at least 1".into()));
    }
    let seed = manifest.master_seed_override.unwrap_or(config.master_seed);
    let base_dir = manifest.config_path.parent().unwrap_or(Path::new("."));

    let run = || match manifest.command {
        Command::SimulateRates => simulate_rates(&config, seed),
        Command::SimulateEfficiency => simulate_efficiency(&config, seed),
        Command::RateTest => run_rate_test(&config, base_dir),
        Command::ScoreCurve => score_curve(&config, seed),
        Command::FiltersCheck => filters_check(&config, seed),
    };
    let outcome = match manifest.workers {
        Some(n) => with_workers(n, run)??,
        None => run()?,
    };

    std::fs::create_dir_all(&manifest.output_dir).map_err(|e| {
        CliError::Io(format!(
            "cannot create {}: {e}",
            manifest.output_dir.display()
        ))
    })?;
    let mut outputs = Vec::new();
    for (name, contents) in &outcome.files {
        let path = manifest.output_dir.join(name);
        tables::write(&path, contents)?;
        outputs.push(path);
    }
    let metadata = json!({
        "command": manifest.command.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "master_seed": seed,
        "workers": manifest.workers,
        "sigmas": outcome.sigmas,
        "wall_time_seconds": started.elapsed().as_secs_f64(),
        "outputs": outcome.files.iter().map(|(name, _)| *name).collect::<Vec<_>>(),
        "config": config,
    });
    let path = manifest.output_dir.join(METADATA_FILE);
    let text = serde_json::to_string_pretty(&metadata).map_err(|e| CliError::Io(e.to_string()))?;
    tables::write(&path, &(text + "\n"))?;
    outputs.push(path);

    if let Some(msg) = outcome.failure {
        return Err(CliError::Numeric(msg));
    }
    Ok(RunSummary {
        outputs,
        message: outcome.message,
    })
}

fn simulate_rates(config: &RunConfig, seed: u64) -> Result<Outcome, CliError> {
    let block = config
        .simulate_rates
        .as_ref()
        .ok_or_else(|| field("simulate_rates", "block is required"))?;
    let experiment = ExperimentConfig {
        problem: ProblemDescriptor::Green {
            truth: block.truth.into(),
            modes: config.modes,
            noise: block.noise.into(),
        },
        filter: config.filter_spec()?,
        sigmas: config
            .sigmas
            .clone()
            .unwrap_or_else(|| dyadic_ladder(15, 21)),
        replications: config.replications.unwrap_or(RATES_REPLICATIONS),
        grid_ratio: config.grid_ratio,
        master_seed: seed,
    };
    let table = run_rate_experiment(&experiment)?;
    Ok(Outcome {
        files: vec![
            (RISK_TABLE_FILE, tables::render_risk_table(&table.rows)?),
            (PER_REP_FILE, tables::render_per_rep_errors(&table)?),
        ],
        message: format!(
            "{} noise levels, {} replications each",
            table.rows.len(),
            experiment.replications
        ),
        sigmas: Some(experiment.sigmas),
        failure: None,
    })
}

fn simulate_efficiency(config: &RunConfig, seed: u64) -> Result<Outcome, CliError> {
    let block = config.simulate_efficiency.clone().unwrap_or_default();
    if let Some(spec) = config.filter.map(|f| f.to_spec()).transpose()? {
        if spec.family() != FilterFamily::Tikhonov {
            return Err(field(
                "filter",
                "the efficiency study uses Tikhonov regularization",
            ));
        }
    }
    let SimulateEfficiency { a, nu, n } = block;
    if !(a > 0.0) || !(nu > 0.0) || n < 1 {
        return Err(field(
            "simulate_efficiency",
            format!("need a > 0, nu > 0, n >= 1; got a = {a}, nu = {nu}, n = {n}"),
        ));
    }
    let experiment = ExperimentConfig {
        problem: ProblemDescriptor::Diagonal { n, a, nu },
        filter: FilterSpec::tikhonov(),
        sigmas: config
            .sigmas
            .clone()
            .unwrap_or_else(|| decimal_ladder(1, 6)),
        replications: config.replications.unwrap_or(EFFICIENCY_REPLICATIONS),
        grid_ratio: config.grid_ratio,
        master_seed: seed,
    };
    let table = run_efficiency_experiment(&experiment)?;
    Ok(Outcome {
        files: vec![
            (EFFICIENCY_FILE, tables::render_efficiency_table(&table)?),
            (
                RISK_TABLE_FILE,
                tables::render_risk_table(&table.risks.rows)?,
            ),
        ],
        message: format!(
            "{} noise levels, {} replications each",
            table.rows.len(),
            experiment.replications
        ),
        sigmas: Some(experiment.sigmas),
        failure: None,
    })
}

fn run_rate_test(config: &RunConfig, base_dir: &Path) -> Result<Outcome, CliError> {
    let block = config
        .rate_test
        .as_ref()
        .ok_or_else(|| field("rate_test", "block is required"))?;
    if !block.theta_target.is_finite() {
        return Err(field("rate_test.theta_target", "must be finite"));
    }
    if let Some(bad) = block.levels.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
        return Err(field(
            "rate_test.levels",
            format!("levels must lie in (0, 1), got {bad}"),
        ));
    }
    let input = base_dir.join(&block.input);
    let (sigmas, groups) = tables::read_per_rep_errors(&input)?;
    let rule = block.column.into();
    let samples = sigmas
        .iter()
        .zip(&groups)
        .map(|(&sigma, reps)| {
            let errors = reps
                .iter()
                .map(|e| e.get(rule).expect("rule has errors"))
                .collect();
            RateSample::new(sigma, errors)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let result = rate_test(&samples, block.theta_target)?;
    let decisions: Vec<_> = block
        .levels
        .iter()
        .map(|&l| json!({ "level": l, "reject": result.reject_at(l) }))
        .collect();
    let report = json!({
        "input": block.input,
        "column": block.column,
        "theta_hat": result.theta_hat,
        "rho_hat": result.rho_hat,
        "statistic": result.statistic,
        "p_value": result.p_value,
        "theta_target": result.theta_target,
        "decisions": decisions,
    });
    let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(Outcome {
        files: vec![(RATE_TEST_FILE, text + "\n")],
        message: format!(
            "theta_hat = {:.6}, T = {:.6}, p = {:.6}",
            result.theta_hat, result.statistic, result.p_value
        ),
        sigmas: Some(sigmas),
        failure: None,
    })
}

fn score_curve(config: &RunConfig, seed: u64) -> Result<Outcome, CliError> {
    let block = config
        .score_curve
        .as_ref()
        .ok_or_else(|| field("score_curve", "block is required"))?;
    if !(block.sigma > 0.0) || !block.sigma.is_finite() {
        return Err(field(
            "score_curve.sigma",
            format!("must be positive, got {}", block.sigma),
        ));
    }
    let spec = config.filter_spec()?;
    let problem = make_green_problem_with(
        config.modes,
        block.truth.into(),
        block.sigma,
        block.noise.into(),
    )?;
    let grid = build_grid(block.sigma, problem.lambda_max(), config.grid_ratio)?;
    let obs = sample_observations(&problem, replication_seed(seed, 0, block.replicate));
    let points = grid
        .values()
        .iter()
        .map(|&alpha| {
            empirical_prediction_risk(problem.eigenvalues(), problem.sigma(), &spec, alpha, &obs)
                .map(|s| (alpha, s))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let (alpha, score) = points
        .iter()
        .copied()
        .fold((f64::NAN, f64::INFINITY), |best, p| {
            if p.1 < best.1 {
                p
            } else {
                best
            }
        });
    Ok(Outcome {
        files: vec![(SCORE_CURVE_FILE, tables::render_score_curve(&points)?)],
        message: format!(
            "{} grid points, minimum {score:e} at alpha = {alpha:e}",
            points.len()
        ),
        sigmas: Some(vec![block.sigma]),
        failure: None,
    })
}

fn filters_check(config: &RunConfig, seed: u64) -> Result<Outcome, CliError> {
    let block: FiltersCheck = config.filters_check.clone().unwrap_or_default();
    if block.samples < 1 {
        return Err(field("filters_check.samples", "must be at least 1"));
    }
    let iterated = match config.filter.map(|f| f.to_spec()).transpose()? {
        Some(spec) if matches!(spec.family(), FilterFamily::IteratedTikhonov(_)) => spec,
        _ => FilterSpec::iterated_tikhonov(2)?,
    };
    let specs = [
        FilterSpec::spectral_cutoff(),
        FilterSpec::tikhonov(),
        iterated,
        FilterSpec::landweber(),
        FilterSpec::showalter(),
    ];
    let audits = specs
        .iter()
        .enumerate()
        .map(|(i, spec)| audit_filter(spec, block.samples, replication_seed(seed, 0, i as u64)))
        .collect::<Result<Vec<FilterAudit>, _>>()?;
    let violations: usize = audits.iter().map(FilterAudit::violations).sum();
    Ok(Outcome {
        files: vec![(FILTERS_CHECK_FILE, tables::render_audit(&audits)?)],
        message: format!(
            "{} families, {} pairs each, {violations} violations",
            audits.len(),
            block.samples
        ),
        sigmas: None,
        failure: (violations > 0).then(|| format!("{violations} filter property violations")),
    })
}
