use std::path::Path;

use log::info;
use permlaw_core::balance::{admissible_epsilon, ds_approximate};
use permlaw_core::environments::{box_matrix, llp_ratio_series, Environment};
use permlaw_core::matrix::{log_factorial, permanent, permanental_mean};
use permlaw_core::randomized::{bgg_estimate, matching_expectation_experiment};
use permlaw_core::scaling::{geometric_mean, scaling_mean, sinkhorn, DEFAULT_MAX_ITER, DEFAULT_TOL};
use permlaw_core::Matrix;
use sha2::{Digest, Sha256};

use crate::config::{Command, ExperimentConfig};
use crate::output::{self, ResultRow};
use crate::CliError;

enum Source {
    Matrix(Matrix),
    Environment(Environment),
}

/// Everything an experiment produced, ready to be written.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub command: Command,
    pub config_hash: String,
    /// Sorted by (command, n, seed).
    pub rows: Vec<ResultRow>,
    /// Per-unit text reports (file name, contents).
    pub reports: Vec<(String, String)>,
}

fn load_source(config: &ExperimentConfig) -> Result<Source, CliError> {
    if let Some(spec) = &config.environment {
        return Ok(Source::Environment(Environment::from_spec(spec.clone())?));
    }
    let path = config.input.as_ref().ok_or_else(|| CliError::Config("input: missing".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("input: cannot read {}: {e}", path.display())))?;
    Matrix::parse_text(&text).map_err(|e| CliError::Config(format!("input: {}: {e}", path.display())))
        .map(Source::Matrix)
}

/// SHA-256 over the parameters and the input data, independent of file
/// locations and the output directory.
fn config_hash(config: &ExperimentConfig, source: &Source) -> String {
    let mut canonical = config.clone();
    canonical.output_dir = None;
    canonical.input = None;
    let mut hasher = Sha256::new();
    hasher.update(canonical.to_toml().as_bytes());
    if let Source::Matrix(m) = source {
        hasher.update(m.to_text().as_bytes());
    }
    hasher.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Validates `config` and runs every `(n, seed)` unit of work.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let violations = config.validate();
    if !violations.is_empty() {
        return Err(CliError::Invalid(violations));
    }
    let command = config.command.expect("validated");
    let source = load_source(config)?;
    let hash = config_hash(config, &source);

    let mut units = Vec::new();
    for seed in config.seeds() {
        match &source {
            Source::Matrix(m) => units.push((m.n(), seed)),
            Source::Environment(_) => {
                units.extend(config.ns.as_deref().unwrap_or_default().iter().map(|&n| (n, seed)));
            }
        }
    }
    units.sort_unstable();

    let mut rows = Vec::with_capacity(units.len());
    let mut reports = Vec::new();
    for (n, seed) in units {
        info!("{command}: n = {n}, seed = {seed}");
        let (matrix, env) = match &source {
            Source::Matrix(m) => (m.clone(), None),
            Source::Environment(env) => {
                let env = env.reseeded(seed);
                (box_matrix(&env, n)?, Some(env))
            }
        };
        let mut row = ResultRow::new(command, n, seed);
        compute(command, config, &matrix, env.as_ref(), seed, &mut row, &mut reports)?;
        rows.push(row);
    }
    Ok(RunOutput { command, config_hash: hash, rows, reports })
}

fn compute(
    command: Command,
    config: &ExperimentConfig,
    m: &Matrix,
    env: Option<&Environment>,
    seed: u64,
    row: &mut ResultRow,
    reports: &mut Vec<(String, String)>,
) -> Result<(), CliError> {
    let n = m.n();
    let tol = config.tol.unwrap_or(DEFAULT_TOL);
    match command {
        Command::Perm => {
            row.set("log_perm", permanent(m)?.ln().unwrap_or(f64::NEG_INFINITY));
            row.set("per", permanental_mean(m)?);
        }
        Command::Sinkhorn => {
            let dec = sinkhorn(m, tol, DEFAULT_MAX_ITER)?;
            row.set("sm", geometric_mean(&dec.d)? * geometric_mean(&dec.e)? / n as f64);
            row.set("iterations", dec.iterations as f64);
            row.set("residual", dec.residual);
            reports.push((format!("sinkhorn_n{n}_seed{seed}.txt"), dec.to_text()?));
        }
        Command::Sm => {
            row.set("sm", scaling_mean(m, tol)?);
        }
        Command::Balance => {
            let lambda = config
                .lambda
                .or(env.map(Environment::lambda))
                .unwrap_or_else(|| m.max_entry().max(1.0 / m.min_entry()).max(1.0));
            let epsilon = config.epsilon.unwrap_or_else(|| admissible_epsilon(m));
            let r = ds_approximate(m, epsilon, lambda)?;
            row.set("l1_distance", r.l1_distance);
            row.set("bound_lhs", r.l1_distance);
            row.set("bound_rhs", r.l1_bound);
            row.set("iterations", r.stage_log.metric("column_balance", "iterations").unwrap_or(0.0));
            reports.push((format!("balance_n{n}_seed{seed}.log"), r.stage_log.to_string()));
        }
        Command::Llp => {
            let env = env.expect("validated: llp needs an environment");
            let rec = &llp_ratio_series(env, &[n])?[0];
            row.set("per", rec.per_value);
            row.set("sm", rec.sm_reference);
            row.set("ratio", rec.ratio);
        }
        Command::Bounds => {
            let per = permanental_mean(m)?;
            let sm = scaling_mean(m, tol)?;
            row.set("log_perm", permanent(m)?.ln().unwrap_or(f64::NEG_INFINITY));
            row.set("per", per);
            row.set("sm", sm);
            row.set("ratio", per / sm);
            row.set("bound_lhs", per / sm);
            row.set("bound_rhs", n as f64 / (log_factorial(n) / n as f64).exp());
        }
        Command::Gaussian => {
            let s = bgg_estimate(m, config.samples.expect("validated"), seed)?;
            row.set("log_perm", s.target.ln());
            row.set("mc_mean", s.mean);
            row.set("mc_stderr", s.stderr);
            row.set("z", s.z_score);
        }
        Command::Matching => {
            let env = env.expect("validated: matching needs an environment");
            let s = matching_expectation_experiment(env, n, config.samples.expect("validated"), seed)?;
            row.set("log_perm", s.target.ln());
            row.set("mc_mean", s.mean);
            row.set("mc_stderr", s.stderr);
            row.set("z", s.z_score);
        }
    }
    Ok(())
}

/// Writes results.csv, summary.json, plot.gp and any per-unit reports.
pub fn write_outputs(out: &RunOutput, dir: &Path, timestamp: bool) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    output::write_csv(&dir.join("results.csv"), &out.rows, &out.config_hash, timestamp)?;
    let summary = output::summary(out.command, &out.rows, &out.config_hash);
    std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    std::fs::write(dir.join("plot.gp"), output::plot_script(out.command))?;
    for (name, text) in &out.reports {
        std::fs::write(dir.join(name), text)?;
    }
    Ok(())
}
