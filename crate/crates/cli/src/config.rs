use std::fmt;
use std::path::{Path, PathBuf};

use permlaw_core::balance::check_window;
use permlaw_core::environments::{Environment, EnvironmentKind, EnvironmentSpec};
use permlaw_core::matrix::RYSER_MAX_N;
use permlaw_core::randomized::MC_MAX_N;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Perm,
    Sinkhorn,
    Sm,
    Balance,
    Llp,
    Bounds,
    Gaussian,
    Matching,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Perm => "perm",
            Command::Sinkhorn => "sinkhorn",
            Command::Sm => "sm",
            Command::Balance => "balance",
            Command::Llp => "llp",
            Command::Bounds => "bounds",
            Command::Gaussian => "gaussian",
            Command::Matching => "matching",
        }
    }

    /// Largest window the command can handle exactly.
    fn max_n(self) -> Option<usize> {
        match self {
            Command::Perm | Command::Bounds => Some(RYSER_MAX_N),
            Command::Gaussian | Command::Matching => Some(MC_MAX_N),
            _ => None,
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One experiment: a command, its data source and parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// May be omitted in the file when given on the command line.
    pub command: Option<Command>,
    /// Matrix file, relative to the config file.
    pub input: Option<PathBuf>,
    pub environment: Option<EnvironmentSpec>,
    pub seeds: Option<Vec<u64>>,
    pub ns: Option<Vec<usize>>,
    pub epsilon: Option<f64>,
    pub lambda: Option<f64>,
    pub tol: Option<f64>,
    pub samples: Option<usize>,
    pub output_dir: Option<PathBuf>,
}

/// A failed constraint on one config field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: &'static str,
    pub constraint: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.constraint)
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads a config file; a relative `input` is resolved against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::from_toml(&text)?;
        if let (Some(input), Some(dir)) = (&config.input, path.parent()) {
            if input.is_relative() {
                config.input = Some(dir.join(input));
            }
        }
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn seeds(&self) -> Vec<u64> {
        self.seeds.clone().unwrap_or_else(|| vec![0])
    }

    /// Every violated constraint; empty iff the config is runnable.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut bad = |field: &'static str, constraint: String| out.push(Violation { field, constraint });

        let Some(command) = self.command else {
            bad("command", "required (in the file or on the command line)".into());
            return out;
        };

        let env = match &self.environment {
            Some(spec) => match Environment::from_spec(spec.clone()) {
                Ok(env) => Some(env),
                Err(e) => {
                    bad("environment", e.to_string());
                    None
                }
            },
            None => None,
        };

        let needs_env = matches!(command, Command::Llp | Command::Matching);
        match (&self.input, &self.environment) {
            (Some(_), Some(_)) => bad("input", "give either input or [environment], not both".into()),
            (None, None) if needs_env => bad("environment", format!("required for {command}")),
            (None, None) => bad("input", "a matrix file or an [environment] block is required".into()),
            (Some(_), None) if needs_env => bad("input", format!("{command} needs an [environment] block")),
            _ => {}
        }

        if self.environment.is_some() {
            match &self.ns {
                None => bad("ns", "required when sampling from an environment".into()),
                Some(ns) if ns.is_empty() => bad("ns", "must not be empty".into()),
                Some(ns) => {
                    if ns.contains(&0) {
                        bad("ns", "window sizes must be >= 1".into());
                    }
                    if let Some(limit) = command.max_n() {
                        if let Some(n) = ns.iter().find(|&&n| n > limit) {
                            bad("ns", format!("{command} supports n <= {limit}, got {n}"));
                        }
                    }
                }
            }
        }
        if let Some(seeds) = &self.seeds {
            if seeds.is_empty() {
                bad("seeds", "must not be empty".into());
            }
        }

        if matches!(command, Command::Gaussian | Command::Matching) {
            match self.samples {
                None => bad("samples", format!("required for {command}")),
                Some(s) if s < 2 => bad("samples", "must be >= 2".into()),
                _ => {}
            }
        }
        if let Some(tol) = self.tol {
            if !(tol > 0.0 && tol.is_finite()) {
                bad("tol", "must be positive".into());
            }
        }
        if let Some(lambda) = self.lambda {
            if !(lambda >= 1.0 && lambda.is_finite()) {
                bad("lambda", "must be >= 1".into());
            }
        }
        if let Some(eps) = self.epsilon {
            if !(eps > 0.0 && eps < 1.0) {
                bad("epsilon", "must lie in (0, 1)".into());
            } else if command == Command::Balance {
                let lambda = self.lambda.or(env.as_ref().map(Environment::lambda));
                if let Some(lambda) = lambda {
                    if check_window(eps, lambda).is_err() {
                        bad("epsilon", format!("4 lambda epsilon < 1 required (epsilon = {eps}, lambda = {lambda})"));
                    }
                }
            }
        }
        // Entries are edge probabilities; other families are checked per window.
        if let (Command::Matching, Some(EnvironmentKind::Iid { hi, .. })) = (command, env.as_ref().map(Environment::kind)) {
            if *hi > 1.0 {
                bad("environment", format!("matching needs probabilities, but hi = {hi} > 1"));
            }
        }
        out
    }
}
