//! results.csv, summary.json and plot.gp.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Map, Value};

use crate::config::Command;
use crate::CliError;

/// Numeric columns shared by all commands; a command fills the ones it
/// measures and leaves the rest empty.
pub const COLUMNS: [&str; 12] = [
    "log_perm",
    "per",
    "sm",
    "ratio",
    "l1_distance",
    "bound_lhs",
    "bound_rhs",
    "mc_mean",
    "mc_stderr",
    "z",
    "iterations",
    "residual",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub command: Command,
    pub n: usize,
    pub seed: u64,
    pub values: BTreeMap<&'static str, f64>,
}

impl ResultRow {
    pub fn new(command: Command, n: usize, seed: u64) -> Self {
        ResultRow { command, n, seed, values: BTreeMap::new() }
    }

    pub fn set(&mut self, column: &'static str, value: f64) -> &mut Self {
        debug_assert!(COLUMNS.contains(&column), "unknown column {column}");
        self.values.insert(column, value);
        self
    }

    pub fn get(&self, column: &str) -> Option<f64> {
        self.values.get(column).copied()
    }
}

/// Shortest form that still carries 17 significant digits.
pub fn format_number(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv(path: &Path, rows: &[ResultRow], config_hash: &str, timestamp: bool) -> Result<(), CliError> {
    let mut file = std::fs::File::create(path)?;
    if timestamp {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        writeln!(file, "# generated_at_unix={secs}")?;
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file);
    let mut header = vec!["command", "n", "seed"];
    header.extend(COLUMNS);
    header.push("config_hash");
    w.write_record(&header)?;
    for r in rows {
        let mut record = vec![r.command.name().to_string(), r.n.to_string(), r.seed.to_string()];
        record.extend(COLUMNS.iter().map(|c| r.get(c).map(format_number).unwrap_or_default()));
        record.push(config_hash.to_string());
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

fn stats(values: &[f64]) -> Value {
    let count = values.len();
    let mean = values.iter().sum::<f64>() / count as f64;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    json!({ "count": count, "mean": mean, "min": min, "max": max })
}

pub fn summary(command: Command, rows: &[ResultRow], config_hash: &str) -> Value {
    let mut columns = Map::new();
    for c in COLUMNS {
        let vals: Vec<f64> = rows.iter().filter_map(|r| r.get(c)).collect();
        if !vals.is_empty() {
            columns.insert(c.to_string(), stats(&vals));
        }
    }
    let mut by_n: BTreeMap<usize, Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        by_n.entry(r.n).or_default().push(r);
    }
    let mut per_n = Map::new();
    for (n, group) in &by_n {
        let mut m = Map::new();
        for c in COLUMNS {
            let vals: Vec<f64> = group.iter().filter_map(|r| r.get(c)).collect();
            if !vals.is_empty() {
                m.insert(c.to_string(), json!(vals.iter().sum::<f64>() / vals.len() as f64));
            }
        }
        if command == Command::Llp {
            let dev: Vec<f64> = group.iter().filter_map(|r| r.get("ratio")).map(|v| (v - 1.0).abs()).collect();
            m.insert("mean_abs_ratio_deviation".into(), json!(dev.iter().sum::<f64>() / dev.len() as f64));
        }
        per_n.insert(n.to_string(), Value::Object(m));
    }
    json!({
        "command": command.name(),
        "config_hash": config_hash,
        "rows": rows.len(),
        "columns": columns,
        "by_n": per_n,
    })
}

/// Column plotted against `n` for each command.
fn plotted_column(command: Command) -> (&'static str, &'static str) {
    match command {
        Command::Perm => ("log_perm", "ln perm"),
        Command::Sinkhorn => ("iterations", "Sinkhorn sweeps"),
        Command::Sm => ("sm", "scaling mean"),
        Command::Balance => ("l1_distance", "L1 distance to the balanced approximant"),
        Command::Llp => ("ratio", "per / sm"),
        Command::Bounds => ("bound_lhs", "per / sm"),
        Command::Gaussian | Command::Matching => ("z", "z-score of the Monte-Carlo mean"),
    }
}

pub fn plot_script(command: Command) -> String {
    let (column, label) = plotted_column(command);
    let mut s = String::new();
    s.push_str("# gnuplot script for results.csv\n");
    s.push_str("# columns: command, n, seed, ");
    s.push_str(&COLUMNS.join(", "));
    s.push_str(", config_hash\n");
    s.push_str("# empty cells are quantities the command does not measure\n");
    s.push_str("set datafile separator ','\n");
    s.push_str("set key autotitle columnhead\n");
    s.push_str("set xlabel 'n'\n");
    s.push_str(&format!("set ylabel '{label}'\n"));
    s.push_str("set grid\n");
    if matches!(command, Command::Llp | Command::Bounds) {
        s.push_str("set arrow from graph 0, first 1 to graph 1, first 1 nohead dashtype 2\n");
    }
    s.push_str(&format!(
        "plot 'results.csv' using (column(\"n\")):(column(\"{column}\")) with points pointtype 7 title '{column}'\n"
    ));
    s
}
