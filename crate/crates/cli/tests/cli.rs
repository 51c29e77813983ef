use std::path::{Path, PathBuf};
use std::process::Command;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn permlaw(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_permlaw")).args(args).output().unwrap()
}

fn run_config(command: &str, config: &Path, out: &Path) -> std::process::Output {
    permlaw(&[command, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "--no-timestamp"])
}

/// Rows of results.csv as header-keyed maps.
fn read_rows(dir: &Path) -> Vec<std::collections::HashMap<String, String>> {
    let mut r = csv::Reader::from_path(dir.join("results.csv")).unwrap();
    let header = r.headers().unwrap().clone();
    r.records()
        .map(|rec| header.iter().zip(rec.unwrap().iter()).map(|(h, v)| (h.to_string(), v.to_string())).collect())
        .collect()
}

fn num(row: &std::collections::HashMap<String, String>, col: &str) -> f64 {
    row[col].parse().unwrap()
}

#[test]
fn perm_of_bundled_matrix() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_config("perm", &configs().join("perm.toml"), tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_rows(tmp.path());
    assert_eq!(rows.len(), 1);
    assert!((num(&rows[0], "log_perm") - 10f64.ln()).abs() < 1e-15);
    assert_eq!(rows[0]["log_perm"].len(), "2.3025850929940459e0".len());
    assert!(rows[0]["ratio"].is_empty());
    for f in ["summary.json", "plot.gp"] {
        assert!(tmp.path().join(f).exists());
    }
}

#[test]
fn sm_of_j2() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(run_config("sm", &configs().join("sm.toml"), tmp.path()).status.success());
    assert!((num(&read_rows(tmp.path())[0], "sm") - 0.5).abs() < 1e-14);
}

#[test]
fn llp_constant_field() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(run_config("llp", &configs().join("llp_constant.toml"), tmp.path()).status.success());
    let rows = read_rows(tmp.path());
    assert_eq!(rows.iter().map(|r| r["n"].as_str()).collect::<Vec<_>>(), vec!["2", "4"]);
    for r in &rows {
        assert_eq!(num(r, "ratio"), 1.0);
    }
    let plot = std::fs::read_to_string(tmp.path().join("plot.gp")).unwrap();
    assert!(plot.contains("column(\"ratio\")"));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["rows"], 2);
    assert_eq!(summary["by_n"]["4"]["mean_abs_ratio_deviation"], 0.0);
}

#[test]
fn every_bundled_config_runs() {
    for (command, file) in [
        ("sinkhorn", "sinkhorn.toml"),
        ("balance", "balance.toml"),
        ("bounds", "bounds.toml"),
        ("gaussian", "gaussian.toml"),
        ("matching", "matching.toml"),
        ("llp", "llp_separable.toml"),
    ] {
        let tmp = tempfile::tempdir().unwrap();
        let out = run_config(command, &configs().join(file), tmp.path());
        assert!(out.status.success(), "{file}: {}", String::from_utf8_lossy(&out.stderr));
        let rows = read_rows(tmp.path());
        assert!(!rows.is_empty());
        let hash = &rows[0]["config_hash"];
        assert!(rows.iter().all(|r| &r["config_hash"] == hash && r["command"] == command));
        let keys: Vec<(usize, u64)> =
            rows.iter().map(|r| (r["n"].parse().unwrap(), r["seed"].parse().unwrap())).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        if command == "balance" {
            for r in &rows {
                assert!(num(r, "l1_distance") <= num(r, "bound_rhs"));
            }
            assert!(tmp.path().join("balance_n50_seed1.log").exists());
        }
        if command == "bounds" {
            for r in &rows {
                assert!(num(r, "bound_lhs") >= 1.0 - 1e-8 && num(r, "bound_lhs") <= num(r, "bound_rhs"));
            }
        }
    }
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.toml");

    std::fs::write(&bad, "command = \"llp\"\n[environment]\nkind = \"iid\"\nlo = 0.5\nhi = 1.5\n").unwrap();
    let out = run_config("llp", &bad, &tmp.path().join("o1"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ns"));

    std::fs::write(&bad, "this is = = not toml").unwrap();
    assert_eq!(run_config("perm", &bad, &tmp.path().join("o2")).status.code(), Some(2));

    // command mismatch between file and command line
    assert_eq!(run_config("sm", &configs().join("perm.toml"), &tmp.path().join("o3")).status.code(), Some(2));

    // zero permanent: Sinkhorn has no total support -> computation error
    let m = tmp.path().join("m.txt");
    std::fs::write(&m, "2\n1 1\n0 1\n").unwrap();
    std::fs::write(&bad, format!("input = {:?}\n", m.to_str().unwrap())).unwrap();
    let out = run_config("sinkhorn", &bad, &tmp.path().join("o4"));
    assert_eq!(out.status.code(), Some(1));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());

    // missing input file is a config problem
    std::fs::write(&bad, "input = \"nope.txt\"\n").unwrap();
    assert_eq!(run_config("perm", &bad, &tmp.path().join("o5")).status.code(), Some(2));
}

#[test]
fn timestamp_line_is_optional() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("perm.toml");
    let out = permlaw(&["perm", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(tmp.path().join("results.csv")).unwrap();
    assert!(text.starts_with("# generated_at_unix="));
    assert!(text.lines().nth(1).unwrap().starts_with("command,n,seed,"));
    assert!(!text.contains('\r'));
}
