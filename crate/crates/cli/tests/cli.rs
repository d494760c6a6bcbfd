use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tailvar::garch::{garch_fit, ModelFile};
use tailvar::mc::{simulate_garch_t, McConfig};
use tailvar::series::{load_series, ColumnMode};
use tailvar::tail::estimate;
use tailvar::var::{anchor_for_probability, conditional_grid, evt_var_unconditional};
use tailvar::{Tail, TailMethod};

fn tailvar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tailvar")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "status {:?}, stderr: {}", o.status, String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_returns(dir: &Path, name: &str, values: &[f64]) -> PathBuf {
    let path = dir.join(name);
    let mut text = String::from("return\n");
    for v in values {
        text.push_str(&format!("{v}\n"));
    }
    std::fs::write(&path, text).unwrap();
    path
}

/// Deterministic Pareto(alpha = 3) losses from a low-discrepancy uniform sequence.
fn pareto_file(dir: &Path) -> PathBuf {
    let golden = 0.618_033_988_749_894_9_f64;
    let v: Vec<f64> = (1..=4000).map(|i| -((i as f64 * golden).fract().max(1e-9)).powf(-1.0 / 3.0)).collect();
    write_returns(dir, "pareto.csv", &v)
}

fn garch_file(dir: &Path) -> PathBuf {
    let cfg = McConfig { n: 2000, reps: 1, seed: 5, ..McConfig::default() };
    let s = simulate_garch_t(&cfg, 0).unwrap();
    write_returns(dir, "garch.csv", s.values())
}

fn csv_column(text: &str, name: &str) -> Vec<f64> {
    let mut lines = text.lines();
    let idx = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

#[test]
fn unconditional_var_passes_through_library() {
    let dir = tempfile::tempdir().unwrap();
    let file = pareto_file(dir.path());
    let o = tailvar(&[
        "var",
        "--input",
        file.to_str().unwrap(),
        "--mode",
        "unconditional",
        "--p",
        "0.05",
        "--horizons",
        "1",
        "--format",
        "csv",
    ]);
    let text = stdout(&o);
    assert_eq!(text.lines().next().unwrap(), "method,p,horizon,var_pct,scale_q,alpha_used");
    let cli = csv_column(&text, "var_pct");
    assert_eq!(cli.len(), 1);

    let s = load_series(&file, ColumnMode::Return).unwrap();
    let est = estimate(&s, TailMethod::Huisman, Tail::Lower, None, None).unwrap();
    let est = anchor_for_probability(&s, &est, 0.05).unwrap();
    let lib = evt_var_unconditional(&est, s.len(), 0.05).unwrap();
    assert_eq!(cli[0], lib.var_pct);
}

#[test]
fn fit_then_var_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let file = garch_file(dir.path());
    let model = dir.path().join("m.json");
    stdout(&tailvar(&["fit", "--input", file.to_str().unwrap(), "--out", model.to_str().unwrap()]));
    let text =
        stdout(&tailvar(&["var", "--model", model.to_str().unwrap(), "--mode", "conditional", "--format", "csv"]));
    let cli = csv_column(&text, "var_pct");

    let s = load_series(&file, ColumnMode::Return).unwrap();
    let fit = garch_fit(&s).unwrap();
    let m = ModelFile::from_fit(&fit).unwrap();
    let z = m.residuals().unwrap();
    let est = estimate(&z, TailMethod::Huisman, Tail::Lower, None, None).unwrap();
    let rows = conditional_grid(&m.forecast(), &z, &est, &[0.05, 0.005], &[1, 2, 4, 5]).unwrap();
    assert_eq!(cli.len(), rows.len());
    for (c, r) in cli.iter().zip(&rows) {
        assert!((c - r.var_pct).abs() < 1e-10, "{c} vs {}", r.var_pct);
    }

    // fitting in-process through --input gives the same numbers
    let direct =
        stdout(&tailvar(&["var", "--input", file.to_str().unwrap(), "--mode", "conditional", "--format", "csv"]));
    assert_eq!(direct, text);
}

#[test]
fn simulate_emits_table_layout() {
    let o = tailvar(&[
        "simulate", "--a0", "0.1", "--a1", "0.15", "--b1", "0.8", "--n", "2000", "--reps", "200", "--seed", "42",
    ]);
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "p,horizon,mean_pred,sd_pred,empirical,paper_ref");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 8);
    let keys: Vec<(&str, &str)> = rows.iter().map(|r| (r[0], r[1])).collect();
    assert_eq!(
        keys,
        [
            ("0.05", "1"),
            ("0.05", "2"),
            ("0.05", "4"),
            ("0.05", "5"),
            ("0.01", "1"),
            ("0.01", "2"),
            ("0.01", "4"),
            ("0.01", "5")
        ]
    );
    assert!(rows.iter().all(|r| !r[5].is_empty()), "reference values present for the reference design");
}

#[test]
fn simulate_is_reproducible_and_thread_independent() {
    let args = ["simulate", "--n", "600", "--reps", "6", "--seed", "7", "--format", "json"];
    let a = stdout(&tailvar(&args));
    assert_eq!(a, stdout(&tailvar(&args)));
    let single = Command::new(env!("CARGO_BIN_EXE_tailvar")).args(args).env("TAILVAR_THREADS", "1").output().unwrap();
    assert_eq!(a, stdout(&single));
    let other = stdout(&tailvar(&["simulate", "--n", "600", "--reps", "6", "--seed", "8", "--format", "json"]));
    assert_ne!(a, other);
}

#[test]
fn plot_outputs_have_headers() {
    let dir = tempfile::tempdir().unwrap();
    let file = pareto_file(dir.path());
    let hill = stdout(&tailvar(&["hillplot", "--input", file.to_str().unwrap(), "--eta", "50"]));
    assert_eq!(hill.lines().next().unwrap(), "m,gamma,se");
    assert_eq!(hill.lines().count(), 50);
    let qq = stdout(&tailvar(&["qqplot", "--input", file.to_str().unwrap()]));
    assert_eq!(qq.lines().next().unwrap(), "normal_q,empirical_q");
    assert_eq!(qq.lines().count(), 4001);
}

#[test]
fn stats_json_has_summary_and_ljung_box() {
    let dir = tempfile::tempdir().unwrap();
    let file = garch_file(dir.path());
    let text = stdout(&tailvar(&["stats", "--input", file.to_str().unwrap(), "--format", "json"]));
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    for key in ["n", "mean", "sd", "skewness", "excess_kurtosis", "ks_stat"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["ljung_box"].as_array().unwrap().len(), 2);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let file = pareto_file(dir.path());
    let f = file.to_str().unwrap();
    assert_eq!(tailvar(&["--help"]).status.code(), Some(0));
    assert_eq!(tailvar(&["var", "--bogus"]).status.code(), Some(1));
    assert_eq!(tailvar(&["nonsense"]).status.code(), Some(1));
    assert_eq!(tailvar(&["var", "--mode", "conditional"]).status.code(), Some(1));
    assert_eq!(tailvar(&["var", "--input", f, "--model", f]).status.code(), Some(1));
    assert_eq!(tailvar(&["var", "--input", f, "--p", "0.7"]).status.code(), Some(1));
    assert_eq!(tailvar(&["tail", "--input", f, "--method", "fixed"]).status.code(), Some(1));
    let bad_threads = Command::new(env!("CARGO_BIN_EXE_tailvar"))
        .args(["stats", "--input", f])
        .env("TAILVAR_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad_threads.status.code(), Some(1));

    assert_eq!(tailvar(&["stats", "--input", "/nonexistent/x.csv"]).status.code(), Some(2));
    // an all-positive series has no lower tail to estimate
    let positive = write_returns(dir.path(), "pos.csv", &(1..=500).map(|i| i as f64).collect::<Vec<_>>());
    assert_eq!(tailvar(&["tail", "--input", positive.to_str().unwrap()]).status.code(), Some(2));
    // too short for a GARCH fit
    let short = write_returns(dir.path(), "short.csv", &[1.0, -2.0, 0.5, -0.3, 0.2]);
    let model = dir.path().join("m.json");
    assert_eq!(
        tailvar(&["fit", "--input", short.to_str().unwrap(), "--out", model.to_str().unwrap()]).status.code(),
        Some(2)
    );
}
