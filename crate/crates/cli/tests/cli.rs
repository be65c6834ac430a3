use std::fs;
use std::path::Path;
use std::process::Command;

use schurtomo::partition::sw_pmf;
use schurtomo::stats::chi_square_test;
use schurtomo_cli::output::{emit_csv, Cell};
use schurtomo_cli::{run, CliError, ExperimentConfig, RunOptions};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_schurtomo"))
}

fn write_config(dir: &Path, name: &str, json: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, json).unwrap();
    p
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

#[test]
fn verify_passes_at_small_size() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "v.json", r#"{"schema":1,"command":"verify","d":2,"t":2,"seed":7}"#);
    let out = bin()
        .args(["--config", cfg.to_str().unwrap(), "--output"])
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("schur_completeness") && !text.contains("FAIL"));
    assert!(dir.path().join("out/manifest.json").exists());
}

#[test]
fn bad_configs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("schema.json", r#"{"schema":2,"command":"verify","d":2,"t":2,"seed":1}"#),
        ("noseed.json", r#"{"schema":1,"command":"verify","d":2,"t":2}"#),
        ("unknown.json", r#"{"schema":1,"command":"verify","d":2,"t":2,"seed":1,"bogus":3}"#),
        ("big.json", r#"{"schema":1,"command":"tomo-run","d":8,"t":5,"n":10,"seed":1}"#),
        ("non.json", "not json"),
        ("diag.json", r#"{"schema":1,"command":"tomo-run","d":2,"t":1,"n":10,"seed":1,"state":{"kind":"diagonal","values":[1.0]}}"#),
    ];
    for (name, body) in cases {
        let cfg = write_config(dir.path(), name, body);
        let out = bin()
            .args(["--config", cfg.to_str().unwrap(), "--output"])
            .arg(dir.path().join("out"))
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(2), "{name}");
    }
    let missing = bin().args(["--config", "/nonexistent/cfg.json"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn seed_flag_supplies_and_overrides_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "t.json",
        r#"{"schema":1,"command":"tomo-run","d":2,"t":1,"n":200,"trials":2,"algorithm":"baseline"}"#,
    );
    let run_with = |seed: &str, out: &str| {
        let status = bin()
            .args(["--config", cfg.to_str().unwrap(), "--seed", seed, "--output"])
            .arg(dir.path().join(out))
            .status()
            .unwrap();
        assert!(status.success());
        fs::read(dir.path().join(out).join("trials.csv")).unwrap()
    };
    let a = run_with("1", "a");
    let b = run_with("1", "b");
    let c = run_with("2", "c");
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn results_are_byte_identical_across_job_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg: ExperimentConfig = ExperimentConfig::from_json(
        r#"{"schema":1,"command":"tomo-run","d":3,"t":2,"n":500,"trials":6,"seed":42,"eps":0.2,
            "state":{"kind":"hard-instance","sigma":0.2}}"#,
    )
    .unwrap();
    let mut outputs = Vec::new();
    for jobs in [1, 3] {
        let out = dir.path().join(format!("jobs{jobs}"));
        run(&cfg, &RunOptions { jobs, output: out.clone() }).unwrap();
        outputs.push((fs::read(out.join("trials.csv")).unwrap(), fs::read(out.join("results.json")).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn sw_sample_matches_exact_pmf() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::from_json(
        r#"{"schema":1,"command":"sw-sample","d":3,"t":5,"n":100000,"seed":3,
            "state":{"kind":"diagonal","values":[0.5,0.3,0.2]}}"#,
    )
    .unwrap();
    run(&cfg, &RunOptions { jobs: 2, output: dir.path().to_path_buf() }).unwrap();
    let (header, rows) = read_csv(&dir.path().join("sw_samples.csv"));
    assert_eq!(header, ["partition", "count", "expected", "probability"]);
    let pmf = sw_pmf(5, 3, &[0.5, 0.3, 0.2]).unwrap();
    assert_eq!(rows.len(), pmf.table.len());
    let counts: Vec<u64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert_eq!(counts.iter().sum::<u64>(), 100_000);
    let probs: Vec<f64> = pmf.table.iter().map(|(_, p)| *p).collect();
    for (r, (lam, _)) in rows.iter().zip(&pmf.table) {
        assert_eq!(r[0], lam.dashed());
    }
    assert!(chi_square_test(&counts, &probs).unwrap().p_value >= 1e-3);
}

#[test]
fn sweep_mse_decreases_with_batch_size() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::from_json(
        r#"{"schema":1,"command":"scaling-sweep","d":4,"t_list":[1,2,4],"n":300,"trials":30,"seed":5,
            "algorithm":"balanced","state":{"kind":"diagonal","values":[0.2505,0.2495,0.25,0.25]}}"#,
    )
    .unwrap();
    run(&cfg, &RunOptions { jobs: 4, output: dir.path().to_path_buf() }).unwrap();
    let (header, rows) = read_csv(&dir.path().join("sweep.csv"));
    assert_eq!(rows.len(), 90);
    let col = header.iter().position(|h| h == "sq_error").unwrap();
    let mse = |t: &str| {
        let xs: Vec<f64> = rows.iter().filter(|r| r[1] == t).map(|r| r[col].parse().unwrap()).collect();
        schurtomo::stats::mean_stderr(&xs)
    };
    let (m1, s1) = mse("1");
    let (m2, s2) = mse("2");
    let (m4, s4) = mse("4");
    assert!(m2 <= m1 + 2.0 * (s1 * s1 + s2 * s2).sqrt());
    assert!(m4 <= m2 + 2.0 * (s2 * s2 + s4 * s4).sqrt());
    // the JSON aggregate is recomputable from the rows
    let json: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("results.json")).unwrap()).unwrap();
    let agg = &json["aggregates"][0];
    assert!((agg["mean_sq_error"].as_f64().unwrap() - m1).abs() < 1e-9 * m1.max(1.0));
}

#[test]
fn keyl_and_diagnostics_commands_write_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let keyl = ExperimentConfig::from_json(
        r#"{"schema":1,"command":"keyl-sample","d":2,"t":3,"n":300,"seed":1,"state":{"kind":"diagonal","values":[0.7,0.3]}}"#,
    )
    .unwrap();
    let out = dir.path().join("keyl");
    run(&keyl, &RunOptions { jobs: 2, output: out.clone() }).unwrap();
    let trace = fs::read_to_string(out.join("trace.jsonl")).unwrap();
    assert_eq!(trace.lines().count(), 300);
    let diag = ExperimentConfig::from_json(
        r#"{"schema":1,"command":"diagnostics","d":2,"t":2,"n":500,"eps":0.001,"seed":2}"#,
    )
    .unwrap();
    let out = dir.path().join("diag");
    run(&diag, &RunOptions { jobs: 1, output: out.clone() }).unwrap();
    let json: serde_json::Value = serde_json::from_slice(&fs::read(out.join("diagnostics.json")).unwrap()).unwrap();
    for r in json["reports"].as_array().unwrap() {
        for key in ["check_name", "lhs", "rhs_bound", "stderr", "margin_ratio", "pass"] {
            assert!(r.get(key).is_some(), "missing {key}");
        }
    }
}

#[test]
fn csv_single_record_and_round_trip() {
    let rows = vec![vec![Cell::Text("a,\"b\"".into()), Cell::Float(0.1), Cell::Int(-3)]];
    let mut buf = Vec::new();
    emit_csv(&mut buf, &["name", "x", "k"], &rows).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert_eq!(text, "name,x,k\r\n\"a,\"\"b\"\"\",1.00000000000e-1,-3\r\n");
    let mut r = csv::Reader::from_reader(buf.as_slice());
    let rec = r.records().next().unwrap().unwrap();
    assert_eq!(&rec[0], "a,\"b\"");
    assert_eq!(rec[1].parse::<f64>().unwrap(), 0.1);
    let mut again = Vec::new();
    emit_csv(&mut again, &["name", "x", "k"], &rows).unwrap();
    assert_eq!(buf, again);
}

#[test]
fn exit_codes() {
    assert_eq!(CliError::Config("x".into()).exit_code(), 2);
    assert_eq!(CliError::CheckFailed("x".into()).exit_code(), 1);
}
