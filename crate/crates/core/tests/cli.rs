use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use divquot::io::{load_samples, read_samples};
use divquot::indices::dq_es;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_divquot"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Trading-day price file with `rows` dates and three tickers.
fn prices(dir: &Path, rows: usize) -> PathBuf {
    let path = dir.join("prices.csv");
    let start = chrono::NaiveDate::from_ymd_opt(2012, 1, 2).unwrap();
    let mut text = String::from("date,AAA,BBB,CCC\n");
    let mut p = [50.0f64, 80.0, 20.0];
    for k in 0..rows {
        let d = start + chrono::Days::new(k as u64);
        text.push_str(&format!("{},{:.6},{:.6},{:.6}\n", d, p[0], p[1], p[2]));
        let t = k as f64;
        let common = 0.01 * (t * 0.77).sin();
        p[0] *= 1.0 + common + 0.008 * (t * 1.31).cos() + 0.0003;
        p[1] *= 1.0 + 0.5 * common + 0.012 * (t * 2.03).sin() + 0.0002;
        p[2] *= 1.0 - 0.3 * common + 0.015 * (t * 0.53 + 1.0).cos() + 0.0004;
    }
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn index_series_has_one_value_per_window() {
    let dir = TempDir::new().unwrap();
    let p = prices(dir.path(), 700);
    let out = stdout(&run(&["index", "--measure", "dq-var", "--alpha", "0.05", "--window", "500", "--input", p.to_str().unwrap()]));
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "date,dq_var");
    assert_eq!(lines.len() - 1, 699 - 499);
    // the first window ends with the loss realized on the 501st price date
    assert!(lines[1].starts_with("2013-05-16,"), "{}", lines[1]);
    for l in &lines[1..] {
        let v: f64 = l.split(',').nth(1).unwrap().parse().unwrap();
        assert!((0.0..=3.0).contains(&v));
    }
}

#[test]
fn optimize_reports_simplex_weights() {
    let dir = TempDir::new().unwrap();
    let p = prices(dir.path(), 300);
    for objective in ["dq-es", "dq-var", "dr-sd"] {
        let out = stdout(&run(&["optimize", "--objective", objective, "--alpha", "0.1", "--input", p.to_str().unwrap()]));
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        let w: Vec<f64> = v["w"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        assert_eq!(w.len(), 3);
        assert!(w.iter().all(|x| *x >= 0.0));
        assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-9, "{objective}: {w:?}");
        assert_eq!(v["tickers"][2], "CCC");
    }
}

#[test]
fn table_layout_and_reproducibility() {
    let args = ["table", "--alpha", "0.05", "--n", "10", "--nu", "3", "--samples", "20000", "--seed", "7"];
    let a = stdout(&run(&args));
    let lines: Vec<&str> = a.lines().collect();
    assert_eq!(lines[0], "model,dq_var,dq_es,dr_var,dr_es,dr_sd,dr_variance");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("\"N(0,I_10)\","));
    assert!(lines[2].starts_with("it_10(3),"));
    assert!(lines[3].starts_with("\"t(3,0,I_10)\","));
    let b = bin().args(args).env("DIVQUOT_THREADS", "1").output().unwrap();
    assert_eq!(a.as_bytes(), b.stdout.as_slice());
}

#[test]
fn simulate_is_byte_identical_and_round_trips() {
    let dir = TempDir::new().unwrap();
    let files: Vec<PathBuf> = (0..2).map(|k| dir.path().join(format!("s{k}.csv"))).collect();
    for (k, f) in files.iter().enumerate() {
        let threads = if k == 0 { "1" } else { "3" };
        let out = bin()
            .args(["simulate", "--model", "common-shock-t", "--nu", "4", "--n", "3", "--samples", "250001", "--seed", "11", "-o"])
            .arg(f)
            .env("DIVQUOT_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success());
    }
    let (a, b) = (std::fs::read(&files[0]).unwrap(), std::fs::read(&files[1]).unwrap());
    assert_eq!(a, b);
    let x = load_samples(&files[0]).unwrap();
    assert_eq!((x.rows(), x.cols()), (250_001, 3));

    // the loss file feeds the index command directly
    let out = stdout(&run(&["index", "--measure", "dq-es", "--alpha", "0.05", "--window", "250001", "--losses", "--input", files[0].to_str().unwrap()]));
    let v: f64 = out.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((v - dq_es(&read_samples(a.as_slice()).unwrap(), 0.05, None).unwrap()).abs() <= 1e-12);
}

#[test]
fn backtest_writes_wealth_and_stats() {
    let dir = TempDir::new().unwrap();
    let p = prices(dir.path(), 160);
    let (wealth, stats) = (dir.path().join("w.csv"), dir.path().join("s.json"));
    let out = bin()
        .args(["backtest", "--strategy", "ew,bh,dq-var", "--window", "100", "--rebalance", "21", "--alpha", "0.1", "--input"])
        .arg(&p)
        .arg("--wealth")
        .arg(&wealth)
        .arg("--stats")
        .arg(&stats)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let w = std::fs::read_to_string(&wealth).unwrap();
    let lines: Vec<&str> = w.lines().collect();
    assert_eq!(lines[0], "date,ew,bh,dq-var");
    assert_eq!(lines[1].split(',').skip(1).collect::<Vec<_>>(), ["1", "1", "1"]);
    assert_eq!(lines.len() - 1, 60);
    let s: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&stats).unwrap()).unwrap();
    assert_eq!(s.as_array().unwrap().len(), 3);
    assert_eq!(s[0]["strategy"], "ew");
    assert_eq!(s[0]["weights_by_period"].as_array().unwrap().len(), 3);
    assert!(s[2]["stats"]["annual_volatility"].as_f64().unwrap() > 0.0);
}

#[test]
fn failures_emit_error_records() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "date,A\n2020-01-02,1\n2020-01-03,-5\n").unwrap();
    let out = run(&["index", "--measure", "dq-var", "--alpha", "0.05", "--window", "1", "--input", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let rec: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(rec["kind"], "parse");
    assert_eq!(rec["command"], "index");
    assert!(rec["message"].as_str().unwrap().contains("row 3"));

    let p = prices(dir.path(), 50);
    let out = run(&["index", "--measure", "dq-var", "--alpha", "0.05", "--window", "500", "--input", p.to_str().unwrap()]);
    let rec: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(rec["kind"], "data");

    // randomized commands refuse to run without a seed
    let out = run(&["simulate", "--samples", "10"]);
    assert_eq!(out.status.code(), Some(2));
    let rec: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(rec["kind"], "usage");
    assert!(rec["message"].as_str().unwrap().contains("--seed"));
}
