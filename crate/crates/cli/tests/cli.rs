use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use eddm_cli::RUN_COLUMNS;

fn eddm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eddm")).args(args).env("RUST_LOG", "warn").output().expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

/// CSV body with the timing columns removed.
fn without_timings(path: &Path) -> Vec<String> {
    let text = fs::read_to_string(path).unwrap();
    text.lines()
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            [&f[..10], &f[13..]].concat().join(",")
        })
        .collect()
}

#[test]
fn converge_writes_fixed_schema() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "h_inv = [4, 8]\n");
    let out = dir.path().join("out");
    let o = eddm(&["converge", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("manufactured.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), RUN_COLUMNS.join(","));
    assert_eq!(lines.count(), 6);
    assert!(out.join("manufactured_orders.csv").exists());
}

#[test]
fn reruns_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "h_inv = [4]\nk11 = [1.0, 3.0]\n");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        assert!(eddm(&["converge", "--config", &cfg, "--out", d.to_str().unwrap(), "--threads", "1"]).status.success());
    }
    assert_eq!(without_timings(&a.join("manufactured.csv")), without_timings(&b.join("manufactured.csv")));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    let bad = write(dir.path(), "bad.toml", "h_inverse = [4]\n");
    assert_eq!(eddm(&["converge", "--config", &bad, "--out", out]).status.code(), Some(1));
    let short = write(dir.path(), "short.toml", "h_inv = [4]\nmax_iters = 2\n");
    assert_eq!(eddm(&["converge", "--config", &short, "--out", out]).status.code(), Some(2));
    let allowed = write(dir.path(), "allowed.toml", "h_inv = [4]\nmax_iters = 2\nallow_nonconvergence = true\n");
    assert_eq!(eddm(&["converge", "--config", &allowed, "--out", out]).status.code(), Some(0));
    let wrong = write(dir.path(), "wrong.toml", "scenario = \"channel_mc\"\n");
    assert_eq!(eddm(&["converge", "--config", &wrong, "--out", out]).status.code(), Some(1));
}

#[test]
fn symbol_sweep_marks_optimum() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    assert!(eddm(&["symbol", "--out", out.to_str().unwrap()]).status.success());
    let mut r = csv::Reader::from_path(out.join("symbol_sweep.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    for ds in ["1.0", "0.1", "0.01"] {
        let block: Vec<_> = rows.iter().filter(|x| &x[1] == ds).collect();
        let best = block.iter().min_by(|a, b| a[5].parse::<f64>().unwrap().total_cmp(&b[5].parse().unwrap())).unwrap();
        assert_eq!(&best[6], "true");
    }
}

#[test]
fn mc_caches_its_reference() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "mc.toml",
        "h_inv = [2]\nmc_samples = [2, 3]\nsamples = 2\nreference_samples = 4\nbatch_size = 3\n",
    );
    let out = dir.path().join("out");
    let run = || eddm(&["mc", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", "5"]);
    assert!(run().status.success());
    let cached = out.join("cache/reference_seed6_n2.json");
    assert!(cached.exists());
    let first = fs::read_to_string(out.join("mc_errors.csv")).unwrap();
    let stamp = fs::metadata(&cached).unwrap().modified().unwrap();
    assert!(run().status.success());
    assert_eq!(fs::metadata(&cached).unwrap().modified().unwrap(), stamp);
    assert_eq!(fs::read_to_string(out.join("mc_errors.csv")).unwrap(), first);
    for f in ["channel_mc.csv", "mc_timing.csv", "mc_expectation_stokes.csv", "mc_expectation_darcy.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn sweep_writes_history() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", "h_inv = [4]\nsweep_pairs = [[1.0, 2.0]]\nsweep_optimized_delta_s = [1.0]\n");
    let out = dir.path().join("out");
    assert!(eddm(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]).status.success());
    assert!(fs::read_to_string(out.join("robin_sweep.csv")).unwrap().lines().count() == 7);
    assert!(out.join("robin_sweep_history.csv").exists());
}
