//! End-to-end checks of the command-line interface, driving the real
//! binary through its documented contracts.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_arealclust"))
}

fn write_toy_inputs(dir: &Path) {
    std::fs::write(
        dir.join("y.csv"),
        "area_id,c1,c2\na1,0.5,0.3\na2,0.45,\na3,-0.5,-0.2\na4,-0.55,-0.25\na5,0.02,0.01\na6,0.01,-0.02\n",
    )
    .unwrap();
    std::fs::write(
        dir.join("edges.csv"),
        "area_a,area_b\na1,a2\na2,a3\na3,a4\na4,a5\na5,a6\na1,a6\n",
    )
    .unwrap();
}

#[test]
fn fit_rejects_missing_adjacency_with_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    write_toy_inputs(dir.path());
    let out = bin()
        .args([
            "fit",
            "--y",
            dir.path().join("y.csv").to_str().unwrap(),
            "--adj",
            dir.path().join("nope.csv").to_str().unwrap(),
            "--out",
            dir.path().join("out").to_str().unwrap(),
            "--k",
            "2",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("nope.csv"), "stderr: {stderr}");
}

#[test]
fn simulate_rejects_unknown_scenario_with_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args([
            "simulate",
            "--scenario",
            "sim9",
            "--out",
            dir.path().join("out").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn summarize_rejects_missing_draws_with_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args([
            "summarize",
            "--draws",
            dir.path().join("absent").to_str().unwrap(),
            "--out",
            dir.path().join("out").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn fit_summarize_rerun_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    write_toy_inputs(dir.path());
    let out1 = dir.path().join("run1");
    let status = bin()
        .args([
            "--threads",
            "2",
            "fit",
            "--y",
            dir.path().join("y.csv").to_str().unwrap(),
            "--adj",
            dir.path().join("edges.csv").to_str().unwrap(),
            "--out",
            out1.to_str().unwrap(),
            "--k",
            "2",
            "--chains",
            "2",
            "--iterations",
            "300",
            "--seed",
            "5",
        ])
        .status()
        .unwrap();
    assert!(status.success());
    for file in [
        "manifest.txt",
        "draws/z.csv",
        "draws/mu.csv",
        "summary/mu.csv",
        "summary/exp_mu.csv",
        "summary/partition.csv",
        "summary/coclustering.csv",
        "summary/model.csv",
    ] {
        assert!(out1.join(file).is_file(), "missing {file}");
    }

    // Rerun from the manifest on one thread: draw files byte-identical.
    let out2 = dir.path().join("run2");
    let status = bin()
        .args([
            "--threads",
            "1",
            "fit",
            "--config",
            out1.join("manifest.txt").to_str().unwrap(),
            "--out",
            out2.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    for file in ["z.csv", "mu.csv", "sigma.csv", "loglik.csv", "logmix.csv", "rho.csv"] {
        assert_eq!(
            std::fs::read(out1.join("draws").join(file)).unwrap(),
            std::fs::read(out2.join("draws").join(file)).unwrap(),
            "{file} differs between reruns"
        );
    }

    // summarize reproduces fit's own tables byte for byte.
    let resum = dir.path().join("resum");
    let status = bin()
        .args([
            "summarize",
            "--draws",
            out1.join("draws").to_str().unwrap(),
            "--out",
            resum.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    for file in ["mu.csv", "exp_mu.csv", "sigma.csv", "partition.csv", "model.csv"] {
        assert_eq!(
            std::fs::read(out1.join("summary").join(file)).unwrap(),
            std::fs::read(resum.join(file)).unwrap(),
            "{file} differs from fit's summary"
        );
    }

    // A lower level gives intervals no wider than the 95% run.
    let narrow = dir.path().join("narrow");
    let status = bin()
        .args([
            "summarize",
            "--draws",
            out1.join("draws").to_str().unwrap(),
            "--out",
            narrow.to_str().unwrap(),
            "--level",
            "0.9",
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let widths = |path: &Path| -> Vec<f64> {
        let body = std::fs::read_to_string(path).unwrap();
        body.lines()
            .skip(1)
            .map(|line| {
                let fields: Vec<&str> = line.split(',').collect();
                let lo: f64 = fields[2].parse().unwrap();
                let hi: f64 = fields[3].parse().unwrap();
                hi - lo
            })
            .collect()
    };
    let wide = widths(&out1.join("summary/mu.csv"));
    let tight = widths(&narrow.join("mu.csv"));
    for (t, w) in tight.iter().zip(wide.iter()) {
        assert!(t <= w, "0.9 interval wider than 0.95 ({t} > {w})");
    }
}

#[test]
fn fit_with_covariates_emits_beta_tables() {
    let dir = tempfile::tempdir().unwrap();
    write_toy_inputs(dir.path());
    std::fs::write(
        dir.path().join("x.csv"),
        "area_id,deprivation\na1,0.2\na2,0.1\na3,-0.3\na4,0.5\na5,-0.1\na6,0.0\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let status = bin()
        .args([
            "fit",
            "--y",
            dir.path().join("y.csv").to_str().unwrap(),
            "--adj",
            dir.path().join("edges.csv").to_str().unwrap(),
            "--x",
            dir.path().join("x.csv").to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--k",
            "2",
            "--chains",
            "1",
            "--iterations",
            "200",
            "--standardize-x",
        ])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("draws/beta.csv").is_file());
    assert!(out.join("summary/beta.csv").is_file());
}

#[test]
fn simulate_writes_truth_and_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim");
    let status = bin()
        .args([
            "--threads",
            "2",
            "simulate",
            "--scenario",
            "sim1",
            "--replicates",
            "2",
            "--d",
            "6",
            "--out",
            out.to_str().unwrap(),
            "--fit",
            "--iterations",
            "200",
            "--chains",
            "2",
            "--seed",
            "3",
        ])
        .status()
        .unwrap();
    assert!(status.success());
    // Truth records the reduced outcome count.
    let mu_header = std::fs::read_to_string(out.join("rep_000/truth_mu.csv")).unwrap();
    assert_eq!(mu_header.lines().next().unwrap().split(',').count(), 7); // cluster + 6
    assert!(out.join("rep_000/truth_informative.csv").is_file());
    assert!(out.join("rep_001/y.csv").is_file());
    let metrics = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 3, "header + one row per replicate");
}
