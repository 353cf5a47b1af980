//! End-to-end tests of the command-line interface: each test runs the real
//! binary against files in a temporary directory.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn jumpact(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jumpact"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn tiny_mc_config() -> &'static str {
    r#"{
        "model": {"kappa": 5.0, "eta": 0.0625, "gamma_v": 0.5, "rho": -0.5, "v0": 0.0625,
                  "var_jumps": {"lambda": 1.0, "size_law": {"uniform": [-0.3, 0.3]}},
                  "price_jumps": "none", "x0": 0.0},
        "beta_values": [1.0],
        "tail_probs": [0.01],
        "deltas": [0.0033333333],
        "varpi": 0.2,
        "alpha": 0.3125,
        "alpha_prime": 0.625,
        "n_reps": 6,
        "master_seed": 9
    }"#
}

#[test]
fn simulate_same_seed_reproduces_output() {
    let dir = tempfile::tempdir().unwrap();
    for sub in ["a", "b"] {
        let out = jumpact(
            dir.path(),
            &[
                "simulate",
                "--preset",
                "table1-beta1.0-p1pct",
                "--delta-seconds",
                "5",
                "--seed",
                "42",
                "--out-dir",
                sub,
            ],
        );
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let a = fs::read(dir.path().join("a/path.csv")).unwrap();
    let b = fs::read(dir.path().join("b/path.csv")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn simulate_zero_vol_zero_jump_is_constant() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{
        "model": {"kappa": 0.0, "eta": 0.0, "gamma_v": 0.0, "rho": 0.0, "v0": 0.0,
                  "var_jumps": null, "price_jumps": "none", "x0": 3.0},
        "delta_seconds": 60.0,
        "horizon_days": 1.0
    }"#;
    fs::write(dir.path().join("flat.json"), config).unwrap();
    let out = jumpact(dir.path(), &["simulate", "--config", "flat.json", "--out-dir", "out"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = fs::read_to_string(dir.path().join("out/path.csv")).unwrap();
    let prices: Vec<&str> =
        csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(prices.len(), 391);
    assert!(prices.iter().all(|p| *p == "3"));
}

#[test]
fn preset_expands_study_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let out = jumpact(
        dir.path(),
        &["simulate", "--preset", "table1-beta1.0-p1pct", "--out-dir", "out"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/manifest.json")).unwrap())
            .unwrap();
    let model = &manifest["config"]["model"];
    assert_eq!(model["kappa"], 5.0);
    assert_eq!(model["eta"], 0.0625);
    assert_eq!(model["gamma_v"], 0.5);
    assert_eq!(model["rho"], -0.5);
    assert_eq!(model["price_jumps"]["stable"]["beta"], 1.0);
    assert!(model["price_jumps"]["stable"]["theta"].as_f64().unwrap() > 0.0);
    assert_eq!(manifest["status"], "ok");
    assert_eq!(manifest["outputs"][0], "path.csv");
}

#[test]
fn estimate_rejects_varpi_half() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("p.csv"), "t,x\n0,0\n1,0.1\n2,0.0\n").unwrap();
    let out = jumpact(dir.path(), &["estimate", "p.csv", "--varpi", "0.5"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("varpi"), "{}", stderr(&out));
}

#[test]
fn estimate_flags_all_zero_returns() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("t,x\n");
    for i in 0..50 {
        csv.push_str(&format!("{},1.5\n", i as f64 * 0.1));
    }
    fs::write(dir.path().join("flat.csv"), csv).unwrap();
    let out = jumpact(dir.path(), &["estimate", "flat.csv", "--out-dir", "out"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let est = fs::read_to_string(dir.path().join("out/estimates.csv")).unwrap();
    let row = est.lines().nth(1).unwrap();
    assert!(row.contains("zero_count"), "{row}");
    assert!(row.contains(",0,"), "{row}");
}

#[test]
fn estimate_avg_workflow_on_simulated_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = jumpact(
        dir.path(),
        &[
            "simulate",
            "--preset",
            "table1-beta1.5-p1pct",
            "--seed",
            "7",
            "--out-dir",
            "sim",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let out = jumpact(
        dir.path(),
        &[
            "estimate",
            "sim/path.csv",
            "--avg",
            "--two-scale",
            "--bias-correct",
            "--out-dir",
            "est",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let est = fs::read_to_string(dir.path().join("est/estimates.csv")).unwrap();
    assert!(est.lines().any(|l| l.starts_with("avg,")));
    assert!(est.lines().any(|l| l.starts_with("two_scales,")));
    assert!(est.lines().filter(|l| l.starts_with("two_cutoffs,")).count() >= 18);
    let corrected = fs::read_to_string(dir.path().join("est/corrected.csv")).unwrap();
    assert!(corrected.starts_with("alpha,alpha_prime,beta_raw,beta_corrected,applied"));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("est/manifest.json")).unwrap())
            .unwrap();
    let outputs = manifest["outputs"].as_array().unwrap();
    assert!(outputs.iter().any(|o| o == "estimates.csv"));
    assert!(outputs.iter().any(|o| o == "corrected.csv"));
}

#[test]
fn montecarlo_smoke_emits_all_files() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("mc.json"), tiny_mc_config()).unwrap();
    let out = jumpact(dir.path(), &["montecarlo", "--config", "mc.json", "--out-dir", "out"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let table1 = fs::read_to_string(dir.path().join("out/table1.csv")).unwrap();
    assert!(table1.starts_with("beta,tail_prob,delta,sample_mean"));
    assert_eq!(table1.lines().count(), 2);
    let table2 = fs::read_to_string(dir.path().join("out/table2.csv")).unwrap();
    assert_eq!(table2.lines().count(), 2);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/manifest.json")).unwrap())
            .unwrap();
    let outputs = manifest["outputs"].as_array().unwrap();
    assert!(outputs.iter().any(|o| o == "table1.csv"));
    assert!(outputs.iter().any(|o| o == "table2.csv"));
    assert!(outputs.iter().any(|o| o.as_str().unwrap().starts_with("hist_")));
    // every listed output exists on disk
    for o in outputs {
        assert!(dir.path().join("out").join(o.as_str().unwrap()).exists());
    }
}

#[test]
fn montecarlo_rejects_beta_at_two_before_simulating() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny_mc_config().replace("\"beta_values\": [1.0]", "\"beta_values\": [2.0]");
    fs::write(dir.path().join("mc.json"), config).unwrap();
    let out = jumpact(dir.path(), &["montecarlo", "--config", "mc.json", "--out-dir", "out"]);
    assert!(!out.status.success());
    assert!(!dir.path().join("out/table1.csv").exists());
    // the manifest still records the failed run
    let manifest = fs::read_to_string(dir.path().join("out/manifest.json")).unwrap();
    assert!(manifest.contains("error"));
}

#[test]
fn ticks_stats_match_hand_computed_moments() {
    // log-returns 1, 2, 3, 10: mean 4, population stdev sqrt(12.5)
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("timestamp,price\n");
    for (k, logp) in [0.0f64, 1.0, 3.0, 6.0, 16.0].iter().enumerate() {
        csv.push_str(&format!("{},{}\n", k as f64 * 5.0, logp.exp()));
    }
    fs::write(dir.path().join("ticks.csv"), csv).unwrap();
    let out = jumpact(
        dir.path(),
        &[
            "ticks",
            "ticks.csv",
            "--stats",
            "--session-open",
            "0",
            "--session-close",
            "20",
            "--symbol",
            "toy",
            "--out-dir",
            "out",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let stats = fs::read_to_string(dir.path().join("out/stats_toy.csv")).unwrap();
    let fields: Vec<&str> = stats.lines().nth(1).unwrap().split(',').collect();
    let n: usize = fields[0].parse().unwrap();
    let mean: f64 = fields[1].parse().unwrap();
    let stdev: f64 = fields[2].parse().unwrap();
    assert_eq!(n, 4);
    assert!((mean - 4.0).abs() < 1e-12);
    assert!((stdev - 12.5f64.sqrt()).abs() < 1e-9);
}

#[test]
fn ticks_malformed_line_reports_line_number() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("bad.csv"),
        "timestamp,price\n0,10.0\n5,10.1\nnot-a-time,10.2\n",
    )
    .unwrap();
    let out = jumpact(
        dir.path(),
        &[
            "ticks",
            "bad.csv",
            "--session-open",
            "0",
            "--session-close",
            "10",
            "--out-dir",
            "out",
        ],
    );
    assert!(!out.status.success());
    assert!(stderr(&out).contains("line 4"), "{}", stderr(&out));
    // the manifest is still written on failure
    let manifest = fs::read_to_string(dir.path().join("out/manifest.json")).unwrap();
    assert!(manifest.contains("error"));
}

#[test]
fn ticks_rolling_windows_cover_the_days() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("timestamp,price\n");
    for day in 0..4u32 {
        for k in 0..21u32 {
            let t = day as f64 * 86_400.0 + k as f64 * 5.0;
            // deterministic pseudo-noise so the estimator has nonzero variance
            let p = 10.0 * (0.01 * (7.3 * (day * 21 + k) as f64).sin()).exp();
            csv.push_str(&format!("{t},{p}\n"));
        }
    }
    fs::write(dir.path().join("ticks.csv"), csv).unwrap();
    let out = jumpact(
        dir.path(),
        &[
            "ticks",
            "ticks.csv",
            "--rolling",
            "2d",
            "--session-open",
            "0",
            "--session-close",
            "100",
            "--out-dir",
            "out",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let rolling = fs::read_to_string(dir.path().join("out/rolling_series.csv")).unwrap();
    assert_eq!(rolling.lines().count(), 3); // header + two 2-day windows
    assert!(rolling.lines().nth(1).unwrap().starts_with("0,2,"));
    assert!(rolling.lines().nth(2).unwrap().starts_with("2,2,"));
}
