mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use flockdelay::diagnostics::consensus_series;
use flockdelay::integrator::{read_trajectory_csv, simulate};
use flockdelay::scenarios::load_scenario;
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn flockdelay(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flockdelay"))
        .args(args)
        .env_remove("FLOCKDELAY_OUT")
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "{e}: {}\n{}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_single_agent_keeps_velocity() {
    let tmp = tempfile::tempdir().unwrap();
    let out = flockdelay(&["simulate", "--scenario", path_str(&fixture("single_agent.toml")), "--out", path_str(tmp.path())]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::File::open(tmp.path().join("single_agent/trajectory.csv")).unwrap();
    let traj = read_trajectory_csv(csv).unwrap();
    assert_eq!(traj.states.len(), 21);
    for st in &traj.states {
        assert_eq!(st.v, vec![0.5, -2.0]);
    }
    let header = fs::read_to_string(tmp.path().join("single_agent/trajectory.csv")).unwrap();
    assert!(header.starts_with("t,x1_1,x1_2,v1_1,v1_2\n"));
}

#[test]
fn simulate_consensus_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let out = flockdelay(&["simulate", "--scenario", path_str(&fixture("consensus.toml")), "--out", path_str(tmp.path())]);
    assert_eq!(out.status.code(), Some(0));
    let summary = json(&out);
    assert!(summary["final_velocity_diameter"].as_f64().unwrap() < 1e-12);
    assert_eq!(summary["d0"].as_f64().unwrap(), 0.7);
    assert!(tmp.path().join("consensus/report.json").exists());
}

#[test]
fn simulate_matches_library_bit_for_bit() {
    let tmp = tempfile::tempdir().unwrap();
    let out = flockdelay(&["simulate", "--scenario", path_str(&fixture("two_flock.toml")), "--out", path_str(tmp.path())]);
    assert_eq!(out.status.code(), Some(0));
    let summary = json(&out);

    let sc = load_scenario(fixture("two_flock.toml")).unwrap();
    assert_eq!(sc, common::two_flock());
    let traj = simulate(&sc).unwrap();
    let dv = *consensus_series(&traj).velocity_diameter.last().unwrap();
    assert_eq!(summary["final_velocity_diameter"].as_f64().unwrap().to_bits(), dv.to_bits());

    let csv = fs::File::open(tmp.path().join("two_flock/trajectory.csv")).unwrap();
    assert_eq!(read_trajectory_csv(csv).unwrap().states, traj.states);
}

#[test]
fn overrides_are_revalidated() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = fixture("two_flock.toml");
    let out = flockdelay(&["simulate", "--scenario", path_str(&scenario), "--dt", "0.03", "--out", path_str(tmp.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("field `dt`"));

    let out = flockdelay(&[
        "simulate", "--scenario", path_str(&scenario), "--dt", "0.02", "--t-end", "1", "--out", path_str(tmp.path()),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["steps"], 50);
}

#[test]
fn schema_errors_exit_2_with_line() {
    let tmp = tempfile::tempdir().unwrap();
    let src = fs::read_to_string(fixture("two_flock.toml")).unwrap().replace("beta = 0.5", "beta = 0.5\nbogus = 1");
    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, src).unwrap();
    let out = flockdelay(&["simulate", "--scenario", path_str(&bad), "--out", path_str(tmp.path())]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 12") && err.contains("bogus"), "{err}");

    let out = flockdelay(&["simulate", "--scenario", "/nonexistent.toml"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn blow_up_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let out = flockdelay(&["simulate", "--scenario", path_str(&fixture("blow_up.toml")), "--out", path_str(tmp.path())]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("blow-up detected at t ="));
}

#[test]
fn check_random_suite_passes() {
    let out = flockdelay(&["-q", "check", "--generator", path_str(&fixture("random_suite.toml")), "--count", "25"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report = json(&out);
    assert_eq!(report["runs"].as_array().unwrap().len(), 25);
    assert_eq!(report["runs"][3]["label"], "seed-4");
}

#[test]
fn check_flags_overshooting_step() {
    let out = flockdelay(&["-q", "check", "--scenario", path_str(&fixture("overshoot.toml")), "--probes", "ball"]);
    assert_eq!(out.status.code(), Some(1));
    let report = json(&out);
    assert_eq!(report["runs"][0]["probes"][0]["probe"], "ball_invariance");
    assert_eq!(report["runs"][0]["probes"][0]["status"], "fail");
}

#[test]
fn check_with_slow_forcing_skips_free_will() {
    let out = flockdelay(&["-q", "check", "--scenario", path_str(&fixture("slow_forcing.toml"))]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    let probes = report["runs"][0]["probes"].as_array().unwrap();
    assert_eq!(probes.len(), 6);
    let fw = probes.iter().find(|p| p["probe"] == "free_will").unwrap();
    assert_eq!(fw["status"], "skipped");
    assert!(fw["message"].as_str().unwrap().starts_with("hypotheses unmet"));
}

#[test]
fn check_two_flock_probes_pass() {
    let out = flockdelay(&[
        "-q", "check", "--scenario", path_str(&fixture("two_flock.toml")), "--probes", "two-flock-bound,lyapunov,decay",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    for p in report["runs"][0]["probes"].as_array().unwrap() {
        assert_eq!(p["status"], "pass", "{p}");
    }
}

fn planted_csv(path: &Path, rate: f64) {
    let mut text = String::from("t,x1_1,x2_1,v1_1,v2_1\n");
    for k in 0..=500 {
        let t = k as f64 * 0.01;
        text.push_str(&format!("{t},0,1,0,{}\n", (-rate * t).exp()));
    }
    fs::write(path, text).unwrap();
}

#[test]
fn fit_decay_recovers_planted_rate() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("planted.csv");
    planted_csv(&csv, 2.0);
    let out = flockdelay(&["fit-decay", "--trajectory", path_str(&csv), "--out", path_str(tmp.path())]);
    assert_eq!(out.status.code(), Some(0));
    let fit = json(&out);
    assert!((fit["rate"].as_f64().unwrap() - 2.0).abs() < 1e-9);
    let written = fs::read_to_string(tmp.path().join("planted/decay_fit.csv")).unwrap();
    assert_eq!(written.lines().count(), 502);
}

#[test]
fn fit_decay_on_a_run() {
    let out = flockdelay(&["fit-decay", "--scenario", path_str(&fixture("two_flock.toml")), "--t-end", "20"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(json(&out)["rate"].as_f64().unwrap() > 0.0);
}

#[test]
fn fit_decay_all_censored_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("flat.csv");
    planted_csv(&csv, 0.0);
    let flat = fs::read_to_string(&csv).unwrap().replace(",1\n", ",0\n");
    fs::write(&csv, flat).unwrap();
    let out = flockdelay(&["fit-decay", "--trajectory", path_str(&csv)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("insufficient decay data"));
}

#[test]
fn sweep_writes_one_bundle_per_run() {
    let tmp = tempfile::tempdir().unwrap();
    let out = flockdelay(&[
        "-q",
        "sweep",
        "--generator",
        path_str(&fixture("random_suite.toml")),
        "--count",
        "6",
        "--seed",
        "100",
        "--workers",
        "3",
        "--probes",
        "ball",
        "--out",
        path_str(tmp.path()),
    ]);
    assert_eq!(out.status.code(), Some(0));
    for seed in 100..106 {
        let dir = tmp.path().join(format!("seed-{seed}"));
        for f in ["scenario.toml", "trajectory.csv", "report.json"] {
            assert!(dir.join(f).exists(), "{}", dir.join(f).display());
        }
        assert_eq!(load_scenario(dir.join("scenario.toml")).unwrap().rng_seed, Some(seed));
    }
    assert!(tmp.path().join("batch_report.json").exists());

    let serial = flockdelay(&[
        "-q", "check", "--generator", path_str(&fixture("random_suite.toml")), "--count", "6", "--seed", "100", "--probes", "ball",
    ]);
    assert_eq!(json(&serial)["runs"], json(&out)["runs"]);
}

#[test]
fn output_root_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_flockdelay"))
        .args(["simulate", "--scenario", path_str(&fixture("single_agent.toml"))])
        .env("FLOCKDELAY_OUT", tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(tmp.path().join("single_agent/trajectory.csv").exists());
}

#[test]
fn usage_errors() {
    assert_eq!(flockdelay(&[]).status.code(), Some(2));
    assert_eq!(flockdelay(&["check"]).status.code(), Some(2));
    assert_eq!(flockdelay(&["check", "--scenario", "a.toml", "--probes", "nope"]).status.code(), Some(2));
    assert_eq!(flockdelay(&["--version"]).status.code(), Some(0));
}
