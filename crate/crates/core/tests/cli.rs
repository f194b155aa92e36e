mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use gasadapt::fixtures;
use gasadapt::io::{self, ConfigDocument};
use gasadapt::network::GasParameters;

use common::fixture_dir;

fn gasadapt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gasadapt"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn fixture(name: &str) -> String {
    fixture_dir().join(name).to_string_lossy().into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn fixture_files_match_the_generator() {
    let gas = GasParameters::default();
    for (name, (net, scn)) in [("chain5", fixtures::chain5()), ("tree12", fixtures::tree12())] {
        let on_disk = fs::read_to_string(fixture(&format!("{name}.network.json"))).unwrap();
        assert_eq!(on_disk, io::network_to_string(&net, &gas), "{name}: run the generate_fixtures example");
        let on_disk = fs::read_to_string(fixture(&format!("{name}.scenario.json"))).unwrap();
        assert_eq!(on_disk, io::scenario_to_string(&scn));
    }
    let cfg = io::load_config(fixture("config.json")).unwrap();
    let doc = ConfigDocument::from(&cfg);
    assert_eq!(doc.eps_bar, 1e-4);
    assert_eq!((doc.theta_d, doc.phi_m, doc.tau, doc.mu), (0.7, 0.3, 1.1, 4));
}

#[test]
fn run_writes_solution_trace_and_estimates() {
    let dir = tempfile::tempdir().unwrap();
    let out = gasadapt(&[
        "run",
        "--network",
        &fixture("chain5.network.json"),
        "--scenario",
        &fixture("chain5.scenario.json"),
        "--config",
        &fixture("config.json"),
        "--out",
        path(dir.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let rows: Vec<&str> = trace.lines().collect();
    assert!(rows.len() >= 2);
    assert!(rows.iter().all(|r| r.split(',').count() == 15));
    assert!(rows[0].starts_with("solve_index,outer_k,inner_j"));
    let est = fs::read_to_string(dir.path().join("estimates.csv")).unwrap();
    assert_eq!(est.lines().next().unwrap(), io::ESTIMATE_HEADER.join(","));
    assert_eq!(est.lines().count(), 6);

    // Re-estimating the written solution reproduces the run's estimates.
    let again = gasadapt(&[
        "estimate",
        "--network",
        &fixture("chain5.network.json"),
        "--solution",
        path(&dir.path().join("solution.json")),
    ]);
    assert!(again.status.success());
    assert_eq!(String::from_utf8(again.stdout).unwrap(), est);
}

#[test]
fn runs_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = gasadapt(&[
            "run",
            "--network",
            &fixture("tree12.network.json"),
            "--scenario",
            &fixture("tree12.scenario.json"),
            "--out",
            path(d.path()),
        ]);
        assert!(out.status.success());
    }
    for f in ["solution.json", "estimates.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn simulate_without_flow_is_flat() {
    let out = gasadapt(&["simulate", "--q", "0", "--p0", "5000000", "--h", "1000"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,p"));
    let values: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(values.len(), 11);
    assert!(values.iter().all(|&p| p == 5e6));
}

#[test]
fn validate_params_reports_the_model_condition() {
    let out = gasadapt(&["validate-params", "--config", &fixture("config.json"), "--pipes", "39"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let warnings: Vec<&str> = text.lines().filter(|l| l.starts_with("warning:")).collect();
    assert_eq!(warnings.len(), 1, "{text}");
    assert!(warnings[0].contains("model"));

    let out = gasadapt(&["validate-params", "--network", &fixture("chain5.network.json")]);
    assert!(out.status.success());
}

#[test]
fn bad_input_fails_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.json");
    fs::write(&broken, "{ \"format_version\": 1, \"nodes\": [").unwrap();
    let out = gasadapt(&[
        "run",
        "--network",
        path(&broken),
        "--scenario",
        &fixture("chain5.scenario.json"),
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    assert!(!dir.path().join("solution.json").exists());
}

#[test]
fn nlp_solve_reports_infeasibility() {
    let dir = tempfile::tempdir().unwrap();
    let scn = dir.path().join("heavy.json");
    let (_, base) = fixtures::chain5();
    let heavy = gasadapt::network::Scenario::new(base.boundary_flows.iter().map(|(k, v)| (k.clone(), 10.0 * v)));
    io::write_scenario(&scn, &heavy).unwrap();
    let out = gasadapt(&["nlp-solve", "--network", &fixture("chain5.network.json"), "--scenario", path(&scn)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn nlp_solve_writes_listing_and_estimates() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("dump.txt");
    let est = dir.path().join("est.csv");
    let out = gasadapt(&[
        "nlp-solve",
        "--network",
        &fixture("chain5.network.json"),
        "--scenario",
        &fixture("chain5.scenario.json"),
        "--refine",
        "2",
        "--dump",
        path(&dump),
        "--estimates",
        path(&est),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let listing = fs::read_to_string(dump).unwrap();
    assert!(listing.contains("dp[C1]") && listing.contains("p[P1#15]"));
    let rows = fs::read_to_string(est).unwrap();
    assert!(rows.lines().skip(1).all(|r| r.contains(",1,") && r.contains(",16,")));
}
