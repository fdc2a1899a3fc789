use std::path::Path;
use std::process::{Command, Output};

use pure_steering::families::{
    obese_state, spheroid_p_bounds, tangent_x_state, x_state_geometry, x_state_p_bounds, x_state_steerable,
    TangentXParams,
};
use pure_steering::report::StateInput;
use pure_steering::TwoQubitState;
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pure-steering"))
        .args(args)
        .output()
        .unwrap()
}

fn write_state(dir: &Path, name: &str, state: &TwoQubitState) -> String {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string(&StateInput::from_state(state)).unwrap()).unwrap();
    path.to_str().unwrap().to_owned()
}

fn write_text(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn obese_state_steers_in_every_plane() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_state(dir.path(), "obese.json", &obese_state(0.5).unwrap());
    let out = run(&["analyze", "--state", &file]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = json(&out);
    assert_eq!(rep["verdict"]["locus"], "all_inside");
    let planes = rep["planes"].as_array().unwrap();
    assert_eq!(planes.len(), 36);
    assert!(planes.iter().all(|p| p["steerable"] == true));
    assert_eq!(rep["oracle"]["disagreements"], 0);
    assert_eq!(rep["tolerances"]["psd"], 1e-9);
}

#[test]
fn bell_state_has_no_single_contact() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_text(
        dir.path(),
        "bell.json",
        r#"{"a":[0,0,0],"b":[0,0,0],"T":[[1,0,0],[0,-1,0],[0,0,1]]}"#,
    );
    let out = run(&["analyze", "--state", &file]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&out)["tangency"]["status"]["kind"], "multi_tangent");
}

#[test]
fn density_matrix_input() {
    let dir = tempfile::tempdir().unwrap();
    // |01⟩ + |10⟩ over √2, entries as [re, im]
    let h = 0.5;
    let rho = format!(
        r#"{{"density_matrix": [
            [[0,0],[0,0],[0,0],[0,0]],
            [[0,0],[{h},0],[{h},0],[0,0]],
            [[0,0],[{h},0],[{h},0],[0,0]],
            [[0,0],[0,0],[0,0],[0,0]]]}}"#
    );
    let file = write_text(dir.path(), "rho.json", &rho);
    let out = run(&["tangency", "--state", &file]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["tangency"]["status"]["kind"], "multi_tangent");
}

#[test]
fn non_physical_state_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_text(
        dir.path(),
        "bad.json",
        r#"{"a":[0,0,0],"b":[0,0,0],"T":[[2,0,0],[0,-1,0],[0,0,1]]}"#,
    );
    let out = run(&["analyze", "--state", &file]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not physical"));
}

#[test]
fn parse_errors_exit_1_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_text(
        dir.path(),
        "broken.json",
        "{\n  \"a\": [0, 0, 0],\n  \"b\": [0, 0 0]\n}",
    );
    let out = run(&["analyze", "--state", &file]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
    let out = run(&["analyze", "--state", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["analyze", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn tangent_x_state_matches_closed_forms() {
    let dir = tempfile::tempdir().unwrap();
    let params = TangentXParams::new(-0.2, 0.3, 0.6, -0.6);
    let file = write_state(dir.path(), "x.json", &tangent_x_state(&params).unwrap());
    let out = run(&["analyze", "--state", &file, "--planes", "12"]);
    assert_eq!(out.status.code(), Some(0));
    let rep = json(&out);
    let (lo, hi) = x_state_p_bounds(&params).unwrap();
    assert!((rep["line_thresholds"]["min"].as_f64().unwrap() - lo).abs() < 1e-9);
    assert!((rep["line_thresholds"]["max"].as_f64().unwrap() - hi).abs() < 1e-9);
    // with t_y = −t_x the ellipsoid is a spheroid
    let g = x_state_geometry(&params).unwrap();
    let (lo, hi) = spheroid_p_bounds(g.m, g.n_x).unwrap();
    assert!((rep["bounds"]["p_min"].as_f64().unwrap() - lo).abs() < 1e-6);
    assert!((rep["bounds"]["p_max"].as_f64().unwrap() - hi).abs() < 1e-6);
    assert!((rep["pure_state_probability"].as_f64().unwrap() - (1.0 + params.a) / 2.0).abs() < 1e-12);
    for plane in rep["planes"].as_array().unwrap() {
        let n: Vec<f64> = plane["normal"]
            .as_array()
            .unwrap()
            .iter()
            .map(|x| x.as_f64().unwrap())
            .collect();
        // the plane contains z; its angle from x is the normal's angle minus π/2
        let theta = n[1].atan2(n[0]) - std::f64::consts::FRAC_PI_2;
        let want = x_state_steerable(&params, theta).unwrap().algebraic;
        assert_eq!(plane["steerable"].as_bool().unwrap(), want);
    }
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_state(dir.path(), "obese.json", &obese_state(0.3).unwrap());
    let a = run(&["analyze", "--state", &file, "--seed", "11"]);
    let b = run(&["analyze", "--state", &file, "--seed", "11"]);
    assert_eq!(a.stdout, b.stdout);
    let out_file = dir.path().join("report.json");
    let c = run(&[
        "analyze",
        "--state",
        &file,
        "--seed",
        "11",
        "--out",
        out_file.to_str().unwrap(),
    ]);
    assert!(c.stdout.is_empty());
    assert_eq!(std::fs::read(&out_file).unwrap(), a.stdout);
}

#[test]
fn analyze_csv_has_one_row_per_plane() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_state(dir.path(), "obese.json", &obese_state(0.3).unwrap());
    let out = run(&["analyze", "--state", &file, "--planes", "5", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert!(text.starts_with("index,normal_x"));
}

#[test]
fn section_through_second_axis() {
    let dir = tempfile::tempdir().unwrap();
    let params = TangentXParams::new(-0.2, 0.3, 0.6, -0.6);
    let file = write_state(dir.path(), "x.json", &tangent_x_state(&params).unwrap());
    let out = run(&["section", "--state", &file, "--axis", "1,0,0"]);
    assert_eq!(out.status.code(), Some(0));
    let rep = json(&out);
    assert_eq!(rep["verdict"]["steerable"], true);
    let out = run(&["section", "--state", &file]);
    assert_eq!(out.status.code(), Some(1));
}

fn csv_rows(out: &Output) -> Vec<csv::StringRecord> {
    csv::Reader::from_reader(out.stdout.as_slice())
        .records()
        .map(|r| r.unwrap())
        .collect()
}

#[test]
fn sphere_sweep_threshold_column() {
    let out = run(&["family-sweep", "--family", "sphere", "--range", "0.1:0.9:0.1"]);
    assert_eq!(out.status.code(), Some(0));
    let header = csv::Reader::from_reader(out.stdout.as_slice())
        .headers()
        .unwrap()
        .clone();
    assert_eq!(
        header.iter().collect::<Vec<_>>(),
        ["r", "steerable", "p_p", "p_min", "p_max", "margin"]
    );
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 9);
    for (i, row) in rows.iter().enumerate() {
        let r: f64 = row[0].parse().unwrap();
        assert!((r - 0.1 * (i + 1) as f64).abs() < 1e-12);
        assert!((row[4].parse::<f64>().unwrap() - (1.0 - r)).abs() < 1e-15);
    }
}

#[test]
fn obese_sweep_all_steerable() {
    let out = run(&["family-sweep", "--family", "obese", "--range", "0:0.99:0.01"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 100);
    assert!(rows.iter().all(|r| &r[1] == "true"));
}

#[test]
fn x_state_sweep_forms_agree() {
    let out = run(&["family-sweep", "--family", "x-state", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = json(&out);
    let rows = rows.as_array().unwrap();
    assert!(rows.len() > 100);
    assert!(rows.iter().all(|r| r["forms_agree"] == true));
}

#[test]
fn oracle_compare_acceptance_run() {
    let out = run(&["oracle-compare", "--seed", "42", "-n", "1000"]);
    assert_eq!(out.status.code(), Some(0));
    let s = json(&out);
    assert_eq!(s["stats"]["disagreements"], 0);
    assert_eq!(s["agreement_rate"], 1.0);
    assert!(s["stats"]["compared"].as_u64().unwrap() > 0);
}

#[test]
fn oracle_compare_empty() {
    let out = run(&["oracle-compare", "-n", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let s = json(&out);
    assert_eq!(s["states"], 0);
    assert_eq!(s["stats"]["compared"], 0);
}
