use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn stand_in() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/sec5.json")
}

fn cjsr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cjsr"))
        .args(args)
        .env_remove("CJSR_PATH_CAP")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("bad JSON ({e}): {}", stdout(out)))
}

struct Files(TempDir);

impl Files {
    fn new() -> Self {
        Files(tempfile::tempdir().unwrap())
    }

    fn write(&self, name: &str, text: &str) -> String {
        let p = self.0.path().join(name);
        std::fs::write(&p, text).unwrap();
        p.to_str().unwrap().to_owned()
    }
}

const SCALAR: &str = r#"{"dim": 2, "num_labels": 1, "matrices": [[[0.5, 0], [0, 0.5]]], "nodes": 1, "edges": [[1, 1, 1]]}"#;

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(str::to_owned).collect()).collect()
}

#[test]
fn validate_bundled_example() {
    let out = cjsr(&["validate", stand_in().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("5 nodes"));
}

#[test]
fn validate_reports_duplicate_edge() {
    let f = Files::new();
    let p = f.write("dup.json", &SCALAR.replace("[[1, 1, 1]]", "[[1, 1, 1], [1, 1, 1]]"));
    let out = cjsr(&["validate", &p]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("duplicate edge (1, 1, label 1)"), "{}", stderr(&out));
}

#[test]
fn validate_reports_dimension_mismatch() {
    let f = Files::new();
    let p = f.write(
        "dim.json",
        r#"{"dim": 2, "num_labels": 1, "matrices": [[[1,0,0],[0,1,0],[0,0,1]]], "nodes": 1, "edges": [[1, 1, 1]]}"#,
    );
    let out = cjsr(&["validate", &p]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("matrix is 3x3, but dim is 2"), "{}", stderr(&out));
}

#[test]
fn validate_parse_error_has_position_and_field() {
    let f = Files::new();
    let p = f.write("bad.json", "{\n  \"dim\": 2,\n  \"num_labels\": \"two\"\n}");
    let out = cjsr(&["validate", &p]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("line 3") && err.contains("num_labels"), "{err}");
}

#[test]
fn validate_json_carries_schema_version() {
    let out = cjsr(&["validate", stand_in().to_str().unwrap(), "--format", "json"]);
    let v = json(&out);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["strongly_connected"], true);
}

#[test]
fn bounds_scalar_rows_are_constant() {
    let f = Files::new();
    let p = f.write("s.json", SCALAR);
    let out = cjsr(&["bounds", &p, "--tmax", "4", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&stdout(&out));
    assert_eq!(rows.len(), 5);
    for r in &rows {
        let v: f64 = r[2].parse().unwrap();
        assert!((v - 0.5).abs() < 1e-12, "{r:?}");
    }
}

#[test]
fn bounds_t1_is_largest_matrix_norm() {
    // Closed-form 2x2 spectral norm as an independent oracle.
    let norm = |a: f64, b: f64, c: f64, d: f64| {
        let s = a * a + b * b + c * c + d * d;
        let det = a * d - b * c;
        ((s + (s * s - 4.0 * det * det).sqrt()) / 2.0).sqrt()
    };
    let expected = [
        norm(-0.67, 0.26, 0.82, -0.28),
        norm(1.13, 0.13, -0.82, -0.28),
        norm(0.46, 0.18, 0.76, 0.46),
        norm(0.28, 0.76, -0.14, 0.65),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let out = cjsr(&["bounds", stand_in().to_str().unwrap(), "--tmax", "1", "--format", "json"]);
    let v = json(&out);
    let rho1 = v["rho_t"][0]["value"].as_f64().unwrap();
    assert!((rho1 - expected).abs() < 1e-12, "{rho1} vs {expected}");
    assert_eq!(v["rho_t"][0]["witness"]["word"], serde_json::json!([2]));
}

#[test]
fn bounds_prints_unstable_witness() {
    let f = Files::new();
    let p = f.write(
        "u.json",
        r#"{"dim": 2, "num_labels": 1, "matrices": [[[1.2, 0], [0, 0]]], "nodes": 1, "edges": [[1, 1, 1]]}"#,
    );
    let out = cjsr(&["bounds", &p, "--tmax", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("cycle lower bound: 1.200000"), "{text}");
    assert!(text.contains("unstable"), "{text}");
}

#[test]
fn certify_scalar_feasible_with_scaled_identity() {
    let f = Files::new();
    let p = f.write("s.json", SCALAR);
    let out = cjsr(&["certify", &p, "--gamma", "0.6", "--T", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = json(&out);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["status"], "feasible");
    let q = &v["certificate"]["forms"][0]["form"];
    let (a, b, d) = (q[0][0].as_f64().unwrap(), q[0][1].as_f64().unwrap(), q[1][1].as_f64().unwrap());
    assert!(b.abs() <= 1e-6 * a && (a - d).abs() <= 1e-6 * a, "{q}");
}

#[test]
fn certify_scalar_infeasible_exit_code() {
    let f = Files::new();
    let p = f.write("s.json", SCALAR);
    let out = cjsr(&["certify", &p, "--gamma", "0.4"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["status"], "infeasible");
}

#[test]
fn certify_unknown_exit_code() {
    let f = Files::new();
    let p = f.write("s.json", SCALAR);
    let cfg = f.write("cfg.json", r#"{"solver": {"max_newton_steps": 1}}"#);
    let out = cjsr(&["certify", &p, "--gamma", "0.5000001", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(3), "{}", stdout(&out));
    assert_eq!(json(&out)["status"], "unknown");
}

#[test]
fn certify_stand_in_path_dependent_memory_one_at_unit_rate() {
    // Regression: memory 1 proves stability of the stand-in example.
    let out = cjsr(&["certify", stand_in().to_str().unwrap(), "--gamma", "1", "--T", "2", "--method", "path-dependent"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = json(&out);
    assert_eq!(v["certificate"]["kind"], "path_dependent");
    assert_eq!(v["certificate"]["forms"].as_array().unwrap().len(), 10);
    assert!(v["certificate"]["slack"].as_f64().unwrap() > 0.0);
}

#[test]
fn certify_stand_in_lift_unit_rate_needs_depth() {
    let file = stand_in();
    let f = file.to_str().unwrap();
    for t in ["1", "2", "3"] {
        let out = cjsr(&["certify", f, "--gamma", "1", "--T", t]);
        assert_eq!(out.status.code(), Some(2), "T = {t}: {}", stdout(&out));
    }
    let out = cjsr(&["certify", f, "--gamma", "1", "--T", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["lifted_gamma"], 1.0);
    assert_eq!(v["lift"]["depth"], 4);
}

#[test]
fn certify_without_gamma_bisects() {
    let f = Files::new();
    let p = f.write("s.json", SCALAR);
    let out = cjsr(&["certify", &p, "--T", "2", "--method", "path-dependent"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let upper = v["upper"].as_f64().unwrap();
    assert!(upper >= 0.5 && upper <= 0.5 * (1.0 + 1e-3) + 1e-12, "{upper}");
    assert_eq!(v["num_forms"], 1);
}

#[test]
fn report_csv_schema_is_fixed() {
    let f = Files::new();
    let p = f.write("s.json", SCALAR);
    let out = cjsr(&["report", &p, "--Tmax", "3", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(text.lines().next().unwrap(), "T,method,upper,lower,guaranteed_eps,num_forms,wall_time_s,status");
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 6);
    for r in &rows {
        let depth: i32 = r[0].parse().unwrap();
        let upper: f64 = r[2].parse().unwrap();
        assert!(upper >= 0.5 - 1e-12 && upper <= 0.5 * (1.0 + 1e-3) + 1e-12, "{r:?}");
        let eps: f64 = r[4].parse().unwrap();
        assert!((eps - (2f64.powf(1.0 / (2.0 * depth as f64)) - 1.0)).abs() < 1e-15);
        assert_eq!(r[7], "ok");
    }
}

#[test]
fn report_stand_in_path_dependent_dominates_lift() {
    let out = cjsr(&["report", stand_in().to_str().unwrap(), "--tmax", "3", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let rows = v["rows"].as_array().unwrap();
    for t in 1..=3 {
        let find = |m: &str| {
            rows.iter()
                .find(|r| r["T"] == t && r["method"] == m)
                .and_then(|r| r["upper"].as_f64())
                .unwrap()
        };
        assert!(find("path-dependent") <= find("lift") + 2e-3, "T = {t}");
    }
    assert_eq!(v["accuracy_vs_time"].as_array().unwrap().len(), 6);
}

#[test]
fn report_marks_guarded_rows_skipped() {
    let out = Command::new(env!("CARGO_BIN_EXE_cjsr"))
        .args(["report", stand_in().to_str().unwrap(), "--tmax", "3", "--format", "csv"])
        .env("CJSR_PATH_CAP", "25")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let rows = csv_rows(&stdout(&out));
    let status: Vec<&str> = rows.iter().map(|r| r[7].as_str()).collect();
    assert_eq!(status[0], "ok");
    assert!(status.contains(&"skipped"), "{status:?}");
    let skipped = rows.iter().find(|r| r[7] == "skipped").unwrap();
    assert_eq!(skipped[2], "");
}

#[test]
fn lift_guard_exit_code() {
    let out = cjsr(&["lift", stand_in().to_str().unwrap(), "--T", "6", "--path-cap", "10"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr(&out).contains("resource guard"));
}

#[test]
fn lift_depth_one_matches_input() {
    let f = Files::new();
    let out_path = f.0.path().join("l1.json");
    let out = cjsr(&["lift", stand_in().to_str().unwrap(), "--T", "1", "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let base = cjsr_cli::load_system(&stand_in()).unwrap();
    let file = cjsr_cli::SystemFile::read(&out_path).unwrap();
    let lifted = file.to_system().unwrap();
    let words = file.lift.unwrap().words;
    assert_eq!(lifted.automaton().edges().len(), base.automaton().edges().len());
    for e in lifted.automaton().edges() {
        let base_label = words[e.label][0] - 1;
        assert!(base.automaton().edges().iter().any(|b| b.from == e.from && b.to == e.to && b.label == base_label));
        assert_eq!(lifted.matrix(e.label), base.matrix(base_label));
    }
}

#[test]
fn lift_arbitrary_switching_two_labels() {
    let f = Files::new();
    let p = f.write(
        "g.json",
        r#"{"dim": 1, "num_labels": 2, "matrices": [[[0.5]], [[2.0]]], "nodes": 1, "edges": [[1, 1, 1], [1, 1, 2]]}"#,
    );
    let out = cjsr(&["lift", &p, "--T", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["num_labels"], 4);
    assert_eq!(v["lift"]["words"].as_array().unwrap().len(), 4);
}

#[test]
fn lift_two_node_graph_round_trips() {
    let f = Files::new();
    let p = f.write(
        "g.json",
        r#"{"dim": 1, "num_labels": 2, "matrices": [[[0.5]], [[3.0]]], "nodes": 2, "edges": [[1, 2, 1], [2, 1, 2], [2, 2, 1]]}"#,
    );
    let lifted = f.0.path().join("l.json");
    let out = cjsr(&["lift", &p, "--T", "2", "--out", lifted.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let file = cjsr_cli::SystemFile::read(&lifted).unwrap();
    assert_eq!(file.edges.len(), 5);
    assert_eq!(file.num_labels, 3);
    let mut words = file.lift.clone().unwrap().words;
    words.sort();
    assert_eq!(words, vec![vec![1, 1], vec![1, 2], vec![2, 1]]);
    // Word [1, 2] means label 1 then label 2: product 3.0 * 0.5.
    let k = file.lift.as_ref().unwrap().words.iter().position(|w| w == &[1, 2]).unwrap();
    assert_eq!(file.matrices[k], vec![vec![1.5]]);
    let out = cjsr(&["validate", lifted.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn usage_errors_exit_one() {
    let out = cjsr(&["certify", stand_in().to_str().unwrap(), "--method", "magic"]);
    assert_eq!(out.status.code(), Some(1));
    let out = cjsr(&["lift", stand_in().to_str().unwrap(), "--T", "0"]);
    assert_eq!(out.status.code(), Some(1));
    let out = cjsr(&["validate", "/nonexistent/file.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(cjsr(&["--help"]).status.code(), Some(0));
}
