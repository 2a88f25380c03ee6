use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn yp(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_yp")).arg("--out-dir").arg(dir).args(args).output().expect("yp runs")
}

/// Header row and data rows of a CSV written by `yp`, comments skipped.
fn read_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let body: String = text.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n");
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let header = rdr.headers().unwrap().iter().map(String::from).collect();
    let rows = rdr.records().map(|r| r.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

#[test]
fn lamperti_with_a_linear_driver() {
    // σ = |ξ|^{1/2}, x_t = t, a = 1/4: y_T = ((1 + T)/2)²
    let dir = TempDir::new().unwrap();
    let out = yp(
        dir.path(),
        &[
            "lamperti",
            "--set",
            "driver=linear",
            "--set",
            "a=0.25",
            "--set",
            "horizon=2",
            "--set",
            "n_points=201",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_rows(&dir.path().join("lamperti_summary.csv"));
    let y_t: f64 = rows[0][column(&header, "y_T")].parse().unwrap();
    assert!((y_t - 2.25).abs() < 1e-12, "{y_t}");
    let (header, rows) = read_rows(&dir.path().join("lamperti_seed0.csv"));
    assert_eq!(header, ["t", "x1", "y1"]);
    assert_eq!(rows.len(), 201);
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let args = ["converge", "--seed", "0..2", "--set", "ns=2^4..2^6", "--set", "hurst=0.7"];
    assert!(yp(a.path(), &args).status.success());
    let mut parallel = args.to_vec();
    parallel.extend(["--jobs", "2"]);
    assert!(yp(b.path(), &parallel).status.success());
    for name in ["converge_seed0.csv", "converge_seed1.csv", "converge_summary.csv"] {
        let left = std::fs::read(a.path().join(name)).unwrap();
        let right = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(left, right, "{name}");
    }
}

#[test]
fn provenance_records_defaults() {
    let dir = TempDir::new().unwrap();
    assert!(yp(dir.path(), &["fbm-gen", "--seed", "3", "--set", "n_points=33"]).status.success());
    let text = std::fs::read_to_string(dir.path().join("fbm_seed3.csv")).unwrap();
    let comments: Vec<&str> = text.lines().take_while(|l| l.starts_with('#')).collect();
    assert!(comments.iter().any(|l| l.contains("hurst")), "{comments:?}");
    assert!(comments.iter().any(|l| l.contains("config_sha256")), "{comments:?}");
    assert!(comments.iter().any(|l| l.starts_with("# column t:")), "{comments:?}");
}

#[test]
fn json_output_is_self_describing() {
    let dir = TempDir::new().unwrap();
    let out = yp(dir.path(), &["fbm-gen", "--format", "json", "--set", "n_points=17", "--set", "dim=2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("fbm_seed0.json")).unwrap()).unwrap();
    assert_eq!(doc["provenance"]["tool"], "yp");
    assert_eq!(doc["provenance"]["seed"], 0);
    assert_eq!(doc["columns"].as_array().unwrap().len(), 3);
    assert_eq!(doc["rows"].as_array().unwrap().len(), 17);
}

#[test]
fn include_directive_and_overrides() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("cfg");
    std::fs::create_dir(&cfg).unwrap();
    std::fs::write(cfg.join("base.cfg"), "driver = linear\nslope = 2\nn_points = 11\n").unwrap();
    std::fs::write(cfg.join("run.cfg"), "command = lamperti\ninclude base.cfg\nslope = 3  # wins\n").unwrap();
    let run = cfg.join("run.cfg");
    let out = yp(dir.path(), &["--config", run.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    // a = 0: y_T = (3/2)²
    let (header, rows) = read_rows(&dir.path().join("lamperti_summary.csv"));
    let y_t: f64 = rows[0][column(&header, "y_T")].parse().unwrap();
    assert!((y_t - 2.25).abs() < 1e-12, "{y_t}");

    let out = yp(dir.path(), &["--config", run.to_str().unwrap(), "--set", "slope=1"]);
    assert!(out.status.success());
    let (header, rows) = read_rows(&dir.path().join("lamperti_summary.csv"));
    let y_t: f64 = rows[0][column(&header, "y_T")].parse().unwrap();
    assert!((y_t - 0.25).abs() < 1e-12, "{y_t}");
}

#[test]
fn config_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let unknown = yp(dir.path(), &["lamperti", "--set", "hurts=0.7"]);
    assert_eq!(unknown.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("hurts"));

    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "hurst 0.7\n").unwrap();
    assert_eq!(yp(dir.path(), &["lamperti", "--config", bad.to_str().unwrap()]).status.code(), Some(2));

    let cyc = dir.path().join("cyc.cfg");
    std::fs::write(&cyc, "include cyc.cfg\n").unwrap();
    assert_eq!(yp(dir.path(), &["lamperti", "--config", cyc.to_str().unwrap()]).status.code(), Some(2));

    assert_eq!(yp(dir.path(), &["lamperti", "--set", "hurst=1.2"]).status.code(), Some(2));
    assert_eq!(yp(dir.path(), &["certify", "--set", "gamma=1.5"]).status.code(), Some(2));
    assert_eq!(yp(dir.path(), &[]).status.code(), Some(2));
}

#[test]
fn certificate_failures_exit_with_three() {
    let dir = TempDir::new().unwrap();
    let out = yp(dir.path(), &["certify", "--set", "eta=0.9", "--set", "n_points=65"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("window"));
}

#[test]
fn certify_passes_on_a_healthy_solution() {
    let dir = TempDir::new().unwrap();
    let out = yp(dir.path(), &["certify", "--set", "a=0.5", "--set", "n_points=257", "--set", "hurst=0.7"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("certify_seed0.json")).unwrap()).unwrap();
    assert!(doc.to_string().contains("\"passed\":true"), "{doc}");
}

#[test]
fn multidim_and_ladder_diagnostics_run() {
    let dir = TempDir::new().unwrap();
    let out = yp(dir.path(), &["multidim", "--set", "dim=2", "--set", "n_points=1025", "--set", "a=0.3,0.1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("multidim_seed0.csv").exists());
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("multidim_seed0.summary.json")).unwrap())
            .unwrap();
    assert!(summary.to_string().contains("\"case\""));

    let out = yp(dir.path(), &["ladder-diag", "--seed", "0..3", "--set", "n_points=2049"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("ladder_rungs.csv").exists());
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("ladder_summary.json")).unwrap()).unwrap();
    assert!(summary.to_string().contains("\"solves\""));
}

#[test]
fn roughness_writes_one_table_per_seed() {
    let dir = TempDir::new().unwrap();
    let out = yp(dir.path(), &["roughness", "--seed", "0,4", "--set", "n_points=1025"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("roughness_seed0.csv").exists());
    assert!(dir.path().join("roughness_seed4.csv").exists());
}
