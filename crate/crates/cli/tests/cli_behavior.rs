//! End-to-end behavior of the binary: exit codes, metric files, report
//! shapes, CSV output, and byte-determinism.

use std::io::Write;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_ricscan")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("spawn")
}

fn run_json(args: &[&str]) -> serde_json::Value {
    let out = run(args);
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid json")
}

fn write_temp(name: &str, contents: &str) -> std::path::PathBuf {
    let mut path = std::env::temp_dir();
    path.push(format!("ricscan-test-{}-{name}", std::process::id()));
    let mut file = std::fs::File::create(&path).unwrap();
    file.write_all(contents.as_bytes()).unwrap();
    path
}

const SPHERE_FILE: &str = "\
dimension = 3
domain_1 = -0.5 0.5
domain_2 = -0.5 0.5
domain_3 = -0.5 0.5
g_1_1 = 4/(1+x1^2+x2^2+x3^2)^2
g_2_2 = 4/(1+x1^2+x2^2+x3^2)^2
g_3_3 = 4/(1+x1^2+x2^2+x3^2)^2
";

#[test]
fn curvature_of_metric_file() {
    let path = write_temp("sphere.txt", SPHERE_FILE);
    let selector = format!("file:{}", path.display());
    let report = run_json(&[
        "curvature",
        "--metric",
        &selector,
        "--point",
        "0.1,0.2,-0.1",
        "--laplacian",
    ]);
    let scalar = report["results"]["scalar"].as_f64().unwrap();
    assert!((scalar - 6.0).abs() < 1e-8, "scalar {scalar}");
    let lap = report["results"]["laplacian_scalar"].as_f64().unwrap();
    assert!(lap.abs() < 1e-7);
    assert_eq!(report["command"], "curvature");
    assert_eq!(report["version"], env!("CARGO_PKG_VERSION"));
    std::fs::remove_file(path).ok();
}

#[test]
fn traceless_deform_block_in_file() {
    let contents = format!("{SPHERE_FILE}deform = traceless s=0.1\n");
    let path = write_temp("deformed.txt", &contents);
    let selector = format!("file:{}", path.display());
    // the round sphere is Einstein: the deformation leaves it unchanged
    let report = run_json(&["curvature", "--metric", &selector]);
    let scalar = report["results"]["scalar"].as_f64().unwrap();
    assert!((scalar - 6.0).abs() < 1e-7, "scalar {scalar}");
    // but scanning a traceless-deformed file is rejected as input error
    let out = run(&[
        "check",
        "--theorem",
        "1",
        "--metric",
        &selector,
        "--points",
        "origin",
    ]);
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_file(path).ok();
}

#[test]
fn parse_errors_exit_2() {
    for args in [
        vec!["curvature", "--metric", "nonsense"],
        vec!["check", "--theorem", "9", "--metric", "berger"],
        vec![
            "scan",
            "--theorem",
            "1",
            "--metric",
            "berger",
            "--s-max",
            "0",
            "--steps",
            "5",
        ],
        vec!["curvature", "--metric", "berger:p=2,q=1"],
        vec!["verify", "--suite", "unheard-of"],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(2), "args {args:?}");
    }
    // malformed expression in a file
    let path = write_temp(
        "bad.txt",
        "dimension = 2\ndomain_1 = -1 1\ndomain_2 = -1 1\ng_1_1 = sin(x1\ng_2_2 = 1\n",
    );
    let out = run(&["curvature", "--metric", &format!("file:{}", path.display())]);
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_file(path).ok();
}

#[test]
fn geometric_failures_exit_3() {
    // metric not positive definite at the queried point
    let path = write_temp(
        "notspd.txt",
        "dimension = 2\ndomain_1 = -2 2\ndomain_2 = -2 2\ng_1_1 = x1\ng_2_2 = 1\n",
    );
    let out = run(&[
        "curvature",
        "--metric",
        &format!("file:{}", path.display()),
        "--point",
        "-1,0",
    ]);
    assert_eq!(out.status.code(), Some(3));
    std::fs::remove_file(path).ok();

    // point outside the chart domain
    let out = run(&["curvature", "--metric", "sphere:n=2", "--point", "5,5"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn catalog_lists_entries() {
    let report = run_json(&["catalog"]);
    let entries = report["results"].as_array().unwrap();
    let names: Vec<&str> = entries
        .iter()
        .map(|e| e["name"].as_str().unwrap())
        .collect();
    for expected in ["berger", "heisenberg", "product", "hopf", "cp", "torus"] {
        assert!(names.contains(&expected), "missing {expected}");
    }
    let csv = run(&["catalog", "--format", "csv"]);
    assert!(String::from_utf8_lossy(&csv.stdout).starts_with("name,backend,params"));
}

#[test]
fn check_squashed_sphere_margin() {
    let report = run_json(&[
        "check",
        "--theorem",
        "1",
        "--metric",
        "berger:p=1,q=3.5",
        "--points",
        "origin",
    ]);
    let rows = report["results"].as_array().unwrap();
    assert_eq!(rows.len(), 1);
    let margin = rows[0]["margin"].as_f64().unwrap();
    assert!((margin - 60.0).abs() < 1e-9, "margin {margin}");
}

#[test]
fn curvature_csv_format() {
    let out = run(&["curvature", "--metric", "berger:p=1,q=3.5", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("field,i,j,value\n"));
    assert!(text.contains("scalar,,,"));
    assert!(text.lines().any(|l| l.starts_with("ricci_eig,3,,")));
}

#[test]
fn check_over_grid_points() {
    let report = run_json(&[
        "check",
        "--theorem",
        "1",
        "--metric",
        "product:n=2,m=2,lambda=2",
        "--points",
        "grid:-0.2:0.2:2,-0.2:0.2:2,-0.1:0.1:2,-0.1:0.1:2",
    ]);
    let rows = report["results"].as_array().unwrap();
    assert_eq!(rows.len(), 16);
    for row in rows {
        let margin = row["margin"].as_f64().unwrap();
        assert!((margin - 1.5).abs() < 1e-6, "margin {margin}");
    }
}

#[test]
fn scan_csv_format() {
    let out = run(&[
        "scan",
        "--theorem",
        "1",
        "--metric",
        "berger:p=1,q=3.5",
        "--s-max",
        "0.1",
        "--steps",
        "4",
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("s,point_id,margin,spd_ok"));
    assert_eq!(lines.count(), 4);
}

#[test]
fn functional_between_product_scales() {
    let report = run_json(&[
        "functional",
        "--g0",
        "product:n=2,m=2,lambda=1",
        "--g",
        "product:n=2,m=2,lambda=2",
        "--points",
        "halton:4",
    ]);
    // R_{g0} = 0 so both comparison functionals vanish; R_g = 1 throughout
    let f1 = report["results"]["f1"].as_f64().unwrap();
    let r_min = report["results"]["r_min"].as_f64().unwrap();
    assert!(f1.abs() < 1e-7, "f1 {f1}");
    assert!((r_min - 1.0).abs() < 1e-7, "r_min {r_min}");
}

#[test]
fn variation_curvature_report() {
    let report = run_json(&["curvature", "--metric", "hopf:n=1,t=2"]);
    let eigs = report["results"]["ricci_eigs"].as_array().unwrap();
    let first = eigs[0].as_f64().unwrap();
    let last = eigs[6].as_f64().unwrap();
    assert!((first - 0.0).abs() < 1e-12);
    assert!((last - 9.0).abs() < 1e-12);
    let scalar = report["results"]["scalar"].as_f64().unwrap();
    assert!((scalar - 27.0).abs() < 1e-12);
}

#[test]
fn shipped_sample_metrics_load() {
    let root = concat!(env!("CARGO_MANIFEST_DIR"), "/../../metrics");
    // constant-curvature hyperbolic plane
    let report = run_json(&[
        "curvature",
        "--metric",
        &format!("file:{root}/hyperbolic-plane.txt"),
        "--point",
        "0.2,-0.1",
        "--laplacian",
    ]);
    let scalar = report["results"]["scalar"].as_f64().unwrap();
    assert!((scalar + 2.0).abs() < 1e-9, "scalar {scalar}");

    // warped band dx1² + cosh(x1)² dx2² also has curvature −1
    let report = run_json(&[
        "curvature",
        "--metric",
        &format!("file:{root}/warped-band.txt"),
        "--point",
        "0.4,0.3",
    ]);
    let scalar = report["results"]["scalar"].as_f64().unwrap();
    assert!((scalar + 2.0).abs() < 1e-9, "scalar {scalar}");

    // the conformal block perturbs the sphere away from constant curvature
    let report = run_json(&[
        "curvature",
        "--metric",
        &format!("file:{root}/perturbed-sphere.txt"),
        "--point",
        "0.2,0.1,-0.1",
    ]);
    let scalar = report["results"]["scalar"].as_f64().unwrap();
    assert!((scalar - 6.0).abs() > 1e-4 && (scalar - 6.0).abs() < 1.0);
}

#[test]
fn conformal_deform_block_applies() {
    let contents = format!("{SPHERE_FILE}deform = conformal s=0.5 u=1\n");
    let path = write_temp("conformal.txt", &contents);
    let selector = format!("file:{}", path.display());
    // constant factor 1.5: scalar scales by 1/1.5
    let report = run_json(&["curvature", "--metric", &selector]);
    let scalar = report["results"]["scalar"].as_f64().unwrap();
    assert!((scalar - 4.0).abs() < 1e-8, "scalar {scalar}");
    std::fs::remove_file(path).ok();
}
