use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn warpcurv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_warpcurv"))
        .args(args)
        .env_remove("WARPCURV_THREADS")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &tempfile::TempDir, text: &str) -> String {
    let path = dir.path().join("run.toml");
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn demo() -> String {
    repo().join("configs/demo.toml").display().to_string()
}

#[test]
fn demo_passes_and_is_reproducible() {
    let a = warpcurv(&[
        "verify",
        "--config",
        &demo(),
        "--no-timestamp",
        "--threads",
        "1",
    ]);
    assert_eq!(
        a.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&a.stderr)
    );
    let b = warpcurv(&[
        "verify",
        "--config",
        &demo(),
        "--no-timestamp",
        "--threads",
        "4",
    ]);
    assert_eq!(a.stdout, b.stdout);
    let report: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(report["summary"]["passed"], 26);
    assert!(report.get("generated_at").is_none());
}

#[test]
fn timestamp_is_present_by_default() {
    let out = warpcurv(&["verify", "--config", &demo(), "--resolution", "16"]);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["generated_at"].is_u64());
    assert_eq!(report["resolution"], 16);
}

#[test]
fn tiny_tolerance_fails_on_spheres() {
    let cfg = repo().join("configs/hyperbolic.toml").display().to_string();
    let out = warpcurv(&[
        "verify",
        "--config",
        &cfg,
        "--tol",
        "1e-15",
        "--resolution",
        "8",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn h2_integral_on_a_graph_is_a_hypothesis_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        &dir,
        r#"
checks = ["lemma52"]
[ambient]
n = 2
fiber = "flat-torus"
[[families]]
kind = "torus-graph"
modes = [{ wavenumbers = [1, 0], cos = 0.3 }]
"#,
    );
    let out = warpcurv(&["verify", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let err = report["records"][0]["error"].as_str().unwrap();
    assert!(err.contains("hypothesis"), "{err}");
}

#[test]
fn parse_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        &dir,
        "checks = [\"hk\"]\n[ambient]\nn = 2\nfiber = \"flat-torus\"\ncolour = 1\n",
    );
    let out = warpcurv(&["verify", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ambient"));
    assert_eq!(warpcurv(&["verify"]).status.code(), Some(2));
}

#[test]
fn report_goes_to_the_requested_file_and_format() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.csv");
    let out = warpcurv(&[
        "verify",
        "--config",
        &demo(),
        "--resolution",
        "16",
        "--format",
        "csv",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(path).unwrap();
    assert!(text.starts_with("check,family,resolution,outcome,quantity,value\n"));
}

#[test]
fn convergence_table_as_csv() {
    let out = warpcurv(&[
        "convergence",
        "--config",
        &demo(),
        "--check",
        "minkowski:1",
        "--resolutions",
        "8,16,32",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "family,check,resolution,normalized_residual,change,verdict"
    );
    assert_eq!(lines.len(), 1 + 5 * 3);
    assert!(lines[1].starts_with("slice-zero,minkowski:1,8,"));
}

#[test]
fn selftest_and_schema() {
    let out = warpcurv(&["selftest", "--samples", "50", "--n", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["passed"], true);
    let schema = warpcurv(&["schema"]);
    assert_eq!(schema.status.code(), Some(0));
    let text = String::from_utf8(schema.stdout).unwrap();
    warpcurv::config::parse_config(&text).expect("shipped schema is a valid config");
}

#[test]
fn thread_count_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_warpcurv"))
        .args([
            "verify",
            "--config",
            &demo(),
            "--resolution",
            "16",
            "--no-timestamp",
        ])
        .env("WARPCURV_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let bad = Command::new(env!("CARGO_BIN_EXE_warpcurv"))
        .args(["verify", "--config", &demo()])
        .env("WARPCURV_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
