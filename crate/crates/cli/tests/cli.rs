use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pipeshape")).args(args).output().expect("binary runs")
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(path).unwrap();
    assert!(!text.contains('\r'));
    text.lines().map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn column(rows: &[Vec<String>], name: &str) -> Vec<String> {
    let idx = rows[0].iter().position(|h| h == name).unwrap_or_else(|| panic!("missing column {name}"));
    rows[1..].iter().map(|r| r[idx].clone()).collect()
}

fn summary_j(dir: &Path) -> f64 {
    column(&csv_rows(&dir.join("summary.csv")), "J")[0].parse().unwrap()
}

#[test]
fn solve_cylinder_reports_the_analytic_energy() {
    let tmp = TempDir::new().unwrap();
    let axi = tmp.path().join("axi");
    let o = run(&["solve", "--cylinder", "--h", "0.1", "--out", &out_arg(&axi)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!((summary_j(&axi) - 12.566371).abs() <= 1e-5);
    for f in ["field.csv", "summary.csv", "mesh.txt", "profile.txt", "config.toml"] {
        assert!(axi.join(f).exists(), "{f} missing");
    }

    let planar = tmp.path().join("planar");
    let o = run(&["solve", "--mode", "planar", "--cylinder", "--h", "0.1", "--out", &out_arg(&planar)]);
    assert!(o.status.success());
    assert!((summary_j(&planar) - 5.333333).abs() <= 1e-5);
}

#[test]
fn malformed_config_exits_with_code_one() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "[params\nmu = 1.0\n").unwrap();
    let o = run(&["solve", "--config", cfg.to_str().unwrap(), "--out", &out_arg(&tmp.path().join("o"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("configuration error"));

    fs::write(&cfg, "[params]\nc = 1.0\n").unwrap();
    let o = run(&["solve", "--config", cfg.to_str().unwrap(), "--out", &out_arg(&tmp.path().join("o"))]);
    assert_eq!(o.status.code(), Some(1));

    let o = run(&["solve", "--config", tmp.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn rerun_from_resolved_config_is_bit_identical() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, "[mesh]\nh = 0.2\n[family]\ne = 0.01\n").unwrap();
    let first = tmp.path().join("first");
    assert!(run(&["solve", "--config", cfg.to_str().unwrap(), "--out", &out_arg(&first)]).status.success());
    let second = tmp.path().join("second");
    let resolved = first.join("config.toml");
    assert!(run(&["solve", "--config", resolved.to_str().unwrap(), "--out", &out_arg(&second)]).status.success());
    for f in ["field.csv", "summary.csv", "mesh.txt"] {
        assert_eq!(fs::read(first.join(f)).unwrap(), fs::read(second.join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn gradcheck_with_zero_flow_gives_zero_rows() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, "[params]\nc = 0.0\n[mesh]\nh = 0.2\n[gradcheck]\nt = [0.001]\n").unwrap();
    let out = tmp.path().join("g");
    let o = run(&["gradcheck", "--config", cfg.to_str().unwrap(), "--out", &out_arg(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&out.join("gradcheck.csv"));
    assert_eq!(rows[0], ["t", "h", "dJ_adjoint", "dJ_fd", "rel_err"]);
    assert_eq!(rows.len(), 17);
    for col in ["dJ_adjoint", "dJ_fd"] {
        for v in column(&rows, col) {
            assert!(v.parse::<f64>().unwrap().abs() < 1e-12);
        }
    }
}

#[test]
fn gradcheck_marks_inverting_steps_as_skipped() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, "[mesh]\nh = 0.2\n[gradcheck]\nt = [1.0]\n").unwrap();
    let out = tmp.path().join("g");
    let o = run(&["gradcheck", "--config", cfg.to_str().unwrap(), "--out", &out_arg(&out)]);
    assert!(o.status.success());
    let rows = csv_rows(&out.join("gradcheck.csv"));
    assert!(column(&rows, "rel_err").iter().any(|v| v == "skipped"));
}

#[test]
fn sweep_starts_at_zero_percent() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, "[mesh]\nh = 0.2\n[family]\ne_max = 0.01\ne_steps = 3\n").unwrap();
    let out = tmp.path().join("s");
    assert!(run(&["sweep", "--config", cfg.to_str().unwrap(), "--out", &out_arg(&out)]).status.success());
    let rows = csv_rows(&out.join("sweep.csv"));
    assert_eq!(rows[0], ["e", "J", "rel_percent"]);
    assert_eq!(rows.len(), 4);
    assert_eq!(column(&rows, "rel_percent")[0].parse::<f64>().unwrap(), 0.0);
}

#[test]
fn optimize_writes_a_decreasing_history() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, "mode = \"planar\"\n[mesh]\nh = 0.2\n[optimizer]\nmax_iter = 2\n").unwrap();
    let out = tmp.path().join("o");
    let o = run(&["optimize", "--config", cfg.to_str().unwrap(), "--out", &out_arg(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&out.join("history.csv"));
    assert_eq!(rows[0], ["m", "J", "vol", "L", "mu", "eps", "dL"]);
    let l: Vec<f64> = column(&rows, "L").iter().map(|v| v.parse().unwrap()).collect();
    assert!(l.len() >= 2);
    assert!(l[1] < l[0]);
    assert!(out.join("wall.csv").exists() && out.join("optimize_summary.csv").exists());
}

#[test]
fn adjoint_writes_field_and_summary() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("a");
    assert!(run(&["adjoint", "--h", "0.2", "--out", &out_arg(&out)]).status.success());
    let rows = csv_rows(&out.join("adjoint.csv"));
    assert_eq!(rows[0], ["r", "z", "v_r", "v_z", "q", "w", "w3"]);
    let res: f64 = column(&csv_rows(&out.join("adjoint_summary.csv")), "adjoint_residual")[0].parse().unwrap();
    assert!(res < 1e-10);
}

#[test]
fn verify_on_default_cylinder_reports_non_optimality() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("v");
    let o = run(&["verify", "--out", &out_arg(&out)]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{stdout}");
    assert!(stdout.contains("verdict: not first-order optimal"));
    let rows = csv_rows(&out.join("verify.csv"));
    assert!(column(&rows, "status").iter().all(|s| s != "fail"));
}

#[test]
fn verify_failed_check_exits_with_code_three() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, "[mesh]\nh = 0.2\n[verify]\ndivergence_tol = 1e-12\n").unwrap();
    let o = run(&["verify", "--config", cfg.to_str().unwrap(), "--out", &out_arg(&tmp.path().join("v"))]);
    assert_eq!(o.status.code(), Some(3));
}
