use std::process::{Command, Output};

fn ecdde(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ecdde")).args(args).output().expect("binary runs")
}

fn csv_rows(out: &Output) -> Vec<Vec<String>> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn column(rows: &[Vec<String>], name: &str, row: usize) -> f64 {
    let k = rows[0].iter().position(|h| h == name).expect("column present");
    rows[row][k].parse().unwrap()
}

#[test]
fn dickman_value_column() {
    let out = ecdde(&["pfun", "--preset", "dickman", "--U", "3", "--at", "2"]);
    assert!(out.status.success());
    let rows = csv_rows(&out);
    assert_eq!(rows[0], ["u", "re", "im", "scaled_re", "scaled_im"]);
    assert!((column(&rows, "scaled_re", 1) - 0.306_852_8).abs() < 1e-7);
}

#[test]
fn polynomial_qstar() {
    let out = ecdde(&["qstar", "--alphas", "1,-1", "--shifts", "0,1", "--u", "7"]);
    assert!(out.status.success());
    let rows = csv_rows(&out);
    assert_eq!(column(&rows, "re", 1), 1.0);
    assert_eq!(rows[1][3], "polynomial");
}

#[test]
fn complex_inputs() {
    let out = ecdde(&["qstar", "--alphas", "-0.4+0.2i,-0.3-0.1i", "--shifts", "0,1.3", "--grid", "1:3:3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 4);
    assert!(column(&rows, "im", 2) != 0.0);
}

#[test]
fn adjoint_report() {
    let out = ecdde(&["adjoint", "--preset", "iwaniec", "--kappa", "1", "--grid", "3:8:6"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["report"]["max_dev"].as_f64().unwrap() <= 1e-6);
    assert_eq!(v["report"]["a_estimates"].as_array().unwrap().len(), 6);
}

#[test]
fn small_u_law_at_one_thousandth() {
    let out = ecdde(&["qstar", "--preset", "iwaniec", "--kappa", "0.5", "--u", "0.001"]);
    assert!(out.status.success());
    let q = column(&csv_rows(&out), "re", 1);
    let law = std::f64::consts::PI.sqrt() * (-0.5 * 0.577_215_664_901_532_9f64).exp();
    assert!((q * 0.001f64.sqrt() / law - 1.0).abs() < 0.02);
}

#[test]
fn asym_columns() {
    let out = ecdde(&["asym", "--preset", "buchstab", "--side", "p", "--u", "10", "--N", "3"]);
    assert!(out.status.success());
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 4);
    assert_eq!(column(&rows, "partial_re", 3), 1.0);
    assert_eq!(column(&rows, "term_abs", 2), 0.0);
}

#[test]
fn oscillate_outputs() {
    let out = ecdde(&["oscillate", "--kappa", "1", "--T", "5", "--seed", "bump", "--steps", "8"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["report"]["sign_changes"].as_array().unwrap().len(), 9);
    let out = ecdde(&["oscillate", "--steps", "2", "--csv", "--samples-per-unit", "4"]);
    let rows = csv_rows(&out);
    assert_eq!(rows[0], ["u", "q"]);
    assert_eq!(rows.len(), 1 + 3 * 4 + 1);
}

#[test]
fn special_and_json_format() {
    let out = ecdde(&["special", "--fn", "ein", "--z", "1", "--format", "json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v[0]["value"][0].as_f64().unwrap() - 0.796_599_599_297_053_1).abs() < 1e-15);
}

#[test]
fn out_file_respects_env_dir() {
    let dir = std::env::temp_dir().join(format!("ecdde-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_ecdde"))
        .env("ECDDE_OUT_DIR", &dir)
        .args(["special", "--fn", "gamma", "--z", "5", "--out", "g.csv"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.join("g.csv")).unwrap();
    assert!(text.starts_with("z_re,z_im,re,im\n"));
    assert!(text.contains("2.4000000000000000e1"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn exit_codes() {
    assert_eq!(ecdde(&["nope"]).status.code(), Some(2));
    assert_eq!(ecdde(&["qstar", "--preset", "dickman", "--u", "1", "--bogus"]).status.code(), Some(2));
    assert_eq!(ecdde(&["qstar", "--preset", "dickman", "--u", "0"]).status.code(), Some(2));
    assert_eq!(ecdde(&["adjoint", "--preset", "dickman", "--grid", "2:4:3"]).status.code(), Some(4));
    assert_eq!(ecdde(&["asym", "--preset", "iwaniec", "--kappa", "2", "--side", "q", "--u", "1", "--N", "0"]).status.code(), Some(2));
    let out = ecdde(&["adjoint", "--preset", "dickman", "--grid", "2:4:3", "--bypass-normalization"]);
    assert_eq!(out.status.code(), Some(0));
}
