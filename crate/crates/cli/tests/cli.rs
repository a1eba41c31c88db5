use std::path::Path;
use std::process::{Command, Output};

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_roughsheet")).arg("--out").arg(out).args(args).output().unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn enhance_then_verify() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["enhance", "--sheet", "st", "--level", "4", "--alpha", "1", "--beta", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(d.path().join("enhance.rsh").is_file());
    let j = json(&d.path().join("enhance.json"));
    assert_eq!(j["pass"], true);
    assert_eq!(j["config"]["Enhance"]["sheet"]["level"], 4);
    let rsh = d.path().join("enhance.rsh");
    let o = run(d.path(), &["verify", "--input", rsh.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(d.path().join("verify.csv")).unwrap();
    assert!(csv.starts_with("# roughsheet "));
    assert!(csv.lines().nth(1).unwrap().starts_with("relation,"));
}

#[test]
fn config_errors_exit_two() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run(d.path(), &["enhance", "--level", "4"]).status.code(), Some(2));
    assert_eq!(run(d.path(), &["enhance", "--sheet", "st", "--level", "20"]).status.code(), Some(2));
    assert_eq!(run(d.path(), &["enhance", "--input", "/nonexistent.shs"]).status.code(), Some(2));
    assert_eq!(run(d.path(), &["integrate", "--sheet", "st", "--level", "3", "--phi", "tan"]).status.code(), Some(2));
    assert_eq!(run(d.path(), &["ito", "--hurst", "0.4", "--trials", "2"]).status.code(), Some(2));
    assert_eq!(run(d.path(), &["strato", "--alpha", "0.7", "--trials", "2"]).status.code(), Some(2));
    let o = run(d.path(), &["bogus"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn corrupt_bundle_exits_four() {
    let d = tempfile::tempdir().unwrap();
    let bad = d.path().join("bad.rsh");
    std::fs::write(&bad, b"not a bundle").unwrap();
    assert_eq!(run(d.path(), &["verify", "--input", bad.to_str().unwrap()]).status.code(), Some(4));
}

#[test]
fn integrate_closed_forms() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["integrate", "--phi", "id", "--sheet", "st", "--measure", "dx", "--level", "6", "--expect", "0.25"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&d.path().join("integrate.json"))["result"]["value"].as_f64().unwrap();
    assert!((v - 0.25).abs() < 1e-3);
    let o = run(d.path(), &["integrate", "--phi", "id", "--sheet", "s*t", "--level", "5", "--expect", "0.3", "--tol", "1e-3"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn strato_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["strato", "--phi", "cos", "--alpha", "0.45", "--beta", "0.45", "--trials", "3", "--levels", "4,5", "--seed", "7"];
    assert_eq!(run(a.path(), &args).status.code(), Some(0));
    assert_eq!(run(b.path(), &args).status.code(), Some(0));
    let read = |p: &Path| std::fs::read(p.join("strato.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
    assert_eq!(std::fs::read(a.path().join("strato.json")).unwrap(), std::fs::read(b.path().join("strato.json")).unwrap());
}

#[test]
fn ito_summary() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["ito", "--hurst", "0.5", "--trials", "20", "--level", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let j = json(&d.path().join("ito.json"));
    assert!(j["result"]["mean_square_difference"]["std_err"].is_number());
    assert!(j["result"]["c_ratio"].as_f64().unwrap() <= 4.0);
}

#[test]
fn fbs_studies() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["fbs", "--cutoffs", "8,16,32", "--level", "3", "--trials", "10"]);
    assert!(matches!(o.status.code(), Some(0) | Some(3)));
    let csv = std::fs::read_to_string(d.path().join("fbs.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    let o = run(d.path(), &["fbs", "--study", "variance", "--alpha", "0.45", "--beta", "0.4", "--level", "6", "--trials", "500"]);
    assert!(matches!(o.status.code(), Some(0) | Some(3)));
    assert!(json(&d.path().join("fbs.json"))["result"]["slopes"].is_array());
}

#[test]
fn output_dir_from_environment() {
    let d = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_roughsheet"))
        .env("ROUGHSHEET_OUT", d.path())
        .args(["integrate", "--sheet", "st", "--level", "3"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(d.path().join("integrate.json").is_file());
}
