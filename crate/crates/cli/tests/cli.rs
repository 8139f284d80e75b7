use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn models_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

fn thermoflat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thermoflat")).args(args).env("THERMOFLAT_THREADS", "1").output().unwrap()
}

fn model(name: &str) -> String {
    models_dir().join(name).to_string_lossy().into_owned()
}

#[test]
fn malformed_model_reports_position_and_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\n  \"schema\": \"thermoflat/1\",\n  \"label\": oops\n}\n").unwrap();
    let out = thermoflat(&["pressure", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("line 3"), "{stderr}");
}

#[test]
fn unknown_schema_and_missing_file_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v2.json");
    let text = std::fs::read_to_string(models_dir().join("curie_weiss.json")).unwrap();
    std::fs::write(&path, text.replace("thermoflat/1", "thermoflat/2")).unwrap();
    assert_eq!(thermoflat(&["pressure", path.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(thermoflat(&["pressure", "/nonexistent/model.json"]).status.code(), Some(2));
}

#[test]
fn transport_accepts_negative_atoms() {
    let out =
        thermoflat(&["transport", &model("repulsion.json"), "--y-plus", "0.5", "--y-plus", "-0.5", "--y-minus", "0.1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["y_plus"]["support"].as_array().unwrap().len(), 2);
}

#[test]
fn transport_needs_both_sides() {
    let out = thermoflat(&["transport", &model("repulsion.json"), "--y-plus", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn side_files_sit_next_to_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("cw.json");
    let out = thermoflat(&["game", &model("curie_weiss.json"), "--out", out_path.to_str().unwrap()]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("cw.json.scan.csv")).unwrap();
    assert!(csv.lines().count() > 2);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(report["header"]["command"], "game");
}

#[test]
fn bad_thread_count_is_rejected() {
    let out = Command::new(env!("CARGO_BIN_EXE_thermoflat"))
        .args(["pressure", &model("zero.json")])
        .env("THERMOFLAT_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oracle_rejects_coarse_grids() {
    let out = thermoflat(&["oracle", &model("curie_weiss.json"), "--resolution", "5"]);
    assert_eq!(out.status.code(), Some(2));
}
