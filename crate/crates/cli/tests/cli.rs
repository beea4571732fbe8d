use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hdoutlier"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str], out: &Path) -> Output {
    bin()
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("HDOUTLIER_OUT_DIR")
        .output()
        .expect("binary runs")
}

/// All run directories (two levels below the output root).
fn run_dirs(out: &Path) -> Vec<PathBuf> {
    let mut dirs = Vec::new();
    for scen in fs::read_dir(out).unwrap() {
        let scen = scen.unwrap().path();
        for run in fs::read_dir(&scen).unwrap() {
            dirs.push(run.unwrap().path());
        }
    }
    dirs.sort();
    dirs
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

#[test]
fn help_for_every_subcommand() {
    let subs = [
        "generate",
        "spectrum",
        "geometry",
        "verify-eigenvalues",
        "verify-eigenvectors",
        "toy-example",
        "sweep",
    ];
    for s in subs {
        let o = bin().args([s, "--help"]).output().unwrap();
        assert!(o.status.success(), "{s} --help failed");
        assert!(!o.stdout.is_empty());
    }
}

#[test]
fn missing_config_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["verify-eigenvalues", "--config", "/nonexistent/cfg.json"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_flag_exits_2() {
    let o = bin().args(["sweep", "--bogus"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn invalid_config_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "bad.json",
        r#"{"name":"bad","model":{"family":"toy"},"sweep":[],"replications":0,"seed":1,"checks":[]}"#,
    );
    let o = run(&["verify-eigenvalues", "--config", cfg.to_str().unwrap()], &tmp.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn generate_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("bare_spec.json");
    let args = ["generate", "--config", cfg.to_str().unwrap(), "--n", "30", "--seed", "5"];
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert!(run(&args, &a).status.success());
    assert!(run(&args, &b).status.success());
    let (da, db) = (run_dirs(&a), run_dirs(&b));
    assert_eq!(da.len(), 1);
    let mut files: Vec<_> = fs::read_dir(&da[0]).unwrap().map(|e| e.unwrap().file_name()).collect();
    files.sort();
    assert!(!files.is_empty());
    for f in files {
        let x = fs::read(da[0].join(&f)).unwrap();
        let y = fs::read(db[0].join(&f)).unwrap();
        assert_eq!(x, y, "{f:?} differs");
    }
}

#[test]
fn spectrum_writes_eigenvalues() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("bare_spec.json");
    let o = run(
        &["spectrum", "--config", cfg.to_str().unwrap(), "--n", "25", "--eigenvectors", "2"],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let dirs = run_dirs(tmp.path());
    assert!(fs::read_dir(&dirs[0]).unwrap().count() >= 1);
}

fn report_has_failure(dir: &Path) -> bool {
    let text = fs::read_to_string(dir.join("report.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    !v["passed"].as_bool().unwrap()
}

#[test]
fn small_verify_passes_and_writes_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "noise.json",
        r#"{"name":"small_noise","model":{"family":"pure_noise","variance":1.0,"c":{"kind":"finite","c":0.5}},
            "sweep":[{"n":200,"d":100}],"replications":4,"seed":3,"checks":["eigenvalues"]}"#,
    );
    let out = tmp.path().join("out");
    let o = run(&["verify-eigenvalues", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let dirs = run_dirs(&out);
    assert!(dirs[0].join("report.json").exists());
    assert!(!report_has_failure(&dirs[0]));
}

#[test]
fn exit_code_tracks_report() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = run(&["toy-example", "--seed", "1", "--reps", "2", "--threads", "2"], &out);
    let code = o.status.code().unwrap();
    assert!(code == 0 || code == 1);
    let dirs = run_dirs(&out);
    assert_eq!(dirs.len(), 1);
    assert_eq!(code == 1, report_has_failure(&dirs[0]));
    assert!(dirs[0].join("toy_table.csv").exists());
}

#[test]
fn json_format_writes_json_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("bare_spec.json");
    let o = run(
        &["generate", "--config", cfg.to_str().unwrap(), "--n", "10", "--format", "json"],
        tmp.path(),
    );
    assert!(o.status.success());
    let dirs = run_dirs(tmp.path());
    let any_json = fs::read_dir(&dirs[0])
        .unwrap()
        .any(|e| e.unwrap().path().extension().is_some_and(|x| x == "json"));
    assert!(any_json);
}
