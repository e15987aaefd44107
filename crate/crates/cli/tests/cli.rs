use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_snn-compress"))
        .args(args)
        .output()
        .expect("binary runs")
}

const TOY: &str = "arch = 16-8-2\ndataset = synthetic\nsynthetic_samples = 40\ntimesteps = 5\n\
pretrain_epochs = 3\nadmm_epochs = 2\nhard_epochs = 2\nbatch_size = 10\nlearning_rate = 0.1\n\
compress_scope = all\n";

fn write_config(dir: &Path) -> String {
    let path = dir.join("toy.conf");
    std::fs::write(&path, TOY).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn pretrain_then_compress_then_evaluate_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_config(dir.path());
    let pre = dir.path().join("pre");
    let out = cli(&[
        "pretrain",
        "--config",
        &conf,
        "--seed",
        "7",
        "--out-dir",
        pre.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for f in [
        "report.csv",
        "history.csv",
        "admm_diag.csv",
        "model.ckpt",
        "config.txt",
    ] {
        assert!(pre.join(f).is_file(), "{f}");
    }

    let comp = dir.path().join("comp");
    let ckpt = pre.join("model.ckpt");
    let out = cli(&[
        "compress",
        "--config",
        &conf,
        "--seed",
        "7",
        "--override",
        "mode=prune+quantize",
        "--override",
        "sparsity=0.5",
        "--override",
        "bits=1",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--out-dir",
        comp.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = std::fs::read_to_string(comp.join("report.csv")).unwrap();
    let row: Vec<&str> = report.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[1], "0.5");
    assert_eq!(row[2], "1");
    let diag = std::fs::read_to_string(comp.join("admm_diag.csv")).unwrap();
    assert!(diag.lines().count() > 1);

    let out = cli(&[
        "evaluate",
        "--config",
        &conf,
        "--checkpoint",
        comp.join("model.ckpt").to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("samples,accuracy_pct"));

    let out = cli(&["report", pre.to_str().unwrap(), comp.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 3);
}

#[test]
fn config_errors_exit_with_code_two_and_list_problems() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_config(dir.path());
    let out = cli(&[
        "compress",
        "--config",
        &conf,
        "--override",
        "mode=prune",
        "--out-dir",
        "x",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("seed") && err.contains("sparsity"), "{err}");
}

#[test]
fn compress_without_a_mode_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_config(dir.path());
    let out = cli(&[
        "compress",
        "--config",
        &conf,
        "--seed",
        "1",
        "--out-dir",
        "x",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_data_is_a_runtime_error_naming_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(&[
        "pretrain",
        "--override",
        "arch=784-10-10",
        "--override",
        "dataset=mnist",
        "--seed",
        "1",
        "--data-dir",
        dir.path().join("absent").to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("load data"));
}
