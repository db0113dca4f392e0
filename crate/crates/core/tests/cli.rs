use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use kgnn::experiment::read_report_csv;

fn kgnn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kgnn"))
        .args(args)
        .env_remove("KGNN_DATA_ROOT")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = kgnn(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn err(args: &[&str]) -> String {
    let out = kgnn(args);
    assert!(!out.status.success(), "{args:?} should fail");
    String::from_utf8(out.stderr).unwrap()
}

fn mutag() -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data/MUTAG")
        .to_string_lossy()
        .into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn prepare_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "prepare",
        "--dataset",
        &mutag(),
        "--seeds",
        "2",
        "--out",
        path(dir.path()),
    ];
    let text = ok(&args);
    assert!(text.contains("graphs=188"), "{text}");
    let file = dir.path().join("MUTAG/splits/frac1/split_seed1.txt");
    let first = fs::read(&file).unwrap();
    ok(&args);
    assert_eq!(fs::read(&file).unwrap(), first);
}

#[test]
fn missing_labels_file_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("BROKEN");
    fs::create_dir(&data).unwrap();
    fs::write(data.join("BROKEN_A.txt"), "1, 2\n").unwrap();
    fs::write(data.join("BROKEN_graph_indicator.txt"), "1\n1\n").unwrap();
    let msg = err(&["prepare", "--dataset", path(&data), "--out", path(dir.path())]);
    assert!(msg.contains("BROKEN_graph_labels.txt"), "{msg}");
    let msg = err(&["prepare", "--dataset", "PROTEINS", "--out", path(dir.path())]);
    assert!(msg.contains("not found"), "{msg}");
}

#[test]
fn train_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path());
    let text = ok(&[
        "train",
        "--dataset",
        "toy",
        "--method",
        "gnn-sup",
        "--seeds",
        "1",
        "--out",
        out,
    ]);
    assert!(text.contains("seed=0 accuracy="), "{text}");
    ok(&[
        "train",
        "--dataset",
        "toy",
        "--method",
        "kgnn",
        "--seeds",
        "0,1",
        "--out",
        out,
        "--set",
        "train.max_rounds=5",
    ]);
    let seed_dir = dir.path().join("triangles-vs-stars/kgnn/frac1/seed1");
    for f in ["trace.txt", "gnn.params", "memnet.params", "bank.txt"] {
        assert!(seed_dir.join(f).exists(), "{f}");
    }
    let record = &read_report_csv(fs::File::open(dir.path().join("triangles-vs-stars/kgnn/frac1/result.csv")).unwrap())
        .unwrap()[0];
    assert_eq!(record.runs.len(), 2);
    assert!(record.is_consistent(1e-12));
    assert_eq!((record.mean, record.std), (1.0, 0.0));

    let merged = dir.path().join("all.csv");
    let table = ok(&["report", out, "--csv", path(&merged)]);
    assert_eq!(table.lines().count(), 3, "{table}");
    assert!(
        table.lines().any(|l| l.starts_with("kgnn ") && l.contains('*')),
        "{table}"
    );
    assert_eq!(read_report_csv(fs::File::open(&merged).unwrap()).unwrap().len(), 2);
}

#[test]
fn training_is_reproducible_across_invocations() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let traces: Vec<Vec<u8>> = dirs
        .iter()
        .map(|d| {
            ok(&[
                "train",
                "--dataset",
                "toy",
                "--method",
                "kgnn-sep",
                "--seeds",
                "1",
                "--out",
                path(d.path()),
            ]);
            let seed = d.path().join("triangles-vs-stars/kgnn-sep/frac1/seed0");
            [
                fs::read(seed.join("trace.txt")).unwrap(),
                fs::read(seed.join("gnn.params")).unwrap(),
            ]
            .concat()
        })
        .collect();
    assert_eq!(traces[0], traces[1]);
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    fs::write(
        &cfg,
        "dataset = \"toy\"\nmethod = \"memnn-sup\"\nseeds = [4]\n[train]\nepochs_per_phase = 3\n",
    )
    .unwrap();
    let text = ok(&["train", "--config", path(&cfg), "--out", path(dir.path())]);
    assert!(text.starts_with("seed=4 "), "{text}");
    assert!(text.contains("memnn-sup"), "{text}");

    let msg = err(&[
        "train",
        "--config",
        path(&cfg),
        "--set",
        "train.bogus=1",
        "--out",
        path(dir.path()),
    ]);
    assert!(msg.contains("bogus"), "{msg}");
}

#[test]
fn usage_errors_exit_nonzero() {
    let msg = err(&["train", "--dataset", "toy", "--method", "kgnn2"]);
    assert!(msg.contains("unknown method"), "{msg}");
    err(&["train", "--dataset", "toy", "--seeds", "0"]);
    err(&["train", "--dataset", "toy", "--labeled-fraction", "1.5"]);
    err(&["frobnicate"]);
    err(&["report", "/nonexistent/result.csv"]);
}

#[test]
fn kernel_matrix_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("k.csv");
    let text = ok(&[
        "kernel",
        "--dataset",
        &mutag(),
        "--limit",
        "12",
        "--normalize",
        "--out",
        path(&csv),
    ]);
    assert!(text.contains("symmetric=true") && text.contains("psd=true"), "{text}");
    let body = fs::read_to_string(&csv).unwrap();
    assert_eq!(body.lines().count(), 13);
}
