use std::path::Path;
use std::process::{Command, Output};

fn optic(dir: &Path, args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_optic"))
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .args(args)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "optic {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn label_train_eval_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    optic(d, &["synth", "--n", "300", "--seed", "2", "--out", "c.jsonl"]);
    let census: serde_json::Value = serde_json::from_str(&stdout(&optic(d, &["weaklabel", "c.jsonl"]))).unwrap();
    assert_eq!(census["possible_admin"].as_u64().unwrap() + census["possible_clinical"].as_u64().unwrap(), 300);

    optic(d, &["topics", "c.jsonl", "--k", "4", "--out", "t.json"]);
    optic(d, &["sample-exemplars", "c.jsonl", "--topics", "t.json", "--budget", "20", "--out", "ex.json"]);
    let label = ["label", "c.jsonl", "--exemplars", "ex.json", "--mock", "--out", "v.jsonl"];
    let first = optic(d, &label);
    assert!(String::from_utf8_lossy(&first.stderr).contains("300 requests"));
    let second = optic(d, &label);
    assert!(String::from_utf8_lossy(&second.stderr).contains("0 requests, 300 cached"));
    assert_eq!(std::fs::read_to_string(d.join("v.jsonl")).unwrap().lines().count(), 300);

    optic(d, &["split", "c.jsonl", "--labels", "v.jsonl", "--out", "s.json", "--materialize", "parts"]);
    optic(
        d,
        &["train", "--train", "parts/train.jsonl", "--val", "parts/val.jsonl", "--labels", "v.jsonl", "--epochs", "20", "--out", "m.bin"],
    );
    let table = stdout(&optic(d, &["eval", "--model", "m.bin", "--test", "parts/test.jsonl", "--topics", "t.json", "--out", "r.jsonl"]));
    assert!(table.contains("accuracy"));
    let report = std::fs::read_to_string(d.join("r.jsonl")).unwrap();
    assert!(report.lines().any(|l| l.contains("\"record\":\"metrics\"")));

    optic(d, &["predict", "--model", "m.bin", "--in", "parts/test.jsonl", "--out", "p.jsonl"]);
    assert_eq!(std::fs::read_to_string(d.join("p.jsonl")).unwrap().lines().count(), 30);

    optic(d, &["review-load", "v.jsonl", "--corpus", "c.jsonl", "--store", "store.jsonl"]);
    let export = stdout(&optic(d, &["review-export", "--store", "store.jsonl", "--out", "e.jsonl"]));
    assert!(export.contains("300 unreviewed"), "{export}");
}

#[test]
fn experiment_with_mock_teacher() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    optic(d, &["synth", "--n", "400", "--seed", "5", "--out", "c.jsonl"]);
    optic(d, &["topics", "c.jsonl", "--k", "4", "--out", "t.json"]);
    optic(d, &["sample-exemplars", "c.jsonl", "--topics", "t.json", "--budget", "200", "--out", "ex.json"]);
    let table = stdout(&optic(
        d,
        &["experiment", "--validation", "c.jsonl", "--exemplars", "ex.json", "--mock", "--out", "rows.jsonl"],
    ));
    for name in ["E1", "E2", "E3", "E4"] {
        assert!(table.contains(name), "{table}");
    }
    let rows = std::fs::read_to_string(d.join("rows.jsonl")).unwrap();
    assert_eq!(rows.lines().filter(|l| l.contains("\"record\":\"experiment\"")).count(), 4);
}

#[test]
fn pipeline_writes_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = stdout(&optic(tmp.path(), &["pipeline", "--n", "300", "--seed", "1", "--out-dir", "run"]));
    let summary: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(summary["test_accuracy"].as_f64().unwrap() >= 0.9);
    for f in ["model.bin", "report.jsonl", "corpus.jsonl"] {
        assert!(tmp.path().join("run").join(f).exists(), "{f}");
    }
}

#[test]
fn bad_input_fails_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_optic"))
        .current_dir(tmp.path())
        .args(["train", "--train", "missing.jsonl", "--out", "m.bin"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.jsonl"));
}
