use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_stancekit"));
    c.env("RUST_LOG", "error");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn text(o: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

fn core_data(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core").join(rel)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    assert_eq!(run(&["train", "--help"]).status.code(), Some(0));
}

#[test]
fn unknown_subcommand_is_an_error() {
    let o = run(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o).contains("frobnicate"));
}

#[test]
fn missing_input_file_exits_one() {
    let o = run(&["stats", "--in", "/nonexistent/corpus.jsonl"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o).contains("/nonexistent/corpus.jsonl"));
}

#[test]
fn stats_validates_bundled_mirror() {
    let o = run(&[
        "stats",
        "--in",
        s(&core_data("data/fixtures/train.jsonl")),
        "--expect",
        s(&core_data("data/split_counts/train.json")),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let out = text(&o);
    assert!(out.contains("validation: PASS"));
    assert!(out.contains("face_masks"));
}

#[test]
fn stats_mismatch_exits_two_and_names_claim() {
    let dir = tempfile::tempdir().unwrap();
    let full = fs::read_to_string(core_data("data/fixtures/validation.jsonl")).unwrap();
    let trimmed: String = full.lines().filter(|l| !l.contains("school_closures-00003")).map(|l| format!("{l}\n")).collect();
    let path = dir.path().join("validation.jsonl");
    fs::write(&path, trimmed).unwrap();
    let o = run(&["stats", "--in", s(&path), "--expect-split", "validation"]);
    assert_eq!(o.status.code(), Some(2), "{}", text(&o));
    assert!(text(&o).contains("school_closures"));
    assert!(text(&o).contains("validation: FAIL"));
}

#[test]
fn preprocess_reproduces_golden_files() {
    let dir = tempfile::tempdir().unwrap();
    let clean = dir.path().join("clean.jsonl");
    let dropped = dir.path().join("dropped.jsonl");
    let golden = core_data("tests/data/preprocess_golden");
    let o = run(&[
        "preprocess",
        "--in",
        s(&golden.join("input.jsonl")),
        "--out",
        s(&clean),
        "--dropped",
        s(&dropped),
        "--min-len",
        "150",
        "--emoji",
        "to_text",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    assert_eq!(fs::read(&clean).unwrap(), fs::read(golden.join("expected_clean.jsonl")).unwrap());
    assert_eq!(fs::read(&dropped).unwrap(), fs::read(golden.join("expected_dropped.jsonl")).unwrap());
    assert!(!dir.path().join("manifest.json").exists());
}

fn write_gold(dir: &Path) -> PathBuf {
    let gold = dir.join("gold.jsonl");
    fs::write(
        &gold,
        concat!(
            r#"{"id":"a","text":"x","claim":"face_masks","stance":"favor","premise":1}"#,
            "\n",
            r#"{"id":"b","text":"y","claim":"face_masks","stance":"against","premise":0}"#,
            "\n",
            r#"{"id":"c","text":"z","claim":"school_closures","stance":"neither","premise":0}"#,
            "\n"
        ),
    )
    .unwrap();
    gold
}

#[test]
fn evaluate_missing_prediction_names_the_id() {
    let dir = tempfile::tempdir().unwrap();
    let gold = write_gold(dir.path());
    let preds = dir.path().join("preds.jsonl");
    fs::write(&preds, "{\"id\":\"a\",\"stance\":\"favor\"}\n{\"id\":\"c\",\"stance\":\"neither\"}\n").unwrap();
    let o = run(&["evaluate", "--gold", s(&gold), "--predictions", s(&preds), "--out-dir", s(&dir.path().join("ev"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o).contains("'b'"), "{}", text(&o));
}

#[test]
fn evaluate_unmatched_prediction_names_the_id() {
    let dir = tempfile::tempdir().unwrap();
    let gold = write_gold(dir.path());
    let preds = dir.path().join("preds.jsonl");
    fs::write(
        &preds,
        "{\"id\":\"a\",\"stance\":\"favor\"}\n{\"id\":\"b\",\"stance\":\"favor\"}\n{\"id\":\"c\",\"stance\":\"favor\"}\n{\"id\":\"zz\",\"stance\":\"favor\"}\n",
    )
    .unwrap();
    let o = run(&["evaluate", "--gold", s(&gold), "--predictions", s(&preds), "--out-dir", s(&dir.path().join("ev"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o).contains("'zz'"), "{}", text(&o));
}

#[test]
fn evaluate_writes_aggregate_report() {
    let dir = tempfile::tempdir().unwrap();
    let gold = write_gold(dir.path());
    let preds = dir.path().join("preds.jsonl");
    fs::write(
        &preds,
        "{\"id\":\"a\",\"stance\":\"favor\",\"premise\":1}\n{\"id\":\"b\",\"stance\":\"favor\",\"premise\":0}\n{\"id\":\"c\",\"stance\":\"neither\",\"premise\":0}\n",
    )
    .unwrap();
    let ev = dir.path().join("ev");
    let o = run(&["evaluate", "--gold", s(&gold), "--predictions", s(&preds), "--model-name", "m", "--out-dir", s(&ev)]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(ev.join("evaluation.json")).unwrap()).unwrap();
    let entries = v["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 2);
    assert_eq!(entries[0]["report"]["task"], "stance");
    // face_masks: favor F1 2/3, against F1 0; school_closures: no relevant gold or predictions
    let f1 = entries[0]["report"]["f1"].as_f64().unwrap();
    assert!((f1 - (1.0 / 3.0 + 0.0) / 2.0).abs() < 1e-12, "{f1}");
    // premise scores both classes: face_masks 1.0; school_closures has no premise-1 rows, so 0.5
    assert_eq!(entries[1]["report"]["f1"].as_f64().unwrap(), 0.75);
}

#[test]
fn emotions_empty_file_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let gold = write_gold(dir.path());
    let emo = dir.path().join("emotions.jsonl");
    fs::write(&emo, "").unwrap();
    let o = run(&["emotions", "--corpus", s(&gold), "--emotions", s(&emo), "--out-dir", s(&dir.path().join("e"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o).contains("no joinable records"));
}

#[test]
fn baseline_reports_plug_in_value() {
    // test split (favor, against, neither) per claim; F1 of a class with share p under q = 1/3 is 2pq/(p+q)
    let counts = [[209.0, 208.0, 260.0], [215.0, 192.0, 263.0], [102.0, 170.0, 381.0]];
    let q = 1.0 / 3.0;
    let expected = counts
        .iter()
        .map(|c: &[f64; 3]| {
            let n: f64 = c.iter().sum();
            c[..2].iter().map(|&k| 2.0 * (k / n) * q / (k / n + q)).sum::<f64>() / 2.0
        })
        .sum::<f64>()
        / 3.0;
    let o = run(&["baseline", "--split", "test", "--task", "stance", "--distribution", "uniform3", "--trials", "200"]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    assert!(text(&o).contains(&format!("plug-in {expected:.4}")), "{expected}: {}", text(&o));
    let o = run(&["baseline", "--split", "test", "--task", "premise", "--distribution", "uniform3"]);
    assert_eq!(o.status.code(), Some(1));
}

fn manifest_matches_files(dir: &Path) {
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    let files = m["files"].as_array().unwrap();
    assert!(!files.is_empty());
    for f in files {
        let bytes = fs::read(dir.join(f["path"].as_str().unwrap())).unwrap();
        assert_eq!(f["sha256"].as_str().unwrap(), hex::encode(Sha256::digest(&bytes)));
        assert_eq!(f["bytes"].as_u64().unwrap() as usize, bytes.len());
    }
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

/// fixture -> preprocess -> weaklabel -> sample -> aggregate -> train, run inside `root`
/// with relative paths so that two roots see identical arguments.
fn front_half(root: &Path) {
    let steps: [&[&str]; 6] = [
        &["fixture", "--kind", "pipeline", "--n-raw", "300", "--n-test", "30", "--seed", "4", "--out-dir", "fx"],
        &["preprocess", "--in", "fx/raw.jsonl", "--out-dir", "pre"],
        &["weaklabel", "--in", "pre/clean.jsonl", "--out-dir", "wl"],
        &["sample", "--in", "wl/weak_labeled.jsonl", "--n", "180", "--seed", "4", "--out-dir", "smp"],
        &["aggregate", "--in", "smp/sample.jsonl", "--ballots", "fx/ballots.jsonl", "--out-dir", "agg"],
        &[
            "train", "--train", "agg/annotated.jsonl", "--validation", "fx/test.jsonl", "--task", "stance", "--epochs", "3", "--folds",
            "2", "--seed", "4", "--out-dir", "tr",
        ],
    ];
    for args in steps {
        let o = bin().current_dir(root).args(args).output().unwrap();
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", text(&o));
    }
}

#[test]
fn runs_are_byte_identical_and_manifests_hash_outputs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    front_half(a.path());
    front_half(b.path());
    for stage in ["fx", "pre", "wl", "smp", "agg", "tr"] {
        manifest_matches_files(&a.path().join(stage));
        let ta = tree(&a.path().join(stage));
        let tb = tree(&b.path().join(stage));
        assert_eq!(ta.len(), tb.len(), "{stage}");
        for ((na, ba), (nb, bb)) in ta.iter().zip(&tb) {
            assert_eq!(na, nb);
            assert!(ba == bb, "{stage}/{na} differs between runs");
        }
    }
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.path().join("tr/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 4);
    let files: Vec<&str> = m["files"].as_array().unwrap().iter().map(|f| f["path"].as_str().unwrap()).collect();
    assert!(files.contains(&"model-fold0.ckpt") && files.contains(&"model-fold1.ckpt"));
}

#[test]
fn train_reads_experiment_config() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let o = run(&["fixture", "--kind", "claim-dependent", "--n-raw", "80", "--out-dir", s(&data)]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let cfg = dir.path().join("exp.json");
    fs::write(
        &cfg,
        r#"{"corpus":{"train":"data/claim_dependent.jsonl"},"task":"stance","mode":"tweet_plus_claim",
            "train":{"epochs":4,"batch_size":8},"seed":11,"output_dir":"run"}"#,
    )
    .unwrap();
    let o = run(&["train", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("run/train_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 11);
    assert_eq!(summary["experiment"]["train"]["epochs"], 4);
    assert_eq!(summary["mode"], "tweet_plus_claim");
    let history = fs::read_to_string(dir.path().join("run/history.jsonl")).unwrap();
    assert_eq!(history.lines().count(), 4);

    fs::write(&cfg, r#"{"corpus":{"train":"data/claim_dependent.jsonl"},"epochz":4}"#).unwrap();
    let o = run(&["train", "--config", s(&cfg), "--out-dir", s(&dir.path().join("bad"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o).contains("epochz"), "{}", text(&o));
}

#[test]
fn predict_rejects_missing_clean_text() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    assert_eq!(run(&["fixture", "--kind", "claim-dependent", "--n-raw", "40", "--out-dir", s(&data)]).status.code(), Some(0));
    let tr = dir.path().join("tr");
    let o = run(&["train", "--train", s(&data.join("claim_dependent.jsonl")), "--epochs", "1", "--out-dir", s(&tr)]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let gold = write_gold(dir.path());
    let o = run(&["predict", "--model", s(&tr.join("model.ckpt")), "--in", s(&gold), "--out-dir", s(&dir.path().join("p"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o).contains("clean"), "{}", text(&o));
}
