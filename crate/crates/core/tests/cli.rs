use std::path::Path;
use std::process::{Command, Output};

use awe::data::load_archive;
use awe::embedding::EmbeddingSet;

fn awe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_awe"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

#[test]
fn synth_writes_readable_archives() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("corpus");
    let o = awe(&["synth", "--num-types", "5", "--tokens-per-type", "4", "--out", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(listing(&out), ["dev.awe", "test.awe", "train.awe"]);
    let total: usize = ["train", "dev", "test"]
        .iter()
        .map(|s| load_archive(out.join(format!("{s}.awe"))).unwrap().len())
        .sum();
    assert_eq!(total, 20);
}

#[test]
fn eval_ap_is_one_for_separable_embeddings() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("emb.awee");
    // identical vectors within a type, orthogonal across types
    let mut e = EmbeddingSet::new(3);
    for (label, v) in [("a", [1.0, 0.0, 0.0]), ("b", [0.0, 1.0, 0.0]), ("c", [0.0, 0.0, 1.0])] {
        for _ in 0..3 {
            e.push(v.to_vec(), label).unwrap();
        }
    }
    e.save(&file).unwrap();
    let out = dir.path().join("ap");
    let o = awe(&["eval-ap", "--embeddings", path(&file), "--out", path(&out)]);
    assert!(o.status.success());
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("AP = 1.000000"), "{stdout}");
    assert_eq!(listing(&out), ["pairs.bin", "pr.csv", "report.txt"]);
}

#[test]
fn unknown_flag_is_a_usage_error_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let o = awe(&["synth", "--bogus", "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
    let o = awe(&["no-such-command"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_config_key_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.json");
    std::fs::write(&config, r#"{"learning_rate": 0.1}"#).unwrap();
    let o = awe(&["synth", "--config", path(&config), "--out", path(&dir.path().join("o"))]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn outputs_stay_inside_out_directory() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = dir.path().join("inputs");
    assert!(awe(&["synth", "--num-types", "4", "--tokens-per-type", "10", "--out", path(&inputs)])
        .status
        .success());
    let before = listing(dir.path());
    let out = dir.path().join("dtw");
    let o = awe(&["eval-dtw", "--input", path(&inputs.join("test.awe")), "--out", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut after = listing(dir.path());
    after.retain(|n| n != "dtw");
    assert_eq!(before, after);
    assert_eq!(listing(&inputs), ["dev.awe", "test.awe", "train.awe"]);
}
