use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use coldrec_cli::RunManifest;

fn coldrec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coldrec"))
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = coldrec(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Workspace {
    _tmp: tempfile::TempDir,
    root: PathBuf,
    raw: PathBuf,
    split: PathBuf,
    config: PathBuf,
}

const QUICK_CONFIG: &str = r#"{
  "log_level": "warn",
  "train": { "epochs": 4, "batch_size": 128, "seed": 2, "model": { "embed_dim": 16 } }
}"#;

fn workspace() -> Workspace {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path().to_path_buf();
    let raw = root.join("raw");
    let split = root.join("split");
    ok(&["synth", "--seed", "7", "--users", "120", "--items", "100", "--out", s(&raw), "--log-level", "warn"]);
    ok(&["prepare", "--data-dir", s(&raw), "--out", s(&split)]);
    let config = root.join("run.json");
    fs::write(&config, QUICK_CONFIG).unwrap();
    Workspace { _tmp: tmp, root, raw, split, config }
}

fn manifest(dir: &Path) -> RunManifest {
    serde_json::from_str(&fs::read_to_string(dir.join("run_manifest.json")).unwrap()).unwrap()
}

#[test]
fn prepare_reports_stats_and_manifest() {
    let w = workspace();
    let out = w.root.join("again");
    let stdout = ok(&["prepare", "--data-dir", s(&w.raw), "--out", s(&out), "--seed", "42"]);
    assert!(stdout.contains("users:              120"), "{stdout}");
    assert!(stdout.contains("items:              100"), "{stdout}");
    for f in ["schema.json", "split.json", "features.json", "train.csv", "stats.json"] {
        assert_eq!(fs::read(w.split.join(f)).unwrap(), fs::read(out.join(f)).unwrap(), "{f}");
    }
    let m = manifest(&out);
    assert_eq!(m.inputs.len(), 3);
    assert_eq!(m.seeds.data_seed, Some(42));
    assert_eq!(m.input_hash, manifest(&w.split).input_hash);
    let listed: Vec<_> = m.artifacts.iter().map(|a| a.path.file_name().unwrap().to_owned()).collect();
    for entry in fs::read_dir(&out).unwrap() {
        let name = entry.unwrap().file_name();
        assert!(name == "run_manifest.json" || listed.contains(&name), "{name:?} unlisted");
    }
}

#[test]
fn train_then_evaluate_agree() {
    let w = workspace();
    let run = w.root.join("run");
    let cfg = s(&w.config);
    let train_out = ok(&["train", "--config", cfg, "--split", s(&w.split), "--out", s(&run)]);
    let eval_dir = w.root.join("eval");
    let eval_out = ok(&[
        "evaluate",
        "--checkpoint",
        s(&run.join("checkpoint")),
        "--split",
        s(&w.split),
        "--out",
        s(&eval_dir),
        "--config",
        cfg,
    ]);
    assert_eq!(
        fs::read_to_string(run.join("metrics.csv")).unwrap(),
        fs::read_to_string(eval_dir.join("metrics.csv")).unwrap()
    );
    assert_eq!(train_out, eval_out);
    for cohort in ["cold_users", "cold_items", "warm"] {
        let line = eval_out.lines().find(|l| l.starts_with(cohort)).expect(cohort);
        for metric in ["HR", "NDCG", "MRR", "Recall"] {
            assert!(line.contains(metric), "{line}");
        }
    }
    let history = fs::read_to_string(run.join("history.csv")).unwrap();
    assert!(history.starts_with("epoch,train_loss,val_hr10\n"));
    assert_eq!(manifest(&run).seeds.train_seed, Some(2));
}

#[test]
fn reruns_are_byte_identical() {
    let w = workspace();
    let (a, b) = (w.root.join("a"), w.root.join("b"));
    for dir in [&a, &b] {
        ok(&["train", "--config", s(&w.config), "--split", s(&w.split), "--out", s(dir), "--override", "detail_csv=true"]);
    }
    for f in ["metrics.csv", "detail.csv", "history.csv", "checkpoint/tensors.bin", "checkpoint/manifest.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn ablate_and_sweep_row_counts() {
    let w = workspace();
    let out = w.root.join("ablate");
    ok(&["ablate", "--config", s(&w.config), "--split", s(&w.split), "--out", s(&out)]);
    let csv = fs::read_to_string(out.join("ablation.csv")).unwrap();
    let models: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(models, ["full", "no_adaptive_selection", "no_multimodal_fusion", "no_contrastive"]);
    assert_eq!(manifest(&out).config["train"]["epochs"], 4);

    let out = w.root.join("sweep");
    ok(&["sweep", "--config", s(&w.config), "--split", s(&w.split), "--out", s(&out), "--override", "train.epochs=2"]);
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lrs: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(lrs, ["0.001", "0.005", "0.01", "0.05", "0.1"]);
    assert_eq!(manifest(&out).config["train"]["epochs"], 2);
}

#[test]
fn unknown_config_keys_exit_2() {
    let w = workspace();
    let bad = w.root.join("bad.json");
    fs::write(&bad, r#"{"train": {"lr": 0.1}}"#).unwrap();
    let out = coldrec(&["train", "--config", s(&bad), "--split", s(&w.split), "--out", s(&w.root.join("x")), "--override", "eval.topk=5"]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("train.lr") && err.contains("eval.topk"), "{err}");
    assert!(!w.root.join("x").exists());
}

#[test]
fn missing_input_exit_2_with_path() {
    let tmp = tempfile::tempdir().unwrap();
    let out = coldrec(&["prepare", "--data-dir", s(&tmp.path().join("nowhere")), "--out", s(&tmp.path().join("o"))]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere"));
}

#[test]
fn malformed_ratings_exit_3_with_line() {
    let w = workspace();
    let ratings = w.raw.join("ratings.dat");
    let mut text = fs::read_to_string(&ratings).unwrap();
    text.push_str("1::2::banana::3\n");
    let n_lines = text.lines().count();
    fs::write(&ratings, text).unwrap();
    let out = coldrec(&["prepare", "--data-dir", s(&w.raw), "--out", s(&w.root.join("p"))]);
    assert_eq!(code(&out), 3);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains(&format!("line {n_lines}")) && err.contains("ratings.dat"), "{err}");
}

#[test]
fn checkpoint_on_other_schema_exit_4() {
    let w = workspace();
    let run = w.root.join("run");
    ok(&["train", "--config", s(&w.config), "--split", s(&w.split), "--out", s(&run), "--override", "train.epochs=1"]);
    let other_raw = w.root.join("raw2");
    let other_split = w.root.join("split2");
    ok(&["synth", "--seed", "8", "--users", "90", "--items", "80", "--out", s(&other_raw)]);
    ok(&["prepare", "--data-dir", s(&other_raw), "--out", s(&other_split)]);
    let out = coldrec(&["evaluate", "--checkpoint", s(&run.join("checkpoint")), "--split", s(&other_split), "--out", s(&w.root.join("e"))]);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));

    let blob = run.join("checkpoint/tensors.bin");
    let bytes = fs::read(&blob).unwrap();
    fs::write(&blob, &bytes[..bytes.len() - 5]).unwrap();
    let out = coldrec(&["evaluate", "--checkpoint", s(&run.join("checkpoint")), "--split", s(&w.split), "--out", s(&w.root.join("e"))]);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn inputs_are_not_modified() {
    let w = workspace();
    let before: Vec<(PathBuf, Vec<u8>)> = fs::read_dir(&w.split)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            let b = fs::read(&p).unwrap();
            (p, b)
        })
        .collect();
    ok(&["train", "--config", s(&w.config), "--split", s(&w.split), "--out", s(&w.root.join("r")), "--override", "train.epochs=1"]);
    for (p, b) in before {
        assert_eq!(fs::read(&p).unwrap(), b, "{}", p.display());
    }
    let out = coldrec(&["train", "--config", s(&w.config), "--split", s(&w.split), "--out", s(&w.split)]);
    assert_eq!(code(&out), 2);
}

#[test]
fn readme_config_block_is_the_defaults() {
    let readme = include_str!("../../../README.md");
    let block = readme
        .split("```json\n")
        .nth(1)
        .and_then(|b| b.split("```").next())
        .expect("json block");
    assert_eq!(coldrec_cli::resolve(Some(block), &[]).unwrap(), coldrec_cli::RunConfig::default());
}
