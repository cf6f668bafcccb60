use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use newsprobe_cli::{run, Invocation, Stage};

fn toy_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/toy.toml")
}

fn inv(config: PathBuf, stage: Stage, out: &Path) -> Invocation {
    Invocation {
        config,
        stage,
        seed: None,
        out: Some(out.to_path_buf()),
        mock_rewriter: true,
    }
}

#[test]
fn missing_upstream_names_the_stage() {
    let out = tempfile::tempdir().unwrap();
    let e = run(&inv(toy_config(), Stage::Split, out.path())).unwrap_err();
    let msg = format!("{e:#}");
    assert!(msg.contains("`ingest`"), "{msg}");
    run(&inv(toy_config(), Stage::Ingest, out.path())).unwrap();
    let msg = format!("{:#}", run(&inv(toy_config(), Stage::Split, out.path())).unwrap_err());
    assert!(msg.contains("`clean`") && msg.contains("--stage clean"), "{msg}");
}

#[test]
fn split_rerun_is_byte_identical_and_config_changes_invalidate() {
    let out = tempfile::tempdir().unwrap();
    for s in [Stage::Ingest, Stage::Clean, Stage::Synthesize, Stage::Split] {
        run(&inv(toy_config(), s, out.path())).unwrap();
    }
    let manifest = out.path().join("split/train.manifest.jsonl");
    let first = fs::read(&manifest).unwrap();
    run(&inv(toy_config(), Stage::Split, out.path())).unwrap();
    assert_eq!(fs::read(&manifest).unwrap(), first);

    // A different cleaning config makes everything after `clean` stale.
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(toy_config())
        .unwrap()
        .replace("../data/", &format!("{}/", Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").display()))
        + "\n[corpus.cleaning]\nremove_stopwords = false\n";
    let cfg = dir.path().join("changed.toml");
    fs::write(&cfg, text).unwrap();
    let msg = format!("{:#}", run(&inv(cfg, Stage::Split, out.path())).unwrap_err());
    assert!(msg.contains("stale"), "{msg}");
}

#[test]
fn binary_reports_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[training]\nlearning_rat = 1.0\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_newsprobe"))
        .args(["--config", cfg.to_str().unwrap(), "--stage", "ingest"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("learning_rat"), "{err}");

    fs::write(&cfg, "[dataset]\nratios = [0.9, 0.2, 0.1]\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_newsprobe"))
        .args(["--config", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&out.stderr).contains("dataset.ratios"));
}

#[test]
fn example_config_parses_to_defaults() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/pipeline.example.toml");
    let cfg = newsprobe_cli::PipelineConfig::load(&path, None).unwrap();
    let defaults = newsprobe_cli::PipelineConfig {
        out_dir: cfg.out_dir.clone(),
        ..Default::default()
    };
    assert_eq!(cfg, defaults);
}
