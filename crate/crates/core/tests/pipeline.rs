use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use tmcflow::pipeline::{plan, run_pipeline, PlannedAction, RunConfig, RunStatus, Stage};

fn bundled_config(out: &Path) -> RunConfig {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/synthetic");
    let mut config = RunConfig::load(&dir.join("config.toml")).unwrap();
    config.out_dir = out.to_path_buf();
    config
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn bundled_run_is_reproducible_and_resumable() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));

    let first = run_pipeline(&bundled_config(&a)).unwrap();
    let second = run_pipeline(&bundled_config(&b)).unwrap();
    assert_eq!(first.status, RunStatus::Complete);
    assert_eq!(first.output_digests(), second.output_digests());
    assert_eq!(first.executed_count(), 6);
    for name in first.output_digests().keys() {
        assert!(a.join(name).is_file(), "{name}");
    }

    let resumed = run_pipeline(&bundled_config(&a)).unwrap();
    assert_eq!(resumed.executed_count(), 0);
    assert_eq!(resumed.output_digests(), first.output_digests());
    let planned = plan(&bundled_config(&a)).unwrap();
    assert!(planned.iter().all(|p| p.action == PlannedAction::Skip));
}

#[test]
fn tampered_output_is_rebuilt() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let first = run_pipeline(&bundled_config(&out)).unwrap();
    fs::write(
        out.join("tmc.csv"),
        "method,topic_id,d_i,d_j,d_ij,c_ij,retained\n",
    )
    .unwrap();

    let planned = plan(&bundled_config(&out)).unwrap();
    let runs: Vec<Stage> = planned
        .iter()
        .filter(|p| p.action == PlannedAction::Run)
        .map(|p| p.stage)
        .collect();
    assert_eq!(runs, [Stage::Tmc, Stage::Network, Stage::Report]);

    let again = run_pipeline(&bundled_config(&out)).unwrap();
    assert_eq!(again.output_digests(), first.output_digests());
    let tmc = again.stage(Stage::Tmc).unwrap();
    assert!(tmc.executed);
    assert!(tmc.notes[0].contains("tmc.csv changed"));
    assert!(!again.stage(Stage::Network).unwrap().executed);
}

#[test]
fn summary_matches_stage_files() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let manifest = run_pipeline(&bundled_config(&out)).unwrap();
    assert_eq!(manifest.config.sigma, 0.001);

    let summary = read(&out, "summary.txt");
    let field = |k: &str| -> String {
        summary
            .lines()
            .find(|l| l.starts_with(k))
            .map(|l| l[k.len()..].trim().to_string())
            .unwrap()
    };

    let comm_ids: BTreeSet<String> = read(&out, "comm.csv")
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().to_string())
        .collect();
    assert_eq!(field("communities"), comm_ids.len().to_string());

    let retained = read(&out, "tmc.csv")
        .lines()
        .skip(1)
        .filter(|l| l.ends_with(",true"))
        .count();
    assert_eq!(field("retained pairs"), retained.to_string());

    let corpus_lines = read(&out, "corpus.jsonl").lines().count();
    assert_eq!(field("documents"), corpus_lines.to_string());
    assert_eq!(corpus_lines, 56);

    assert!(read(&out, "top.csv").lines().count() - 1 <= 35);
}

#[test]
fn failing_stage_is_named_and_flagged() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let mut config = bundled_config(&out);
    config.sigma = 1e9;
    let err = run_pipeline(&config).unwrap_err();
    assert_eq!(err.exit_code(), 4);
    assert!(err.to_string().contains("network"), "{err}");
    let manifest: serde_json::Value = serde_json::from_str(&read(&out, "manifest.json")).unwrap();
    assert_eq!(manifest["status"], "failed");
    assert_eq!(manifest["failed_stage"], "network");
}

#[test]
fn config_paths_resolve_next_to_the_file() {
    let config = bundled_config(Path::new("/tmp/x"));
    let expected: PathBuf =
        Path::new(env!("CARGO_MANIFEST_DIR")).join("data/synthetic/records.jsonl");
    assert_eq!(config.inputs, [expected]);
}
