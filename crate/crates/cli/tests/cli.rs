use std::path::Path;
use std::process::{Command, Output};

fn tmcflow(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tmcflow"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn prints_version() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tmcflow(&["--version"], tmp.path());
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("tmcflow "));
}

#[test]
fn config_run_then_plan_shows_nothing_to_do() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    assert_eq!(code(&tmcflow(&["synth", "--out", "fx"], dir)), 0);

    let o = tmcflow(
        &[
            "run",
            "--config",
            "fx/config.toml",
            "--iterations",
            "200",
            "--burn-in",
            "100",
        ],
        dir,
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(dir.join("fx/out/summary.txt").is_file());
    assert!(dir.join("fx/out/manifest.json").is_file());

    let o = tmcflow(
        &[
            "run",
            "--config",
            "fx/config.toml",
            "--iterations",
            "200",
            "--burn-in",
            "100",
            "--manifest-only",
        ],
        dir,
    );
    assert_eq!(code(&o), 0);
    let plan = String::from_utf8_lossy(&o.stdout);
    assert_eq!(
        plan.lines().filter(|l| l.starts_with("skip")).count(),
        6,
        "{plan}"
    );
    assert!(plan.contains("sigma = 0.001"));
}

#[test]
fn exit_codes_follow_error_class() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    assert_eq!(code(&tmcflow(&["synth", "--out", "fx"], dir)), 0);
    let base = [
        "run",
        "--config",
        "fx/config.toml",
        "--k",
        "2",
        "--iterations",
        "20",
        "--burn-in",
        "5",
    ];

    let mut bad_sigma = base.to_vec();
    bad_sigma.extend(["--sigma", "-1"]);
    let o = tmcflow(&bad_sigma, dir);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(!dir.join("fx/out").exists());

    let mut missing = base.to_vec();
    missing.extend(["--in", "nope.jsonl"]);
    assert_eq!(code(&tmcflow(&missing, dir)), 3);

    let mut nothing_retained = base.to_vec();
    nothing_retained.extend(["--sigma", "1000"]);
    let o = tmcflow(&nothing_retained, dir);
    assert_eq!(code(&o), 4);
    assert!(stderr(&o).contains("network"));

    assert_eq!(
        code(&tmcflow(
            &[
                "ingest",
                "--in",
                "fx/records.jsonl",
                "--format",
                "xml",
                "--out",
                "c.jsonl"
            ],
            dir
        )),
        2
    );
}

#[test]
fn stage_commands_chain() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    assert_eq!(code(&tmcflow(&["synth", "--out", "fx"], dir)), 0);

    let steps: &[&[&str]] = &[
        &[
            "ingest",
            "--in",
            "fx/records.jsonl",
            "--out",
            "corpus.jsonl",
            "--report",
            "dedup.json",
            "--rejects",
            "rej.jsonl",
        ],
        &[
            "extract",
            "--corpus",
            "corpus.jsonl",
            "--lexicon",
            "fx/lexicon.json",
            "--candidates",
            "fx/candidates.jsonl",
            "--out",
            "methods.jsonl",
        ],
        &[
            "eval-extract",
            "--pred",
            "methods.jsonl",
            "--gold",
            "fx/gold.jsonl",
        ],
        &[
            "topics",
            "fit",
            "--corpus",
            "corpus.jsonl",
            "--k",
            "4",
            "--seed",
            "7",
            "--iterations",
            "100",
            "--burn-in",
            "50",
            "--out",
            "topics.csv",
        ],
        &[
            "topics",
            "sweep",
            "--corpus",
            "corpus.jsonl",
            "--k-list",
            "2,4",
            "--iterations",
            "50",
            "--burn-in",
            "10",
            "--out",
            "swept.csv",
            "--quality",
            "quality.csv",
        ],
        &[
            "topics",
            "import",
            "--in",
            "topics.csv",
            "--out",
            "imported.csv",
        ],
        &[
            "tmc",
            "build",
            "--methods",
            "methods.jsonl",
            "--topics",
            "topics.csv",
            "--out",
            "tmc.csv",
            "--graph",
            "tmc.graphml",
            "--sensitivity",
            "sens.csv",
        ],
        &[
            "network",
            "build",
            "--tmc",
            "tmc.csv",
            "--out",
            "net.graphml",
            "--gexf",
            "net.gexf",
        ],
        &[
            "network",
            "communities",
            "--tmc",
            "tmc.csv",
            "--out",
            "comm.csv",
            "--history",
            "hist.csv",
        ],
        &[
            "network",
            "communities",
            "--tmc",
            "tmc.csv",
            "--bipartite",
            "--out",
            "bcomm.csv",
        ],
        &[
            "network", "top", "--tmc", "tmc.csv", "--n", "5", "--out", "top.csv",
        ],
    ];
    for args in steps {
        let o = tmcflow(args, dir);
        assert_eq!(code(&o), 0, "{args:?}: {}", stderr(&o));
    }

    let eval = String::from_utf8_lossy(&tmcflow(steps[2], dir).stdout).into_owned();
    assert!(eval.contains("precision 100.00%"), "{eval}");
    let top = std::fs::read_to_string(dir.join("top.csv")).unwrap();
    assert_eq!(top.lines().count(), 6);
    assert!(top.starts_with("rank,method,topic_id,d_ij,c_ij\n"));
    let imported = std::fs::read_to_string(dir.join("imported.csv")).unwrap();
    let original = std::fs::read_to_string(dir.join("topics.csv")).unwrap();
    assert_eq!(imported, original);
    assert!(std::fs::read_to_string(dir.join("bcomm.csv"))
        .unwrap()
        .contains("m:"));
}
