//! Stage runner. Every stage reads and writes named files in the output
//! directory; `manifest.json` records the effective config, input and
//! output digests and timings. A stage is skipped when its key (parameters
//! plus input digests) and its recorded output digests still match.

mod config;
pub mod stages;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::io::{file_digest, sha256_hex, to_jsonl, write_file};
use crate::tmc::tmc_csv;
use crate::topics::{assignments_csv, quality_csv};

pub use config::{RunConfig, TopicSource, CONFIG_VERSION, TOPICS_SEED_OFFSET};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Ingest,
    Extract,
    Topics,
    Tmc,
    Network,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Ingest,
        Stage::Extract,
        Stage::Topics,
        Stage::Tmc,
        Stage::Network,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Extract => "extract",
            Stage::Topics => "topics",
            Stage::Tmc => "tmc",
            Stage::Network => "network",
            Stage::Report => "report",
        }
    }

    /// Files the stage writes into the output directory.
    pub fn outputs(self, config: &RunConfig) -> Vec<&'static str> {
        match self {
            Stage::Ingest => vec!["corpus.jsonl", "rejects.jsonl", "dedup.json"],
            Stage::Extract => vec!["methods.jsonl"],
            Stage::Topics => match config.topic_source() {
                Ok(TopicSource::Sweep(_)) => vec!["topics.csv", "quality.csv"],
                _ => vec!["topics.csv"],
            },
            Stage::Tmc => vec!["tmc.csv", "sensitivity.csv", "tmc.graphml", "tmc.gexf"],
            Stage::Network => vec![
                "net.graphml",
                "net.gexf",
                "comm.csv",
                "hist.csv",
                "top.csv",
                "communities.json",
            ],
            Stage::Report => vec!["summary.txt"],
        }
    }

    /// (role, path) of every file the stage reads.
    fn inputs(self, config: &RunConfig) -> Vec<(String, PathBuf)> {
        let out = |n: &str| (n.to_string(), config.out_dir.join(n));
        match self {
            Stage::Ingest => config
                .inputs
                .iter()
                .enumerate()
                .map(|(i, p)| (format!("input{i}"), p.clone()))
                .collect(),
            Stage::Extract => {
                let mut v = vec![out("corpus.jsonl")];
                v.extend(config.lexicon.clone().map(|p| ("lexicon".to_string(), p)));
                v.extend(
                    config
                        .candidates
                        .clone()
                        .map(|p| ("candidates".to_string(), p)),
                );
                v
            }
            Stage::Topics => {
                let mut v = vec![out("corpus.jsonl")];
                v.extend(
                    config
                        .topic_import
                        .clone()
                        .map(|p| ("topic_import".to_string(), p)),
                );
                v
            }
            Stage::Tmc => vec![out("methods.jsonl"), out("topics.csv")],
            Stage::Network => vec![out("tmc.csv")],
            Stage::Report => {
                let mut v: Vec<_> = [
                    "corpus.jsonl",
                    "methods.jsonl",
                    "topics.csv",
                    "tmc.csv",
                    "comm.csv",
                    "communities.json",
                    "top.csv",
                ]
                .into_iter()
                .map(out)
                .collect();
                if Stage::Topics.outputs(config).contains(&"quality.csv") {
                    v.push(out("quality.csv"));
                }
                v
            }
        }
    }

    /// Parameters that change the stage's output.
    fn params(self, c: &RunConfig) -> serde_json::Value {
        match self {
            Stage::Ingest => json!({
                "format": c.format, "year_min": c.year_min, "year_max": c.year_max,
                "title_sim": c.title_sim,
            }),
            Stage::Extract => json!({ "fallback_rule": c.fallback_rule }),
            Stage::Topics => json!({
                "k": c.k, "k_list": c.k_list, "import_mode": c.topic_import_mode,
                "alpha": c.alpha, "beta": c.beta, "iterations": c.iterations,
                "burn_in": c.burn_in, "min_token_len": c.min_token_len,
                "coherence_top_n": c.coherence_top_n, "heldout_every": c.heldout_every,
                "seed": c.seed,
            }),
            Stage::Tmc => json!({ "sigma": c.sigma }),
            Stage::Network => json!({ "top_n": c.top_n, "weighting": c.weighting }),
            Stage::Report => json!({ "sigma": c.sigma }),
        }
    }

    /// Digest over the tool version, parameters and input digests.
    /// `None` when an input is missing.
    fn key(self, config: &RunConfig) -> Option<String> {
        let mut inputs = BTreeMap::new();
        for (role, path) in self.inputs(config) {
            inputs.insert(role, file_digest(&path).ok()?);
        }
        let doc = json!({
            "stage": self.name(),
            "tool_version": TOOL_VERSION,
            "params": self.params(config),
            "inputs": inputs,
        });
        Some(sha256_hex(doc.to_string().as_bytes()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub key: String,
    pub executed: bool,
    pub wall_ms: u64,
    /// File name -> sha256
    pub outputs: BTreeMap<String, String>,
    #[serde(default)]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Complete,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub status: RunStatus,
    pub config: RunConfig,
    /// Path -> sha256 of every external input.
    pub inputs: BTreeMap<String, String>,
    pub stages: Vec<StageRecord>,
    #[serde(default)]
    pub failed_stage: Option<Stage>,
    /// Outputs left behind by a failed stage; not to be trusted.
    #[serde(default)]
    pub stale: Vec<String>,
}

impl RunManifest {
    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&crate::io::read_utf8(path)?)?)
    }

    pub fn stage(&self, stage: Stage) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.stage == stage)
    }

    /// Every stage output digest, keyed by file name.
    pub fn output_digests(&self) -> BTreeMap<String, String> {
        self.stages.iter().flat_map(|s| s.outputs.clone()).collect()
    }

    pub fn executed_count(&self) -> usize {
        self.stages.iter().filter(|s| s.executed).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PlannedAction {
    Run,
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlannedStage {
    pub stage: Stage,
    pub action: PlannedAction,
    pub outputs: Vec<&'static str>,
}

fn previous_manifest(config: &RunConfig) -> Option<RunManifest> {
    RunManifest::read(&config.out_dir.join(MANIFEST_FILE)).ok()
}

/// Whether the previous record for `stage` can be reused as-is.
fn reusable(
    prev: Option<&RunManifest>,
    stage: Stage,
    key: &str,
    config: &RunConfig,
) -> Result<bool, String> {
    let Some(rec) = prev.and_then(|m| m.stage(stage)) else {
        return Ok(false);
    };
    if rec.key != key {
        return Ok(false);
    }
    for name in stage.outputs(config) {
        let recorded = rec.outputs.get(name);
        let actual = file_digest(&config.out_dir.join(name)).ok();
        if recorded.is_none() || recorded != actual.as_ref() {
            return Err(format!("{name} changed since it was written; re-running"));
        }
    }
    Ok(true)
}

/// Stages that would run or be skipped, without running anything.
pub fn plan(config: &RunConfig) -> Result<Vec<PlannedStage>> {
    config.validate()?;
    let prev = previous_manifest(config);
    let mut upstream_runs = false;
    let mut out = Vec::new();
    for stage in Stage::ALL {
        let skip = !upstream_runs
            && stage
                .key(config)
                .is_some_and(|k| reusable(prev.as_ref(), stage, &k, config) == Ok(true));
        upstream_runs |= !skip;
        out.push(PlannedStage {
            stage,
            action: if skip {
                PlannedAction::Skip
            } else {
                PlannedAction::Run
            },
            outputs: stage.outputs(config),
        });
    }
    Ok(out)
}

fn run_stage(stage: Stage, config: &RunConfig) -> Result<Vec<String>> {
    let dir = &config.out_dir;
    let out = |n: &str| dir.join(n);
    match stage {
        Stage::Ingest => {
            let ing = stages::ingest(
                &config.inputs,
                config.format,
                config.year_min,
                config.year_max,
                config.title_sim,
            )?;
            write_file(&out("corpus.jsonl"), to_jsonl(&ing.records)?)?;
            write_file(&out("rejects.jsonl"), to_jsonl(&ing.rejects)?)?;
            write_file(
                &out("dedup.json"),
                serde_json::to_string_pretty(&ing.report)? + "\n",
            )?;
            Ok(vec![format!(
                "{} rows, {} rejected, {} outside years, {} merged, {} kept",
                ing.report.rows_read,
                ing.report.rejected,
                ing.report.year_excluded,
                ing.report.dedup.merges.len(),
                ing.records.len()
            )])
        }
        Stage::Extract => {
            let lexicon = config
                .lexicon
                .as_deref()
                .ok_or_else(|| Error::config("a method lexicon is required"))?;
            let ex = stages::extract(
                &out("corpus.jsonl"),
                lexicon,
                config.candidates.as_deref(),
                config.fallback_rule,
            )?;
            write_file(&out("methods.jsonl"), to_jsonl(&ex.rows)?)?;
            Ok(ex.notes)
        }
        Stage::Topics => {
            let source = config.topic_source()?;
            let model = config.topic_model(config.k.unwrap_or(1));
            let settings = stages::TopicSettings {
                source: &source,
                model: &model,
                min_token_len: config.min_token_len,
                coherence_top_n: config.coherence_top_n,
                heldout_every: config.heldout_every,
            };
            let t = stages::topics(&out("corpus.jsonl"), &settings)?;
            write_file(
                &out("topics.csv"),
                assignments_csv(&t.assignments, &t.probabilities)?,
            )?;
            if let Some(sweep) = &t.sweep {
                write_file(
                    &out("quality.csv"),
                    quality_csv(&sweep.points, sweep.selected_k)?,
                )?;
            }
            let mut notes = t.notes;
            notes.push(format!("K = {}", t.k));
            Ok(notes)
        }
        Stage::Tmc => {
            let table = stages::tmc(&out("methods.jsonl"), &out("topics.csv"), config.sigma)?;
            write_file(&out("tmc.csv"), tmc_csv(&table.pairs)?)?;
            write_file(&out("sensitivity.csv"), stages::sensitivity_csv(&table)?)?;
            let graph = crate::tmc::export_bipartite(&table.pairs).to_export();
            write_file(&out("tmc.graphml"), graph.to_graphml())?;
            write_file(&out("tmc.gexf"), graph.to_gexf())?;
            Ok(vec![format!(
                "{} pairs, {} retained at sigma {}",
                table.pairs.len(),
                table.retained_count(),
                table.sigma
            )])
        }
        Stage::Network => {
            let net = stages::network_from_file(&out("tmc.csv"), config.weighting, config.top_n)?;
            let export = net.network.to_export(Some(&net.partition));
            write_file(&out("net.graphml"), export.to_graphml())?;
            write_file(&out("net.gexf"), export.to_gexf())?;
            write_file(
                &out("comm.csv"),
                crate::network::communities_csv(&net.network, &net.partition)?,
            )?;
            write_file(
                &out("hist.csv"),
                crate::network::history_csv(&net.partition.merge_history)?,
            )?;
            write_file(&out("top.csv"), crate::network::popularity_csv(&net.top)?)?;
            write_file(
                &out("communities.json"),
                serde_json::to_string_pretty(&net.report)? + "\n",
            )?;
            Ok(vec![format!(
                "{} nodes, {} edges, {} communities, Q = {}",
                net.network.node_count(),
                net.network.edges.len(),
                net.report.community_count,
                net.report.q
            )])
        }
        Stage::Report => {
            let summary = stages::summarize(dir, config.sigma)?;
            write_file(&out("summary.txt"), summary.render())?;
            Ok(Vec::new())
        }
    }
}

/// Runs every stage in order, reusing stages whose inputs and outputs are
/// unchanged, and writes `manifest.json` last.
pub fn run_pipeline(config: &RunConfig) -> Result<RunManifest> {
    config.validate()?;
    config.check_inputs_exist()?;
    std::fs::create_dir_all(&config.out_dir).map_err(|e| Error::io(&config.out_dir, e))?;

    let mut inputs = BTreeMap::new();
    for f in config.input_files() {
        inputs.insert(f.display().to_string(), file_digest(&f)?);
    }
    let prev = previous_manifest(config);
    let mut manifest = RunManifest {
        tool_version: TOOL_VERSION.to_string(),
        status: RunStatus::Complete,
        config: config.clone(),
        inputs,
        stages: Vec::new(),
        failed_stage: None,
        stale: Vec::new(),
    };
    let manifest_path = config.out_dir.join(MANIFEST_FILE);

    for stage in Stage::ALL {
        let key = stage
            .key(config)
            .ok_or_else(|| Error::Logic(format!("inputs of stage {} are missing", stage.name())))?;
        let mut notes = Vec::new();
        match reusable(prev.as_ref(), stage, &key, config) {
            Ok(true) => {
                let mut rec = prev
                    .as_ref()
                    .and_then(|m| m.stage(stage))
                    .cloned()
                    .expect("checked");
                rec.executed = false;
                rec.wall_ms = 0;
                manifest.stages.push(rec);
                continue;
            }
            Ok(false) => {}
            Err(note) => notes.push(note),
        }

        let started = Instant::now();
        match run_stage(stage, config) {
            Ok(more) => notes.extend(more),
            Err(e) => {
                manifest.status = RunStatus::Failed;
                manifest.failed_stage = Some(stage);
                manifest.stale = stage
                    .outputs(config)
                    .into_iter()
                    .filter(|n| config.out_dir.join(n).exists())
                    .map(str::to_string)
                    .collect();
                write_file(
                    &manifest_path,
                    serde_json::to_string_pretty(&manifest)? + "\n",
                )?;
                return Err(e.in_stage(stage.name()));
            }
        }
        let mut outputs = BTreeMap::new();
        for name in stage.outputs(config) {
            outputs.insert(name.to_string(), file_digest(&config.out_dir.join(name))?);
        }
        manifest.stages.push(StageRecord {
            stage,
            key,
            executed: true,
            wall_ms: started.elapsed().as_millis() as u64,
            outputs,
            notes,
        });
    }

    write_file(
        &manifest_path,
        serde_json::to_string_pretty(&manifest)? + "\n",
    )?;
    Ok(manifest)
}
