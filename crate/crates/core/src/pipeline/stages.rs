//! Stage bodies. Each reads declared inputs and returns what the stage
//! writes; the runner and the CLI decide where it goes.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::TopicSource;
use crate::error::{Error, Result};
use crate::extract::{
    compile_lexicon, extract_corpus, import_candidates, read_method_sets, DocMethods,
};
use crate::ingest::{
    corpus_stats, deduplicate, filter_by_year, parse_records, read_corpus, BiblioRecord,
    CorpusStats, DedupReport, InputFormat, RejectReason,
};
use crate::network::{
    build_network, community_report, greedy_communities, rank_popularity, CommunityPartition,
    CommunitySummary, EdgeWeighting, TmcNetwork,
};
use crate::tmc::{build_tmc_table, read_tmc_csv, TmcPair, TmcTable, SENSITIVITY_SIGMAS};
use crate::topics::{
    default_stopwords, dominant_probabilities, fit_topic_model, import_assignments,
    read_assignments_csv, split_heldout, sweep_topic_counts, tokenize_corpus, SweepResult,
    TopicAssignment, TopicModelConfig,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileReject {
    pub file: String,
    pub row: usize,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub rows_read: usize,
    pub rejected: usize,
    pub year_excluded: usize,
    pub dedup: DedupReport,
    pub corpus: CorpusStats,
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub records: Vec<BiblioRecord>,
    pub rejects: Vec<FileReject>,
    pub report: IngestReport,
}

/// Parses every input, drops cross-file id clashes, filters by year and
/// deduplicates.
pub fn ingest(
    inputs: &[PathBuf],
    format: InputFormat,
    year_min: i32,
    year_max: i32,
    title_sim: f64,
) -> Result<Ingested> {
    let parsed = inputs
        .par_iter()
        .map(|p| parse_records(p, format).map(|o| (p, o)))
        .collect::<Result<Vec<_>>>()?;

    let mut rows_read = 0;
    let mut records = Vec::new();
    let mut rejects = Vec::new();
    let mut seen = HashSet::new();
    for (path, outcome) in parsed {
        rows_read += outcome.rows();
        let file = path.display().to_string();
        rejects.extend(outcome.rejects.into_iter().map(|r| FileReject {
            file: file.clone(),
            row: r.row,
            reason: r.reason,
        }));
        for r in outcome.records {
            if seen.insert(r.id.clone()) {
                records.push(r);
            } else {
                // row numbers are not kept on parsed records
                rejects.push(FileReject {
                    file: file.clone(),
                    row: 0,
                    reason: RejectReason::DuplicateId,
                });
            }
        }
    }

    let in_range = filter_by_year(&records, year_min, year_max)?;
    let year_excluded = records.len() - in_range.len();
    let (records, dedup) = deduplicate(&in_range, title_sim)?;
    if records.is_empty() {
        return Err(Error::input(
            "no records left after parsing, year filter and deduplication",
        ));
    }
    let report = IngestReport {
        rows_read,
        rejected: rejects.len(),
        year_excluded,
        dedup,
        corpus: corpus_stats(&records),
    };
    Ok(Ingested {
        records,
        rejects,
        report,
    })
}

#[derive(Debug, Clone)]
pub struct Extracted {
    pub rows: Vec<DocMethods>,
    pub notes: Vec<String>,
}

pub fn extract(
    corpus: &Path,
    lexicon: &Path,
    candidates: Option<&Path>,
    fallback_rule: bool,
) -> Result<Extracted> {
    let records = read_corpus(corpus)?;
    let lexicon = compile_lexicon(lexicon)?;
    let mut notes = Vec::new();
    let imported = match candidates {
        None => None,
        Some(path) => {
            let imp = import_candidates(path)?;
            if let Some(r) = imp.rejects.first() {
                return Err(Error::input(format!(
                    "{} line {}: {}",
                    path.display(),
                    r.line,
                    r.reason
                )));
            }
            let known: HashSet<&str> = records.iter().map(|r| r.id.as_str()).collect();
            let unknown = imp.unknown_docs(&known);
            if !unknown.is_empty() {
                notes.push(format!(
                    "{} candidate documents are not in the corpus",
                    unknown.len()
                ));
            }
            Some(imp.candidates)
        }
    };
    let rows = extract_corpus(&records, &lexicon, imported.as_ref(), fallback_rule);
    Ok(Extracted { rows, notes })
}

#[derive(Debug, Clone)]
pub struct TopicsOutput {
    pub k: usize,
    pub assignments: Vec<TopicAssignment>,
    /// Dominant-topic probability per document, where known.
    pub probabilities: BTreeMap<String, f64>,
    pub sweep: Option<SweepResult>,
    pub notes: Vec<String>,
}

pub struct TopicSettings<'a> {
    pub source: &'a TopicSource,
    /// Template for fits; `k` is overridden.
    pub model: &'a TopicModelConfig,
    pub min_token_len: usize,
    pub coherence_top_n: usize,
    pub heldout_every: usize,
}

pub fn topics(corpus: &Path, settings: &TopicSettings) -> Result<TopicsOutput> {
    let records = read_corpus(corpus)?;
    let fit = |k: usize, docs: &[crate::topics::TokenizedDoc]| {
        let cfg = TopicModelConfig {
            k,
            ..settings.model.clone()
        };
        fit_topic_model(docs, &cfg)
    };
    match settings.source {
        TopicSource::Import(path, mode) => {
            let imported = import_assignments(path, *mode)?;
            let known: HashSet<&str> = records.iter().map(|r| r.id.as_str()).collect();
            let mut notes = Vec::new();
            let outside = imported
                .assignments
                .iter()
                .filter(|a| !known.contains(a.doc_id.as_str()))
                .count();
            if outside > 0 {
                notes.push(format!(
                    "{outside} imported assignments are not in the corpus and were dropped"
                ));
            }
            if !imported.unassigned.is_empty() {
                notes.push(format!(
                    "{} documents marked as outliers",
                    imported.unassigned.len()
                ));
            }
            let assignments = imported
                .assignments
                .into_iter()
                .filter(|a| known.contains(a.doc_id.as_str()))
                .collect();
            let probabilities = imported
                .probabilities
                .into_iter()
                .filter(|(d, _)| known.contains(d.as_str()))
                .collect();
            Ok(TopicsOutput {
                k: imported.k,
                assignments,
                probabilities,
                sweep: None,
                notes,
            })
        }
        TopicSource::Fit(k) => {
            let docs = tokenize_corpus(&records, &default_stopwords(), settings.min_token_len);
            let model = fit(*k, &docs)?;
            Ok(TopicsOutput {
                k: *k,
                assignments: model.assignments(),
                probabilities: dominant_probabilities(&model.doc_topic_dists()),
                sweep: None,
                notes: model.warnings().to_vec(),
            })
        }
        TopicSource::Sweep(ks) => {
            let docs = tokenize_corpus(&records, &default_stopwords(), settings.min_token_len);
            let (train, heldout) = split_heldout(&docs, settings.heldout_every)?;
            if train.is_empty() || heldout.is_empty() {
                return Err(Error::input(
                    "corpus too small to hold out documents for the sweep",
                ));
            }
            let sweep = sweep_topic_counts(
                &train,
                &heldout,
                ks,
                settings.model,
                settings.coherence_top_n,
            )?;
            let model = fit(sweep.selected_k, &docs)?;
            Ok(TopicsOutput {
                k: sweep.selected_k,
                assignments: model.assignments(),
                probabilities: dominant_probabilities(&model.doc_topic_dists()),
                sweep: Some(sweep),
                notes: model.warnings().to_vec(),
            })
        }
    }
}

/// Dominant topics from an assignment CSV; outlier rows are skipped.
pub fn read_topic_assignments(path: &Path) -> Result<Vec<TopicAssignment>> {
    Ok(read_assignments_csv(path)?
        .into_iter()
        .filter_map(|r| {
            r.topic_id.map(|topic_id| TopicAssignment {
                doc_id: r.doc_id,
                topic_id,
            })
        })
        .collect())
}

pub fn tmc(methods: &Path, topics: &Path, sigma: f64) -> Result<TmcTable> {
    let extractions = read_method_sets(methods)?;
    let assignments = read_topic_assignments(topics)?;
    build_tmc_table(&extractions, &assignments, sigma)
}

pub fn sensitivity_csv(table: &TmcTable) -> Result<String> {
    let mut sigmas: Vec<f64> = SENSITIVITY_SIGMAS.to_vec();
    if !sigmas.contains(&table.sigma) {
        sigmas.push(table.sigma);
        sigmas.sort_by(f64::total_cmp);
    }
    crate::io::csv_string(&["sigma", "retained"], |w| {
        for (s, n) in table.sensitivity(&sigmas) {
            w.write_record([s.to_string(), n.to_string()])?;
        }
        Ok(())
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityFile {
    pub q: f64,
    pub community_count: usize,
    pub merges_applied: usize,
    pub weighting: EdgeWeighting,
    pub communities: Vec<CommunitySummary>,
}

#[derive(Debug, Clone)]
pub struct NetworkOutput {
    pub network: TmcNetwork,
    pub partition: CommunityPartition,
    pub report: CommunityFile,
    pub top: Vec<TmcPair>,
}

pub fn network(pairs: &[TmcPair], weighting: EdgeWeighting, top_n: usize) -> Result<NetworkOutput> {
    let network = build_network(pairs)?;
    let partition = greedy_communities(&network.to_graph(weighting)?)?;
    let report = CommunityFile {
        q: partition.q,
        community_count: partition.community_count(),
        merges_applied: partition.merges_applied,
        weighting,
        communities: community_report(&partition, &network)?,
    };
    let top = rank_popularity(pairs, top_n)?;
    Ok(NetworkOutput {
        network,
        partition,
        report,
        top,
    })
}

pub fn network_from_file(
    tmc_csv: &Path,
    weighting: EdgeWeighting,
    top_n: usize,
) -> Result<NetworkOutput> {
    network(&read_tmc_csv(tmc_csv)?, weighting, top_n)
}

/// Figures shown in `summary.txt`, each read back from a stage output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub corpus_size: usize,
    pub method_count: usize,
    pub topic_count: usize,
    pub sigma: f64,
    pub tmc_pairs: usize,
    pub retained_pairs: usize,
    pub community_count: usize,
    pub modularity: f64,
    pub selected_k: Option<usize>,
    pub top: Vec<(String, usize, f64)>,
}

impl Summary {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let mut line = |k: &str, v: String| s.push_str(&format!("{k:<18}{v}\n"));
        line("documents", self.corpus_size.to_string());
        line("methods", self.method_count.to_string());
        line("topics", self.topic_count.to_string());
        if let Some(k) = self.selected_k {
            line(
                "selected K",
                format!("{k} (perplexity + UMass coherence rank sum)"),
            );
        }
        line("sigma", self.sigma.to_string());
        line("tmc pairs", self.tmc_pairs.to_string());
        line("retained pairs", self.retained_pairs.to_string());
        line("communities", self.community_count.to_string());
        line("modularity", self.modularity.to_string());
        s.push_str("\nmost popular pairs (d_ij, c_ij)\n");
        for (i, (label, d, c)) in self.top.iter().take(10).enumerate() {
            s.push_str(&format!("{:>3}. {label}  {d}  {c}\n", i + 1));
        }
        s
    }
}

fn need(dir: &Path, name: &str) -> Result<PathBuf> {
    let p = dir.join(name);
    if p.is_file() {
        Ok(p)
    } else {
        Err(Error::input(format!(
            "missing upstream output {}",
            p.display()
        )))
    }
}

/// Builds the run summary from the files in `dir`.
pub fn summarize(dir: &Path, sigma: f64) -> Result<Summary> {
    let corpus = read_corpus(&need(dir, "corpus.jsonl")?)?;
    let methods = read_method_sets(&need(dir, "methods.jsonl")?)?;
    let topics = read_topic_assignments(&need(dir, "topics.csv")?)?;
    let pairs = read_tmc_csv(&need(dir, "tmc.csv")?)?;
    let comm_text = crate::io::read_utf8(&need(dir, "comm.csv")?)?;
    let communities: CommunityFile =
        serde_json::from_str(&crate::io::read_utf8(&need(dir, "communities.json")?)?)?;
    let top_text = crate::io::read_utf8(&need(dir, "top.csv")?)?;

    let mut comm_ids = BTreeSet::new();
    for row in csv::Reader::from_reader(comm_text.as_bytes()).records() {
        let row = row?;
        comm_ids.insert(row.get(1).unwrap_or_default().to_string());
    }
    #[derive(Deserialize)]
    struct TopRow {
        method: String,
        topic_id: usize,
        d_ij: usize,
        c_ij: f64,
    }
    let top = csv::Reader::from_reader(top_text.as_bytes())
        .deserialize::<TopRow>()
        .map(|r| r.map(|r| (format!("{} @ {}", r.method, r.topic_id), r.d_ij, r.c_ij)))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let selected_k = match dir.join("quality.csv") {
        p if p.is_file() => {
            let text = crate::io::read_utf8(&p)?;
            let mut sel = None;
            for row in csv::Reader::from_reader(text.as_bytes()).records() {
                let row = row?;
                if row.get(3) == Some("true") {
                    sel = row.get(0).and_then(|k| k.parse().ok());
                }
            }
            sel
        }
        _ => None,
    };

    let method_names: BTreeSet<&String> = methods.values().flatten().collect();
    let topic_ids: BTreeSet<usize> = topics.iter().map(|a| a.topic_id).collect();
    Ok(Summary {
        corpus_size: corpus.len(),
        method_count: method_names.len(),
        topic_count: topic_ids.len(),
        sigma,
        tmc_pairs: pairs.len(),
        retained_pairs: pairs.iter().filter(|p| p.retained()).count(),
        community_count: comm_ids.len(),
        modularity: communities.q,
        selected_k,
        top,
    })
}
