//! Assignment files.
//!
//! * CSV `doc_id,topic_id[,probability]`; topic id `-1` marks an outlier
//!   document that belongs to no topic.
//! * JSON Lines `{doc_id, dist: [..]}` carrying full distributions.
//! * Quality table CSV `K,perplexity,coherence,selected`.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    argmax_lowest, assign_dominant_topic, DocTopicDist, TopicAssignment, TopicQualityPoint,
};
use crate::error::{Error, Result};
use crate::extract::LineReject;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImportMode {
    ArgmaxRows,
    FullDist,
}

impl std::str::FromStr for ImportMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "argmax_rows" => Ok(ImportMode::ArgmaxRows),
            "full_dist" => Ok(ImportMode::FullDist),
            other => Err(Error::config(format!(
                "unknown import mode `{other}` (expected argmax_rows or full_dist)"
            ))),
        }
    }
}

/// One row of an assignment CSV. `topic_id` is `None` for outliers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentRow {
    pub doc_id: String,
    pub topic_id: Option<usize>,
    pub probability: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportedTopics {
    pub k: usize,
    pub assignments: Vec<TopicAssignment>,
    pub dists: Option<Vec<DocTopicDist>>,
    /// Dominant-topic probability per document, where known.
    pub probabilities: BTreeMap<String, f64>,
    /// Original topic label -> contiguous id.
    pub remap: BTreeMap<i64, usize>,
    pub unassigned: Vec<String>,
    pub rejects: Vec<LineReject>,
}

const SUM_TOLERANCE: f64 = 1e-6;

struct RawRows {
    rows: Vec<(String, i64, Option<f64>)>,
    rejects: Vec<LineReject>,
}

fn parse_raw_csv(text: &str) -> Result<RawRows> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.to_ascii_lowercase())
        .collect();
    let col = |n: &str| headers.iter().position(|h| h == n);
    let (Some(doc_col), Some(topic_col)) = (col("doc_id"), col("topic_id")) else {
        return Err(Error::input(
            "assignment CSV needs doc_id and topic_id columns",
        ));
    };
    let prob_col = col("probability");

    let mut out = RawRows {
        rows: vec![],
        rejects: vec![],
    };
    let mut seen = HashSet::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let reject = |reason: String| LineReject { line, reason };
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                out.rejects.push(reject(e.to_string()));
                continue;
            }
        };
        let doc = rec.get(doc_col).unwrap_or("").to_string();
        if doc.is_empty() {
            out.rejects.push(reject("empty doc_id".into()));
            continue;
        }
        let topic = match rec.get(topic_col).and_then(|t| t.parse::<i64>().ok()) {
            Some(t) if t >= -1 => t,
            _ => {
                out.rejects
                    .push(reject("topic_id must be an integer >= -1".into()));
                continue;
            }
        };
        let prob = match prob_col.and_then(|c| rec.get(c)).filter(|p| !p.is_empty()) {
            None => None,
            Some(p) => match p.parse::<f64>() {
                Ok(v) if (0.0..=1.0).contains(&v) => Some(v),
                _ => {
                    out.rejects.push(reject(format!("bad probability `{p}`")));
                    continue;
                }
            },
        };
        if !seen.insert(doc.clone()) {
            out.rejects
                .push(reject(format!("duplicate doc_id `{doc}`")));
            continue;
        }
        out.rows.push((doc, topic, prob));
    }
    Ok(out)
}

/// Reads an assignment CSV as written by this crate, without remapping.
pub fn read_assignments_csv(path: &Path) -> Result<Vec<AssignmentRow>> {
    let text = crate::io::read_utf8(path)?;
    let raw = parse_raw_csv(&text)?;
    if let Some(r) = raw.rejects.first() {
        return Err(Error::input(format!(
            "{} line {}: {}",
            path.display(),
            r.line,
            r.reason
        )));
    }
    Ok(raw
        .rows
        .into_iter()
        .map(|(doc_id, t, probability)| AssignmentRow {
            doc_id,
            topic_id: usize::try_from(t).ok(),
            probability,
        })
        .collect())
}

/// Imports externally produced assignments (argmax rows), remapping the
/// observed topic labels onto `0..K`.
pub fn parse_assignments_csv(text: &str) -> Result<ImportedTopics> {
    let raw = parse_raw_csv(text)?;
    let labels: BTreeSet<i64> = raw.rows.iter().map(|r| r.1).filter(|&t| t >= 0).collect();
    if labels.is_empty() {
        return Err(Error::input("no document has a topic assignment"));
    }
    let remap: BTreeMap<i64, usize> = labels
        .into_iter()
        .enumerate()
        .map(|(i, t)| (t, i))
        .collect();
    let mut assignments = Vec::new();
    let mut unassigned = Vec::new();
    let mut probabilities = BTreeMap::new();
    for (doc_id, t, prob) in raw.rows {
        if t < 0 {
            unassigned.push(doc_id);
        } else {
            if let Some(p) = prob {
                probabilities.insert(doc_id.clone(), p);
            }
            assignments.push(TopicAssignment {
                doc_id,
                topic_id: remap[&t],
            });
        }
    }
    Ok(ImportedTopics {
        k: remap.len(),
        assignments,
        dists: None,
        probabilities,
        remap,
        unassigned,
        rejects: raw.rejects,
    })
}

#[derive(Deserialize)]
struct DistLine {
    doc_id: String,
    dist: Vec<f64>,
}

/// Imports full distributions; the first valid row fixes K.
pub fn parse_dist_jsonl(text: &str) -> Result<ImportedTopics> {
    let mut dists: Vec<DocTopicDist> = Vec::new();
    let mut rejects = Vec::new();
    let mut seen = HashSet::new();
    let mut k = None;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let reject = |reason: String| LineReject {
            line: i + 1,
            reason,
        };
        let row: DistLine = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => {
                rejects.push(reject(e.to_string()));
                continue;
            }
        };
        let sum: f64 = row.dist.iter().sum();
        if row.dist.is_empty()
            || row.dist.iter().any(|p| !(p.is_finite() && *p >= 0.0))
            || (sum - 1.0).abs() > SUM_TOLERANCE
        {
            rejects.push(reject("dist must be non-negative and sum to 1".into()));
            continue;
        }
        if *k.get_or_insert(row.dist.len()) != row.dist.len() {
            rejects.push(reject("dist length differs from earlier rows".into()));
            continue;
        }
        if !seen.insert(row.doc_id.clone()) {
            rejects.push(reject(format!("duplicate doc_id `{}`", row.doc_id)));
            continue;
        }
        dists.push(DocTopicDist {
            doc_id: row.doc_id,
            probs: row.dist,
        });
    }
    let Some(k) = k.filter(|_| !dists.is_empty()) else {
        return Err(Error::input("no valid topic distribution rows"));
    };
    Ok(ImportedTopics {
        k,
        assignments: dists.iter().map(assign_dominant_topic).collect(),
        probabilities: dominant_probabilities(&dists),
        dists: Some(dists),
        remap: (0..k).map(|j| (j as i64, j)).collect(),
        unassigned: vec![],
        rejects,
    })
}

pub fn import_assignments(path: &Path, mode: ImportMode) -> Result<ImportedTopics> {
    let text = crate::io::read_utf8(path)?;
    match mode {
        ImportMode::ArgmaxRows => parse_assignments_csv(&text),
        ImportMode::FullDist => parse_dist_jsonl(&text),
    }
}

/// Mass of each document's dominant topic.
pub fn dominant_probabilities(dists: &[DocTopicDist]) -> BTreeMap<String, f64> {
    dists
        .iter()
        .map(|d| (d.doc_id.clone(), d.probs[argmax_lowest(&d.probs)]))
        .collect()
}

/// Renders `doc_id,topic_id,probability`; probability is left empty for
/// documents missing from `probabilities`.
pub fn assignments_csv(
    assignments: &[TopicAssignment],
    probabilities: &BTreeMap<String, f64>,
) -> Result<String> {
    crate::io::csv_string(&["doc_id", "topic_id", "probability"], |w| {
        for a in assignments {
            let p = probabilities
                .get(&a.doc_id)
                .map(|p| p.to_string())
                .unwrap_or_default();
            w.write_record([a.doc_id.as_str(), &a.topic_id.to_string(), &p])?;
        }
        Ok(())
    })
}

pub fn quality_csv(points: &[TopicQualityPoint], selected_k: usize) -> Result<String> {
    crate::io::csv_string(&["K", "perplexity", "coherence", "selected"], |w| {
        for p in points {
            w.write_record([
                p.k.to_string(),
                p.perplexity.to_string(),
                p.coherence.to_string(),
                (p.k == selected_k).to_string(),
            ])?;
        }
        Ok(())
    })
}
