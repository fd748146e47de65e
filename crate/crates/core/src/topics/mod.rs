//! Per-document topic distributions and dominant-topic assignment.
//!
//! Distributions come either from the built-in collapsed Gibbs sampler
//! ([`fit_topic_model`]) or from an imported assignment file
//! ([`import_assignments`]). Downstream stages only consume the dominant
//! topic of each document.

mod gibbs;
mod io;
mod quality;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::BiblioRecord;

pub use gibbs::{fit_topic_model, TopicModel, TopicWordDist};
pub use io::{
    assignments_csv, dominant_probabilities, import_assignments, parse_assignments_csv,
    parse_dist_jsonl, quality_csv, read_assignments_csv, AssignmentRow, ImportMode, ImportedTopics,
};
pub use quality::{
    coherence_umass, perplexity, perplexity_with, select_by_rank_sum, split_heldout,
    sweep_topic_counts, umass_pair_score, CoherenceReport, SweepResult, TopicQualityPoint,
    FOLD_IN_SWEEPS,
};

pub const DEFAULT_MIN_TOKEN_LEN: usize = 3;
pub const DEFAULT_BETA: f64 = 0.01;
pub const DEFAULT_ITERATIONS: usize = 1000;
pub const DEFAULT_BURN_IN: usize = 800;
pub const DEFAULT_TOP_N: usize = 10;

pub const DEFAULT_STOPWORDS: &[&str] = &[
    "a",
    "about",
    "above",
    "after",
    "again",
    "against",
    "all",
    "also",
    "am",
    "an",
    "and",
    "any",
    "are",
    "as",
    "at",
    "be",
    "because",
    "been",
    "before",
    "being",
    "below",
    "between",
    "both",
    "but",
    "by",
    "can",
    "could",
    "did",
    "do",
    "does",
    "doing",
    "down",
    "during",
    "each",
    "few",
    "for",
    "from",
    "further",
    "had",
    "has",
    "have",
    "having",
    "he",
    "her",
    "here",
    "hers",
    "herself",
    "him",
    "himself",
    "his",
    "how",
    "i",
    "if",
    "in",
    "into",
    "is",
    "it",
    "its",
    "itself",
    "just",
    "me",
    "more",
    "most",
    "my",
    "myself",
    "no",
    "nor",
    "not",
    "now",
    "of",
    "off",
    "on",
    "once",
    "only",
    "or",
    "other",
    "our",
    "ours",
    "ourselves",
    "out",
    "over",
    "own",
    "same",
    "she",
    "should",
    "so",
    "some",
    "such",
    "than",
    "that",
    "the",
    "their",
    "theirs",
    "them",
    "themselves",
    "then",
    "there",
    "these",
    "they",
    "this",
    "those",
    "through",
    "to",
    "too",
    "under",
    "until",
    "up",
    "very",
    "was",
    "we",
    "were",
    "what",
    "when",
    "where",
    "which",
    "while",
    "who",
    "whom",
    "why",
    "will",
    "with",
    "would",
    "you",
    "your",
    "yours",
    "yourself",
    "yourselves",
    "using",
    "used",
    "use",
    "study",
    "paper",
    "results",
    "based",
    "new",
    "two",
    "one",
    "may",
    "however",
    "within",
    "among",
    "well",
];

pub fn default_stopwords() -> HashSet<String> {
    DEFAULT_STOPWORDS.iter().map(|s| s.to_string()).collect()
}

/// Settings for the built-in sampler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicModelConfig {
    pub k: usize,
    /// Symmetric document-topic prior; `None` means 50/K.
    #[serde(default)]
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    /// Validated and recorded; point estimates are read from the final sweep.
    pub burn_in: usize,
    pub seed: u64,
}

impl TopicModelConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            alpha: None,
            beta: DEFAULT_BETA,
            iterations: DEFAULT_ITERATIONS,
            burn_in: DEFAULT_BURN_IN,
            seed,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.k as f64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::config("topic count K must be at least 1"));
        }
        let alpha = self.alpha();
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::config(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::config(format!(
                "beta must be positive, got {}",
                self.beta
            )));
        }
        if self.iterations < 1 {
            return Err(Error::config("iterations must be at least 1"));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::config(format!(
                "burn-in {} must be smaller than iterations {}",
                self.burn_in, self.iterations
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenizedDoc {
    pub doc_id: String,
    pub tokens: Vec<String>,
}

/// Lowercase alphanumeric runs of title + abstract, minus stopwords and
/// tokens shorter than `min_len` characters.
pub fn tokenize(doc: &BiblioRecord, stopwords: &HashSet<String>, min_len: usize) -> Vec<String> {
    tokenize_text(&doc.text(), stopwords, min_len)
}

pub fn tokenize_text(text: &str, stopwords: &HashSet<String>, min_len: usize) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty() && t.chars().count() >= min_len && !stopwords.contains(*t))
        .map(str::to_string)
        .collect()
}

pub fn tokenize_corpus(
    records: &[BiblioRecord],
    stopwords: &HashSet<String>,
    min_len: usize,
) -> Vec<TokenizedDoc> {
    records
        .iter()
        .map(|r| TokenizedDoc {
            doc_id: r.id.clone(),
            tokens: tokenize(r, stopwords, min_len),
        })
        .collect()
}

/// z(j|d) for one document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocTopicDist {
    pub doc_id: String,
    pub probs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TopicAssignment {
    pub doc_id: String,
    pub topic_id: usize,
}

/// Index of the largest probability; the lowest index wins ties.
pub fn argmax_lowest(probs: &[f64]) -> usize {
    let mut best = 0;
    for (j, &p) in probs.iter().enumerate().skip(1) {
        if p > probs[best] {
            best = j;
        }
    }
    best
}

pub fn assign_dominant_topic(dist: &DocTopicDist) -> TopicAssignment {
    TopicAssignment {
        doc_id: dist.doc_id.clone(),
        topic_id: argmax_lowest(&dist.probs),
    }
}

/// D_j: the number of documents whose dominant topic is j.
pub fn topic_doc_counts(assignments: &[TopicAssignment], k: usize) -> Result<Vec<usize>> {
    let mut counts = vec![0usize; k];
    for a in assignments {
        let slot = counts.get_mut(a.topic_id).ok_or_else(|| {
            Error::input(format!(
                "document `{}` has topic {} but K = {k}",
                a.doc_id, a.topic_id
            ))
        })?;
        *slot += 1;
    }
    Ok(counts)
}
