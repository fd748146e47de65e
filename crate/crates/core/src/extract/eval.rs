use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::candidates::MethodSets;
use crate::error::{Error, Result};

/// Harmonic mean of two percentages; 0 when both are 0.
pub fn harmonic_f1(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

/// Document-level confusion counts and micro-averaged percentages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractionEval {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl ExtractionEval {
    pub fn from_counts(tp: u64, fp: u64, fn_: u64) -> Self {
        let pct = |num: u64, den: u64| {
            if den > 0 {
                100.0 * num as f64 / den as f64
            } else {
                0.0
            }
        };
        let precision = pct(tp, tp + fp);
        let recall = pct(tp, tp + fn_);
        Self {
            tp,
            fp,
            fn_,
            precision,
            recall,
            f1: harmonic_f1(precision, recall),
        }
    }
}

impl fmt::Display for ExtractionEval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "tp={} fp={} fn={} P={:.2} R={:.2} F1={:.2}",
            self.tp, self.fp, self.fn_, self.precision, self.recall, self.f1
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub eval: ExtractionEval,
    /// Predicted documents with no gold entry (scored against an empty set).
    pub docs_without_gold: Vec<String>,
}

/// Micro-averaged scoring over (document, canonical) pairs.
pub fn evaluate_extraction(predicted: &MethodSets, gold: &MethodSets) -> Result<EvalReport> {
    if gold.is_empty() {
        return Err(Error::input("gold annotations are empty"));
    }
    let empty = BTreeSet::new();
    let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
    let mut docs_without_gold = Vec::new();

    let doc_ids: BTreeSet<&String> = predicted.keys().chain(gold.keys()).collect();
    for id in doc_ids {
        let p = predicted.get(id).unwrap_or(&empty);
        let g = match gold.get(id) {
            Some(g) => g,
            None => {
                docs_without_gold.push(id.clone());
                &empty
            }
        };
        let hit = p.intersection(g).count() as u64;
        tp += hit;
        fp += p.len() as u64 - hit;
        fn_ += g.len() as u64 - hit;
    }
    Ok(EvalReport {
        eval: ExtractionEval::from_counts(tp, fp, fn_),
        docs_without_gold,
    })
}
