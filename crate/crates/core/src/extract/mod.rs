//! Method entity recognition.
//!
//! Two routes produce per-document sets of canonical method names:
//!
//! * the rule stage ([`rule_extract`]) scans title and abstract against the
//!   lexicon with case-insensitive, whole-word, leftmost-longest matching;
//! * the two-stage route ([`llmrule_extract`]) takes candidate mentions from
//!   an external language model and keeps only those the lexicon recognizes.
//!
//! Methods are counted once per document.

mod candidates;
mod eval;
mod lexicon;
mod matcher;

use std::collections::{BTreeSet, HashSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::BiblioRecord;

pub use candidates::{
    import_candidates, llmrule_extract, parse_candidates, standardize_candidates, standardize_one,
    CandidateImport, CandidateMap, LineReject, MethodSets, Standardized,
};
pub use eval::{evaluate_extraction, harmonic_f1, EvalReport, ExtractionEval};
pub use lexicon::{compile_lexicon, normalize_surface, MethodLexicon};
pub use matcher::{rule_extract, search_text, MethodMention};

/// One line of a methods or gold file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocMethods {
    pub doc_id: String,
    pub methods: Vec<String>,
}

/// Extracts methods for every record. With `candidates` the two-stage route
/// is used, otherwise the rule stage alone. Output follows corpus order.
pub fn extract_corpus(
    records: &[BiblioRecord],
    lexicon: &MethodLexicon,
    candidates: Option<&CandidateMap>,
    fallback_rule: bool,
) -> Vec<DocMethods> {
    records
        .par_iter()
        .map(|doc| {
            let set = match candidates {
                Some(c) => llmrule_extract(
                    doc,
                    Some(c.get(&doc.id).map(Vec::as_slice).unwrap_or_default()),
                    lexicon,
                    fallback_rule,
                ),
                None => rule_extract(doc, lexicon).0,
            };
            DocMethods {
                doc_id: doc.id.clone(),
                methods: set.into_iter().collect(),
            }
        })
        .collect()
}

pub fn to_method_sets(rows: &[DocMethods]) -> MethodSets {
    rows.iter()
        .map(|r| {
            (
                r.doc_id.clone(),
                r.methods.iter().cloned().collect::<BTreeSet<_>>(),
            )
        })
        .collect()
}

/// Reads a methods or gold file (`{doc_id, methods: [..]}` per line).
pub fn read_method_sets(path: &Path) -> Result<MethodSets> {
    let text = crate::io::read_utf8(path)?;
    let mut out = MethodSets::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: DocMethods = serde_json::from_str(line)
            .map_err(|e| Error::input(format!("{} line {}: {e}", path.display(), i + 1)))?;
        if !seen.insert(row.doc_id.clone()) {
            return Err(Error::input(format!(
                "{}: document `{}` listed twice",
                path.display(),
                row.doc_id
            )));
        }
        out.insert(row.doc_id, row.methods.into_iter().collect());
    }
    Ok(out)
}
