//! The language-model stage is run offline; this module imports its output
//! and pushes every candidate through the lexicon gate.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::lexicon::{normalize_surface, MethodLexicon};
use super::matcher::{rule_extract, scan};
use crate::error::Result;
use crate::ingest::BiblioRecord;

pub type CandidateMap = BTreeMap<String, Vec<String>>;
pub type MethodSets = BTreeMap<String, BTreeSet<String>>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineReject {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateImport {
    pub candidates: CandidateMap,
    pub rejects: Vec<LineReject>,
}

impl CandidateImport {
    /// Document ids present in the candidate file but not in `known`.
    pub fn unknown_docs<'a>(&'a self, known: &HashSet<&str>) -> Vec<&'a str> {
        self.candidates
            .keys()
            .map(String::as_str)
            .filter(|id| !known.contains(id))
            .collect()
    }
}

#[derive(Deserialize)]
struct CandidateLine {
    doc_id: String,
    candidates: Vec<String>,
}

/// Reads JSON Lines `{doc_id, candidates: [..]}`. Several lines for one
/// document are concatenated in file order.
pub fn import_candidates(path: &Path) -> Result<CandidateImport> {
    let text = crate::io::read_utf8(path)?;
    Ok(parse_candidates(&text))
}

pub fn parse_candidates(text: &str) -> CandidateImport {
    let mut out = CandidateImport::default();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<CandidateLine>(line) {
            Ok(c) => out
                .candidates
                .entry(c.doc_id)
                .or_default()
                .extend(c.candidates),
            Err(e) => out.rejects.push(LineReject {
                line: i + 1,
                reason: e.to_string(),
            }),
        }
    }
    out
}

/// Maps one raw candidate to canonicals: exact variant lookup first, then a
/// whole-word scan of the candidate text. Empty when nothing matches.
pub fn standardize_one(raw: &str, lexicon: &MethodLexicon) -> BTreeSet<String> {
    let norm = normalize_surface(raw);
    if let Some(c) = lexicon.canonical_for(&norm) {
        return BTreeSet::from([c.to_string()]);
    }
    scan(&norm, lexicon)
        .into_iter()
        .filter_map(|(_, _, pat)| lexicon.canonical_for(lexicon.pattern(pat)))
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Standardized {
    pub methods: MethodSets,
    /// Raw candidates that matched no variant, per document.
    pub unmapped: CandidateMap,
}

/// Standardizes every document's candidates. With `keep_unmapped`, misses
/// stay in the output as provisional canonicals (in normalized form).
pub fn standardize_candidates(
    candidates: &CandidateMap,
    lexicon: &MethodLexicon,
    keep_unmapped: bool,
) -> Standardized {
    let mut out = Standardized::default();
    for (doc_id, raws) in candidates {
        let set = out.methods.entry(doc_id.clone()).or_default();
        for raw in raws {
            let mapped = standardize_one(raw, lexicon);
            if mapped.is_empty() {
                out.unmapped
                    .entry(doc_id.clone())
                    .or_default()
                    .push(raw.clone());
                let norm = normalize_surface(raw);
                if keep_unmapped && !norm.is_empty() {
                    set.insert(norm);
                }
            } else {
                set.extend(mapped);
            }
        }
    }
    out
}

/// Two-stage extraction: candidates supply recall, the lexicon gates
/// precision. Without candidates the result is empty unless
/// `fallback_rule` adds the rule-stage output.
pub fn llmrule_extract(
    doc: &BiblioRecord,
    candidates: Option<&[String]>,
    lexicon: &MethodLexicon,
    fallback_rule: bool,
) -> BTreeSet<String> {
    let mut out: BTreeSet<String> = candidates
        .unwrap_or_default()
        .iter()
        .flat_map(|raw| standardize_one(raw, lexicon))
        .collect();
    if fallback_rule {
        out.extend(rule_extract(doc, lexicon).0);
    }
    out
}
