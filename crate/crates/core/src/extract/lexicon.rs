use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use aho_corasick::{AhoCorasick, AhoCorasickBuilder, MatchKind};
use serde::Deserialize;

use crate::error::{Error, Result};

/// Lowercases and collapses internal whitespace.
pub fn normalize_surface(s: &str) -> String {
    crate::ingest::collapse_whitespace(&s.to_lowercase())
}

/// Canonical method names and their surface variants.
///
/// Every canonical is also a variant of itself. A normalized variant maps to
/// exactly one canonical.
#[derive(Debug, Clone)]
pub struct MethodLexicon {
    entries: BTreeMap<String, BTreeSet<String>>,
    by_variant: HashMap<String, String>,
    patterns: Vec<String>,
    automaton: AhoCorasick,
}

impl MethodLexicon {
    pub fn from_entries<I, C, V, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (C, V)>,
        C: AsRef<str>,
        V: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut merged: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for (canonical, variants) in entries {
            let canonical = crate::ingest::collapse_whitespace(canonical.as_ref());
            if canonical.is_empty() {
                return Err(Error::input("lexicon has an empty canonical name"));
            }
            let set = merged.entry(canonical.clone()).or_default();
            set.insert(normalize_surface(&canonical));
            for v in variants {
                let v = normalize_surface(v.as_ref());
                if v.is_empty() {
                    return Err(Error::input(format!(
                        "lexicon entry `{canonical}` has an empty variant"
                    )));
                }
                set.insert(v);
            }
        }
        if merged.is_empty() {
            return Err(Error::input("lexicon is empty"));
        }

        let mut by_variant: HashMap<String, String> = HashMap::new();
        for (canonical, variants) in &merged {
            for v in variants {
                if let Some(other) = by_variant.insert(v.clone(), canonical.clone()) {
                    return Err(Error::input(format!(
                        "ambiguous lexicon variant `{v}` claimed by both `{other}` and `{canonical}`"
                    )));
                }
            }
        }

        let mut patterns: Vec<String> = by_variant.keys().cloned().collect();
        patterns.sort();
        let automaton = AhoCorasickBuilder::new()
            .match_kind(MatchKind::Standard)
            .build(&patterns)
            .map_err(|e| Error::Logic(format!("lexicon automaton: {e}")))?;

        Ok(Self {
            entries: merged,
            by_variant,
            patterns,
            automaton,
        })
    }

    pub fn canonical_for(&self, normalized_variant: &str) -> Option<&str> {
        self.by_variant.get(normalized_variant).map(String::as_str)
    }

    pub fn canonicals(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn variants(&self, canonical: &str) -> Option<&BTreeSet<String>> {
        self.entries.get(canonical)
    }

    pub fn variant_count(&self) -> usize {
        self.by_variant.len()
    }

    pub(crate) fn automaton(&self) -> &AhoCorasick {
        &self.automaton
    }

    pub(crate) fn pattern(&self, idx: usize) -> &str {
        &self.patterns[idx]
    }
}

#[derive(Deserialize)]
struct CsvRow {
    canonical: String,
    variant: String,
}

/// Loads a lexicon from a JSON object `{canonical: [variants]}` or a
/// two-column CSV `canonical,variant`.
pub fn compile_lexicon(path: &Path) -> Result<MethodLexicon> {
    let text = crate::io::read_utf8(path)?;
    let looks_json = text.trim_start().starts_with('{');
    if looks_json {
        let map: BTreeMap<String, Vec<String>> = serde_json::from_str(&text)
            .map_err(|e| Error::input(format!("{}: {e}", path.display())))?;
        MethodLexicon::from_entries(map)
    } else {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut rows: Vec<(String, Vec<String>)> = Vec::new();
        for row in reader.deserialize::<CsvRow>() {
            let row = row.map_err(|e| Error::input(format!("{}: {e}", path.display())))?;
            rows.push((row.canonical, vec![row.variant]));
        }
        MethodLexicon::from_entries(rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_is_its_own_variant() {
        let lex = MethodLexicon::from_entries([(
            "topic modeling",
            vec!["lda", "latent dirichlet allocation"],
        )])
        .unwrap();
        assert_eq!(lex.variant_count(), 3);
        assert_eq!(lex.canonical_for("topic modeling"), Some("topic modeling"));
    }

    #[test]
    fn shared_variant_is_ambiguous() {
        let err = MethodLexicon::from_entries([
            ("support vector machine", vec!["svm"]),
            ("structural var model", vec!["svm"]),
        ])
        .unwrap_err()
        .to_string();
        assert!(
            err.contains("support vector machine") && err.contains("structural var model"),
            "{err}"
        );
    }

    #[test]
    fn variants_are_normalized() {
        let lex =
            MethodLexicon::from_entries([("topic modeling", vec![" Topic   Modeling "])]).unwrap();
        assert_eq!(lex.variant_count(), 1);
        assert!(lex
            .variants("topic modeling")
            .unwrap()
            .contains("topic modeling"));
    }

    #[test]
    fn empty_lexicon_and_variant_fail() {
        let none: Vec<(&str, Vec<&str>)> = vec![];
        assert!(MethodLexicon::from_entries(none).is_err());
        assert!(MethodLexicon::from_entries([("gis", vec!["  "])]).is_err());
    }

    #[test]
    fn loads_json_and_csv() {
        let dir = tempfile::tempdir().unwrap();
        let json = dir.path().join("lex.json");
        std::fs::write(
            &json,
            r#"{"gis": ["geographic information system"], "topic modeling": ["lda"]}"#,
        )
        .unwrap();
        let csv = dir.path().join("lex.csv");
        std::fs::write(
            &csv,
            "canonical,variant\ngis,geographic information system\ntopic modeling,lda\n",
        )
        .unwrap();
        let a = compile_lexicon(&json).unwrap();
        let b = compile_lexicon(&csv).unwrap();
        assert_eq!(a.variant_count(), 4);
        assert_eq!(a.entries, b.entries);
    }
}
