//! Leftmost-longest, whole-word gazetteer matching.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::lexicon::{normalize_surface, MethodLexicon};
use crate::ingest::BiblioRecord;

/// One lexicon hit. Offsets are character (not byte) positions into the
/// searched text returned by [`search_text`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodMention {
    pub doc_id: String,
    pub canonical: String,
    pub surface: String,
    pub char_start: usize,
    pub char_end: usize,
}

/// The buffer the rule matcher scans: title and abstract, normalized.
pub fn search_text(doc: &BiblioRecord) -> String {
    normalize_surface(&doc.text())
}

fn is_word_char(c: Option<char>) -> bool {
    c.is_some_and(char::is_alphanumeric)
}

/// Byte spans `(start, end, pattern index)` of all whole-word matches in
/// `text`, reduced to the leftmost-longest non-overlapping selection.
pub(crate) fn scan(text: &str, lexicon: &MethodLexicon) -> Vec<(usize, usize, usize)> {
    let mut hits: Vec<(usize, usize, usize)> = lexicon
        .automaton()
        .find_overlapping_iter(text)
        .filter(|m| {
            let before = text[..m.start()].chars().next_back();
            let after = text[m.end()..].chars().next();
            !is_word_char(before) && !is_word_char(after)
        })
        .map(|m| (m.start(), m.end(), m.pattern().as_usize()))
        .collect();
    hits.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)).then(a.2.cmp(&b.2)));

    let mut chosen = Vec::new();
    let mut frontier = 0;
    for hit in hits {
        if hit.0 >= frontier {
            frontier = hit.1;
            chosen.push(hit);
        }
    }
    chosen
}

/// Rule-stage extraction over `title + " " + abstract`.
///
/// Returns the distinct canonicals (a method counts once per document) and
/// every selected mention in text order.
pub fn rule_extract(
    doc: &BiblioRecord,
    lexicon: &MethodLexicon,
) -> (BTreeSet<String>, Vec<MethodMention>) {
    let text = search_text(doc);
    let spans = scan(&text, lexicon);

    let mut methods = BTreeSet::new();
    let mut mentions = Vec::with_capacity(spans.len());
    // running byte -> char offset conversion; spans are sorted by start
    let (mut byte_pos, mut char_pos) = (0usize, 0usize);
    for (start, end, pat) in spans {
        char_pos += text[byte_pos..start].chars().count();
        byte_pos = start;
        let surface = &text[start..end];
        let canonical = lexicon
            .canonical_for(lexicon.pattern(pat))
            .expect("every pattern comes from the variant table")
            .to_string();
        methods.insert(canonical.clone());
        mentions.push(MethodMention {
            doc_id: doc.id.clone(),
            canonical,
            surface: surface.to_string(),
            char_start: char_pos,
            char_end: char_pos + surface.chars().count(),
        });
    }
    (methods, mentions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::rec;

    fn doc(title: &str, abs: &str) -> BiblioRecord {
        let mut r = rec("d1", title, 2000);
        r.abstract_text = abs.to_string();
        r
    }

    fn lex() -> MethodLexicon {
        MethodLexicon::from_entries([
            ("topic modeling", vec!["lda", "latent dirichlet allocation"]),
            ("gis", vec![]),
            ("dirichlet process", vec!["dirichlet"]),
        ])
        .unwrap()
    }

    #[test]
    fn finds_distinct_methods() {
        let (set, mentions) = rule_extract(&doc("", "we apply LDA and GIS"), &lex());
        assert_eq!(
            set,
            BTreeSet::from(["gis".to_string(), "topic modeling".to_string()])
        );
        assert_eq!(mentions.len(), 2);
    }

    #[test]
    fn empty_text_finds_nothing() {
        let (set, mentions) = rule_extract(&doc("", ""), &lex());
        assert!(set.is_empty() && mentions.is_empty());
    }

    #[test]
    fn longest_match_wins_over_nested_variant() {
        let (set, mentions) = rule_extract(&doc("", "latent dirichlet allocation"), &lex());
        assert_eq!(set, BTreeSet::from(["topic modeling".to_string()]));
        assert_eq!(mentions.len(), 1);
    }

    #[test]
    fn respects_word_boundaries() {
        let (set, _) = rule_extract(&doc("", "the ldap server and slda"), &lex());
        assert!(set.is_empty());
        let (set, _) = rule_extract(&doc("", "LDA-based models"), &lex());
        assert_eq!(set.len(), 1);
    }

    #[test]
    fn mention_offsets_slice_the_search_text() {
        let d = doc("Café GIS", "über   LDA  and gis");
        let text = search_text(&d);
        let chars: Vec<char> = text.chars().collect();
        let (_, mentions) = rule_extract(&d, &lex());
        assert_eq!(mentions.len(), 3);
        for m in mentions {
            assert!(m.char_start < m.char_end);
            let slice: String = chars[m.char_start..m.char_end].iter().collect();
            assert_eq!(slice, m.surface);
        }
    }

    #[test]
    fn repeated_mentions_count_once() {
        let (set, mentions) = rule_extract(&doc("GIS", "gis gis"), &lex());
        assert_eq!(set.len(), 1);
        assert_eq!(mentions.len(), 3);
    }
}
