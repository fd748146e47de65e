//! Bibliographic ingest: parsing exports into [`BiblioRecord`]s, cleaning,
//! year filtering and cross-source deduplication.
//!
//! The canonical corpus file is JSON Lines with one record per line and the
//! keys `id, source, doi, title, abstract, year, venue, authors`.

mod dedup;
mod parse;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dedup::{deduplicate, normalize_title_key, DedupReport, Merge, MergeReason};
pub use parse::{parse_records, parse_str, ParseOutcome, Reject, RejectReason};

pub const DEFAULT_YEAR_MIN: i32 = 1992;
pub const DEFAULT_YEAR_MAX: i32 = 2022;
pub const DEFAULT_TITLE_SIM: f64 = 0.90;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Wos,
    Crossref,
    Dimensions,
    Generic,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Wos => "wos",
            Source::Crossref => "crossref",
            Source::Dimensions => "dimensions",
            Source::Generic => "generic",
        }
    }
}

impl FromStr for Source {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "wos" | "web of science" => Ok(Source::Wos),
            "crossref" => Ok(Source::Crossref),
            "dimensions" => Ok(Source::Dimensions),
            "generic" | "" => Ok(Source::Generic),
            other => Err(format!("unknown source `{other}`")),
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One cleaned bibliographic document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BiblioRecord {
    pub id: String,
    pub source: Source,
    pub doi: Option<String>,
    pub title: String,
    #[serde(rename = "abstract", default)]
    pub abstract_text: String,
    pub year: i32,
    #[serde(default)]
    pub venue: Option<String>,
    #[serde(default)]
    pub authors: Vec<String>,
}

impl BiblioRecord {
    /// Title and abstract joined by one space, the text every extractor reads.
    pub fn text(&self) -> String {
        let mut s = String::with_capacity(self.title.len() + self.abstract_text.len() + 1);
        s.push_str(&self.title);
        s.push(' ');
        s.push_str(&self.abstract_text);
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputFormat {
    Jsonl,
    Csv,
    WosTab,
}

impl FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(InputFormat::Jsonl),
            "csv" => Ok(InputFormat::Csv),
            "wos_tab" => Ok(InputFormat::WosTab),
            other => Err(Error::config(format!(
                "unknown input format `{other}` (expected jsonl, csv or wos_tab)"
            ))),
        }
    }
}

pub(crate) fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Normalizes a DOI string. Returns `None` when nothing DOI-shaped remains.
pub fn normalize_doi(raw: &str) -> Option<String> {
    let mut doi = raw.trim().to_lowercase();
    for prefix in [
        "https://doi.org/",
        "http://doi.org/",
        "https://dx.doi.org/",
        "http://dx.doi.org/",
        "doi.org/",
        "doi:",
    ] {
        if let Some(rest) = doi.strip_prefix(prefix) {
            doi = rest.trim().to_string();
            break;
        }
    }
    if doi.starts_with("10.") {
        Some(doi)
    } else {
        None
    }
}

/// Total, idempotent cleanup of a single record.
pub fn normalize_record(r: &BiblioRecord) -> BiblioRecord {
    BiblioRecord {
        id: r.id.trim().to_string(),
        source: r.source,
        doi: r.doi.as_deref().and_then(normalize_doi),
        title: collapse_whitespace(&r.title),
        abstract_text: collapse_whitespace(&r.abstract_text),
        year: r.year,
        venue: r
            .venue
            .as_deref()
            .map(collapse_whitespace)
            .filter(|v| !v.is_empty()),
        authors: r
            .authors
            .iter()
            .map(|a| a.trim().to_string())
            .filter(|a| !a.is_empty())
            .collect(),
    }
}

/// Keeps records with `min_year <= year <= max_year`, preserving order.
pub fn filter_by_year(
    records: &[BiblioRecord],
    min_year: i32,
    max_year: i32,
) -> Result<Vec<BiblioRecord>> {
    if min_year > max_year {
        return Err(Error::config(format!(
            "year-min {min_year} is greater than year-max {max_year}"
        )));
    }
    Ok(records
        .iter()
        .filter(|r| (min_year..=max_year).contains(&r.year))
        .cloned()
        .collect())
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub count: usize,
    pub per_year: BTreeMap<i32, usize>,
    pub per_source: BTreeMap<Source, usize>,
}

pub fn corpus_stats(records: &[BiblioRecord]) -> CorpusStats {
    let mut stats = CorpusStats {
        count: records.len(),
        ..Default::default()
    };
    for r in records {
        *stats.per_year.entry(r.year).or_default() += 1;
        *stats.per_source.entry(r.source).or_default() += 1;
    }
    stats
}

/// Reads a canonical corpus file written by the ingest stage.
pub fn read_corpus(path: &std::path::Path) -> Result<Vec<BiblioRecord>> {
    let text = crate::io::read_utf8(path)?;
    let mut out = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: BiblioRecord = serde_json::from_str(line)
            .map_err(|e| Error::input(format!("{} line {}: {e}", path.display(), i + 1)))?;
        if !seen.insert(rec.id.clone()) {
            return Err(Error::input(format!(
                "{}: duplicate record id `{}`",
                path.display(),
                rec.id
            )));
        }
        out.push(rec);
    }
    Ok(out)
}

#[cfg(test)]
pub(crate) fn rec(id: &str, title: &str, year: i32) -> BiblioRecord {
    BiblioRecord {
        id: id.to_string(),
        source: Source::Generic,
        doi: None,
        title: title.to_string(),
        abstract_text: String::new(),
        year,
        venue: None,
        authors: vec![],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doi_prefix_and_case_are_normalized() {
        let mut r = rec("a", "t", 2000);
        r.doi = Some("HTTPS://DOI.ORG/10.1000/ABC ".into());
        assert_eq!(normalize_record(&r).doi.as_deref(), Some("10.1000/abc"));
    }

    #[test]
    fn title_whitespace_collapses() {
        let r = rec("a", "A  B\tC", 2000);
        assert_eq!(normalize_record(&r).title, "A B C");
    }

    #[test]
    fn normalize_is_idempotent() {
        let mut r = rec("a", "  Text\n mining ", 2000);
        r.doi = Some("doi:10.5/X".into());
        r.authors = vec![" Li, J. ".into(), "".into()];
        let once = normalize_record(&r);
        assert_eq!(normalize_record(&once), once);
        assert_eq!(once.authors, vec!["Li, J.".to_string()]);
    }

    #[test]
    fn non_doi_strings_are_dropped() {
        assert_eq!(normalize_doi("not a doi"), None);
        assert_eq!(normalize_doi(""), None);
    }

    #[test]
    fn year_bounds_are_inclusive() {
        let rs = vec![
            rec("a", "x", 1991),
            rec("b", "y", 1992),
            rec("c", "z", 2022),
            rec("d", "w", 2023),
        ];
        let kept = filter_by_year(&rs, DEFAULT_YEAR_MIN, DEFAULT_YEAR_MAX).unwrap();
        let ids: Vec<_> = kept.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["b", "c"]);
        assert!(filter_by_year(&[], 1992, 2022).unwrap().is_empty());
    }

    #[test]
    fn inverted_year_bounds_are_config_errors() {
        let err = filter_by_year(&[], 2000, 1999).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn stats_count_years_and_sources() {
        assert_eq!(corpus_stats(&[]), CorpusStats::default());
        let mut rs = vec![
            rec("a", "x", 1992),
            rec("b", "y", 1992),
            rec("c", "z", 2000),
        ];
        rs[2].source = Source::Wos;
        let s = corpus_stats(&rs);
        assert_eq!(s.count, 3);
        assert_eq!(s.per_year, BTreeMap::from([(1992, 2), (2000, 1)]));
        assert_eq!(s.per_source.values().sum::<usize>(), 3);
    }

    #[test]
    fn unknown_format_tag_is_config_error() {
        let err = "bibtex".parse::<InputFormat>().unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
