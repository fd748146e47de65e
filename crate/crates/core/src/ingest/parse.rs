//! Readers for the three supported export shapes.
//!
//! `wos_tab` uses the Web of Science tab-delimited field tags:
//!
//! | tag | field    |
//! |-----|----------|
//! | UT  | id       |
//! | TI  | title    |
//! | AB  | abstract |
//! | PY  | year     |
//! | DI  | doi      |
//! | SO  | venue    |
//! | AF  | authors (full names, `; `-separated; falls back to AU) |
//!
//! All other columns are ignored.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{normalize_record, BiblioRecord, InputFormat, Source};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "detail")]
pub enum RejectReason {
    Malformed(String),
    BadYear,
    MissingTitleAndDoi,
    DuplicateId,
    UnknownSource(String),
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RejectReason::Malformed(m) => write!(f, "malformed row: {m}"),
            RejectReason::BadYear => f.write_str("bad year"),
            RejectReason::MissingTitleAndDoi => f.write_str("missing title and doi"),
            RejectReason::DuplicateId => f.write_str("duplicate id"),
            RejectReason::UnknownSource(s) => write!(f, "unknown source `{s}`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reject {
    /// 1-based line (jsonl) or data-row (csv, wos_tab) number.
    pub row: usize,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParseOutcome {
    pub records: Vec<BiblioRecord>,
    pub rejects: Vec<Reject>,
}

impl ParseOutcome {
    pub fn rows(&self) -> usize {
        self.records.len() + self.rejects.len()
    }
}

#[derive(Default)]
struct RawRow {
    id: Option<String>,
    source: Option<String>,
    doi: Option<String>,
    title: Option<String>,
    abstract_text: Option<String>,
    year: Option<String>,
    venue: Option<String>,
    authors: Vec<String>,
}

pub fn parse_records(path: &Path, format: InputFormat) -> Result<ParseOutcome> {
    let text = crate::io::read_utf8(path)?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "rec".to_string());
    Ok(parse_str(&text, format, &stem))
}

/// Parses export text. Rows without an id get `<id_prefix>:<row>`.
pub fn parse_str(text: &str, format: InputFormat, id_prefix: &str) -> ParseOutcome {
    let rows: Vec<(usize, Result<RawRow, String>)> = match format {
        InputFormat::Jsonl => jsonl_rows(text),
        InputFormat::Csv => delimited_rows(text, b',', false),
        InputFormat::WosTab => delimited_rows(text, b'\t', true),
    };
    let default_source = match format {
        InputFormat::WosTab => Source::Wos,
        _ => Source::Generic,
    };

    let mut out = ParseOutcome::default();
    let mut ids = HashSet::new();
    for (row, raw) in rows {
        let built = raw
            .map_err(RejectReason::Malformed)
            .and_then(|raw| finish_row(raw, row, default_source, id_prefix));
        match built {
            Ok(rec) if !ids.insert(rec.id.clone()) => out.rejects.push(Reject {
                row,
                reason: RejectReason::DuplicateId,
            }),
            Ok(rec) => out.records.push(rec),
            Err(reason) => out.rejects.push(Reject { row, reason }),
        }
    }
    out
}

fn non_empty(s: Option<String>) -> Option<String> {
    s.map(|v| v.trim().to_string()).filter(|v| !v.is_empty())
}

fn finish_row(
    raw: RawRow,
    row: usize,
    default_source: Source,
    id_prefix: &str,
) -> Result<BiblioRecord, RejectReason> {
    let title = non_empty(raw.title).unwrap_or_default();
    let doi = non_empty(raw.doi);
    if title.is_empty() && doi.is_none() {
        return Err(RejectReason::MissingTitleAndDoi);
    }
    let year = raw
        .year
        .as_deref()
        .map(str::trim)
        .and_then(|y| y.parse::<i32>().ok())
        .filter(|y| (1000..=3000).contains(y))
        .ok_or(RejectReason::BadYear)?;
    let source = match non_empty(raw.source) {
        None => default_source,
        Some(s) => s.parse().map_err(|_| RejectReason::UnknownSource(s))?,
    };
    let id = non_empty(raw.id).unwrap_or_else(|| format!("{id_prefix}:{row}"));
    Ok(normalize_record(&BiblioRecord {
        id,
        source,
        doi,
        title,
        abstract_text: raw.abstract_text.unwrap_or_default(),
        year,
        venue: non_empty(raw.venue),
        authors: raw.authors,
    }))
}

fn split_authors(s: &str) -> Vec<String> {
    s.split(';')
        .map(|a| a.trim().to_string())
        .filter(|a| !a.is_empty())
        .collect()
}

fn jsonl_rows(text: &str) -> Vec<(usize, Result<RawRow, String>)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| (i + 1, jsonl_row(line)))
        .collect()
}

fn jsonl_row(line: &str) -> Result<RawRow, String> {
    let value: Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let obj = value.as_object().ok_or("line is not a JSON object")?;

    let text_field = |key: &str| -> Result<Option<String>, String> {
        match obj.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(Value::Number(n)) => Ok(Some(n.to_string())),
            Some(_) => Err(format!("field `{key}` must be a string")),
        }
    };
    let authors = match obj.get("authors") {
        None | Some(Value::Null) => vec![],
        Some(Value::String(s)) => split_authors(s),
        Some(Value::Array(items)) => items
            .iter()
            .map(|a| {
                a.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| "authors must be strings".to_string())
            })
            .collect::<Result<_, _>>()?,
        Some(_) => return Err("field `authors` must be an array".into()),
    };

    Ok(RawRow {
        id: text_field("id")?,
        source: text_field("source")?,
        doi: text_field("doi")?,
        title: text_field("title")?,
        abstract_text: text_field("abstract")?,
        year: text_field("year")?,
        venue: text_field("venue")?,
        authors,
    })
}

fn delimited_rows(text: &str, delimiter: u8, wos: bool) -> Vec<(usize, Result<RawRow, String>)> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .quoting(!wos)
        .from_reader(text.as_bytes());

    let headers: Vec<String> = match reader.headers() {
        Ok(h) => h.iter().map(|s| s.trim().to_ascii_lowercase()).collect(),
        Err(_) => return vec![],
    };
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (id, source, doi, title, abs, year, venue, authors, authors_short) = if wos {
        (
            col("ut"),
            None,
            col("di"),
            col("ti"),
            col("ab"),
            col("py"),
            col("so"),
            col("af"),
            col("au"),
        )
    } else {
        (
            col("id"),
            col("source"),
            col("doi"),
            col("title"),
            col("abstract"),
            col("year"),
            col("venue"),
            col("authors"),
            None,
        )
    };

    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 1;
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                out.push((row, Err(e.to_string())));
                continue;
            }
        };
        if rec.iter().all(|f| f.trim().is_empty()) {
            // blank trailing lines in exports are not rows
            continue;
        }
        let get = |c: Option<usize>| c.and_then(|c| rec.get(c)).map(str::to_string);
        let mut author_list = get(authors).map(|a| split_authors(&a)).unwrap_or_default();
        if author_list.is_empty() {
            author_list = get(authors_short)
                .map(|a| split_authors(&a))
                .unwrap_or_default();
        }
        out.push((
            row,
            Ok(RawRow {
                id: get(id),
                source: get(source),
                doi: get(doi),
                title: get(title),
                abstract_text: get(abs),
                year: get(year),
                venue: get(venue),
                authors: author_list,
            }),
        ));
    }
    out
}
