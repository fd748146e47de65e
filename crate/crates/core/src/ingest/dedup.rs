//! Cross-source duplicate removal.
//!
//! Three passes run in order over the surviving records: identical DOI,
//! identical normalized title within a year, then normalized-Levenshtein
//! title similarity within a year. Each group keeps the record with the
//! longest abstract (ties: smallest id).

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::BiblioRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MergeReason {
    DoiExact,
    TitleExact,
    TitleFuzzy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Merge {
    pub kept_id: String,
    pub removed_id: String,
    pub reason: MergeReason,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DedupReport {
    pub input_count: usize,
    pub output_count: usize,
    pub merges: Vec<Merge>,
}

/// Lowercase, non-alphanumerics replaced by spaces, whitespace collapsed.
pub fn normalize_title_key(title: &str) -> String {
    let mapped: String = title
        .chars()
        .flat_map(|c| {
            if c.is_alphanumeric() {
                c.to_lowercase().collect::<Vec<_>>()
            } else {
                vec![' ']
            }
        })
        .collect();
    super::collapse_whitespace(&mapped)
}

/// Orders records so that the preferred keeper sorts first.
fn keeper_order(a: &BiblioRecord, b: &BiblioRecord) -> Ordering {
    let la = a.abstract_text.chars().count();
    let lb = b.abstract_text.chars().count();
    lb.cmp(&la).then_with(|| a.id.cmp(&b.id))
}

pub fn deduplicate(
    records: &[BiblioRecord],
    title_sim_threshold: f64,
) -> Result<(Vec<BiblioRecord>, DedupReport)> {
    if !(0.0..=1.0).contains(&title_sim_threshold) {
        return Err(Error::config(format!(
            "title similarity threshold {title_sim_threshold} outside [0, 1]"
        )));
    }

    let mut alive: Vec<bool> = vec![true; records.len()];
    let mut merges = Vec::new();

    // (a) identical DOI
    let mut by_doi: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        if let Some(doi) = r.doi.as_deref().filter(|d| !d.is_empty()) {
            by_doi.entry(doi).or_default().push(i);
        }
    }
    collapse_groups(
        records,
        by_doi.into_values(),
        MergeReason::DoiExact,
        &mut alive,
        &mut merges,
    );

    // (b) identical normalized title + year
    let keys: Vec<String> = records
        .iter()
        .map(|r| normalize_title_key(&r.title))
        .collect();
    let mut by_title: BTreeMap<(&str, i32), Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        if alive[i] && !keys[i].is_empty() {
            by_title
                .entry((keys[i].as_str(), r.year))
                .or_default()
                .push(i);
        }
    }
    collapse_groups(
        records,
        by_title.into_values(),
        MergeReason::TitleExact,
        &mut alive,
        &mut merges,
    );

    // (c) fuzzy title within the same year; connected components of the
    // similarity relation so the outcome does not depend on input order
    let mut by_year: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        if alive[i] && !keys[i].is_empty() {
            by_year.entry(r.year).or_default().push(i);
        }
    }
    let mut components = Vec::new();
    for (_, mut members) in by_year {
        members.sort_by(|&a, &b| records[a].id.cmp(&records[b].id));
        let chars: Vec<Vec<char>> = members.iter().map(|&i| keys[i].chars().collect()).collect();
        let mut uf = UnionFind::new(members.len());
        for x in 0..members.len() {
            for y in (x + 1)..members.len() {
                if title_similarity_at_least(&chars[x], &chars[y], title_sim_threshold) {
                    uf.union(x, y);
                }
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (x, &i) in members.iter().enumerate() {
            groups.entry(uf.find(x)).or_default().push(i);
        }
        components.extend(groups.into_values());
    }
    collapse_groups(
        records,
        components,
        MergeReason::TitleFuzzy,
        &mut alive,
        &mut merges,
    );

    let kept: Vec<BiblioRecord> = records
        .iter()
        .zip(&alive)
        .filter(|(_, &a)| a)
        .map(|(r, _)| r.clone())
        .collect();
    let report = DedupReport {
        input_count: records.len(),
        output_count: kept.len(),
        merges,
    };
    debug_assert_eq!(
        report.output_count,
        report.input_count - report.merges.len()
    );
    debug_assert_eq!(
        report
            .merges
            .iter()
            .map(|m| &m.removed_id)
            .collect::<HashSet<_>>()
            .len(),
        report.merges.len()
    );
    Ok((kept, report))
}

fn collapse_groups(
    records: &[BiblioRecord],
    groups: impl IntoIterator<Item = Vec<usize>>,
    reason: MergeReason,
    alive: &mut [bool],
    merges: &mut Vec<Merge>,
) {
    for mut group in groups {
        group.retain(|&i| alive[i]);
        if group.len() < 2 {
            continue;
        }
        group.sort_by(|&a, &b| keeper_order(&records[a], &records[b]));
        let keeper = &records[group[0]];
        let mut removed: Vec<usize> = group[1..].to_vec();
        removed.sort_by(|&a, &b| records[a].id.cmp(&records[b].id));
        for i in removed {
            alive[i] = false;
            merges.push(Merge {
                kept_id: keeper.id.clone(),
                removed_id: records[i].id.clone(),
                reason,
            });
        }
    }
}

fn title_similarity_at_least(a: &[char], b: &[char], threshold: f64) -> bool {
    let (short, long) = if a.len() <= b.len() {
        (a.len(), b.len())
    } else {
        (b.len(), a.len())
    };
    if long == 0 {
        return true;
    }
    // edit distance is at least the length gap, which caps the similarity
    if (short as f64) / (long as f64) < threshold {
        return false;
    }
    let sa: String = a.iter().collect();
    let sb: String = b.iter().collect();
    strsim::normalized_levenshtein(&sa, &sb) >= threshold
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::rec;

    fn with_doi(id: &str, title: &str, doi: &str) -> BiblioRecord {
        let mut r = rec(id, title, 2000);
        r.doi = Some(doi.into());
        r
    }

    #[test]
    fn doi_duplicates_merge() {
        let rs = vec![
            with_doi("a", "One", "10.1000/x"),
            with_doi("b", "Other", "10.1000/x"),
        ];
        let (kept, report) = deduplicate(&rs, 0.9).unwrap();
        assert_eq!(kept.len(), 1);
        assert_eq!(report.merges[0].reason, MergeReason::DoiExact);
        assert_eq!(report.merges[0].kept_id, "a");
    }

    #[test]
    fn exact_titles_merge_after_normalization() {
        assert_eq!(
            normalize_title_key("Text mining in DH!"),
            "text mining in dh"
        );
        let rs = vec![
            rec("a", "Text mining in DH!", 2010),
            rec("b", "text mining in dh", 2010),
        ];
        let (kept, report) = deduplicate(&rs, 0.9).unwrap();
        assert_eq!(kept.len(), 1);
        assert_eq!(report.merges[0].reason, MergeReason::TitleExact);
    }

    #[test]
    fn same_title_different_year_is_kept() {
        let rs = vec![rec("a", "Text mining", 2010), rec("b", "Text mining", 2011)];
        let (kept, report) = deduplicate(&rs, 0.9).unwrap();
        assert_eq!(kept.len(), 2);
        assert!(report.merges.is_empty());
    }

    #[test]
    fn one_edit_title_merges_fuzzily() {
        // 20 characters, one substitution
        let a = "abcdefghij klmnopqrs";
        let b = "abcdefghij klmnopqrz";
        assert_eq!(a.chars().count(), 20);
        let rs = vec![rec("a", a, 2010), rec("b", b, 2010)];
        let (kept, report) = deduplicate(&rs, 0.9).unwrap();
        assert_eq!(kept.len(), 1);
        assert_eq!(report.merges[0].reason, MergeReason::TitleFuzzy);
    }

    #[test]
    fn keeper_prefers_longer_abstract() {
        let mut a = with_doi("a", "T", "10.1/z");
        let mut b = with_doi("b", "T", "10.1/z");
        a.abstract_text = "short".into();
        b.abstract_text = "much longer abstract".into();
        let (kept, report) = deduplicate(&[a, b], 0.9).unwrap();
        assert_eq!(kept[0].id, "b");
        assert_eq!(report.merges[0].removed_id, "a");
    }

    #[test]
    fn threshold_outside_unit_interval_fails() {
        assert!(deduplicate(&[], 1.5).is_err());
        assert!(deduplicate(&[], -0.1).is_err());
    }

    #[test]
    fn second_pass_merges_nothing() {
        let rs = vec![
            with_doi("a", "One", "10.1/x"),
            with_doi("b", "Two", "10.1/x"),
            rec("c", "Topic models for poetry", 2001),
            rec("d", "Topic models for poetry!", 2001),
            rec("e", "Topic models for poetri", 2001),
        ];
        let (kept, _) = deduplicate(&rs, 0.9).unwrap();
        let (again, report) = deduplicate(&kept, 0.9).unwrap();
        assert_eq!(again, kept);
        assert!(report.merges.is_empty());
    }
}
