//! Topic-method compositions.
//!
//! For method i and topic j, with D_i the documents using i, D_j the
//! documents whose dominant topic is j, and D_ij the documents doing both:
//!
//! ```text
//! C_ij = D_ij / (D_i * D_j)
//! R_ij = C_ij if C_ij > σ, else 0
//! ```
//!
//! Pairs below the threshold stay in the table with R_ij = 0 so threshold
//! sensitivity can be re-read without recounting; only retained pairs enter
//! the graphs.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extract::MethodSets;
use crate::graph_export::{AttrType, AttrValue, ExportGraph};
use crate::topics::TopicAssignment;

pub const DEFAULT_SIGMA: f64 = 0.001;

/// Thresholds reported alongside every table.
pub const SENSITIVITY_SIGMAS: [f64; 7] = [0.0, 0.0005, 0.001, 0.005, 0.01, 0.05, 0.1];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TmcPair {
    pub method: String,
    pub topic: usize,
    pub d_i: usize,
    pub d_j: usize,
    pub d_ij: usize,
    pub c_ij: f64,
    pub r_ij: f64,
}

impl TmcPair {
    pub fn retained(&self) -> bool {
        self.r_ij > 0.0
    }

    pub fn label(&self) -> String {
        format!("{} @ {}", self.method, self.topic)
    }
}

/// Canonical order: d_ij desc, c_ij desc, method asc, topic asc.
pub fn canonical_order(a: &TmcPair, b: &TmcPair) -> Ordering {
    b.d_ij
        .cmp(&a.d_ij)
        .then_with(|| b.c_ij.partial_cmp(&a.c_ij).unwrap_or(Ordering::Equal))
        .then_with(|| a.method.cmp(&b.method))
        .then_with(|| a.topic.cmp(&b.topic))
}

/// How the method and topic sides of the corpus overlap.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coverage {
    pub docs_with_methods: usize,
    pub docs_with_topic: usize,
    pub docs_with_both: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TmcTable {
    pub sigma: f64,
    pub corpus_size: usize,
    pub pairs: Vec<TmcPair>,
    pub coverage: Coverage,
}

impl TmcTable {
    pub fn retained(&self) -> impl Iterator<Item = &TmcPair> {
        self.pairs.iter().filter(|p| p.retained())
    }

    pub fn retained_count(&self) -> usize {
        self.retained().count()
    }

    /// Number of pairs that would be retained at each of `sigmas`.
    pub fn sensitivity(&self, sigmas: &[f64]) -> Vec<(f64, usize)> {
        sigmas
            .iter()
            .map(|&s| (s, self.pairs.iter().filter(|p| p.c_ij > s).count()))
            .collect()
    }
}

/// D_i per method.
pub fn count_method_docs(extractions: &MethodSets) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for methods in extractions.values() {
        for m in methods {
            *counts.entry(m.clone()).or_insert(0) += 1;
        }
    }
    counts
}

fn index_assignments(assignments: &[TopicAssignment]) -> Result<HashMap<&str, usize>> {
    let mut by_doc = HashMap::with_capacity(assignments.len());
    for a in assignments {
        if by_doc.insert(a.doc_id.as_str(), a.topic_id).is_some() {
            return Err(Error::input(format!(
                "document `{}` has more than one topic assignment",
                a.doc_id
            )));
        }
    }
    Ok(by_doc)
}

/// D_ij per (method, topic); documents missing either side contribute
/// nothing.
pub fn cooccurrence_counts(
    extractions: &MethodSets,
    assignments: &[TopicAssignment],
) -> Result<(BTreeMap<(String, usize), usize>, Coverage)> {
    let topic_of = index_assignments(assignments)?;
    let mut counts = BTreeMap::new();
    let mut coverage = Coverage {
        docs_with_methods: extractions.values().filter(|m| !m.is_empty()).count(),
        docs_with_topic: topic_of.len(),
        docs_with_both: 0,
    };
    for (doc, methods) in extractions {
        let Some(&topic) = topic_of.get(doc.as_str()) else {
            continue;
        };
        if !methods.is_empty() {
            coverage.docs_with_both += 1;
        }
        for m in methods {
            *counts.entry((m.clone(), topic)).or_insert(0) += 1;
        }
    }
    Ok((counts, coverage))
}

/// C_ij = d_ij / (d_i · d_j)
pub fn intensity(d_ij: usize, d_i: usize, d_j: usize) -> Result<f64> {
    if d_i == 0 || d_j == 0 {
        return Err(Error::Logic(format!(
            "intensity with zero marginal (d_i = {d_i}, d_j = {d_j})"
        )));
    }
    if d_ij > d_i.min(d_j) {
        return Err(Error::Logic(format!(
            "co-occurrence {d_ij} exceeds marginals ({d_i}, {d_j})"
        )));
    }
    Ok(d_ij as f64 / (d_i as f64 * d_j as f64))
}

pub fn build_tmc_table(
    extractions: &MethodSets,
    assignments: &[TopicAssignment],
    sigma: f64,
) -> Result<TmcTable> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::config(format!(
            "sigma must be a non-negative number, got {sigma}"
        )));
    }
    let d_i = count_method_docs(extractions);
    let mut d_j: HashMap<usize, usize> = HashMap::new();
    for a in assignments {
        *d_j.entry(a.topic_id).or_insert(0) += 1;
    }
    let (co, coverage) = cooccurrence_counts(extractions, assignments)?;

    let mut pairs = Vec::with_capacity(co.len());
    for ((method, topic), d_ij) in co {
        let di = d_i[&method];
        let dj = d_j[&topic];
        let c_ij = intensity(d_ij, di, dj)?;
        pairs.push(TmcPair {
            method,
            topic,
            d_i: di,
            d_j: dj,
            d_ij,
            c_ij,
            r_ij: if c_ij > sigma { c_ij } else { 0.0 },
        });
    }
    pairs.sort_by(canonical_order);

    let corpus_size = extractions
        .keys()
        .map(String::as_str)
        .chain(assignments.iter().map(|a| a.doc_id.as_str()))
        .collect::<HashSet<_>>()
        .len();
    Ok(TmcTable {
        sigma,
        corpus_size,
        pairs,
        coverage,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Topic,
    Method,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BipartiteNode {
    pub kind: NodeKind,
    pub label: String,
    pub doc_count: usize,
}

/// Topic-method graph over retained pairs, edges weighted by c_ij.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BipartiteGraph {
    /// Methods first (name order), then topics (id order).
    pub nodes: Vec<BipartiteNode>,
    pub edges: Vec<(usize, usize, f64)>,
}

impl BipartiteGraph {
    pub fn node_id(&self, idx: usize) -> String {
        let n = &self.nodes[idx];
        match n.kind {
            NodeKind::Method => format!("m:{}", n.label),
            NodeKind::Topic => format!("t:{}", n.label),
        }
    }

    pub fn to_export(&self) -> ExportGraph {
        ExportGraph {
            node_attrs: vec![
                ("kind", AttrType::String),
                ("label", AttrType::String),
                ("doc_count", AttrType::Int),
            ],
            edge_attrs: vec![("weight", AttrType::Double)],
            nodes: (0..self.nodes.len())
                .map(|i| {
                    let n = &self.nodes[i];
                    let kind = match n.kind {
                        NodeKind::Topic => "topic",
                        NodeKind::Method => "method",
                    };
                    (
                        self.node_id(i),
                        vec![
                            AttrValue::Str(kind.into()),
                            AttrValue::Str(n.label.clone()),
                            AttrValue::Int(n.doc_count as i64),
                        ],
                    )
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|&(a, b, w)| (self.node_id(a), self.node_id(b), vec![AttrValue::Double(w)]))
                .collect(),
        }
    }
}

pub fn export_bipartite(pairs: &[TmcPair]) -> BipartiteGraph {
    let retained: Vec<&TmcPair> = pairs.iter().filter(|p| p.retained()).collect();
    let methods: BTreeMap<&str, usize> = retained
        .iter()
        .map(|p| (p.method.as_str(), p.d_i))
        .collect();
    let topics: BTreeMap<usize, usize> = retained.iter().map(|p| (p.topic, p.d_j)).collect();

    let mut nodes = Vec::with_capacity(methods.len() + topics.len());
    let mut method_idx = HashMap::new();
    for (m, &d) in &methods {
        method_idx.insert(*m, nodes.len());
        nodes.push(BipartiteNode {
            kind: NodeKind::Method,
            label: m.to_string(),
            doc_count: d,
        });
    }
    let mut topic_idx = HashMap::new();
    for (&t, &d) in &topics {
        topic_idx.insert(t, nodes.len());
        nodes.push(BipartiteNode {
            kind: NodeKind::Topic,
            label: t.to_string(),
            doc_count: d,
        });
    }
    let edges = retained
        .iter()
        .map(|p| (method_idx[p.method.as_str()], topic_idx[&p.topic], p.r_ij))
        .collect();
    BipartiteGraph { nodes, edges }
}

pub fn tmc_csv(pairs: &[TmcPair]) -> Result<String> {
    crate::io::csv_string(
        &[
            "method", "topic_id", "d_i", "d_j", "d_ij", "c_ij", "retained",
        ],
        |w| {
            for p in pairs {
                w.write_record([
                    p.method.clone(),
                    p.topic.to_string(),
                    p.d_i.to_string(),
                    p.d_j.to_string(),
                    p.d_ij.to_string(),
                    p.c_ij.to_string(),
                    p.retained().to_string(),
                ])?;
            }
            Ok(())
        },
    )
}

#[derive(Deserialize)]
struct TmcRow {
    method: String,
    topic_id: usize,
    d_i: usize,
    d_j: usize,
    d_ij: usize,
    c_ij: f64,
    retained: bool,
}

pub fn parse_tmc_csv(text: &str) -> Result<Vec<TmcPair>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut pairs = Vec::new();
    for row in reader.deserialize::<TmcRow>() {
        let row = row?;
        pairs.push(TmcPair {
            method: row.method,
            topic: row.topic_id,
            d_i: row.d_i,
            d_j: row.d_j,
            d_ij: row.d_ij,
            c_ij: row.c_ij,
            r_ij: if row.retained { row.c_ij } else { 0.0 },
        });
    }
    Ok(pairs)
}

pub fn read_tmc_csv(path: &Path) -> Result<Vec<TmcPair>> {
    parse_tmc_csv(&crate::io::read_utf8(path)?)
        .map_err(|e| Error::input(format!("{}: {e}", path.display())))
}

/// Methods seen in any pair, handy for reports.
pub fn distinct_methods(pairs: &[TmcPair]) -> BTreeSet<&str> {
    pairs.iter().map(|p| p.method.as_str()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(items: &[(&str, &[&str])]) -> MethodSets {
        items
            .iter()
            .map(|(d, ms)| (d.to_string(), ms.iter().map(|m| m.to_string()).collect()))
            .collect()
    }

    fn asg(items: &[(&str, usize)]) -> Vec<TopicAssignment> {
        items
            .iter()
            .map(|(d, t)| TopicAssignment {
                doc_id: d.to_string(),
                topic_id: *t,
            })
            .collect()
    }

    #[test]
    fn method_doc_counts() {
        let c = count_method_docs(&ex(&[("d1", &["m1", "m2"]), ("d2", &["m1"])]));
        assert_eq!(
            c,
            BTreeMap::from([("m1".to_string(), 2), ("m2".to_string(), 1)])
        );
        assert!(count_method_docs(&MethodSets::new()).is_empty());
    }

    #[test]
    fn cooccurrence_ignores_unassigned_docs() {
        let (c, cov) =
            cooccurrence_counts(&ex(&[("d1", &["m1"]), ("d2", &["m1"])]), &asg(&[("d1", 0)]))
                .unwrap();
        assert_eq!(c, BTreeMap::from([(("m1".to_string(), 0), 1)]));
        assert_eq!(cov.docs_with_both, 1);
        assert_eq!(cov.docs_with_methods, 2);
    }

    #[test]
    fn duplicate_assignment_is_rejected() {
        assert!(cooccurrence_counts(&MethodSets::new(), &asg(&[("d1", 0), ("d1", 1)])).is_err());
    }

    #[test]
    fn intensity_values() {
        assert_eq!(intensity(2, 4, 5).unwrap(), 0.1);
        assert_eq!(intensity(0, 3, 7).unwrap(), 0.0);
        assert_eq!(intensity(1, 1, 1).unwrap(), 1.0);
        assert!(intensity(1, 0, 1).is_err());
        assert!(intensity(1, 1, 0).is_err());
        assert!(intensity(3, 2, 5).is_err());
    }

    #[test]
    fn below_threshold_pair_stays_unretained() {
        // 40 docs use the method, 50 docs sit in topic 0, one doc does both:
        // c = 1 / (40 * 50) = 0.0005
        let mut e = MethodSets::new();
        for i in 0..40 {
            e.insert(format!("doc{i}"), ["text mining".to_string()].into());
        }
        let a: Vec<_> = (39..89)
            .map(|i| TopicAssignment {
                doc_id: format!("doc{i}"),
                topic_id: 0,
            })
            .collect();
        let t = build_tmc_table(&e, &a, DEFAULT_SIGMA).unwrap();
        assert_eq!(t.pairs.len(), 1);
        assert_eq!(t.pairs[0].c_ij, 0.0005);
        assert_eq!(t.pairs[0].r_ij, 0.0);
        assert_eq!(t.retained_count(), 0);
    }

    #[test]
    fn zero_sigma_retains_everything() {
        let t = build_tmc_table(
            &ex(&[("d1", &["a", "b"]), ("d2", &["a"])]),
            &asg(&[("d1", 0), ("d2", 1)]),
            0.0,
        )
        .unwrap();
        assert_eq!(t.retained_count(), t.pairs.len());
        assert_eq!(t.pairs.len(), 3);
    }

    #[test]
    fn boundary_value_is_excluded() {
        let t = build_tmc_table(
            &ex(&[("d1", &["a"]), ("d2", &["a"])]),
            &asg(&[("d1", 0), ("d2", 0)]),
            0.5,
        )
        .unwrap();
        assert_eq!(t.pairs[0].c_ij, 0.5);
        assert!(!t.pairs[0].retained());
    }

    #[test]
    fn negative_sigma_is_config_error() {
        assert_eq!(
            build_tmc_table(&MethodSets::new(), &[], -1.0)
                .unwrap_err()
                .exit_code(),
            2
        );
    }

    #[test]
    fn bipartite_counts() {
        let one = build_tmc_table(&ex(&[("d1", &["a"])]), &asg(&[("d1", 0)]), 0.0).unwrap();
        let g = export_bipartite(&one.pairs);
        assert_eq!((g.nodes.len(), g.edges.len()), (2, 1));
        assert_eq!(g.edges[0].2, 1.0);
        let two = build_tmc_table(&ex(&[("d1", &["a", "b"])]), &asg(&[("d1", 0)]), 0.0).unwrap();
        let g = export_bipartite(&two.pairs);
        assert_eq!((g.nodes.len(), g.edges.len()), (3, 2));
        let empty = export_bipartite(&[]);
        assert!(empty.nodes.is_empty() && empty.edges.is_empty());
    }

    #[test]
    fn csv_round_trip() {
        let t = build_tmc_table(
            &ex(&[("d1", &["a, b", "c"]), ("d2", &["c"]), ("d3", &["c"])]),
            &asg(&[("d1", 0), ("d2", 1), ("d3", 1)]),
            0.4,
        )
        .unwrap();
        let text = tmc_csv(&t.pairs).unwrap();
        assert!(text.starts_with("method,topic_id,d_i,d_j,d_ij,c_ij,retained\n"));
        assert_eq!(parse_tmc_csv(&text).unwrap(), t.pairs);
    }

    #[test]
    fn table_is_canonically_sorted() {
        let t = build_tmc_table(
            &ex(&[("d1", &["b", "a"]), ("d2", &["b"]), ("d3", &["a"])]),
            &asg(&[("d1", 0), ("d2", 0), ("d3", 1)]),
            0.0,
        )
        .unwrap();
        let order: Vec<_> = t
            .pairs
            .iter()
            .map(|p| (p.method.as_str(), p.topic, p.d_ij))
            .collect();
        assert_eq!(order, [("b", 0, 2), ("a", 1, 1), ("a", 0, 1)]);
    }
}
