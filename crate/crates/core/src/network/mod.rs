//! TMC network: retained pairs as nodes, linked when they share a topic or
//! a method. Popularity ranking and community detection live here too.

mod community;
mod report;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph_export::{AttrType, AttrValue, ExportGraph};
use crate::tmc::{canonical_order, BipartiteGraph, TmcPair};

pub use community::{
    greedy_communities, modularity, relabel, replay, CommunityPartition, MergeStep, WeightedGraph,
};
pub use report::{
    communities_csv, community_report, history_csv, popularity_csv, CommunitySummary,
};

pub const DEFAULT_TOP_N: usize = 35;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shared {
    Topic,
    Method,
}

impl Shared {
    pub fn as_str(self) -> &'static str {
        match self {
            Shared::Topic => "topic",
            Shared::Method => "method",
        }
    }
}

impl fmt::Display for Shared {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Edge weighting used for community detection.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeWeighting {
    #[default]
    Unweighted,
    /// min(c_ij) of the two endpoints
    SharedIntensity,
}

impl FromStr for EdgeWeighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" | "unweighted" => Ok(Self::Unweighted),
            "shared-intensity" => Ok(Self::SharedIntensity),
            other => Err(Error::config(format!(
                "unknown edge weighting '{other}' (expected none or shared-intensity)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TmcNetwork {
    pub nodes: Vec<TmcPair>,
    /// (a, b, shared) with a < b, sorted
    pub edges: Vec<(usize, usize, Shared)>,
    adjacency: Vec<Vec<usize>>,
}

impl TmcNetwork {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    pub fn labels(&self) -> Vec<String> {
        self.nodes.iter().map(TmcPair::label).collect()
    }

    pub fn to_graph(&self, weighting: EdgeWeighting) -> Result<WeightedGraph> {
        let edges = self
            .edges
            .iter()
            .map(|&(a, b, _)| {
                let w = match weighting {
                    EdgeWeighting::Unweighted => 1.0,
                    EdgeWeighting::SharedIntensity => self.nodes[a].c_ij.min(self.nodes[b].c_ij),
                };
                (a, b, w)
            })
            .collect();
        WeightedGraph::new(self.nodes.len(), edges)
    }

    pub fn to_export(&self, partition: Option<&CommunityPartition>) -> ExportGraph {
        ExportGraph {
            node_attrs: vec![
                ("tmc_label", AttrType::String),
                ("d_ij", AttrType::Int),
                ("community", AttrType::Int),
            ],
            edge_attrs: vec![("shared", AttrType::String)],
            nodes: self
                .nodes
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    let community = partition.map_or(-1, |c| c.assignment[i] as i64);
                    (
                        format!("n{i}"),
                        vec![
                            AttrValue::Str(p.label()),
                            AttrValue::Int(p.d_ij as i64),
                            AttrValue::Int(community),
                        ],
                    )
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|&(a, b, s)| {
                    (
                        format!("n{a}"),
                        format!("n{b}"),
                        vec![AttrValue::Str(s.as_str().into())],
                    )
                })
                .collect(),
        }
    }
}

fn retained_sorted(pairs: &[TmcPair]) -> Vec<TmcPair> {
    let mut out: Vec<TmcPair> = pairs.iter().filter(|p| p.retained()).cloned().collect();
    out.sort_by(canonical_order);
    out
}

fn bucket_edges<K: Ord>(
    nodes: &[TmcPair],
    key: impl Fn(&TmcPair) -> K,
    shared: Shared,
) -> Vec<(usize, usize, Shared)> {
    let mut buckets: BTreeMap<K, Vec<usize>> = BTreeMap::new();
    for (i, p) in nodes.iter().enumerate() {
        buckets.entry(key(p)).or_default().push(i);
    }
    let mut edges = Vec::new();
    for members in buckets.values() {
        for (x, &a) in members.iter().enumerate() {
            for &b in &members[x + 1..] {
                edges.push((a, b, shared));
            }
        }
    }
    edges
}

/// Links every two retained pairs that share their topic or their method.
pub fn build_network(pairs: &[TmcPair]) -> Result<TmcNetwork> {
    let nodes = retained_sorted(pairs);
    if nodes.is_empty() {
        return Err(Error::input(
            "no TMC pair is above sigma; lower sigma to build a network",
        ));
    }
    let seen: BTreeSet<(&str, usize)> =
        nodes.iter().map(|p| (p.method.as_str(), p.topic)).collect();
    if seen.len() != nodes.len() {
        return Err(Error::input("duplicate (method, topic) rows in TMC table"));
    }

    let (by_topic, by_method) = rayon::join(
        || bucket_edges(&nodes, |p| p.topic, Shared::Topic),
        || bucket_edges(&nodes, |p| p.method.clone(), Shared::Method),
    );
    let mut edges: Vec<_> = by_topic.into_iter().chain(by_method).collect();
    edges.sort();

    let mut adjacency = vec![Vec::new(); nodes.len()];
    for &(a, b, _) in &edges {
        adjacency[a].push(b);
        adjacency[b].push(a);
    }
    for list in &mut adjacency {
        list.sort_unstable();
    }
    Ok(TmcNetwork {
        nodes,
        edges,
        adjacency,
    })
}

/// Retained pairs by d_ij desc, c_ij desc, method, topic; first `n`.
pub fn rank_popularity(pairs: &[TmcPair], n: usize) -> Result<Vec<TmcPair>> {
    if n == 0 {
        return Err(Error::config("top-n must be at least 1"));
    }
    let mut out = retained_sorted(pairs);
    out.truncate(n);
    Ok(out)
}

/// Unweighted community-detection view of the topic-method graph.
pub fn bipartite_graph(graph: &BipartiteGraph) -> Result<WeightedGraph> {
    WeightedGraph::new(
        graph.nodes.len(),
        graph.edges.iter().map(|&(a, b, _)| (a, b, 1.0)).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn pair(method: &str, topic: usize, d_ij: usize, c_ij: f64) -> TmcPair {
        TmcPair {
            method: method.into(),
            topic,
            d_i: 10,
            d_j: 10,
            d_ij,
            c_ij,
            r_ij: c_ij,
        }
    }

    #[test]
    fn shared_elements_make_a_path() {
        let pairs = [
            pair("m1", 1, 3, 0.3),
            pair("m2", 1, 2, 0.2),
            pair("m2", 2, 1, 0.1),
        ];
        let net = build_network(&pairs).unwrap();
        assert_eq!(net.edges, [(0, 1, Shared::Topic), (1, 2, Shared::Method)]);
        assert_eq!(net.neighbors(1), [0, 2]);
    }

    #[test]
    fn disjoint_pairs_have_no_edges() {
        let net = build_network(&[pair("a", 0, 1, 0.1), pair("b", 1, 1, 0.1)]).unwrap();
        assert!(net.edges.is_empty());
        assert!(net
            .to_graph(EdgeWeighting::Unweighted)
            .unwrap()
            .edges()
            .is_empty());
    }

    #[test]
    fn empty_retention_suggests_lower_sigma() {
        let mut p = pair("a", 0, 1, 0.1);
        p.r_ij = 0.0;
        let err = build_network(&[p]).unwrap_err();
        assert!(err.to_string().contains("lower sigma"));
    }

    #[test]
    fn network_ignores_row_order() {
        let pairs = vec![
            pair("m1", 1, 3, 0.3),
            pair("m2", 1, 2, 0.2),
            pair("m2", 2, 1, 0.1),
            pair("m3", 2, 5, 0.05),
        ];
        let mut rev = pairs.clone();
        rev.reverse();
        assert_eq!(build_network(&pairs).unwrap(), build_network(&rev).unwrap());
    }

    #[test]
    fn popularity_breaks_ties_on_intensity() {
        let pairs = [
            pair("x", 0, 3, 0.1),
            pair("y", 1, 5, 0.01),
            pair("z", 2, 3, 0.2),
        ];
        let top = rank_popularity(&pairs, 35).unwrap();
        let order: Vec<_> = top.iter().map(|p| p.method.as_str()).collect();
        assert_eq!(order, ["y", "z", "x"]);
        assert_eq!(rank_popularity(&pairs, 1).unwrap()[0].method, "y");
        assert!(rank_popularity(&pairs, 0).is_err());
    }

    #[test]
    fn shared_intensity_uses_smaller_endpoint() {
        let net = build_network(&[pair("a", 0, 1, 0.4), pair("a", 1, 1, 0.1)]).unwrap();
        let g = net.to_graph(EdgeWeighting::SharedIntensity).unwrap();
        assert_eq!(g.edges(), [(0, 1, 0.1)]);
        assert_eq!(
            "shared-intensity".parse::<EdgeWeighting>().unwrap(),
            EdgeWeighting::SharedIntensity
        );
        assert!("max".parse::<EdgeWeighting>().is_err());
    }
}
