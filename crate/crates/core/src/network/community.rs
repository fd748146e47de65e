//! Modularity and greedy agglomerative community detection.
//!
//! With total edge weight W, community degree d_c and internal weight in_c:
//!
//! ```text
//! Q  = Σ_c ( in_c / W − (d_c / 2W)² )
//! ΔQ = 2 (e_ab − a_a a_b) = (4W·l_ab − 2·d_a·d_b) / 4W²
//! ```
//!
//! The greedy works on the numerators `4W·Σin − Σd²`, which are
//! integers for unweighted graphs, so merge choice and best-cut selection
//! are exact there.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Simple undirected graph with positive edge weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl WeightedGraph {
    pub fn new(n: usize, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        for &(a, b, w) in &edges {
            if a >= n || b >= n {
                return Err(Error::Logic(format!("edge ({a}, {b}) outside {n} nodes")));
            }
            if a == b {
                return Err(Error::Logic(format!("self-loop on node {a}")));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::Logic(format!("edge ({a}, {b}) has weight {w}")));
            }
        }
        Ok(Self { n, edges })
    }

    pub fn unweighted(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        Self::new(n, edges.iter().map(|&(a, b)| (a, b, 1.0)).collect())
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.2).sum()
    }
}

/// Q of a node -> community assignment.
pub fn modularity(graph: &WeightedGraph, assignment: &[usize]) -> Result<f64> {
    if assignment.len() != graph.n {
        return Err(Error::Logic(format!(
            "assignment covers {} nodes, graph has {}",
            assignment.len(),
            graph.n
        )));
    }
    let total = graph.total_weight();
    if total <= 0.0 {
        return Err(Error::input(
            "modularity is undefined on a graph without edges",
        ));
    }
    let mut internal: BTreeMap<usize, f64> = BTreeMap::new();
    let mut degree: BTreeMap<usize, f64> = BTreeMap::new();
    for &(a, b, w) in &graph.edges {
        let (ca, cb) = (assignment[a], assignment[b]);
        *degree.entry(ca).or_default() += w;
        *degree.entry(cb).or_default() += w;
        if ca == cb {
            *internal.entry(ca).or_default() += w;
        }
    }
    Ok(degree
        .iter()
        .map(|(c, d)| {
            let share = d / (2.0 * total);
            internal.get(c).copied().unwrap_or(0.0) / total - share * share
        })
        .sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeStep {
    /// Surviving community (the smaller id).
    pub a: usize,
    pub b: usize,
    pub delta_q: f64,
    pub q_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityPartition {
    /// Node -> community id, contiguous from 0 in order of first node.
    pub assignment: Vec<usize>,
    pub q: f64,
    /// Full agglomeration history, including merges past the best cut.
    pub merge_history: Vec<MergeStep>,
    /// Number of history steps applied to reach `assignment`.
    pub merges_applied: usize,
}

impl CommunityPartition {
    pub fn community_count(&self) -> usize {
        self.assignment.iter().max().map_or(0, |m| m + 1)
    }
}

#[derive(Debug, Clone, Copy)]
struct PairKey {
    gain: f64,
    a: usize,
    b: usize,
}

impl PartialEq for PairKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for PairKey {}
impl PartialOrd for PairKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for PairKey {
    // largest gain first, then smallest (a, b)
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .gain
            .total_cmp(&self.gain)
            .then(self.a.cmp(&other.a))
            .then(self.b.cmp(&other.b))
    }
}

/// Greedy agglomeration from singletons, always merging the connected pair
/// with the largest ΔQ (ties: smallest ids). Runs until no connected pair
/// is left and returns the partition at the best Q seen, the earliest one
/// on ties.
pub fn greedy_communities(graph: &WeightedGraph) -> Result<CommunityPartition> {
    let total = graph.total_weight();
    if total <= 0.0 {
        return Err(Error::input("community detection needs at least one edge"));
    }
    let four_w = 4.0 * total;
    let scale = four_w * total;

    let mut degree = vec![0.0f64; graph.n];
    let mut adj: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); graph.n];
    for &(a, b, w) in &graph.edges {
        degree[a] += w;
        degree[b] += w;
        *adj[a].entry(b).or_default() += w;
        *adj[b].entry(a).or_default() += w;
    }
    let mut internal = vec![0.0f64; graph.n];

    let gain = |l: f64, da: f64, db: f64| four_w * l - 2.0 * da * db;
    let key = |a: usize, b: usize, l: f64, degree: &[f64]| {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        PairKey {
            gain: gain(l, degree[a], degree[b]),
            a,
            b,
        }
    };

    let mut heap: BTreeSet<PairKey> = BTreeSet::new();
    for a in 0..graph.n {
        for (&b, &l) in &adj[a] {
            if a < b {
                heap.insert(key(a, b, l, &degree));
            }
        }
    }

    let mut q_num: f64 = -degree.iter().map(|d| d * d).sum::<f64>();
    let mut best = (q_num, 0usize);
    let mut history = Vec::new();

    while let Some(top) = heap.pop_first() {
        let (a, b) = (top.a, top.b);
        for (&c, &l) in &adj[a] {
            if c != b {
                heap.remove(&key(a, c, l, &degree));
            }
        }
        for (&c, &l) in &adj[b] {
            if c != a {
                heap.remove(&key(b, c, l, &degree));
            }
        }

        let l_ab = adj[a][&b];
        internal[a] += internal[b] + l_ab;
        degree[a] += degree[b];
        degree[b] = 0.0;
        let from_b = std::mem::take(&mut adj[b]);
        adj[a].remove(&b);
        for (c, l) in from_b {
            if c == a {
                continue;
            }
            *adj[a].entry(c).or_default() += l;
            adj[c].remove(&b);
        }
        let merged: Vec<(usize, f64)> = adj[a].iter().map(|(&c, &l)| (c, l)).collect();
        for (c, l) in merged {
            adj[c].insert(a, l);
            heap.insert(key(a, c, l, &degree));
        }

        q_num += top.gain;
        history.push(MergeStep {
            a,
            b,
            delta_q: top.gain / scale,
            q_after: q_num / scale,
        });
        if q_num > best.0 {
            best = (q_num, history.len());
        }
    }

    let assignment = replay(graph.n, &history[..best.1]);
    Ok(CommunityPartition {
        assignment,
        q: best.0 / scale,
        merge_history: history,
        merges_applied: best.1,
    })
}

/// Applies merge steps to singletons and relabels contiguously.
pub fn replay(n: usize, steps: &[MergeStep]) -> Vec<usize> {
    let mut label: Vec<usize> = (0..n).collect();
    for s in steps {
        for l in label.iter_mut() {
            if *l == s.b {
                *l = s.a;
            }
        }
    }
    relabel(&label)
}

/// Renumbers community ids 0.. in order of first appearance.
pub fn relabel(raw: &[usize]) -> Vec<usize> {
    let mut map = BTreeMap::new();
    raw.iter()
        .map(|r| {
            let next = map.len();
            *map.entry(*r).or_insert(next)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_triangles() -> WeightedGraph {
        WeightedGraph::unweighted(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]).unwrap()
    }

    #[test]
    fn all_in_one_is_zero() {
        let g = two_triangles();
        assert_eq!(modularity(&g, &[0; 6]).unwrap(), 0.0);
    }

    #[test]
    fn triangle_split_is_one_half() {
        assert_eq!(
            modularity(&two_triangles(), &[0, 0, 0, 1, 1, 1]).unwrap(),
            0.5
        );
    }

    #[test]
    fn bridged_triangles_split_is_five_fourteenths() {
        let g =
            WeightedGraph::unweighted(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)])
                .unwrap();
        let q = modularity(&g, &[0, 0, 0, 1, 1, 1]).unwrap();
        assert!((q - 5.0 / 14.0).abs() < 1e-12);
    }

    #[test]
    fn edgeless_graph_is_rejected() {
        let g = WeightedGraph::new(3, vec![]).unwrap();
        assert!(modularity(&g, &[0, 0, 0]).is_err());
        assert!(greedy_communities(&g).is_err());
    }

    #[test]
    fn greedy_separates_disconnected_triangles() {
        let p = greedy_communities(&two_triangles()).unwrap();
        assert_eq!(p.community_count(), 2);
        assert_eq!(p.q, 0.5);
        assert_eq!(p.assignment, [0, 0, 0, 1, 1, 1]);
        assert_eq!(p.merge_history.len(), 4);
    }

    #[test]
    fn complete_graph_ends_in_one_community() {
        let edges: Vec<_> = (0..4)
            .flat_map(|a| (a + 1..4).map(move |b| (a, b)))
            .collect();
        let g = WeightedGraph::unweighted(4, &edges).unwrap();
        let p = greedy_communities(&g).unwrap();
        assert_eq!(p.assignment, [0, 0, 0, 0]);
        assert_eq!(p.q, 0.0);
    }

    #[test]
    fn singleton_start_is_negative() {
        let g = two_triangles();
        let q0 = modularity(&g, &[0, 1, 2, 3, 4, 5]).unwrap();
        assert!((q0 + 6.0 * (2.0f64 / 12.0).powi(2)).abs() < 1e-15);
        let p = greedy_communities(&g).unwrap();
        let first = &p.merge_history[0];
        assert!((first.q_after - first.delta_q - q0).abs() < 1e-12);
    }

    #[test]
    fn merge_history_is_consistent_with_recomputation() {
        let g = WeightedGraph::unweighted(
            7,
            &[
                (0, 1),
                (1, 2),
                (2, 0),
                (2, 3),
                (3, 4),
                (4, 5),
                (5, 3),
                (5, 6),
            ],
        )
        .unwrap();
        let p = greedy_communities(&g).unwrap();
        let mut q_prev = modularity(&g, &(0..7).collect::<Vec<_>>()).unwrap();
        for (i, step) in p.merge_history.iter().enumerate() {
            let q = modularity(&g, &replay(7, &p.merge_history[..=i])).unwrap();
            assert!((q - (q_prev + step.delta_q)).abs() < 1e-12);
            assert!((q - step.q_after).abs() < 1e-12);
            q_prev = q;
        }
        assert!((modularity(&g, &p.assignment).unwrap() - p.q).abs() < 1e-12);
    }

    #[test]
    fn relabel_is_first_appearance() {
        assert_eq!(relabel(&[5, 2, 5, 9, 2]), [0, 1, 0, 2, 1]);
    }

    #[test]
    fn invalid_edges_are_rejected() {
        assert!(WeightedGraph::unweighted(2, &[(0, 0)]).is_err());
        assert!(WeightedGraph::unweighted(2, &[(0, 2)]).is_err());
        assert!(WeightedGraph::new(2, vec![(0, 1, 0.0)]).is_err());
    }
}
