use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{CommunityPartition, MergeStep, TmcNetwork};
use crate::error::{Error, Result};
use crate::io::csv_string;
use crate::tmc::TmcPair;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunitySummary {
    pub community: usize,
    pub members: Vec<String>,
    pub topics: Vec<usize>,
    pub methods: Vec<String>,
    pub internal_edges: usize,
    /// internal edges / all edges
    pub internal_fraction: f64,
}

/// Per-community summary, largest first (ties by id).
pub fn community_report(
    partition: &CommunityPartition,
    network: &TmcNetwork,
) -> Result<Vec<CommunitySummary>> {
    if partition.assignment.len() != network.node_count() {
        return Err(Error::Logic(format!(
            "partition covers {} nodes, network has {}",
            partition.assignment.len(),
            network.node_count()
        )));
    }
    let k = partition.community_count();
    let mut out: Vec<CommunitySummary> = (0..k)
        .map(|c| CommunitySummary {
            community: c,
            members: Vec::new(),
            topics: Vec::new(),
            methods: Vec::new(),
            internal_edges: 0,
            internal_fraction: 0.0,
        })
        .collect();
    let mut topics = vec![BTreeSet::new(); k];
    let mut methods = vec![BTreeSet::new(); k];
    for (node, &c) in partition.assignment.iter().enumerate() {
        let p = &network.nodes[node];
        out[c].members.push(p.label());
        topics[c].insert(p.topic);
        methods[c].insert(p.method.clone());
    }
    for &(a, b, _) in &network.edges {
        let c = partition.assignment[a];
        if c == partition.assignment[b] {
            out[c].internal_edges += 1;
        }
    }
    let total = network.edges.len();
    for (s, (t, m)) in out.iter_mut().zip(topics.into_iter().zip(methods)) {
        s.topics = t.into_iter().collect();
        s.methods = m.into_iter().collect();
        if total > 0 {
            s.internal_fraction = s.internal_edges as f64 / total as f64;
        }
    }
    out.sort_by(|a, b| {
        b.members
            .len()
            .cmp(&a.members.len())
            .then(a.community.cmp(&b.community))
    });
    Ok(out)
}

pub fn communities_csv(network: &TmcNetwork, partition: &CommunityPartition) -> Result<String> {
    csv_string(&["node", "community"], |w| {
        for (p, c) in network.nodes.iter().zip(&partition.assignment) {
            w.write_record([p.label(), c.to_string()])?;
        }
        Ok(())
    })
}

pub fn history_csv(history: &[MergeStep]) -> Result<String> {
    csv_string(&["step", "a", "b", "delta_q", "q_after"], |w| {
        for (i, s) in history.iter().enumerate() {
            w.write_record([
                (i + 1).to_string(),
                s.a.to_string(),
                s.b.to_string(),
                s.delta_q.to_string(),
                s.q_after.to_string(),
            ])?;
        }
        Ok(())
    })
}

pub fn popularity_csv(top: &[TmcPair]) -> Result<String> {
    csv_string(&["rank", "method", "topic_id", "d_ij", "c_ij"], |w| {
        for (i, p) in top.iter().enumerate() {
            w.write_record([
                (i + 1).to_string(),
                p.method.clone(),
                p.topic.to_string(),
                p.d_ij.to_string(),
                p.c_ij.to_string(),
            ])?;
        }
        Ok(())
    })
}
