//! Shared helpers for the integration suites: an independent set-based
//! graph model to replay histories against, oracle implementations of the
//! measures, and a randomized history builder.
//!
//! The oracle code deliberately shares nothing with the library beyond the
//! operation type itself, so agreement between the two is meaningful.

// Each integration test binary compiles this module separately and uses a
// different subset of it.
#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use deltagraph::graph::{GraphOp, NodeId, Snapshot};
use deltagraph::log::{DeltaLog, Timestamp};

/// Plain sets-of-ids graph; the reference model for replay.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SetGraph {
    pub nodes: BTreeSet<u64>,
    pub edges: BTreeSet<(u64, u64)>,
}

impl SetGraph {
    pub fn new() -> SetGraph {
        SetGraph::default()
    }

    /// Applies one operation, panicking on any precondition violation;
    /// node removal drops incident edges.
    pub fn apply(&mut self, op: &GraphOp) {
        match *op {
            GraphOp::AddNode(v) => {
                assert!(self.nodes.insert(v.0), "oracle: node {v} already present");
            }
            GraphOp::RemNode(v) => {
                assert!(self.nodes.remove(&v.0), "oracle: node {v} absent");
                self.edges.retain(|&(a, b)| a != v.0 && b != v.0);
            }
            GraphOp::AddEdge(e) => {
                let key = (e.a().0, e.b().0);
                assert!(self.nodes.contains(&key.0) && self.nodes.contains(&key.1));
                assert!(self.edges.insert(key), "oracle: edge already present");
            }
            GraphOp::RemEdge(e) => {
                assert!(self.edges.remove(&(e.a().0, e.b().0)), "oracle: edge absent");
            }
        }
    }

    /// Replays the prefix of `log` with time at most `t`.
    pub fn at_tick(log: &DeltaLog, t: Timestamp) -> SetGraph {
        let mut g = SetGraph::new();
        for r in log.records().iter().filter(|r| r.t <= t) {
            g.apply(&r.op);
        }
        g
    }

    pub fn degree(&self, v: u64) -> Option<usize> {
        if !self.nodes.contains(&v) {
            return None;
        }
        Some(
            self.edges
                .iter()
                .filter(|&&(a, b)| a == v || b == v)
                .count(),
        )
    }

    /// Average degree of the subgraph induced by `v` and its neighbors.
    pub fn induced_avg_degree(&self, v: u64) -> Option<f64> {
        if !self.nodes.contains(&v) {
            return None;
        }
        let mut members: BTreeSet<u64> = self
            .edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == v {
                    Some(b)
                } else if b == v {
                    Some(a)
                } else {
                    None
                }
            })
            .collect();
        members.insert(v);
        let inside = self
            .edges
            .iter()
            .filter(|&&(a, b)| members.contains(&a) && members.contains(&b))
            .count();
        Some(2.0 * inside as f64 / members.len() as f64)
    }

    /// Diameter by Floyd–Warshall; `None` for the empty graph, `f64::INFINITY`
    /// when disconnected.
    pub fn diameter(&self) -> Option<f64> {
        if self.nodes.is_empty() {
            return None;
        }
        let ids: Vec<u64> = self.nodes.iter().copied().collect();
        let n = ids.len();
        let pos = |v: u64| ids.binary_search(&v).expect("node id present");
        const INF: u64 = u64::MAX / 4;
        let mut dist = vec![vec![INF; n]; n];
        for (i, row) in dist.iter_mut().enumerate() {
            row[i] = 0;
        }
        for &(a, b) in &self.edges {
            let (i, j) = (pos(a), pos(b));
            dist[i][j] = 1;
            dist[j][i] = 1;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let through = dist[i][k].saturating_add(dist[k][j]);
                    if through < dist[i][j] {
                        dist[i][j] = through;
                    }
                }
            }
        }
        let max = dist
            .iter()
            .flat_map(|row| row.iter().copied())
            .max()
            .unwrap();
        if max >= INF {
            Some(f64::INFINITY)
        } else {
            Some(max as f64)
        }
    }

    /// Component count by union-find.
    pub fn component_count(&self) -> usize {
        let ids: Vec<u64> = self.nodes.iter().copied().collect();
        let pos = |v: u64| ids.binary_search(&v).expect("node id present");
        let mut parent: Vec<usize> = (0..ids.len()).collect();
        fn find(parent: &mut Vec<usize>, i: usize) -> usize {
            if parent[i] != i {
                let root = find(parent, parent[i]);
                parent[i] = root;
            }
            parent[i]
        }
        for &(a, b) in &self.edges {
            let (ra, rb) = (find(&mut parent, pos(a)), find(&mut parent, pos(b)));
            if ra != rb {
                parent[ra] = rb;
            }
        }
        (0..ids.len()).filter(|&i| find(&mut parent, i) == i).count()
    }

    /// Set equality against a library snapshot.
    pub fn matches(&self, snap: &Snapshot) -> bool {
        let snap_nodes: BTreeSet<u64> = snap.nodes().map(|v| v.0).collect();
        let snap_edges: BTreeSet<(u64, u64)> = snap.edges().map(|e| (e.a().0, e.b().0)).collect();
        self.nodes == snap_nodes && self.edges == snap_edges
    }
}

/// Builds a random history over a small id universe, exercising all four
/// operation kinds (node removals included), and returns the log together
/// with the final live snapshot.
pub fn random_history(seed: u64, ticks: u64, universe: u64) -> (DeltaLog, Snapshot) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut log = DeltaLog::new(0);
    let mut live = Snapshot::empty(0);
    for t in 1..=ticks {
        let ops_this_tick = rng.gen_range(0..4);
        for _ in 0..ops_this_tick {
            if let Some(op) = random_op(&mut rng, &live, universe) {
                let expanded: Vec<GraphOp> = log
                    .append(op, t, &live)
                    .expect("generated op is valid")
                    .iter()
                    .map(|r| r.op)
                    .collect();
                for op in &expanded {
                    live.apply_in_place(op).expect("expanded op applies");
                }
            }
        }
        log.advance_cover(t).expect("time moves forward");
        live.set_as_of(t);
    }
    (log, live)
}

/// One random applicable operation against `live`, if any exists.
fn random_op(rng: &mut ChaCha8Rng, live: &Snapshot, universe: u64) -> Option<GraphOp> {
    let nodes: Vec<NodeId> = live.nodes().collect();
    let absent: Vec<u64> = (1..=universe)
        .filter(|&id| !live.contains_node(NodeId(id)))
        .collect();
    let missing_pairs: Vec<(NodeId, NodeId)> = nodes
        .iter()
        .flat_map(|&a| nodes.iter().map(move |&b| (a, b)))
        .filter(|&(a, b)| a < b && !live.contains_edge(edge(a, b)))
        .collect();
    let edges: Vec<_> = live.edges().collect();

    for _ in 0..8 {
        match rng.gen_range(0..100) {
            0..=34 => {
                if let Some(&id) = absent.as_slice().choose(rng) {
                    return Some(GraphOp::AddNode(NodeId(id)));
                }
            }
            35..=69 => {
                if let Some(&(a, b)) = missing_pairs.as_slice().choose(rng) {
                    return Some(GraphOp::AddEdge(edge(a, b)));
                }
            }
            70..=84 => {
                if let Some(&e) = edges.as_slice().choose(rng) {
                    return Some(GraphOp::RemEdge(e));
                }
            }
            _ => {
                if let Some(&v) = nodes.as_slice().choose(rng) {
                    return Some(GraphOp::RemNode(v));
                }
            }
        }
    }
    None
}

fn edge(a: NodeId, b: NodeId) -> deltagraph::graph::Edge {
    deltagraph::graph::Edge::new(a, b).expect("distinct endpoints")
}
