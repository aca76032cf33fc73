//! Synthetic evolving-graph streams with preferential attachment.
//!
//! Node `k` arrives at tick `k` and attaches to up to `m_attach` distinct
//! earlier nodes, each drawn with probability proportional to its current
//! degree (uniformly while the graph still has no edges). After the
//! attachments, with probability `p_remove` one uniformly chosen existing
//! edge is removed. The resulting degree distribution is heavy-tailed,
//! which is what makes the streams useful: hub nodes accumulate long
//! per-node histories, exercising the same skew real evolving graphs show.
//!
//! Streams are deterministic in the seed, so fixtures and benchmarks can be
//! regenerated bit for bit.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{Edge, GraphOp, NodeId, Snapshot};
use crate::log::{DeltaLog, Timestamp};

/// Generator parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenParams {
    /// Number of nodes; one arrives per tick.
    pub n_nodes: u64,
    /// Attachment edges per arriving node (capped by the number of earlier
    /// nodes).
    pub m_attach: usize,
    /// Per-tick probability of removing one random edge.
    pub p_remove: f64,
    /// Seed for the deterministic generator.
    pub seed: u64,
}

#[derive(Debug, Error)]
pub enum GenError {
    #[error("n_nodes must be at least 1")]
    NoNodes,
    #[error("m_attach must be at least 1")]
    NoAttachment,
    #[error("p_remove must lie in [0, 1), got {0}")]
    BadRemoveProbability(f64),
}

impl GenParams {
    pub fn validate(&self) -> Result<(), GenError> {
        if self.n_nodes == 0 {
            return Err(GenError::NoNodes);
        }
        if self.m_attach == 0 {
            return Err(GenError::NoAttachment);
        }
        if !(0.0..1.0).contains(&self.p_remove) {
            return Err(GenError::BadRemoveProbability(self.p_remove));
        }
        Ok(())
    }
}

/// Operation counts of a generated (or any) log.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamStats {
    pub inserted_nodes: u64,
    pub inserted_edges: u64,
    pub removed_nodes: u64,
    pub removed_edges: u64,
    pub total_ops: u64,
}

/// Tallies the record kinds of a log.
pub fn stats(log: &DeltaLog) -> StreamStats {
    let mut s = StreamStats {
        inserted_nodes: 0,
        inserted_edges: 0,
        removed_nodes: 0,
        removed_edges: 0,
        total_ops: log.len() as u64,
    };
    for r in log.records() {
        match r.op {
            GraphOp::AddNode(_) => s.inserted_nodes += 1,
            GraphOp::AddEdge(_) => s.inserted_edges += 1,
            GraphOp::RemNode(_) => s.removed_nodes += 1,
            GraphOp::RemEdge(_) => s.removed_edges += 1,
        }
    }
    s
}

/// Generates the stream as a delta log over `(0, n_nodes]`.
pub fn generate(params: &GenParams) -> Result<DeltaLog, GenError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut log = DeltaLog::new(0);
    let mut live = Snapshot::empty(0);
    // Node ids are dense (node k has id k and nothing is ever removed), so
    // degrees live in a plain vector for cheap roulette scans.
    let mut degree: Vec<u64> = vec![0; params.n_nodes as usize + 1];

    for k in 1..=params.n_nodes {
        let t = k;
        emit(&mut log, &mut live, &mut degree, GraphOp::AddNode(NodeId(k)), t);

        let draws = params.m_attach.min(k as usize - 1);
        let mut chosen: Vec<u64> = Vec::with_capacity(draws);
        for _ in 0..draws {
            let target = draw_target(&mut rng, &degree, k, &chosen, live.edge_count());
            chosen.push(target);
            let e = Edge::new(NodeId(k), NodeId(target)).expect("target differs from k");
            emit(&mut log, &mut live, &mut degree, GraphOp::AddEdge(e), t);
        }

        if params.p_remove > 0.0 && rng.gen_bool(params.p_remove) && live.edge_count() > 0 {
            let idx = rng.gen_range(0..live.edge_count());
            let e = live.edges().nth(idx).expect("index within edge count");
            emit(&mut log, &mut live, &mut degree, GraphOp::RemEdge(e), t);
        }
    }
    Ok(log)
}

/// Appends one operation, mirrors it onto the live snapshot, and keeps the
/// dense degree table current.
fn emit(log: &mut DeltaLog, live: &mut Snapshot, degree: &mut [u64], op: GraphOp, t: Timestamp) {
    let expanded: Vec<GraphOp> = log
        .append(op, t, live)
        .expect("generated operations respect log invariants")
        .iter()
        .map(|r| r.op)
        .collect();
    for op in &expanded {
        live.apply_in_place(op)
            .expect("appended operations apply cleanly");
        match *op {
            GraphOp::AddEdge(e) => {
                degree[e.a().0 as usize] += 1;
                degree[e.b().0 as usize] += 1;
            }
            GraphOp::RemEdge(e) => {
                degree[e.a().0 as usize] -= 1;
                degree[e.b().0 as usize] -= 1;
            }
            _ => {}
        }
    }
}

/// One attachment draw for node `k`: degree-proportional over the earlier
/// nodes not yet chosen this tick, uniform among them while their total
/// degree is zero.
fn draw_target(
    rng: &mut ChaCha8Rng,
    degree: &[u64],
    k: u64,
    chosen: &[u64],
    edge_count: usize,
) -> u64 {
    let chosen_weight: u64 = chosen.iter().map(|&c| degree[c as usize]).sum();
    let total = 2 * edge_count as u64 - degree[k as usize] - chosen_weight;
    if total == 0 {
        let remaining = k as usize - 1 - chosen.len();
        let mut idx = rng.gen_range(0..remaining);
        for c in 1..k {
            if chosen.contains(&c) {
                continue;
            }
            if idx == 0 {
                return c;
            }
            idx -= 1;
        }
        unreachable!("index within remaining candidates");
    }
    let mut x = rng.gen_range(0..total);
    for c in 1..k {
        if chosen.contains(&c) {
            continue;
        }
        let w = degree[c as usize];
        if x < w {
            return c;
        }
        x -= w;
    }
    unreachable!("roulette weight within candidate total");
}
