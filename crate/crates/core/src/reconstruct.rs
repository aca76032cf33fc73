//! Snapshot reconstruction: moving a base snapshot to a target tick.
//!
//! One snapshot plus the log is enough to derive every state the log covers:
//! [`for_rec`] replays records forward in sequence order, [`back_rec`]
//! applies inverted records in reverse sequence order. Reverse order matters
//! because a node removal is stored as its incident edge removals followed by
//! the node removal; undone back to front, the node returns before its edges.
//!
//! [`partial_back_rec`] rebuilds only the neighborhood a node-centric query
//! needs. It tracks a growing member set of relevant nodes, applies only
//! inverted records touching a member, and repeats passes until the
//! hop-neighborhood of the seeds is fully inside the member set; nodes a pass
//! discovers at its frontier are tracked exactly by the next pass, so for a
//! `hops`-neighborhood at most `hops + 1` passes are needed.
//!
//! [`reconstruct`] is the catalog-aware entry point: it picks a base snapshot
//! via a selection policy and dispatches on which side of the target it lies.

use std::collections::{BTreeSet, VecDeque};

use thiserror::Error;

use crate::graph::{Edge, GraphError, GraphOp, NodeId, Snapshot};
use crate::index::NodeIndex;
use crate::log::{DeltaLog, Direction, LogError, Timestamp};
use crate::store::{select_base, SelectionPolicy, SnapshotCatalog, StoreError};

/// Errors from reconstruction.
#[derive(Debug, Error)]
pub enum ReconstructError {
    #[error("target tick {t_target} outside reconstructible range [{lo}, {hi}]")]
    TargetOutOfRange {
        t_target: Timestamp,
        lo: Timestamp,
        hi: Timestamp,
    },
    #[error("seed node {0} does not exist at the target tick")]
    SeedAbsentAtTarget(NodeId),
    #[error("partial reconstruction did not converge within {passes} passes")]
    NoConvergence { passes: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Replays the records in `(base.as_of, t_target]` onto a copy of `base`.
pub fn for_rec(
    base: &Snapshot,
    log: &DeltaLog,
    t_target: Timestamp,
) -> Result<Snapshot, ReconstructError> {
    if t_target < base.as_of() || t_target > log.t_cur() {
        return Err(ReconstructError::TargetOutOfRange {
            t_target,
            lo: base.as_of(),
            hi: log.t_cur(),
        });
    }
    let mut working = base.clone();
    for r in log.slice(base.as_of(), t_target, Direction::Forward)? {
        working.apply_in_place(&r.op)?;
    }
    working.set_as_of(t_target);
    Ok(working)
}

/// Applies the inverses of the records in `(t_target, base.as_of]` to a copy
/// of `base`, in reverse sequence order.
pub fn back_rec(
    base: &Snapshot,
    log: &DeltaLog,
    t_target: Timestamp,
) -> Result<Snapshot, ReconstructError> {
    if t_target < log.t0() || t_target > base.as_of() {
        return Err(ReconstructError::TargetOutOfRange {
            t_target,
            lo: log.t0(),
            hi: base.as_of(),
        });
    }
    let mut working = base.clone();
    for r in log.slice(t_target, base.as_of(), Direction::Backward)? {
        working.apply_in_place(&r.op.inverse())?;
    }
    working.set_as_of(t_target);
    Ok(working)
}

/// Reconstructs only the `hops`-neighborhood of `seeds` at `t_target`,
/// walking backward from `base`.
///
/// The result equals [`back_rec`] restricted to the nodes within `hops` hops
/// of the seeds at the target tick, with all edges among them. A node index,
/// when given, narrows the backward walk to the posting lists of the member
/// set instead of scanning the whole slice; the outcome is identical.
pub fn partial_back_rec(
    base: &Snapshot,
    log: &DeltaLog,
    t_target: Timestamp,
    seeds: &BTreeSet<NodeId>,
    hops: usize,
    node_index: Option<&NodeIndex>,
) -> Result<Snapshot, ReconstructError> {
    if t_target < log.t0() || t_target > base.as_of() {
        return Err(ReconstructError::TargetOutOfRange {
            t_target,
            lo: log.t0(),
            hi: base.as_of(),
        });
    }
    let max_passes = hops + 2;
    let mut members: BTreeSet<NodeId> = seeds.clone();
    for _pass in 0..max_passes {
        // Start each pass from the base restricted to the member set: the
        // members present in the base, every edge incident to them, and the
        // far endpoints those edges need.
        let mut working = restrict_to_members(base, &members);
        match node_index {
            None => {
                for r in log.slice(t_target, base.as_of(), Direction::Backward)? {
                    if touches_any(&r.op, &members) {
                        apply_lenient(&mut working, &r.op.inverse());
                    }
                }
            }
            Some(idx) => {
                let mut seqs: BTreeSet<usize> = BTreeSet::new();
                for &v in &members {
                    seqs.extend(idx.postings_in(log, v, t_target, base.as_of())?);
                }
                for &seq in seqs.iter().rev() {
                    let r = log.record(seq).expect("posting within log");
                    apply_lenient(&mut working, &r.op.inverse());
                }
            }
        }
        working.set_as_of(t_target);
        let horizon = hop_neighborhood(&working, seeds, hops);
        if horizon.iter().all(|v| members.contains(v)) {
            for &s in seeds {
                if !working.contains_node(s) {
                    return Err(ReconstructError::SeedAbsentAtTarget(s));
                }
            }
            return Ok(induced_restriction(&working, &horizon, t_target));
        }
        members.extend(horizon);
    }
    Err(ReconstructError::NoConvergence { passes: max_passes })
}

/// Reconstructs the snapshot at `t_target` from the catalog entry the
/// selection policy picks. The policy influences only the amount of log
/// walked, never the resulting snapshot.
pub fn reconstruct(
    catalog: &SnapshotCatalog,
    log: &DeltaLog,
    t_target: Timestamp,
    policy: SelectionPolicy,
) -> Result<Snapshot, ReconstructError> {
    if t_target < log.t0() || t_target > log.t_cur() {
        return Err(ReconstructError::TargetOutOfRange {
            t_target,
            lo: log.t0(),
            hi: log.t_cur(),
        });
    }
    let (t_base, snap) = select_base(catalog, log, t_target, policy)?;
    if *t_base < t_target {
        for_rec(snap, log, t_target)
    } else if *t_base > t_target {
        back_rec(snap, log, t_target)
    } else {
        let mut copy = (**snap).clone();
        copy.set_as_of(t_target);
        Ok(copy)
    }
}

/// True when `op` references at least one node of `members`.
fn touches_any(op: &GraphOp, members: &BTreeSet<NodeId>) -> bool {
    let (a, b) = op.referenced();
    members.contains(&a) || b.is_some_and(|b| members.contains(&b))
}

/// Applies `op` without precondition checks: inserts that already hold and
/// removals of absent elements are no-ops, and edge insertion brings absent
/// endpoints into existence. Outside the tracked member set the working
/// snapshot is only an approximation, so strict checks would misfire.
fn apply_lenient(s: &mut Snapshot, op: &GraphOp) {
    match *op {
        GraphOp::AddNode(v) => {
            if !s.contains_node(v) {
                s.apply_in_place(&GraphOp::AddNode(v)).expect("checked");
            }
        }
        GraphOp::RemNode(v) => {
            if s.contains_node(v) {
                s.apply_in_place(&GraphOp::RemNode(v)).expect("checked");
            }
        }
        GraphOp::AddEdge(e) => {
            for v in [e.a(), e.b()] {
                if !s.contains_node(v) {
                    s.apply_in_place(&GraphOp::AddNode(v)).expect("checked");
                }
            }
            if !s.contains_edge(e) {
                s.apply_in_place(&GraphOp::AddEdge(e)).expect("checked");
            }
        }
        GraphOp::RemEdge(e) => {
            if s.contains_edge(e) {
                s.apply_in_place(&GraphOp::RemEdge(e)).expect("checked");
            }
        }
    }
}

/// The members present in `base`, their incident edges, and the far
/// endpoints of those edges.
fn restrict_to_members(base: &Snapshot, members: &BTreeSet<NodeId>) -> Snapshot {
    let mut out = Snapshot::empty(base.as_of());
    for &v in members {
        if base.contains_node(v) && !out.contains_node(v) {
            out.apply_in_place(&GraphOp::AddNode(v)).expect("fresh node");
        }
    }
    for &v in members {
        if !base.contains_node(v) {
            continue;
        }
        for w in base.neighbors(v) {
            if !out.contains_node(w) {
                out.apply_in_place(&GraphOp::AddNode(w)).expect("fresh node");
            }
            let e = Edge::new(v, w).expect("stored edges have distinct endpoints");
            if !out.contains_edge(e) {
                out.apply_in_place(&GraphOp::AddEdge(e)).expect("endpoints added");
            }
        }
    }
    out
}

/// Nodes within `hops` hops of any seed present in `s`.
fn hop_neighborhood(s: &Snapshot, seeds: &BTreeSet<NodeId>, hops: usize) -> BTreeSet<NodeId> {
    let mut dist: std::collections::BTreeMap<NodeId, usize> = Default::default();
    let mut queue = VecDeque::new();
    for &seed in seeds {
        if s.contains_node(seed) {
            dist.insert(seed, 0);
            queue.push_back(seed);
        }
    }
    while let Some(u) = queue.pop_front() {
        let du = dist[&u];
        if du == hops {
            continue;
        }
        for w in s.neighbors(u) {
            if !dist.contains_key(&w) {
                dist.insert(w, du + 1);
                queue.push_back(w);
            }
        }
    }
    dist.into_keys().collect()
}

/// The subgraph of `s` induced by `keep`, restamped to `t`.
fn induced_restriction(s: &Snapshot, keep: &BTreeSet<NodeId>, t: Timestamp) -> Snapshot {
    let mut out = Snapshot::empty(t);
    for &v in keep {
        if s.contains_node(v) {
            out.apply_in_place(&GraphOp::AddNode(v)).expect("fresh node");
        }
    }
    for &v in keep {
        if !s.contains_node(v) {
            continue;
        }
        for w in s.neighbors(v) {
            if v < w && keep.contains(&w) {
                let e = Edge::new(v, w).expect("stored edges have distinct endpoints");
                out.apply_in_place(&GraphOp::AddEdge(e)).expect("endpoints kept");
            }
        }
    }
    out
}
