//! Secondary access paths over the delta log.
//!
//! Both indexes are in-memory accelerators rebuilt from the log on startup
//! and maintained incrementally on append; enabling or disabling them never
//! changes any query result, only how much of the log a reader must scan.
//!
//! * [`TemporalIndex`]: tick to first log position at or after that tick,
//!   for jumping to the start of a slice without a scan.
//! * [`NodeIndex`]: node to the positions of all records referencing it
//!   (edge records post under both endpoints), for node-centric reads.

use std::collections::BTreeMap;

use crate::graph::NodeId;
use crate::log::{DeltaLog, LogError, TimedOp, Timestamp};

/// Sparse map from each tick present in the log to the smallest sequence
/// number whose record time is at or after that tick.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TemporalIndex {
    first_seq: BTreeMap<Timestamp, usize>,
    len: usize,
}

impl TemporalIndex {
    /// Builds the index by one pass over the log.
    pub fn build(log: &DeltaLog) -> TemporalIndex {
        let mut idx = TemporalIndex::default();
        for r in log.records() {
            idx.on_append(r);
        }
        idx
    }

    /// Folds the latest appended record into the index; equivalent to a full
    /// rebuild over the grown log.
    pub fn on_append(&mut self, record: &TimedOp) {
        debug_assert_eq!(record.seq, self.len, "records must be indexed in order");
        self.first_seq.entry(record.t).or_insert(record.seq);
        self.len = record.seq + 1;
    }

    /// Smallest sequence number whose record time is `>= t`; the indexed
    /// record count serves as the past-the-end sentinel.
    pub fn lookup(&self, t: Timestamp) -> usize {
        self.first_seq
            .range(t..)
            .next()
            .map(|(_, &seq)| seq)
            .unwrap_or(self.len)
    }

    /// Number of records the index has seen.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

/// Posting lists: for every node, the ascending sequence numbers of the
/// records that reference it.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodeIndex {
    postings: BTreeMap<NodeId, Vec<usize>>,
    len: usize,
}

impl NodeIndex {
    /// Builds the index by one pass over the log.
    pub fn build(log: &DeltaLog) -> NodeIndex {
        let mut idx = NodeIndex::default();
        for r in log.records() {
            idx.on_append(r);
        }
        idx
    }

    /// Folds the latest appended record into the index; equivalent to a full
    /// rebuild over the grown log.
    pub fn on_append(&mut self, record: &TimedOp) {
        debug_assert_eq!(record.seq, self.len, "records must be indexed in order");
        let (a, b) = record.op.referenced();
        self.postings.entry(a).or_default().push(record.seq);
        if let Some(b) = b {
            self.postings.entry(b).or_default().push(record.seq);
        }
        self.len = record.seq + 1;
    }

    /// All posting entries for `v`, in ascending sequence order.
    pub fn postings(&self, v: NodeId) -> &[usize] {
        self.postings.get(&v).map(Vec::as_slice).unwrap_or(&[])
    }

    /// The posting entries for `v` whose record times fall in `(t_a, t_b]`.
    pub fn postings_in(
        &self,
        log: &DeltaLog,
        v: NodeId,
        t_a: Timestamp,
        t_b: Timestamp,
    ) -> Result<&[usize], LogError> {
        if t_a > t_b {
            return Err(LogError::InvalidRange { t_a, t_b });
        }
        let list = self.postings(v);
        let time_of = |seq: usize| log.record(seq).expect("posting within log").t;
        let lo = list.partition_point(|&seq| time_of(seq) <= t_a);
        let hi = list.partition_point(|&seq| time_of(seq) <= t_b);
        Ok(&list[lo..hi])
    }

    /// The log records referencing `v` with time in `(t_a, t_b]`, in
    /// sequence order.
    pub fn ops_for_node(
        &self,
        log: &DeltaLog,
        v: NodeId,
        t_a: Timestamp,
        t_b: Timestamp,
    ) -> Result<Vec<TimedOp>, LogError> {
        Ok(self
            .postings_in(log, v, t_a, t_b)?
            .iter()
            .map(|&seq| *log.record(seq).expect("posting within log"))
            .collect())
    }

    /// Number of records the index has seen.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Edge, GraphOp, Snapshot};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn n(id: u64) -> NodeId {
        NodeId(id)
    }

    fn e(a: u64, b: u64) -> Edge {
        Edge::new(n(a), n(b)).unwrap()
    }

    fn log_with_ticks(ticks: &[Timestamp]) -> DeltaLog {
        let mut log = DeltaLog::new(0);
        for (i, &t) in ticks.iter().enumerate() {
            log.append_record(GraphOp::AddNode(n(i as u64 + 1)), t).unwrap();
        }
        log
    }

    #[test]
    fn temporal_lookup_matches_linear_scan() {
        let log = log_with_ticks(&[1, 3, 3, 7]);
        let idx = TemporalIndex::build(&log);
        for t in 0..=8 {
            let scan = log
                .records()
                .iter()
                .position(|r| r.t >= t)
                .unwrap_or(log.len());
            assert_eq!(idx.lookup(t), scan, "tick {t}");
        }
        assert_eq!(idx.lookup(3), 1);
        assert_eq!(idx.lookup(0), 0);
        assert_eq!(idx.lookup(8), log.len());
    }

    #[test]
    fn node_postings_filter_by_time_and_node() {
        let mut log = DeltaLog::new(0);
        log.append_record(GraphOp::AddNode(n(1)), 1).unwrap();
        log.append_record(GraphOp::AddNode(n(2)), 1).unwrap();
        log.append_record(GraphOp::AddNode(n(3)), 2).unwrap();
        log.append_record(GraphOp::AddEdge(e(1, 2)), 3).unwrap();
        log.append_record(GraphOp::AddEdge(e(2, 3)), 4).unwrap();
        let idx = NodeIndex::build(&log);

        let for2: Vec<usize> = idx
            .ops_for_node(&log, n(2), 0, 9)
            .unwrap()
            .iter()
            .map(|r| r.seq)
            .collect();
        assert_eq!(for2, vec![1, 3, 4]);

        let for1_edges: Vec<usize> = idx
            .ops_for_node(&log, n(1), 2, 9)
            .unwrap()
            .iter()
            .map(|r| r.seq)
            .collect();
        assert_eq!(for1_edges, vec![3]);

        assert!(idx.ops_for_node(&log, n(99), 0, 9).unwrap().is_empty());
        assert!(idx.ops_for_node(&log, n(2), 4, 9).unwrap().is_empty());
        assert!(matches!(
            idx.ops_for_node(&log, n(2), 5, 1),
            Err(LogError::InvalidRange { .. })
        ));
    }

    #[test]
    fn edge_record_posts_under_both_endpoints() {
        let mut log = DeltaLog::new(0);
        log.append_record(GraphOp::AddEdge(e(4, 9)), 1).unwrap();
        let idx = NodeIndex::build(&log);
        assert_eq!(idx.postings(n(4)), &[0]);
        assert_eq!(idx.postings(n(9)), &[0]);
    }

    #[test]
    fn incremental_maintenance_equals_rebuild() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut live = Snapshot::empty(0);
        let mut log = DeltaLog::new(0);
        let mut temporal = TemporalIndex::default();
        let mut nodes = NodeIndex::default();
        let mut t = 0;
        let mut next_id = 1u64;
        for _ in 0..1000 {
            if rng.gen_bool(0.4) {
                t += rng.gen_range(0..3);
            }
            t = t.max(1);
            let op = loop {
                let present: Vec<NodeId> = live.nodes().collect();
                match rng.gen_range(0..4) {
                    0 => {
                        let v = NodeId(next_id);
                        next_id += 1;
                        break GraphOp::AddNode(v);
                    }
                    1 if present.len() >= 2 => {
                        let a = present[rng.gen_range(0..present.len())];
                        let b = present[rng.gen_range(0..present.len())];
                        if a != b {
                            let edge = Edge::new(a, b).unwrap();
                            if !live.contains_edge(edge) {
                                break GraphOp::AddEdge(edge);
                            }
                        }
                    }
                    2 if live.edge_count() > 0 => {
                        let edges: Vec<Edge> = live.edges().collect();
                        break GraphOp::RemEdge(edges[rng.gen_range(0..edges.len())]);
                    }
                    3 if !present.is_empty() && rng.gen_bool(0.3) => {
                        break GraphOp::RemNode(present[rng.gen_range(0..present.len())]);
                    }
                    _ => {}
                }
            };
            let appended: Vec<TimedOp> = log.append(op, t, &live).unwrap().to_vec();
            for r in appended {
                live.apply_in_place(&r.op).unwrap();
                temporal.on_append(&r);
                nodes.on_append(&r);
            }
        }
        assert_eq!(temporal, TemporalIndex::build(&log));
        assert_eq!(nodes, NodeIndex::build(&log));
    }
}
