//! In-memory graph snapshots and the four mutation primitives.
//!
//! A [`Snapshot`] is one frozen state of an undirected graph: a set of nodes,
//! a set of edges, and the tick it belongs to. Snapshots are plain values;
//! mutation happens by applying a [`GraphOp`], which checks its precondition
//! and either produces the next state or reports a [`GraphError`]. The module
//! also provides the structural diff between two snapshots and the measures
//! (degree, induced average degree, diameter, component count) that queries
//! evaluate, plus the line-oriented snapshot file format.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

/// Tick on the discrete time axis. Snapshots and log records are stamped
/// with ticks; multiple operations may share one tick.
pub type Timestamp = u64;

/// Opaque persistent node identifier. Identifiers are never reused after
/// removal within one log's lifetime; freshness is the producer's duty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for NodeId {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse::<u64>().map(NodeId)
    }
}

/// Undirected edge in canonical form: `a < b`, no self-loops. The canonical
/// form makes undirected equality structural, so edges can live in ordinary
/// ordered sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    a: NodeId,
    b: NodeId,
}

impl Edge {
    /// Builds the canonical edge between two distinct nodes, normalizing
    /// endpoint order. Self-loops are unrepresentable and rejected here.
    pub fn new(x: NodeId, y: NodeId) -> Result<Edge, GraphError> {
        if x == y {
            return Err(GraphError::SelfLoop(x));
        }
        let (a, b) = if x < y { (x, y) } else { (y, x) };
        Ok(Edge { a, b })
    }

    /// Smaller endpoint.
    pub fn a(&self) -> NodeId {
        self.a
    }

    /// Larger endpoint.
    pub fn b(&self) -> NodeId {
        self.b
    }

    /// True when `v` is one of the endpoints.
    pub fn touches(&self, v: NodeId) -> bool {
        self.a == v || self.b == v
    }

    /// The endpoint opposite to `v`, if `v` is an endpoint.
    pub fn other(&self, v: NodeId) -> Option<NodeId> {
        if v == self.a {
            Some(self.b)
        } else if v == self.b {
            Some(self.a)
        } else {
            None
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.a, self.b)
    }
}

/// One of the four mutation primitives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GraphOp {
    AddNode(NodeId),
    RemNode(NodeId),
    AddEdge(Edge),
    RemEdge(Edge),
}

impl GraphOp {
    /// The operation that undoes this one: add and remove swap, arguments
    /// stay. Note that undoing a `RemNode` restores only the isolated node;
    /// restoring its edges takes the preceding expanded `RemEdge` records
    /// (see the log module).
    pub fn inverse(&self) -> GraphOp {
        match *self {
            GraphOp::AddNode(v) => GraphOp::RemNode(v),
            GraphOp::RemNode(v) => GraphOp::AddNode(v),
            GraphOp::AddEdge(e) => GraphOp::RemEdge(e),
            GraphOp::RemEdge(e) => GraphOp::AddEdge(e),
        }
    }

    /// True when the operation references node `v`, as argument or endpoint.
    pub fn touches(&self, v: NodeId) -> bool {
        match *self {
            GraphOp::AddNode(w) | GraphOp::RemNode(w) => w == v,
            GraphOp::AddEdge(e) | GraphOp::RemEdge(e) => e.touches(v),
        }
    }

    /// The one or two nodes this operation references.
    pub fn referenced(&self) -> (NodeId, Option<NodeId>) {
        match *self {
            GraphOp::AddNode(v) | GraphOp::RemNode(v) => (v, None),
            GraphOp::AddEdge(e) | GraphOp::RemEdge(e) => (e.a(), Some(e.b())),
        }
    }
}

impl fmt::Display for GraphOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            GraphOp::AddNode(v) => write!(f, "addNode({v})"),
            GraphOp::RemNode(v) => write!(f, "remNode({v})"),
            GraphOp::AddEdge(e) => write!(f, "addEdge{e}"),
            GraphOp::RemEdge(e) => write!(f, "remEdge{e}"),
        }
    }
}

/// Errors from snapshot construction, mutation, and measures.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    /// An operation's precondition did not hold on the snapshot it was
    /// applied to; this signals a corrupt or misordered log.
    #[error("precondition violated for {op}: {reason}")]
    PreconditionViolated { op: GraphOp, reason: String },
    /// A node-centric measure was asked about a node the snapshot lacks.
    #[error("node {0} absent from snapshot")]
    NodeAbsent(NodeId),
    /// A whole-graph measure was asked about a graph with no nodes.
    #[error("measure undefined on empty graph")]
    EmptyGraph,
    /// Edge construction with identical endpoints.
    #[error("self-loop on node {0} rejected")]
    SelfLoop(NodeId),
}

/// Diameter of a snapshot: longest shortest path, or `Infinite` when the
/// graph is disconnected (including isolated nodes alongside others).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Diameter {
    Finite(u64),
    Infinite,
}

impl Diameter {
    /// Numeric view used by the query layer; `Infinite` maps to `f64::INFINITY`.
    pub fn as_f64(&self) -> f64 {
        match *self {
            Diameter::Finite(d) => d as f64,
            Diameter::Infinite => f64::INFINITY,
        }
    }
}

/// One frozen graph state.
///
/// Stored as an adjacency map over ordered sets, so node and edge iteration
/// is always in ascending identifier order. Equality is structural over
/// nodes and edges; the `as_of` tick is carried along but does not take part
/// in comparisons, because two reconstructions of the same state must compare
/// equal regardless of which tick they were built for.
#[derive(Debug, Clone)]
pub struct Snapshot {
    adj: BTreeMap<NodeId, BTreeSet<NodeId>>,
    edge_count: usize,
    as_of: Timestamp,
}

impl PartialEq for Snapshot {
    fn eq(&self, other: &Self) -> bool {
        self.adj == other.adj
    }
}

impl Eq for Snapshot {}

impl Default for Snapshot {
    fn default() -> Self {
        Snapshot::empty(0)
    }
}

impl Snapshot {
    /// The empty graph at the given tick.
    pub fn empty(as_of: Timestamp) -> Snapshot {
        Snapshot {
            adj: BTreeMap::new(),
            edge_count: 0,
            as_of,
        }
    }

    /// Tick this snapshot is frozen at.
    pub fn as_of(&self) -> Timestamp {
        self.as_of
    }

    /// Restamps the snapshot; used by reconstruction when the state has been
    /// moved to a different tick.
    pub fn set_as_of(&mut self, t: Timestamp) {
        self.as_of = t;
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn contains_node(&self, v: NodeId) -> bool {
        self.adj.contains_key(&v)
    }

    pub fn contains_edge(&self, e: Edge) -> bool {
        self.adj.get(&e.a()).is_some_and(|ns| ns.contains(&e.b()))
    }

    /// Nodes in ascending identifier order.
    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.adj.keys().copied()
    }

    /// Edges in ascending `(a, b)` order.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.adj.iter().flat_map(|(&v, ns)| {
            ns.iter()
                .copied()
                .filter(move |&w| v < w)
                .map(move |w| Edge { a: v, b: w })
        })
    }

    /// Neighbors of `v` in ascending order; empty iterator when `v` is absent.
    pub fn neighbors(&self, v: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.adj.get(&v).into_iter().flatten().copied()
    }

    /// Checks `op`'s precondition against this snapshot without mutating.
    pub fn check_op(&self, op: &GraphOp) -> Result<(), GraphError> {
        let fail = |reason: &str| {
            Err(GraphError::PreconditionViolated {
                op: *op,
                reason: reason.to_string(),
            })
        };
        match *op {
            GraphOp::AddNode(v) => {
                if self.contains_node(v) {
                    return fail("node already present");
                }
            }
            GraphOp::RemNode(v) => {
                if !self.contains_node(v) {
                    return fail("node not present");
                }
            }
            GraphOp::AddEdge(e) => {
                if !self.contains_node(e.a()) || !self.contains_node(e.b()) {
                    return fail("endpoint not present");
                }
                if self.contains_edge(e) {
                    return fail("edge already present");
                }
            }
            GraphOp::RemEdge(e) => {
                if !self.contains_edge(e) {
                    return fail("edge not present");
                }
            }
        }
        Ok(())
    }

    /// Applies `op` in place. `RemNode` also drops every incident edge.
    pub fn apply_in_place(&mut self, op: &GraphOp) -> Result<(), GraphError> {
        self.check_op(op)?;
        match *op {
            GraphOp::AddNode(v) => {
                self.adj.insert(v, BTreeSet::new());
            }
            GraphOp::RemNode(v) => {
                let neighbors = self.adj.remove(&v).unwrap_or_default();
                self.edge_count -= neighbors.len();
                for w in neighbors {
                    if let Some(ns) = self.adj.get_mut(&w) {
                        ns.remove(&v);
                    }
                }
            }
            GraphOp::AddEdge(e) => {
                self.adj.get_mut(&e.a()).unwrap().insert(e.b());
                self.adj.get_mut(&e.b()).unwrap().insert(e.a());
                self.edge_count += 1;
            }
            GraphOp::RemEdge(e) => {
                self.adj.get_mut(&e.a()).unwrap().remove(&e.b());
                self.adj.get_mut(&e.b()).unwrap().remove(&e.a());
                self.edge_count -= 1;
            }
        }
        Ok(())
    }

    /// Degree of `v`: the number of incident edges.
    pub fn degree(&self, v: NodeId) -> Result<usize, GraphError> {
        self.adj
            .get(&v)
            .map(|ns| ns.len())
            .ok_or(GraphError::NodeAbsent(v))
    }

    /// The subgraph over `v` and its neighbors, with every edge of this
    /// snapshot whose endpoints both lie in that node set.
    pub fn induced_subgraph(&self, v: NodeId) -> Result<Snapshot, GraphError> {
        let ns = self.adj.get(&v).ok_or(GraphError::NodeAbsent(v))?;
        let mut keep: BTreeSet<NodeId> = ns.clone();
        keep.insert(v);
        let mut out = Snapshot::empty(self.as_of);
        for &u in &keep {
            out.adj.insert(u, BTreeSet::new());
        }
        for &u in &keep {
            for &w in self.adj[&u].iter() {
                if u < w && keep.contains(&w) {
                    out.adj.get_mut(&u).unwrap().insert(w);
                    out.adj.get_mut(&w).unwrap().insert(u);
                    out.edge_count += 1;
                }
            }
        }
        Ok(out)
    }

    /// Average degree `2 * |E| / |V|`.
    pub fn avg_degree(&self) -> Result<f64, GraphError> {
        if self.adj.is_empty() {
            return Err(GraphError::EmptyGraph);
        }
        Ok(2.0 * self.edge_count as f64 / self.adj.len() as f64)
    }

    /// Exact diameter by breadth-first search from every node.
    pub fn diameter(&self) -> Result<Diameter, GraphError> {
        if self.adj.is_empty() {
            return Err(GraphError::EmptyGraph);
        }
        let n = self.adj.len();
        let mut max_ecc: u64 = 0;
        for &start in self.adj.keys() {
            let mut dist: BTreeMap<NodeId, u64> = BTreeMap::new();
            dist.insert(start, 0);
            let mut queue = VecDeque::from([start]);
            let mut ecc = 0;
            while let Some(u) = queue.pop_front() {
                let du = dist[&u];
                ecc = ecc.max(du);
                for &w in self.adj[&u].iter() {
                    if !dist.contains_key(&w) {
                        dist.insert(w, du + 1);
                        queue.push_back(w);
                    }
                }
            }
            if dist.len() < n {
                return Ok(Diameter::Infinite);
            }
            max_ecc = max_ecc.max(ecc);
        }
        Ok(Diameter::Finite(max_ecc))
    }

    /// Number of connected components; zero for the empty graph.
    pub fn component_count(&self) -> usize {
        let mut seen: BTreeSet<NodeId> = BTreeSet::new();
        let mut count = 0;
        for &start in self.adj.keys() {
            if seen.contains(&start) {
                continue;
            }
            count += 1;
            let mut queue = VecDeque::from([start]);
            seen.insert(start);
            while let Some(u) = queue.pop_front() {
                for &w in self.adj[&u].iter() {
                    if seen.insert(w) {
                        queue.push_back(w);
                    }
                }
            }
        }
        count
    }

    /// Serializes to the snapshot file format.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("SNAP {}\n", self.as_of));
        for v in self.nodes() {
            out.push_str(&format!("N {v}\n"));
        }
        for e in self.edges() {
            out.push_str(&format!("E {} {}\n", e.a(), e.b()));
        }
        out
    }

    /// Parses the snapshot file format produced by [`Snapshot::to_file_string`].
    pub fn from_file_str(text: &str) -> Result<Snapshot, FormatError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(FormatError::Parse {
            line: 1,
            reason: "missing SNAP header".to_string(),
        })?;
        let as_of = header
            .strip_prefix("SNAP ")
            .and_then(|t| t.parse::<Timestamp>().ok())
            .ok_or(FormatError::Parse {
                line: 1,
                reason: format!("bad header {header:?}"),
            })?;
        let mut snap = Snapshot::empty(as_of);
        let parse_err = |line: usize, reason: String| FormatError::Parse { line, reason };
        for (idx, raw) in lines {
            let line_no = idx + 1;
            let fields: Vec<&str> = raw.split(' ').collect();
            match fields.as_slice() {
                ["N", id] => {
                    let v: NodeId = id
                        .parse()
                        .map_err(|_| parse_err(line_no, format!("bad node id {id:?}")))?;
                    snap.apply_in_place(&GraphOp::AddNode(v))
                        .map_err(|e| parse_err(line_no, e.to_string()))?;
                }
                ["E", a, b] => {
                    let a: NodeId = a
                        .parse()
                        .map_err(|_| parse_err(line_no, format!("bad node id {a:?}")))?;
                    let b: NodeId = b
                        .parse()
                        .map_err(|_| parse_err(line_no, format!("bad node id {b:?}")))?;
                    if a >= b {
                        return Err(parse_err(line_no, "edge endpoints not in a<b order".into()));
                    }
                    let e = Edge::new(a, b).map_err(|e| parse_err(line_no, e.to_string()))?;
                    snap.apply_in_place(&GraphOp::AddEdge(e))
                        .map_err(|e| parse_err(line_no, e.to_string()))?;
                }
                _ => {
                    return Err(parse_err(line_no, format!("unrecognized line {raw:?}")));
                }
            }
        }
        Ok(snap)
    }

    /// Writes the snapshot file to `path`.
    pub fn write_to(&self, path: &Path) -> Result<(), FormatError> {
        let mut f = fs::File::create(path)?;
        f.write_all(self.to_file_string().as_bytes())?;
        Ok(())
    }

    /// Reads a snapshot file from `path`.
    pub fn read_from(path: &Path) -> Result<Snapshot, FormatError> {
        let text = fs::read_to_string(path)?;
        Snapshot::from_file_str(&text)
    }
}

/// Errors from reading or writing the snapshot file format.
#[derive(Debug, Error)]
pub enum FormatError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// Applies `op` to a copy of `s`, returning the next state. The input is
/// never aliased or modified.
pub fn apply_op(s: &Snapshot, op: &GraphOp) -> Result<Snapshot, GraphError> {
    let mut next = s.clone();
    next.apply_in_place(op)?;
    Ok(next)
}

/// Structural diff: the unique minimal operation set turning `s_k` into
/// `s_l`, in application order (edge removals, then node removals, then node
/// additions, then edge additions).
///
/// Edges incident to a removed node are not listed; removing the node drops
/// them. An edge removal appears only when both endpoints survive in `s_l`.
pub fn diff(s_k: &Snapshot, s_l: &Snapshot) -> Vec<GraphOp> {
    let mut ops = Vec::new();
    for e in s_k.edges() {
        if !s_l.contains_edge(e) && s_l.contains_node(e.a()) && s_l.contains_node(e.b()) {
            ops.push(GraphOp::RemEdge(e));
        }
    }
    for v in s_k.nodes() {
        if !s_l.contains_node(v) {
            ops.push(GraphOp::RemNode(v));
        }
    }
    for v in s_l.nodes() {
        if !s_k.contains_node(v) {
            ops.push(GraphOp::AddNode(v));
        }
    }
    for e in s_l.edges() {
        if !s_k.contains_edge(e) {
            ops.push(GraphOp::AddEdge(e));
        }
    }
    ops
}
