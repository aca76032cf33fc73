//! Historical queries and the three execution plans.
//!
//! A query names a time specification (one tick or a tick range), a scope
//! (one node's neighborhood or the whole graph), a mode (plain value,
//! absolute change over a range, or an aggregate over a range), and a
//! measure. Three plans can answer them:
//!
//! * two-phase: reconstruct the needed snapshot(s), then evaluate the
//!   measure; always applicable.
//! * delta-only: answer from the log alone, never touching a snapshot;
//!   applicable to range-differential degree queries, where the net of edge
//!   additions and removals is the answer.
//! * hybrid: start from the current snapshot and walk the log backward,
//!   adjusting a running value; applicable to node-centric queries.
//!
//! Every applicable plan returns the same result; they differ only in cost.
//! The node-index and partial-reconstruction switches are likewise pure
//! accelerators.
//!
//! Node absence: a point query on a node that does not exist at the target
//! tick is an error, a differential query requires the node at both
//! endpoints, and an aggregate skips ticks where the node is absent (erring
//! only when that empties the range). Degrees of nonexistent nodes are
//! undefined; silently treating them as zero would corrupt means.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::graph::{Edge, GraphError, GraphOp, NodeId, Snapshot};
use crate::log::{DeltaLog, Direction, LogError, TimedOp, Timestamp};
use crate::reconstruct::{back_rec, partial_back_rec, reconstruct, ReconstructError};
use crate::store::{GraphStore, SelectionPolicy, StoreError};

/// When the query looks: a single tick or an inclusive tick range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeSpec {
    Point(Timestamp),
    Range(Timestamp, Timestamp),
}

/// What the query looks at: one node's neighborhood or the whole graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    NodeCentric(NodeId),
    Global,
}

/// Aggregation functions over a range of per-tick values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggFn {
    Mean,
}

/// How a range is summarized: the value itself (points only), the absolute
/// difference between the range endpoints, or an aggregate over every tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Value,
    Differential,
    Aggregate(AggFn),
}

/// The measured graph property.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    Degree,
    InducedAvgDegree,
    Diameter,
    ComponentCount,
}

impl Measure {
    /// Whether the measure concerns a single node's neighborhood.
    pub fn is_node_centric(&self) -> bool {
        matches!(self, Measure::Degree | Measure::InducedAvgDegree)
    }

    /// Neighborhood radius partial reconstruction must cover for the measure.
    pub fn partial_hops(&self) -> usize {
        match self {
            Measure::Degree => 1,
            Measure::InducedAvgDegree => 2,
            Measure::Diameter | Measure::ComponentCount => 0,
        }
    }
}

/// One historical query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Query {
    pub time: TimeSpec,
    pub scope: Scope,
    pub mode: Mode,
    pub measure: Measure,
}

impl Query {
    /// Point-value query.
    pub fn point(t: Timestamp, scope: Scope, measure: Measure) -> Query {
        Query {
            time: TimeSpec::Point(t),
            scope,
            mode: Mode::Value,
            measure,
        }
    }

    /// Range query in differential or aggregate mode.
    pub fn range(t_k: Timestamp, t_l: Timestamp, scope: Scope, mode: Mode, measure: Measure) -> Query {
        Query {
            time: TimeSpec::Range(t_k, t_l),
            scope,
            mode,
            measure,
        }
    }

    /// Checks the taxonomy constraints: differential and aggregate modes
    /// need a range, points carry plain values, and measures must match the
    /// scope.
    pub fn validate(&self) -> Result<(), QueryError> {
        let bad = |reason: &str| Err(QueryError::Malformed(reason.to_string()));
        match (self.time, self.mode) {
            (TimeSpec::Point(_), Mode::Value) => {}
            (TimeSpec::Point(_), _) => return bad("point queries take the value mode"),
            (TimeSpec::Range(_, _), Mode::Value) => {
                return bad("range queries take differential or aggregate mode")
            }
            (TimeSpec::Range(t_k, t_l), _) if t_k > t_l => {
                return bad("range start exceeds range end")
            }
            (TimeSpec::Range(_, _), _) => {}
        }
        match (self.scope, self.measure.is_node_centric()) {
            (Scope::NodeCentric(_), true) | (Scope::Global, false) => Ok(()),
            (Scope::NodeCentric(_), false) => bad("whole-graph measure with node-centric scope"),
            (Scope::Global, true) => bad("node measure with global scope"),
        }
    }

    fn node(&self) -> Option<NodeId> {
        match self.scope {
            Scope::NodeCentric(v) => Some(v),
            Scope::Global => None,
        }
    }
}

/// The plan families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanKind {
    TwoPhase,
    DeltaOnly,
    Hybrid,
}

/// A chosen plan plus its accelerator switches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Plan {
    pub kind: PlanKind,
    pub use_node_index: bool,
    pub use_partial_reconstruction: bool,
}

impl Plan {
    pub fn new(kind: PlanKind) -> Plan {
        Plan {
            kind,
            use_node_index: false,
            use_partial_reconstruction: false,
        }
    }
}

/// Inputs to plan selection.
#[derive(Debug, Clone, Copy)]
pub struct PlanConfig {
    /// Force a plan family instead of taking the cheapest applicable one.
    pub force: Option<PlanKind>,
    pub use_node_index: bool,
    pub use_partial_reconstruction: bool,
}

impl Default for PlanConfig {
    fn default() -> Self {
        PlanConfig {
            force: None,
            use_node_index: false,
            use_partial_reconstruction: false,
        }
    }
}

/// A query's answer: the scalar result, and for aggregates the per-tick
/// series behind it (ticks where a node-centric query's node was absent are
/// left out).
#[derive(Debug, Clone, PartialEq)]
pub struct QueryResult {
    pub value: f64,
    pub series: Option<Vec<(Timestamp, f64)>>,
}

impl QueryResult {
    fn scalar(value: f64) -> QueryResult {
        QueryResult {
            value,
            series: None,
        }
    }
}

/// Errors from planning and execution.
#[derive(Debug, Error)]
pub enum QueryError {
    #[error("malformed query: {0}")]
    Malformed(String),
    #[error("plan {plan:?} is not applicable to this query")]
    InapplicablePlan { plan: PlanKind },
    #[error("node {v} does not exist at tick {t}")]
    NodeAbsentAtTick { v: NodeId, t: Timestamp },
    #[error("node {0} exists at no tick of the queried range")]
    AllTicksAbsent(NodeId),
    #[error(transparent)]
    Reconstruct(#[from] ReconstructError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

impl QueryError {
    /// True for the node-absence family of errors.
    pub fn is_node_absence(&self) -> bool {
        matches!(
            self,
            QueryError::NodeAbsentAtTick { .. } | QueryError::AllTicksAbsent(_)
        )
    }
}

/// Whether a plan family may answer a query at all.
pub fn applicable(q: &Query, kind: PlanKind) -> bool {
    match kind {
        PlanKind::TwoPhase => true,
        PlanKind::DeltaOnly => {
            matches!(q.mode, Mode::Differential)
                && matches!(q.scope, Scope::NodeCentric(_))
                && q.measure == Measure::Degree
        }
        PlanKind::Hybrid => matches!(q.scope, Scope::NodeCentric(_)),
    }
}

/// Picks a plan: the forced family when one is given (rejecting it if the
/// query falls outside its column of the applicability matrix), otherwise
/// the cheapest applicable family in the order delta-only, hybrid,
/// two-phase.
pub fn plan(q: &Query, config: &PlanConfig) -> Result<Plan, QueryError> {
    q.validate()?;
    let kind = match config.force {
        Some(kind) => {
            if !applicable(q, kind) {
                return Err(QueryError::InapplicablePlan { plan: kind });
            }
            kind
        }
        None => [PlanKind::DeltaOnly, PlanKind::Hybrid, PlanKind::TwoPhase]
            .into_iter()
            .find(|&k| applicable(q, k))
            .expect("two-phase is always applicable"),
    };
    Ok(Plan {
        kind,
        use_node_index: config.use_node_index,
        use_partial_reconstruction: config.use_partial_reconstruction,
    })
}

/// Runs `q` under `plan`. The selection policy steers which catalog entry
/// two-phase reconstruction starts from; it never changes the answer.
pub fn execute(
    q: &Query,
    store: &GraphStore,
    plan: Plan,
    selection: SelectionPolicy,
) -> Result<QueryResult, QueryError> {
    match plan.kind {
        PlanKind::TwoPhase => exec_two_phase(q, store, plan, selection),
        PlanKind::DeltaOnly => exec_delta_only(q, store, plan),
        PlanKind::Hybrid => exec_hybrid(q, store, plan),
    }
}

/// True iff `v` is a node of the snapshot at tick `t`, derived from the log.
pub fn node_exists_at(
    store: &GraphStore,
    v: NodeId,
    t: Timestamp,
    use_node_index: bool,
) -> Result<bool, QueryError> {
    let log = store.log();
    check_tick(log, t)?;
    let last_node_op = if use_node_index {
        store
            .node_index()
            .ops_for_node(log, v, log.t0(), t)?
            .into_iter()
            .rev()
            .find_map(|r| match r.op {
                GraphOp::AddNode(w) if w == v => Some(true),
                GraphOp::RemNode(w) if w == v => Some(false),
                _ => None,
            })
    } else {
        log.slice(log.t0(), t, Direction::Backward)?.find_map(|r| match r.op {
            GraphOp::AddNode(w) if w == v => Some(true),
            GraphOp::RemNode(w) if w == v => Some(false),
            _ => None,
        })
    };
    Ok(last_node_op.unwrap_or(false))
}

fn check_tick(log: &DeltaLog, t: Timestamp) -> Result<(), QueryError> {
    if t < log.t0() || t > log.t_cur() {
        return Err(QueryError::Reconstruct(ReconstructError::TargetOutOfRange {
            t_target: t,
            lo: log.t0(),
            hi: log.t_cur(),
        }));
    }
    Ok(())
}

fn check_range(log: &DeltaLog, t_k: Timestamp, t_l: Timestamp) -> Result<(), QueryError> {
    check_tick(log, t_k)?;
    check_tick(log, t_l)
}

/// Evaluates the query's measure on one reconstructed snapshot.
fn eval_measure(q: &Query, snap: &Snapshot) -> Result<f64, QueryError> {
    match (q.scope, q.measure) {
        (Scope::NodeCentric(v), Measure::Degree) => match snap.degree(v) {
            Ok(d) => Ok(d as f64),
            Err(GraphError::NodeAbsent(_)) => Err(QueryError::NodeAbsentAtTick {
                v,
                t: snap.as_of(),
            }),
            Err(e) => Err(e.into()),
        },
        (Scope::NodeCentric(v), Measure::InducedAvgDegree) => match snap.induced_subgraph(v) {
            Ok(sub) => Ok(sub.avg_degree()?),
            Err(GraphError::NodeAbsent(_)) => Err(QueryError::NodeAbsentAtTick {
                v,
                t: snap.as_of(),
            }),
            Err(e) => Err(e.into()),
        },
        (Scope::Global, Measure::Diameter) => Ok(snap.diameter()?.as_f64()),
        (Scope::Global, Measure::ComponentCount) => Ok(snap.component_count() as f64),
        _ => Err(QueryError::Malformed(
            "measure does not fit the query scope".to_string(),
        )),
    }
}

/// Absolute difference that treats two equal values (including two infinite
/// diameters) as zero change.
fn abs_diff(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs()
    }
}

/// Mean over per-tick values, summed in ascending tick order so every plan
/// adds the same floats in the same order.
fn mean_of(series: &[(Timestamp, f64)]) -> f64 {
    let sum: f64 = series.iter().map(|&(_, val)| val).sum();
    sum / series.len() as f64
}

/// Snapshot at `t` for two-phase evaluation: full reconstruction from the
/// best catalog entry, or the seed's neighborhood only when the plan asks
/// for partial reconstruction on a node-centric query.
///
/// Partial reconstruction always walks backward from the current snapshot:
/// reusing a previous partial result as a base is unsound because the
/// neighborhood it was restricted to belongs to a different tick.
fn two_phase_snapshot(
    q: &Query,
    store: &GraphStore,
    plan: Plan,
    selection: SelectionPolicy,
    t: Timestamp,
) -> Result<Snapshot, QueryError> {
    match (q.node(), plan.use_partial_reconstruction) {
        (Some(v), true) => partial_snapshot(q, store, plan, t, v),
        _ => Ok(reconstruct(&store.catalog(), store.log(), t, selection)?),
    }
}

fn partial_snapshot(
    q: &Query,
    store: &GraphStore,
    plan: Plan,
    t: Timestamp,
    v: NodeId,
) -> Result<Snapshot, QueryError> {
    let seeds: BTreeSet<NodeId> = [v].into();
    let idx = plan.use_node_index.then(|| store.node_index());
    partial_back_rec(
        store.current(),
        store.log(),
        t,
        &seeds,
        q.measure.partial_hops(),
        idx,
    )
    .map_err(|e| match e {
        ReconstructError::SeedAbsentAtTarget(v) => QueryError::NodeAbsentAtTick { v, t },
        other => other.into(),
    })
}

/// Reconstruct, then evaluate.
///
/// A range-differential reconstructs the later endpoint first and derives
/// the earlier one from it; a range-aggregate walks one snapshot per tick
/// from the later end down, each derived from the previous. Under partial
/// reconstruction every tick is rebuilt independently instead.
pub fn exec_two_phase(
    q: &Query,
    store: &GraphStore,
    plan: Plan,
    selection: SelectionPolicy,
) -> Result<QueryResult, QueryError> {
    q.validate()?;
    let log = store.log();
    match (q.time, q.mode) {
        (TimeSpec::Point(t), Mode::Value) => {
            check_tick(log, t)?;
            let snap = two_phase_snapshot(q, store, plan, selection, t)?;
            Ok(QueryResult::scalar(eval_measure(q, &snap)?))
        }
        (TimeSpec::Range(t_k, t_l), Mode::Differential) => {
            check_range(log, t_k, t_l)?;
            let (m_l, m_k);
            if q.node().is_some() && plan.use_partial_reconstruction {
                m_l = eval_measure(q, &two_phase_snapshot(q, store, plan, selection, t_l)?)?;
                m_k = eval_measure(q, &two_phase_snapshot(q, store, plan, selection, t_k)?)?;
            } else {
                let s_l = reconstruct(&store.catalog(), log, t_l, selection)?;
                m_l = eval_measure(q, &s_l)?;
                let s_k = back_rec(&s_l, log, t_k)?;
                m_k = eval_measure(q, &s_k)?;
            }
            Ok(QueryResult::scalar(abs_diff(m_k, m_l)))
        }
        (TimeSpec::Range(t_k, t_l), Mode::Aggregate(AggFn::Mean)) => {
            check_range(log, t_k, t_l)?;
            let mut series: Vec<(Timestamp, f64)> = Vec::new();
            if q.node().is_some() && plan.use_partial_reconstruction {
                let v = q.node().expect("node-centric");
                for t in (t_k..=t_l).rev() {
                    match partial_snapshot(q, store, plan, t, v) {
                        Ok(snap) => series.push((t, eval_measure(q, &snap)?)),
                        Err(QueryError::NodeAbsentAtTick { .. }) => continue,
                        Err(e) => return Err(e),
                    }
                }
            } else {
                let mut snap = reconstruct(&store.catalog(), log, t_l, selection)?;
                loop {
                    let t = snap.as_of();
                    match (q.node(), eval_measure(q, &snap)) {
                        (_, Ok(value)) => series.push((t, value)),
                        (Some(_), Err(QueryError::NodeAbsentAtTick { .. })) => {}
                        (_, Err(e)) => return Err(e),
                    }
                    if t == t_k {
                        break;
                    }
                    snap = back_rec(&snap, log, t - 1)?;
                }
            }
            series.reverse();
            finish_aggregate(q, series)
        }
        _ => Err(QueryError::Malformed("unsupported time/mode pairing".into())),
    }
}

fn finish_aggregate(
    q: &Query,
    series: Vec<(Timestamp, f64)>,
) -> Result<QueryResult, QueryError> {
    if series.is_empty() {
        let v = q.node().ok_or_else(|| {
            QueryError::Malformed("empty aggregation range for a global query".into())
        })?;
        return Err(QueryError::AllTicksAbsent(v));
    }
    Ok(QueryResult {
        value: mean_of(&series),
        series: Some(series),
    })
}

/// Answer a range-differential degree query from the log alone: the
/// absolute net of edge additions and removals touching the node inside the
/// range. The node must exist at both endpoints.
pub fn exec_delta_only(
    q: &Query,
    store: &GraphStore,
    plan: Plan,
) -> Result<QueryResult, QueryError> {
    q.validate()?;
    if !applicable(q, PlanKind::DeltaOnly) {
        return Err(QueryError::InapplicablePlan {
            plan: PlanKind::DeltaOnly,
        });
    }
    let (t_k, t_l) = match q.time {
        TimeSpec::Range(t_k, t_l) => (t_k, t_l),
        TimeSpec::Point(_) => unreachable!("differential mode implies a range"),
    };
    let v = q.node().expect("node-centric by applicability");
    let log = store.log();
    check_range(log, t_k, t_l)?;
    if !node_exists_at(store, v, t_l, plan.use_node_index)? {
        return Err(QueryError::NodeAbsentAtTick { v, t: t_l });
    }
    if !node_exists_at(store, v, t_k, plan.use_node_index)? {
        return Err(QueryError::NodeAbsentAtTick { v, t: t_k });
    }
    let mut net: i64 = 0;
    for r in node_ops_backward(store, v, t_k, t_l, plan.use_node_index)? {
        match r.op {
            GraphOp::AddEdge(_) => net += 1,
            GraphOp::RemEdge(_) => net -= 1,
            _ => {}
        }
    }
    Ok(QueryResult::scalar(net.unsigned_abs() as f64))
}

/// Records touching `v` with time in `(t_a, t_b]`, in descending sequence
/// order, from the node index or a log scan.
fn node_ops_backward<'a>(
    store: &'a GraphStore,
    v: NodeId,
    t_a: Timestamp,
    t_b: Timestamp,
    use_node_index: bool,
) -> Result<Box<dyn Iterator<Item = TimedOp> + 'a>, QueryError> {
    if use_node_index {
        let ops = store.node_index().ops_for_node(store.log(), v, t_a, t_b)?;
        Ok(Box::new(ops.into_iter().rev()))
    } else {
        Ok(Box::new(
            store
                .log()
                .slice(t_a, t_b, Direction::Backward)?
                .filter(move |r| r.op.touches(v))
                .copied(),
        ))
    }
}

/// Running state of the backward degree walk.
struct DegreeWalk {
    v: NodeId,
    present: bool,
    deg: i64,
}

impl DegreeWalk {
    fn at_current(store: &GraphStore, v: NodeId) -> DegreeWalk {
        let current = store.current();
        let present = current.contains_node(v);
        let deg = if present {
            current.degree(v).expect("node present") as i64
        } else {
            0
        };
        DegreeWalk { v, present, deg }
    }

    /// Undoes one record (walking backward past it).
    fn undo(&mut self, op: &GraphOp) {
        match *op {
            GraphOp::AddEdge(e) if e.touches(self.v) => self.deg -= 1,
            GraphOp::RemEdge(e) if e.touches(self.v) => self.deg += 1,
            GraphOp::AddNode(w) if w == self.v => self.present = false,
            GraphOp::RemNode(w) if w == self.v => self.present = true,
            _ => {}
        }
    }

    fn value_at(&self, t: Timestamp) -> Result<f64, QueryError> {
        if !self.present {
            return Err(QueryError::NodeAbsentAtTick { v: self.v, t });
        }
        Ok(self.deg as f64)
    }
}

/// Answer from the current snapshot plus a backward log walk, without
/// reconstructing any snapshot.
pub fn exec_hybrid(q: &Query, store: &GraphStore, plan: Plan) -> Result<QueryResult, QueryError> {
    q.validate()?;
    if !applicable(q, PlanKind::Hybrid) {
        return Err(QueryError::InapplicablePlan {
            plan: PlanKind::Hybrid,
        });
    }
    let v = q.node().expect("node-centric by applicability");
    let log = store.log();
    match (q.time, q.mode, q.measure) {
        (TimeSpec::Point(t), Mode::Value, Measure::Degree) => {
            check_tick(log, t)?;
            let mut walk = DegreeWalk::at_current(store, v);
            for r in node_ops_backward(store, v, t, log.t_cur(), plan.use_node_index)? {
                walk.undo(&r.op);
            }
            Ok(QueryResult::scalar(walk.value_at(t)?))
        }
        (TimeSpec::Range(t_k, t_l), Mode::Differential, Measure::Degree) => {
            check_range(log, t_k, t_l)?;
            let mut walk = DegreeWalk::at_current(store, v);
            for r in node_ops_backward(store, v, t_l, log.t_cur(), plan.use_node_index)? {
                walk.undo(&r.op);
            }
            let m_l = walk.value_at(t_l)?;
            for r in node_ops_backward(store, v, t_k, t_l, plan.use_node_index)? {
                walk.undo(&r.op);
            }
            let m_k = walk.value_at(t_k)?;
            Ok(QueryResult::scalar(abs_diff(m_k, m_l)))
        }
        (TimeSpec::Range(t_k, t_l), Mode::Aggregate(AggFn::Mean), Measure::Degree) => {
            check_range(log, t_k, t_l)?;
            let mut walk = DegreeWalk::at_current(store, v);
            for r in node_ops_backward(store, v, t_l, log.t_cur(), plan.use_node_index)? {
                walk.undo(&r.op);
            }
            let window: Vec<TimedOp> =
                node_ops_backward(store, v, t_k, t_l, plan.use_node_index)?.collect();
            let mut next = window.into_iter().peekable();
            let mut series: Vec<(Timestamp, f64)> = Vec::new();
            for t in (t_k..=t_l).rev() {
                while next.peek().is_some_and(|r| r.t > t) {
                    walk.undo(&next.next().expect("peeked").op);
                }
                if walk.present {
                    series.push((t, walk.deg as f64));
                }
            }
            series.reverse();
            finish_aggregate(q, series)
        }
        (TimeSpec::Point(t), Mode::Value, Measure::InducedAvgDegree) => {
            check_tick(log, t)?;
            match hybrid_iavg_at(store, v, t, plan.use_node_index)? {
                Some(value) => Ok(QueryResult::scalar(value)),
                None => Err(QueryError::NodeAbsentAtTick { v, t }),
            }
        }
        (TimeSpec::Range(t_k, t_l), Mode::Differential, Measure::InducedAvgDegree) => {
            check_range(log, t_k, t_l)?;
            let m_l = hybrid_iavg_at(store, v, t_l, plan.use_node_index)?
                .ok_or(QueryError::NodeAbsentAtTick { v, t: t_l })?;
            let m_k = hybrid_iavg_at(store, v, t_k, plan.use_node_index)?
                .ok_or(QueryError::NodeAbsentAtTick { v, t: t_k })?;
            Ok(QueryResult::scalar(abs_diff(m_k, m_l)))
        }
        (TimeSpec::Range(t_k, t_l), Mode::Aggregate(AggFn::Mean), Measure::InducedAvgDegree) => {
            check_range(log, t_k, t_l)?;
            let mut series: Vec<(Timestamp, f64)> = Vec::new();
            for t in t_k..=t_l {
                if let Some(value) = hybrid_iavg_at(store, v, t, plan.use_node_index)? {
                    series.push((t, value));
                }
            }
            finish_aggregate(q, series)
        }
        _ => Err(QueryError::Malformed("unsupported time/mode pairing".into())),
    }
}

/// Induced-average-degree of `v` at tick `t` from the current snapshot and
/// a backward walk, or `None` when `v` is absent then.
///
/// Two passes over the delta: the first replays edge records touching `v`
/// backward to recover the neighbor set at `t`; the second tracks the edges
/// among that node set backward to count them at `t`. The second pass is
/// what can require reading parts of the delta again, since which records
/// matter only becomes known once the neighbor set is settled.
fn hybrid_iavg_at(
    store: &GraphStore,
    v: NodeId,
    t: Timestamp,
    use_node_index: bool,
) -> Result<Option<f64>, QueryError> {
    let log = store.log();
    let current = store.current();

    let mut present = current.contains_node(v);
    let mut nbrs: BTreeSet<NodeId> = current.neighbors(v).collect();
    for r in node_ops_backward(store, v, t, log.t_cur(), use_node_index)? {
        match r.op {
            GraphOp::AddEdge(e) if e.touches(v) => {
                nbrs.remove(&e.other(v).expect("touches v"));
            }
            GraphOp::RemEdge(e) if e.touches(v) => {
                nbrs.insert(e.other(v).expect("touches v"));
            }
            GraphOp::AddNode(w) if w == v => present = false,
            GraphOp::RemNode(w) if w == v => present = true,
            _ => {}
        }
    }
    if !present {
        return Ok(None);
    }

    let mut members = nbrs;
    members.insert(v);
    let mut edges: BTreeSet<Edge> = BTreeSet::new();
    for &u in &members {
        for w in current.neighbors(u) {
            if u < w && members.contains(&w) {
                edges.insert(Edge::new(u, w).expect("distinct endpoints"));
            }
        }
    }
    let both_in = |e: &Edge| members.contains(&e.a()) && members.contains(&e.b());
    let mut undo_edge = |op: &GraphOp| match *op {
        GraphOp::AddEdge(e) if both_in(&e) => {
            edges.remove(&e);
        }
        GraphOp::RemEdge(e) if both_in(&e) => {
            edges.insert(e);
        }
        _ => {}
    };
    if use_node_index {
        let idx = store.node_index();
        let mut seqs: BTreeSet<usize> = BTreeSet::new();
        for &u in &members {
            seqs.extend(idx.postings_in(log, u, t, log.t_cur())?);
        }
        for &seq in seqs.iter().rev() {
            undo_edge(&log.record(seq).expect("posting within log").op);
        }
    } else {
        for r in log.slice(t, log.t_cur(), Direction::Backward)? {
            undo_edge(&r.op);
        }
    }
    Ok(Some(2.0 * edges.len() as f64 / members.len() as f64))
}
