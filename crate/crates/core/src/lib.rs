//! Temporal graph store built around a current snapshot and an append-only
//! delta log of timestamped graph operations.
//!
//! The store keeps the latest state of an undirected graph together with the
//! full history of additions and removals that produced it. Any past state can
//! be reconstructed by replaying a slice of the log forward from an older
//! snapshot or backward from a newer one, and historical queries (degree of a
//! node last week, average degree over a range of ticks, and so on) are
//! answered by one of three plans that trade snapshot work against delta work.
//!
//! Module map:
//!
//! * [`graph`]: snapshots, operations, diffs, and the graph measures.
//! * [`log`]: the timestamped operation log and its on-disk format.
//! * [`index`]: temporal and node-centric indexes over the log.
//! * [`store`]: the store proper: snapshot catalog, materialization and
//!   snapshot-selection policies, persistence layout.
//! * [`reconstruct`]: forward, backward, and partial reconstruction.
//! * [`query`]: the query model and the two-phase / delta-only / hybrid plans.
//! * [`gen`]: a deterministic preferential-attachment workload generator.

pub mod gen;
pub mod graph;
pub mod index;
pub mod log;
pub mod query;
pub mod reconstruct;
pub mod store;

pub use graph::{Edge, GraphOp, NodeId, Snapshot};
pub use log::{DeltaLog, Direction, LogSlice, TimedOp, Timestamp};
pub use query::{
    AggFn, Measure, Mode, Plan, PlanConfig, PlanKind, Query, QueryError, QueryResult, Scope,
    TimeSpec,
};
pub use store::{GraphStore, MaterializationPolicy, SelectionPolicy, StoreError};
