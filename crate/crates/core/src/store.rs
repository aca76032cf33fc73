//! The graph store: current snapshot, delta log, and snapshot catalog.
//!
//! A store tracks one evolving graph. Writers stage operations into the open
//! tick with [`GraphStore::record`] and seal it with [`GraphStore::close_tick`],
//! which appends the staged records to the log, advances the clock, and asks
//! the materialization policy whether to keep a copy of the new state in the
//! snapshot catalog. Queries later pick a catalog entry to reconstruct from;
//! [`select_base`] implements the time-based and operation-based choices.
//!
//! On disk a store is a directory: `log.delta` (+ `.cur` sidecar), one
//! `snap_<tick>.snap` file per catalog entry, and a `catalog` manifest
//! listing them; the manifest's last entry is always the current snapshot.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::graph::{diff, FormatError, GraphError, GraphOp, Snapshot};
use crate::index::{NodeIndex, TemporalIndex};
use crate::log::{expand_op, DeltaLog, LogError, Timestamp};

/// Store file names within a store directory.
pub const LOG_FILE: &str = "log.delta";
pub const MANIFEST_FILE: &str = "catalog";

/// File name for the snapshot materialized at `t`.
pub fn snapshot_file_name(t: Timestamp) -> String {
    format!("snap_{t}.snap")
}

/// Errors from store mutation, policy handling, and persistence.
#[derive(Debug, Error)]
pub enum StoreError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("catalog has no entries")]
    EmptyCatalog,
    #[error("manifest parse error at line {line}: {reason}")]
    Manifest { line: usize, reason: String },
    #[error("store is inconsistent: {0}")]
    Corrupt(String),
    #[error("invalid policy parameter: {0}")]
    InvalidPolicy(String),
}

/// When to add the just-closed state to the snapshot catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaterializationPolicy {
    /// Every `period` ticks: entries at ticks divisible by the period.
    Periodic(u64),
    /// Whenever at least `threshold` log records accrued since the last
    /// catalog entry.
    OpCount(usize),
    /// Whenever the minimal diff against the last catalog entry has grown to
    /// at least `threshold` operations. Unlike `OpCount`, churn that undoes
    /// itself never triggers this.
    Similarity(usize),
}

impl MaterializationPolicy {
    /// Rejects non-positive parameters.
    pub fn validate(&self) -> Result<(), StoreError> {
        let ok = match *self {
            MaterializationPolicy::Periodic(p) => p > 0,
            MaterializationPolicy::OpCount(k) => k > 0,
            MaterializationPolicy::Similarity(t) => t > 0,
        };
        if ok {
            Ok(())
        } else {
            Err(StoreError::InvalidPolicy(format!(
                "{self} requires a strictly positive parameter"
            )))
        }
    }
}

impl fmt::Display for MaterializationPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            MaterializationPolicy::Periodic(p) => write!(f, "periodic:{p}"),
            MaterializationPolicy::OpCount(k) => write!(f, "ops:{k}"),
            MaterializationPolicy::Similarity(t) => write!(f, "sim:{t}"),
        }
    }
}

impl FromStr for MaterializationPolicy {
    type Err = StoreError;

    /// Parses `periodic:P`, `ops:K`, or `sim:T`.
    fn from_str(s: &str) -> Result<Self, StoreError> {
        let bad = || StoreError::InvalidPolicy(format!("unrecognized policy {s:?}"));
        let (kind, param) = s.split_once(':').ok_or_else(bad)?;
        let policy = match kind {
            "periodic" => MaterializationPolicy::Periodic(param.parse().map_err(|_| bad())?),
            "ops" => MaterializationPolicy::OpCount(param.parse().map_err(|_| bad())?),
            "sim" => MaterializationPolicy::Similarity(param.parse().map_err(|_| bad())?),
            _ => return Err(bad()),
        };
        policy.validate()?;
        Ok(policy)
    }
}

/// Which catalog entry to reconstruct a target tick from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionPolicy {
    /// Entry closest to the target on the tick axis.
    TimeBased,
    /// Entry with the fewest log records between its tick and the target.
    OperationBased,
}

/// Ordered list of materialized snapshots, ascending by tick. A store's
/// catalog always presents the current snapshot as its last entry.
#[derive(Debug, Clone, Default)]
pub struct SnapshotCatalog {
    entries: Vec<(Timestamp, Arc<Snapshot>)>,
}

impl SnapshotCatalog {
    pub fn new() -> SnapshotCatalog {
        SnapshotCatalog::default()
    }

    /// Builds a catalog from entries that must be in strictly increasing
    /// tick order.
    pub fn from_entries(entries: Vec<(Timestamp, Arc<Snapshot>)>) -> Result<Self, StoreError> {
        let mut catalog = SnapshotCatalog::new();
        for (t, s) in entries {
            catalog.push(t, s)?;
        }
        Ok(catalog)
    }

    /// Appends an entry; its tick must exceed every existing entry's.
    pub fn push(&mut self, t: Timestamp, snap: Arc<Snapshot>) -> Result<(), StoreError> {
        if let Some(&(last, _)) = self.entries.last() {
            if t <= last {
                return Err(StoreError::Corrupt(format!(
                    "catalog entry at tick {t} does not follow tick {last}"
                )));
            }
        }
        self.entries.push((t, snap));
        Ok(())
    }

    pub fn entries(&self) -> &[(Timestamp, Arc<Snapshot>)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn last(&self) -> Option<&(Timestamp, Arc<Snapshot>)> {
        self.entries.last()
    }
}

/// Size of the minimal diff between two snapshots. Many operations can
/// separate two states that are nonetheless near-identical (add/remove
/// cycles reverse themselves); this measures remaining distance, not churn.
pub fn similarity(a: &Snapshot, b: &Snapshot) -> usize {
    diff(a, b).len()
}

/// Picks the catalog entry to reconstruct `t_target` from. Ties go to the
/// later entry.
pub fn select_base<'a>(
    catalog: &'a SnapshotCatalog,
    log: &DeltaLog,
    t_target: Timestamp,
    policy: SelectionPolicy,
) -> Result<&'a (Timestamp, Arc<Snapshot>), StoreError> {
    if catalog.is_empty() {
        return Err(StoreError::EmptyCatalog);
    }
    let mut best: Option<(&(Timestamp, Arc<Snapshot>), u64)> = None;
    for entry in catalog.entries() {
        let t = entry.0;
        let cost = match policy {
            SelectionPolicy::TimeBased => t.abs_diff(t_target),
            SelectionPolicy::OperationBased => {
                log.count_ops(t.min(t_target), t.max(t_target))? as u64
            }
        };
        if best.map_or(true, |(_, c)| cost <= c) {
            best = Some((entry, cost));
        }
    }
    Ok(best.expect("catalog nonempty").0)
}

/// Manifest: the on-disk listing of catalog entries.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Manifest {
    entries: Vec<(Timestamp, String)>,
}

impl Manifest {
    pub fn from_entries(entries: Vec<(Timestamp, String)>) -> Result<Manifest, StoreError> {
        for pair in entries.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(StoreError::Corrupt(format!(
                    "manifest ticks not strictly increasing at {}",
                    pair[1].0
                )));
            }
        }
        Ok(Manifest { entries })
    }

    pub fn entries(&self) -> &[(Timestamp, String)] {
        &self.entries
    }

    pub fn to_file_string(&self) -> String {
        let mut out = String::from("CATALOG\n");
        for (t, file) in &self.entries {
            out.push_str(&format!("{t} {file}\n"));
        }
        out
    }

    pub fn from_file_str(text: &str) -> Result<Manifest, StoreError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, "CATALOG")) => {}
            other => {
                return Err(StoreError::Manifest {
                    line: 1,
                    reason: format!("bad header {:?}", other.map(|(_, l)| l)),
                })
            }
        }
        let mut entries = Vec::new();
        for (idx, raw) in lines {
            let line = idx + 1;
            let (t, file) = raw.split_once(' ').ok_or(StoreError::Manifest {
                line,
                reason: format!("expected `<tick> <snapshot-file>`, got {raw:?}"),
            })?;
            let t = t.parse::<Timestamp>().map_err(|_| StoreError::Manifest {
                line,
                reason: format!("bad tick {t:?}"),
            })?;
            if file.is_empty() {
                return Err(StoreError::Manifest {
                    line,
                    reason: "empty snapshot file name".to_string(),
                });
            }
            entries.push((t, file.to_string()));
        }
        Manifest::from_entries(entries)
    }

    pub fn write_to(&self, path: &Path) -> Result<(), StoreError> {
        let mut f = fs::File::create(path)?;
        f.write_all(self.to_file_string().as_bytes())?;
        Ok(())
    }

    pub fn read_from(path: &Path) -> Result<Manifest, StoreError> {
        Manifest::from_file_str(&fs::read_to_string(path)?)
    }
}

/// The evolving store: current snapshot, full log, materialized snapshots,
/// and the indexes kept in step with the log.
#[derive(Debug)]
pub struct GraphStore {
    current: Arc<Snapshot>,
    log: DeltaLog,
    materialized: Vec<(Timestamp, Arc<Snapshot>)>,
    staged: Vec<GraphOp>,
    policy: MaterializationPolicy,
    records_at_last_entry: usize,
    similarity_ref: Arc<Snapshot>,
    temporal: TemporalIndex,
    node_index: NodeIndex,
    dir: Option<PathBuf>,
}

impl GraphStore {
    /// Fresh in-memory store: empty graph at tick 0.
    pub fn new(policy: MaterializationPolicy) -> Result<GraphStore, StoreError> {
        policy.validate()?;
        let empty = Arc::new(Snapshot::empty(0));
        Ok(GraphStore {
            current: Arc::clone(&empty),
            log: DeltaLog::new(0),
            materialized: Vec::new(),
            staged: Vec::new(),
            policy,
            records_at_last_entry: 0,
            similarity_ref: empty,
            temporal: TemporalIndex::default(),
            node_index: NodeIndex::default(),
            dir: None,
        })
    }

    /// Fresh store persisted under `dir` (created if missing): catalog
    /// entries are written out as they materialize and [`GraphStore::save`]
    /// writes the rest.
    pub fn create(dir: &Path, policy: MaterializationPolicy) -> Result<GraphStore, StoreError> {
        fs::create_dir_all(dir)?;
        let mut store = GraphStore::new(policy)?;
        store.dir = Some(dir.to_path_buf());
        Ok(store)
    }

    /// Opens a saved store directory.
    pub fn open(dir: &Path) -> Result<GraphStore, StoreError> {
        let log = DeltaLog::read_from(&dir.join(LOG_FILE))?;
        let manifest = Manifest::read_from(&dir.join(MANIFEST_FILE))?;
        let mut materialized = Vec::new();
        for (t, file) in manifest.entries() {
            let snap = Snapshot::read_from(&dir.join(file))?;
            if snap.as_of() != *t {
                return Err(StoreError::Corrupt(format!(
                    "{file} is frozen at tick {}, manifest says {t}",
                    snap.as_of()
                )));
            }
            materialized.push((*t, Arc::new(snap)));
        }
        let current = match materialized.last() {
            Some((t, snap)) if *t == log.t_cur() => Arc::clone(snap),
            Some((t, _)) => {
                return Err(StoreError::Corrupt(format!(
                    "last catalog entry at tick {t} but log covers up to {}",
                    log.t_cur()
                )))
            }
            None => return Err(StoreError::Corrupt("manifest lists no snapshots".into())),
        };
        let temporal = TemporalIndex::build(&log);
        let node_index = NodeIndex::build(&log);
        let records = log.len();
        Ok(GraphStore {
            current: Arc::clone(&current),
            log,
            materialized,
            staged: Vec::new(),
            // A reopened store keeps its persisted entries; further
            // materialization only matters if it is written to again.
            policy: MaterializationPolicy::OpCount(usize::MAX),
            records_at_last_entry: records,
            similarity_ref: current,
            temporal,
            node_index,
            dir: Some(dir.to_path_buf()),
        })
    }

    /// Current tick: the last closed tick.
    pub fn t_cur(&self) -> Timestamp {
        self.log.t_cur()
    }

    /// The current snapshot. With an open staged tick this already reflects
    /// the staged operations; queries must only run between tick closes.
    pub fn current(&self) -> &Snapshot {
        &self.current
    }

    pub fn log(&self) -> &DeltaLog {
        &self.log
    }

    pub fn temporal_index(&self) -> &TemporalIndex {
        &self.temporal
    }

    pub fn node_index(&self) -> &NodeIndex {
        &self.node_index
    }

    pub fn materialization_policy(&self) -> MaterializationPolicy {
        self.policy
    }

    /// The catalog view: every materialized snapshot, with the current
    /// snapshot as the final entry.
    pub fn catalog(&self) -> SnapshotCatalog {
        debug_assert!(self.staged.is_empty(), "catalog read during an open tick");
        let mut entries = self.materialized.clone();
        match entries.last() {
            Some(&(t, _)) if t == self.t_cur() => {}
            _ => entries.push((self.t_cur(), Arc::clone(&self.current))),
        }
        SnapshotCatalog { entries }
    }

    /// Stages `op` for the open tick (timestamped `t_cur + 1` at close).
    /// Node removals are staged expanded, edge removals first. The operation
    /// is validated against the current snapshot as already modified by this
    /// tick's earlier staged operations. Returns how many records were staged.
    pub fn record(&mut self, op: GraphOp) -> Result<usize, StoreError> {
        let live = Arc::make_mut(&mut self.current);
        live.check_op(&op)?;
        let expanded = expand_op(&op, live);
        for e in &expanded {
            live.apply_in_place(e)?;
        }
        self.staged.extend(expanded.iter().copied());
        Ok(expanded.len())
    }

    /// Seals the open tick: appends staged records to the log, advances the
    /// clock, and consults the materialization policy. Returns the new tick.
    pub fn close_tick(&mut self) -> Result<Timestamp, StoreError> {
        let t = self.t_cur() + 1;
        for op in std::mem::take(&mut self.staged) {
            self.log.append_record(op, t)?;
            let rec = *self.log.records().last().expect("just appended");
            self.temporal.on_append(&rec);
            self.node_index.on_append(&rec);
        }
        self.log.advance_cover(t)?;
        Arc::make_mut(&mut self.current).set_as_of(t);
        if self.should_materialize() {
            self.materialize(t)?;
        }
        Ok(t)
    }

    fn should_materialize(&self) -> bool {
        match self.policy {
            MaterializationPolicy::Periodic(p) => self.t_cur() % p == 0,
            MaterializationPolicy::OpCount(k) => self.log.len() - self.records_at_last_entry >= k,
            MaterializationPolicy::Similarity(threshold) => {
                similarity(&self.similarity_ref, &self.current) >= threshold
            }
        }
    }

    fn materialize(&mut self, t: Timestamp) -> Result<(), StoreError> {
        self.materialized.push((t, Arc::clone(&self.current)));
        self.records_at_last_entry = self.log.len();
        self.similarity_ref = Arc::clone(&self.current);
        if let Some(dir) = self.dir.clone() {
            self.current.write_to(&dir.join(snapshot_file_name(t)))?;
            self.manifest()?.write_to(&dir.join(MANIFEST_FILE))?;
        }
        Ok(())
    }

    fn manifest(&self) -> Result<Manifest, StoreError> {
        let mut entries: Vec<(Timestamp, String)> = self
            .materialized
            .iter()
            .map(|&(t, _)| (t, snapshot_file_name(t)))
            .collect();
        match entries.last() {
            Some(&(t, _)) if t == self.t_cur() => {}
            _ => entries.push((self.t_cur(), snapshot_file_name(self.t_cur()))),
        }
        Manifest::from_entries(entries)
    }

    /// Writes log, catalog snapshots, the current snapshot, and the manifest
    /// under the store's directory (or `dir` for an in-memory store).
    pub fn save(&mut self, dir: Option<&Path>) -> Result<(), StoreError> {
        if let Some(d) = dir {
            fs::create_dir_all(d)?;
            self.dir = Some(d.to_path_buf());
        }
        let dir = self
            .dir
            .clone()
            .ok_or_else(|| StoreError::Corrupt("store has no directory to save into".into()))?;
        self.log.write_to(&dir.join(LOG_FILE))?;
        for (t, snap) in &self.materialized {
            snap.write_to(&dir.join(snapshot_file_name(*t)))?;
        }
        if self
            .materialized
            .last()
            .map_or(true, |&(t, _)| t != self.t_cur())
        {
            self.current
                .write_to(&dir.join(snapshot_file_name(self.t_cur())))?;
        }
        self.manifest()?.write_to(&dir.join(MANIFEST_FILE))?;
        Ok(())
    }

    /// Replays a whole stream (an already-expanded record sequence) through
    /// record/close_tick, closing empty ticks as needed so the store's clock
    /// ends at the stream's cover tick. On failure reports the offending
    /// record's sequence number.
    pub fn replay(&mut self, stream: &DeltaLog) -> Result<(), ReplayError> {
        for rec in stream.records() {
            if rec.t <= self.t_cur() {
                return Err(ReplayError {
                    seq: Some(rec.seq),
                    source: StoreError::Corrupt(format!(
                        "record at tick {} behind store clock {}",
                        rec.t,
                        self.t_cur()
                    )),
                });
            }
            while self.t_cur() + 1 < rec.t {
                self.close_tick().map_err(|source| ReplayError {
                    seq: Some(rec.seq),
                    source,
                })?;
            }
            self.record(rec.op).map_err(|source| ReplayError {
                seq: Some(rec.seq),
                source,
            })?;
        }
        while self.t_cur() < stream.t_cur() {
            self.close_tick()
                .map_err(|source| ReplayError { seq: None, source })?;
        }
        Ok(())
    }
}

/// A replay failure, carrying the sequence number of the offending record
/// when one is to blame.
#[derive(Debug, Error)]
#[error("replay failed{}: {source}", .seq.map(|s| format!(" at record {s}")).unwrap_or_default())]
pub struct ReplayError {
    pub seq: Option<usize>,
    pub source: StoreError,
}
