//! Append-only timestamped operation log: the interval delta.
//!
//! The log is the full history of a graph between its origin tick `t0` and
//! the current tick `t_cur`. Records are totally ordered by sequence number,
//! with nondecreasing timestamps; ticks may carry any number of records.
//!
//! Node removals are stored expanded: before a `RemNode(v)` record the log
//! holds one `RemEdge` record per edge incident to `v` at that moment, all
//! stamped with the same tick. Expansion is what makes the log invertible:
//! replaying inverted records in reverse order restores the node together
//! with its edges, which a bare `RemNode`/`AddNode` pair could not do.
//!
//! On disk a log is an ASCII file with a `DELTA <t0> <t_cur>` header and one
//! record per line, plus a `<name>.cur` sidecar holding `<t_cur>
//! <record_count>` so that a log grown by pure file appends still knows its
//! cover without rewriting the header.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::graph::{Edge, GraphError, GraphOp, NodeId, Snapshot};

pub use crate::graph::Timestamp;

/// One log record: an operation, the tick it happened at, and its position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimedOp {
    pub op: GraphOp,
    pub t: Timestamp,
    pub seq: usize,
}

/// Traversal direction for log slices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// Errors from log mutation, slicing, and the file format.
#[derive(Debug, Error)]
pub enum LogError {
    #[error("record time {t} precedes log position (last covered tick {last})")]
    NonMonotonicTime { t: Timestamp, last: Timestamp },
    #[error(transparent)]
    Precondition(#[from] GraphError),
    #[error("invalid range: t_a {t_a} > t_b {t_b}")]
    InvalidRange { t_a: Timestamp, t_b: Timestamp },
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// The interval delta covering `[t0, t_cur]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeltaLog {
    records: Vec<TimedOp>,
    t0: Timestamp,
    t_cur: Timestamp,
}

impl DeltaLog {
    /// Empty log anchored at origin tick `t0`.
    pub fn new(t0: Timestamp) -> DeltaLog {
        DeltaLog {
            records: Vec::new(),
            t0,
            t_cur: t0,
        }
    }

    pub fn t0(&self) -> Timestamp {
        self.t0
    }

    pub fn t_cur(&self) -> Timestamp {
        self.t_cur
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[TimedOp] {
        &self.records
    }

    pub fn record(&self, seq: usize) -> Option<&TimedOp> {
        self.records.get(seq)
    }

    fn last_time(&self) -> Timestamp {
        self.records.last().map(|r| r.t).unwrap_or(self.t0)
    }

    /// Validates `op` against `live`, expands node removals, and appends the
    /// resulting records at tick `t`. Returns the newly appended records.
    ///
    /// `live` must be the snapshot the log currently describes; the caller
    /// applies the returned records to keep it in step.
    pub fn append(
        &mut self,
        op: GraphOp,
        t: Timestamp,
        live: &Snapshot,
    ) -> Result<&[TimedOp], LogError> {
        if t <= self.t0 || t < self.t_cur {
            return Err(LogError::NonMonotonicTime {
                t,
                last: self.t_cur.max(self.last_time()),
            });
        }
        live.check_op(&op)?;
        let start = self.records.len();
        for expanded in expand_op(&op, live) {
            let seq = self.records.len();
            self.records.push(TimedOp {
                op: expanded,
                t,
                seq,
            });
        }
        self.t_cur = t;
        Ok(&self.records[start..])
    }

    /// Appends one record verbatim, without expansion or precondition checks.
    /// The caller is responsible for upholding the expansion invariant; this
    /// is the entry point for replaying already-expanded records (file reads,
    /// staged tick contents).
    pub fn append_record(&mut self, op: GraphOp, t: Timestamp) -> Result<(), LogError> {
        if t <= self.t0 || t < self.t_cur {
            return Err(LogError::NonMonotonicTime {
                t,
                last: self.t_cur.max(self.last_time()),
            });
        }
        let seq = self.records.len();
        self.records.push(TimedOp { op, t, seq });
        self.t_cur = self.t_cur.max(t);
        Ok(())
    }

    /// Extends the covered interval to `t` without adding records, for ticks
    /// that close with nothing staged.
    pub fn advance_cover(&mut self, t: Timestamp) -> Result<(), LogError> {
        if t < self.t_cur {
            return Err(LogError::NonMonotonicTime { t, last: self.t_cur });
        }
        self.t_cur = t;
        Ok(())
    }

    /// Index of the first record with time greater than `t`.
    pub fn first_seq_after(&self, t: Timestamp) -> usize {
        self.records.partition_point(|r| r.t <= t)
    }

    /// The records with time in the half-open interval `(t_a, t_b]`, walked
    /// in sequence order (`Forward`) or reverse sequence order (`Backward`).
    pub fn slice(
        &self,
        t_a: Timestamp,
        t_b: Timestamp,
        dir: Direction,
    ) -> Result<LogSlice<'_>, LogError> {
        if t_a > t_b {
            return Err(LogError::InvalidRange { t_a, t_b });
        }
        let start = self.first_seq_after(t_a);
        let end = self.first_seq_after(t_b);
        Ok(LogSlice {
            log: self,
            front: start,
            back: end,
            dir,
        })
    }

    /// Number of records with time in `(t_a, t_b]`.
    pub fn count_ops(&self, t_a: Timestamp, t_b: Timestamp) -> Result<usize, LogError> {
        if t_a > t_b {
            return Err(LogError::InvalidRange { t_a, t_b });
        }
        Ok(self.first_seq_after(t_b) - self.first_seq_after(t_a))
    }

    /// Serializes header and records to the delta file format.
    pub fn to_file_string(&self) -> String {
        let mut out = format!("DELTA {} {}\n", self.t0, self.t_cur);
        for r in &self.records {
            out.push_str(&record_line(&r.op, r.t));
        }
        out
    }

    /// Sidecar content: current cover tick and record count.
    pub fn sidecar_string(&self) -> String {
        format!("{} {}\n", self.t_cur, self.records.len())
    }

    /// Writes the log file and its `.cur` sidecar.
    pub fn write_to(&self, path: &Path) -> Result<(), LogError> {
        let mut f = fs::File::create(path)?;
        f.write_all(self.to_file_string().as_bytes())?;
        fs::write(sidecar_path(path), self.sidecar_string())?;
        Ok(())
    }

    /// Reads a log file, consulting the sidecar for the authoritative cover
    /// tick and record count when present.
    pub fn read_from(path: &Path) -> Result<DeltaLog, LogError> {
        let text = fs::read_to_string(path)?;
        let mut log = DeltaLog::from_file_str(&text)?;
        let sidecar = sidecar_path(path);
        if sidecar.exists() {
            let sc = fs::read_to_string(&sidecar)?;
            let (t_cur, count) = parse_sidecar(&sc)?;
            if count != log.records.len() {
                return Err(LogError::Parse {
                    line: 1,
                    reason: format!(
                        "sidecar record count {count} does not match {} records in file",
                        log.records.len()
                    ),
                });
            }
            if t_cur < log.last_time() {
                return Err(LogError::Parse {
                    line: 1,
                    reason: format!("sidecar cover tick {t_cur} precedes last record"),
                });
            }
            log.t_cur = t_cur;
        }
        Ok(log)
    }

    /// Parses the delta file format. Without a sidecar, the cover tick is the
    /// later of the header value and the last record time.
    pub fn from_file_str(text: &str) -> Result<DeltaLog, LogError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(LogError::Parse {
            line: 1,
            reason: "missing DELTA header".to_string(),
        })?;
        let mut parts = header.split(' ');
        let (t0, t_cur) = match (parts.next(), parts.next(), parts.next(), parts.next()) {
            (Some("DELTA"), Some(t0), Some(tc), None) => {
                let t0 = t0.parse::<Timestamp>().map_err(|_| LogError::Parse {
                    line: 1,
                    reason: format!("bad origin tick {t0:?}"),
                })?;
                let tc = tc.parse::<Timestamp>().map_err(|_| LogError::Parse {
                    line: 1,
                    reason: format!("bad cover tick {tc:?}"),
                })?;
                (t0, tc)
            }
            _ => {
                return Err(LogError::Parse {
                    line: 1,
                    reason: format!("bad header {header:?}"),
                })
            }
        };
        if t_cur < t0 {
            return Err(LogError::Parse {
                line: 1,
                reason: format!("cover tick {t_cur} precedes origin {t0}"),
            });
        }
        let mut log = DeltaLog::new(t0);
        for (idx, raw) in lines {
            let line = idx + 1;
            let (op, t) = parse_record_line(raw, line)?;
            log.append_record(op, t)
                .map_err(|e| LogError::Parse { line, reason: e.to_string() })?;
        }
        log.t_cur = log.t_cur.max(t_cur);
        Ok(log)
    }
}

/// Expands `op` into the records the log must hold for it: a node removal
/// becomes one `RemEdge` per incident edge in `live` (ascending neighbor
/// order) followed by the `RemNode`; everything else passes through.
pub fn expand_op(op: &GraphOp, live: &Snapshot) -> Vec<GraphOp> {
    match *op {
        GraphOp::RemNode(v) => {
            let mut ops: Vec<GraphOp> = live
                .neighbors(v)
                .map(|w| GraphOp::RemEdge(Edge::new(v, w).expect("no self-loops stored")))
                .collect();
            ops.push(GraphOp::RemNode(v));
            ops
        }
        other => vec![other],
    }
}

/// The operation that undoes `op`; an involution over the four kinds.
pub fn invert(op: &GraphOp) -> GraphOp {
    op.inverse()
}

/// Iterator over the records of one half-open tick interval.
pub struct LogSlice<'a> {
    log: &'a DeltaLog,
    front: usize,
    back: usize,
    dir: Direction,
}

impl<'a> LogSlice<'a> {
    pub fn len(&self) -> usize {
        self.back - self.front
    }

    pub fn is_empty(&self) -> bool {
        self.front == self.back
    }

    /// Sequence-number bounds `[start, end)` of the slice.
    pub fn seq_bounds(&self) -> (usize, usize) {
        (self.front, self.back)
    }
}

impl<'a> Iterator for LogSlice<'a> {
    type Item = &'a TimedOp;

    fn next(&mut self) -> Option<&'a TimedOp> {
        if self.front == self.back {
            return None;
        }
        match self.dir {
            Direction::Forward => {
                let r = &self.log.records[self.front];
                self.front += 1;
                Some(r)
            }
            Direction::Backward => {
                self.back -= 1;
                Some(&self.log.records[self.back])
            }
        }
    }
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".cur");
    path.with_file_name(name)
}

fn parse_sidecar(text: &str) -> Result<(Timestamp, usize), LogError> {
    let body = text.trim_end_matches('\n');
    let mut parts = body.split(' ');
    match (parts.next(), parts.next(), parts.next()) {
        (Some(t), Some(c), None) => {
            let t = t.parse::<Timestamp>().map_err(|_| LogError::Parse {
                line: 1,
                reason: format!("bad sidecar tick {t:?}"),
            })?;
            let c = c.parse::<usize>().map_err(|_| LogError::Parse {
                line: 1,
                reason: format!("bad sidecar count {c:?}"),
            })?;
            Ok((t, c))
        }
        _ => Err(LogError::Parse {
            line: 1,
            reason: "bad sidecar contents".to_string(),
        }),
    }
}

/// One record in the delta file format, newline-terminated.
pub fn record_line(op: &GraphOp, t: Timestamp) -> String {
    match *op {
        GraphOp::AddNode(v) => format!("{t} AN {v}\n"),
        GraphOp::RemNode(v) => format!("{t} RN {v}\n"),
        GraphOp::AddEdge(e) => format!("{t} AE {} {}\n", e.a(), e.b()),
        GraphOp::RemEdge(e) => format!("{t} RE {} {}\n", e.a(), e.b()),
    }
}

fn parse_record_line(raw: &str, line: usize) -> Result<(GraphOp, Timestamp), LogError> {
    let err = |reason: String| LogError::Parse { line, reason };
    let fields: Vec<&str> = raw.split(' ').collect();
    let parse_id = |s: &str| -> Result<NodeId, LogError> {
        s.parse::<NodeId>()
            .map_err(|_| err(format!("bad node id {s:?}")))
    };
    let parse_edge = |a: &str, b: &str| -> Result<Edge, LogError> {
        let a = parse_id(a)?;
        let b = parse_id(b)?;
        if a >= b {
            return Err(err("edge endpoints not in a<b order".to_string()));
        }
        Edge::new(a, b).map_err(|e| err(e.to_string()))
    };
    let t = fields
        .first()
        .and_then(|s| s.parse::<Timestamp>().ok())
        .ok_or_else(|| err(format!("bad timestamp in {raw:?}")))?;
    let op = match fields.as_slice() {
        [_, "AN", v] => GraphOp::AddNode(parse_id(v)?),
        [_, "RN", v] => GraphOp::RemNode(parse_id(v)?),
        [_, "AE", a, b] => GraphOp::AddEdge(parse_edge(a, b)?),
        [_, "RE", a, b] => GraphOp::RemEdge(parse_edge(a, b)?),
        _ => return Err(err(format!("unrecognized record {raw:?}"))),
    };
    Ok((op, t))
}
