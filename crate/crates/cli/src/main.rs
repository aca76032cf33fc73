//! Command-line surface for the temporal graph store: generate synthetic
//! operation streams, ingest them into store directories, answer historical
//! queries under any plan, and sweep query latency against lookback depth.

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use deltagraph::gen::{generate, stats, GenParams};
use deltagraph::log::DeltaLog;
use deltagraph::query::{execute, plan, PlanConfig};
use deltagraph::reconstruct::reconstruct;
use deltagraph::store::ReplayError;
use deltagraph::{
    GraphStore, MaterializationPolicy, Measure, Mode, NodeId, Plan, PlanKind, Query, QueryError,
    Scope, SelectionPolicy, TimeSpec, Timestamp,
};

#[derive(Parser)]
#[command(
    name = "deltagraph",
    version,
    about = "Temporal graph store with delta-log reconstruction and historical queries"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a preferential-attachment operation stream as a delta file.
    Gen {
        /// Number of nodes (one arrives per tick).
        #[arg(long)]
        nodes: u64,
        /// Attachment edges per arriving node.
        #[arg(long)]
        attach: usize,
        /// Per-tick probability of one random edge removal, in [0, 1).
        #[arg(long)]
        premove: f64,
        /// Generator seed.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Output delta file (a `.cur` cover sidecar is written next to it).
        #[arg(long)]
        out: PathBuf,
    },
    /// Replay a delta file into a store directory, tick by tick.
    Ingest {
        /// Input delta file.
        #[arg(long)]
        log: PathBuf,
        /// Store directory to create or extend.
        #[arg(long)]
        store: PathBuf,
        /// Materialization policy: periodic:P, ops:K, or sim:T.
        #[arg(long)]
        materialize: String,
    },
    /// Answer one historical query.
    Query {
        /// Store directory.
        #[arg(long)]
        store: PathBuf,
        /// Measure to evaluate.
        #[arg(long)]
        measure: MeasureArg,
        /// Node id for node-centric measures.
        #[arg(long)]
        node: Option<u64>,
        /// Single target tick (value mode).
        #[arg(long, conflicts_with = "range")]
        at: Option<Timestamp>,
        /// Tick range `TK TL` (diff or mean mode).
        #[arg(long, num_args = 2, value_names = ["TK", "TL"])]
        range: Option<Vec<Timestamp>>,
        /// How a range is summarized (defaults to value).
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Execution plan; `auto` (the default) picks the cheapest
        /// applicable one.
        #[arg(long, value_enum)]
        plan: Option<PlanArg>,
        /// Answer delta walks from the node index.
        #[arg(long)]
        node_index: bool,
        /// Reconstruct only the queried node's neighborhood.
        #[arg(long)]
        partial: bool,
    },
    /// Time a degree query at increasing lookback depths; emit CSV.
    Bench {
        /// Store directory.
        #[arg(long)]
        store: PathBuf,
        /// Number of lookback depths (geometrically spaced in operations).
        #[arg(long, default_value_t = 6)]
        points: usize,
        /// Comma-separated plans to run.
        #[arg(long, default_value = "two-phase,two-phase-indexed,hybrid,hybrid-indexed")]
        plans: String,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Repetitions per (plan, lookback) cell; the median is reported.
        #[arg(long, default_value_t = 5)]
        reps: usize,
        /// Seed for the benchmark's node choice.
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MeasureArg {
    Degree,
    Iavg,
    Diameter,
    Components,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Value,
    Diff,
    Mean,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PlanArg {
    Auto,
    TwoPhase,
    DeltaOnly,
    Hybrid,
}

/// Failures with their process exit codes: invalid parameters exit 2,
/// ingest precondition violations exit 3, inapplicable plans exit 4,
/// node-absence errors exit 5, anything else 1.
#[derive(Debug)]
enum CliError {
    Params(String),
    Ingest { line: usize, message: String },
    Plan(String),
    Absence(String),
    Other(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Params(m) => write!(f, "invalid parameters: {m}"),
            CliError::Ingest { line, message } => {
                write!(f, "ingest failed at line {line}: {message}")
            }
            CliError::Plan(m) => write!(f, "{m}"),
            CliError::Absence(m) => write!(f, "{m}"),
            CliError::Other(m) => write!(f, "{m}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Other(_) => 1,
            CliError::Params(_) => 2,
            CliError::Ingest { .. } => 3,
            CliError::Plan(_) => 4,
            CliError::Absence(_) => 5,
        }
    }

    fn other<E: fmt::Display>(e: E) -> CliError {
        CliError::Other(e.to_string())
    }
}

fn query_error(e: QueryError) -> CliError {
    match e {
        QueryError::Malformed(m) => CliError::Params(m),
        QueryError::InapplicablePlan { .. } => CliError::Plan(e.to_string()),
        QueryError::NodeAbsentAtTick { .. } | QueryError::AllTicksAbsent(_) => {
            CliError::Absence(e.to_string())
        }
        other => CliError::other(other),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Gen {
            nodes,
            attach,
            premove,
            seed,
            out,
        } => cmd_gen(nodes, attach, premove, seed, &out),
        Command::Ingest {
            log,
            store,
            materialize,
        } => cmd_ingest(&log, &store, &materialize),
        Command::Query {
            store,
            measure,
            node,
            at,
            range,
            mode,
            plan,
            node_index,
            partial,
        } => cmd_query(&store, measure, node, at, range, mode, plan, node_index, partial),
        Command::Bench {
            store,
            points,
            plans,
            out,
            reps,
            seed,
        } => cmd_bench(&store, points, &plans, &out, reps, seed),
    }
}

fn cmd_gen(nodes: u64, attach: usize, premove: f64, seed: u64, out: &Path) -> Result<(), CliError> {
    let params = GenParams {
        n_nodes: nodes,
        m_attach: attach,
        p_remove: premove,
        seed,
    };
    params.validate().map_err(|e| CliError::Params(e.to_string()))?;
    let log = generate(&params).map_err(|e| CliError::Params(e.to_string()))?;
    log.write_to(out).map_err(CliError::other)?;
    let s = stats(&log);
    println!(
        "ops={} nodes={} edges_added={} edges_removed={}",
        s.total_ops, s.inserted_nodes, s.inserted_edges, s.removed_edges
    );
    Ok(())
}

fn cmd_ingest(log_path: &Path, store_dir: &Path, materialize: &str) -> Result<(), CliError> {
    let policy: MaterializationPolicy = materialize
        .parse()
        .map_err(|e: deltagraph::StoreError| CliError::Params(e.to_string()))?;
    let stream = DeltaLog::read_from(log_path).map_err(CliError::other)?;
    let mut store = GraphStore::create(store_dir, policy).map_err(CliError::other)?;
    store.replay(&stream).map_err(|e: ReplayError| match e.seq {
        // Header occupies line 1; record `seq` sits on line seq + 2.
        Some(seq) => CliError::Ingest {
            line: seq + 2,
            message: e.source.to_string(),
        },
        None => CliError::other(e.source),
    })?;
    store.save(None).map_err(CliError::other)?;
    println!(
        "ingested {} records through tick {}; {} catalog entries",
        stream.len(),
        store.t_cur(),
        store.catalog().len()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_query(
    store_dir: &Path,
    measure: MeasureArg,
    node: Option<u64>,
    at: Option<Timestamp>,
    range: Option<Vec<Timestamp>>,
    mode: Option<ModeArg>,
    plan_arg: Option<PlanArg>,
    node_index: bool,
    partial: bool,
) -> Result<(), CliError> {
    let time = match (at, range.as_deref()) {
        (Some(t), None) => TimeSpec::Point(t),
        (None, Some([t_k, t_l])) => TimeSpec::Range(*t_k, *t_l),
        (None, None) => {
            return Err(CliError::Params("one of --at or --range is required".into()))
        }
        _ => return Err(CliError::Params("--at and --range are exclusive".into())),
    };
    let mode = match mode.unwrap_or(ModeArg::Value) {
        ModeArg::Value => Mode::Value,
        ModeArg::Diff => Mode::Differential,
        ModeArg::Mean => Mode::Aggregate(deltagraph::AggFn::Mean),
    };
    let measure = match measure {
        MeasureArg::Degree => Measure::Degree,
        MeasureArg::Iavg => Measure::InducedAvgDegree,
        MeasureArg::Diameter => Measure::Diameter,
        MeasureArg::Components => Measure::ComponentCount,
    };
    let scope = match node {
        Some(id) => Scope::NodeCentric(NodeId(id)),
        None => Scope::Global,
    };
    let q = Query {
        time,
        scope,
        mode,
        measure,
    };
    let config = PlanConfig {
        force: match plan_arg.unwrap_or(PlanArg::Auto) {
            PlanArg::Auto => None,
            PlanArg::TwoPhase => Some(PlanKind::TwoPhase),
            PlanArg::DeltaOnly => Some(PlanKind::DeltaOnly),
            PlanArg::Hybrid => Some(PlanKind::Hybrid),
        },
        use_node_index: node_index,
        use_partial_reconstruction: partial,
    };
    let chosen = plan(&q, &config).map_err(query_error)?;
    let store = GraphStore::open(store_dir).map_err(CliError::other)?;
    let result =
        execute(&q, &store, chosen, SelectionPolicy::OperationBased).map_err(query_error)?;
    println!("{}", result.value);
    Ok(())
}

/// A benchmark plan row: its CSV label and the plan it runs. The unindexed
/// two-phase row reconstructs the full snapshot; the indexed row narrows the
/// reconstruction to the queried node's zone through the node index, which
/// is the only reconstruction style the index can accelerate.
fn bench_plan(token: &str) -> Result<(String, Plan), CliError> {
    let plan = match token {
        "two-phase" => Plan {
            kind: PlanKind::TwoPhase,
            use_node_index: false,
            use_partial_reconstruction: false,
        },
        "two-phase-indexed" => Plan {
            kind: PlanKind::TwoPhase,
            use_node_index: true,
            use_partial_reconstruction: true,
        },
        "hybrid" => Plan {
            kind: PlanKind::Hybrid,
            use_node_index: false,
            use_partial_reconstruction: false,
        },
        "hybrid-indexed" => Plan {
            kind: PlanKind::Hybrid,
            use_node_index: true,
            use_partial_reconstruction: false,
        },
        other => {
            return Err(CliError::Params(format!(
                "unknown bench plan '{other}' (expected two-phase, two-phase-indexed, hybrid, hybrid-indexed)"
            )))
        }
    };
    Ok((token.to_string(), plan))
}

fn cmd_bench(
    store_dir: &Path,
    points: usize,
    plans: &str,
    out: &Path,
    reps: usize,
    seed: u64,
) -> Result<(), CliError> {
    if points == 0 || reps == 0 {
        return Err(CliError::Params("--points and --reps must be positive".into()));
    }
    let plans: Vec<(String, Plan)> = plans
        .split(',')
        .filter(|t| !t.is_empty())
        .map(bench_plan)
        .collect::<Result<_, _>>()?;
    if plans.is_empty() {
        return Err(CliError::Params("--plans selected nothing".into()));
    }
    let store = GraphStore::open(store_dir).map_err(CliError::other)?;
    let log = store.log();
    let total = log.len();
    if store.current().node_count() == 0 || total < 2 {
        return Err(CliError::Params("store is empty; nothing to benchmark".into()));
    }

    // Lookback depths, geometrically spaced in operations up to nearly the
    // whole log (matching an x-axis measured in operations applied since
    // the target).
    let mut lookbacks: Vec<usize> = (1..=points)
        .map(|i| {
            let depth = (total as f64).powf(i as f64 / points as f64).round() as usize;
            depth.clamp(1, total - 1)
        })
        .collect();
    lookbacks.dedup();

    // Target tick for a lookback of L operations: just before the tick of
    // the L-th record from the end, so at least L records fall after it.
    let tick_for = |lookback: usize| -> Timestamp {
        log.record(total - lookback).expect("index in range").t - 1
    };

    let deepest = tick_for(*lookbacks.last().expect("at least one depth"));
    let oldest = reconstruct(&store.catalog(), log, deepest, SelectionPolicy::OperationBased)
        .map_err(CliError::other)?;
    if oldest.node_count() == 0 {
        return Err(CliError::Params(
            "no nodes exist at the deepest lookback; nothing to benchmark".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pick = rng.gen_range(0..oldest.node_count());
    let v = oldest.nodes().nth(pick).expect("index within node count");

    let mut csv = String::from("plan,lookback_ops,runtime_ms,result\n");
    for &lookback in &lookbacks {
        let q = Query::point(tick_for(lookback), Scope::NodeCentric(v), Measure::Degree);
        for (label, plan) in &plans {
            let mut times_ms: Vec<f64> = Vec::with_capacity(reps);
            let mut value = 0.0;
            for _ in 0..reps {
                let started = Instant::now();
                let result = execute(&q, &store, *plan, SelectionPolicy::OperationBased)
                    .map_err(query_error)?;
                times_ms.push(started.elapsed().as_secs_f64() * 1e3);
                value = result.value;
            }
            times_ms.sort_by(f64::total_cmp);
            let median = times_ms[times_ms.len() / 2].max(1e-4);
            csv.push_str(&format!("{label},{lookback},{median:.4},{value}\n"));
        }
    }
    std::fs::write(out, &csv).map_err(CliError::other)?;
    println!(
        "benchmarked node {v} over {} lookback depths x {} plans into {}",
        lookbacks.len(),
        plans.len(),
        out.display()
    );
    Ok(())
}
