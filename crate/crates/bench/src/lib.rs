//! Shared fixtures for the criterion benchmarks: deterministic generated
//! stores of a few sizes, so every bench measures the same workloads.

use deltagraph::gen::{generate, GenParams};
use deltagraph::{GraphStore, MaterializationPolicy, NodeId};

/// Generates a stream and ingests it into a store.
pub fn seeded_store(
    n_nodes: u64,
    m_attach: usize,
    p_remove: f64,
    policy: MaterializationPolicy,
) -> GraphStore {
    let log = generate(&GenParams {
        n_nodes,
        m_attach,
        p_remove,
        seed: 0xbe5e,
    })
    .expect("valid generator parameters");
    let mut store = GraphStore::new(policy).expect("valid policy");
    store.replay(&log).expect("generated stream replays cleanly");
    store
}

/// A busy node to query: the highest-degree node of the current snapshot.
pub fn hub(store: &GraphStore) -> NodeId {
    let current = store.current();
    current
        .nodes()
        .max_by_key(|&v| current.degree(v).expect("node present"))
        .expect("store is nonempty")
}
