//! Graph measures checked against independent oracle implementations:
//! diameter against Floyd–Warshall, component count against union-find,
//! induced average degree against brute-force pair counting.

mod common;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use common::{random_history, SetGraph};
use deltagraph::graph::{Diameter, NodeId, Snapshot};
use deltagraph::reconstruct::for_rec;

#[test]
fn measures_match_oracles_on_random_states() {
    for seed in 60..75 {
        let (log, _) = random_history(seed, 30, 9);
        let empty = Snapshot::empty(log.t0());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..6 {
            let t = rng.gen_range(0..=log.t_cur());
            let snap = for_rec(&empty, &log, t).unwrap();
            let oracle = SetGraph::at_tick(&log, t);

            assert_eq!(snap.component_count(), oracle.component_count(), "seed {seed} t {t}");

            match oracle.diameter() {
                None => assert!(snap.diameter().is_err(), "seed {seed} t {t}: empty graph"),
                Some(d) if d.is_infinite() => {
                    assert_eq!(snap.diameter().unwrap(), Diameter::Infinite, "seed {seed} t {t}")
                }
                Some(d) => assert_eq!(
                    snap.diameter().unwrap(),
                    Diameter::Finite(d as u64),
                    "seed {seed} t {t}"
                ),
            }

            for id in 1..=9 {
                let v = NodeId(id);
                match oracle.degree(id) {
                    None => assert!(snap.degree(v).is_err(), "seed {seed} t {t} v {id}"),
                    Some(d) => {
                        assert_eq!(snap.degree(v).unwrap(), d, "seed {seed} t {t} v {id}");
                        let iavg = snap.induced_subgraph(v).unwrap().avg_degree().unwrap();
                        let want = oracle.induced_avg_degree(id).unwrap();
                        assert!(
                            (iavg - want).abs() <= 1e-12,
                            "seed {seed} t {t} v {id}: {iavg} vs {want}"
                        );
                    }
                }
            }
        }
    }
}
