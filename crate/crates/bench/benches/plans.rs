//! The three query plans answering the same historical degree question.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use deltagraph::query::{execute, plan, PlanConfig, PlanKind};
use deltagraph::{
    MaterializationPolicy, Measure, Mode, Query, Scope, SelectionPolicy,
};
use deltagraph_bench::{hub, seeded_store};

fn bench_plans(c: &mut Criterion) {
    let store = seeded_store(2_000, 3, 0.2, MaterializationPolicy::Periodic(500));
    let v = hub(&store);

    let mut group = c.benchmark_group("point_degree");
    for lookback in [10u64, 100, 1_000] {
        let t = store.t_cur() - lookback;
        let q = Query::point(t, Scope::NodeCentric(v), Measure::Degree);
        for (label, config) in [
            (
                "two_phase_full",
                PlanConfig {
                    force: Some(PlanKind::TwoPhase),
                    ..Default::default()
                },
            ),
            (
                "two_phase_partial",
                PlanConfig {
                    force: Some(PlanKind::TwoPhase),
                    use_partial_reconstruction: true,
                    ..Default::default()
                },
            ),
            (
                "hybrid",
                PlanConfig {
                    force: Some(PlanKind::Hybrid),
                    ..Default::default()
                },
            ),
            (
                "hybrid_indexed",
                PlanConfig {
                    force: Some(PlanKind::Hybrid),
                    use_node_index: true,
                    ..Default::default()
                },
            ),
        ] {
            let p = plan(&q, &config).expect("plan applies");
            group.bench_with_input(BenchmarkId::new(label, lookback), &q, |b, q| {
                b.iter(|| execute(q, &store, p, SelectionPolicy::OperationBased).unwrap())
            });
        }
    }
    group.finish();

    let mut group = c.benchmark_group("range_differential_degree");
    for lookback in [10u64, 100, 1_000] {
        let t_k = store.t_cur() - lookback;
        let q = Query::range(
            t_k,
            store.t_cur(),
            Scope::NodeCentric(v),
            Mode::Differential,
            Measure::Degree,
        );
        for (label, kind) in [
            ("two_phase", PlanKind::TwoPhase),
            ("hybrid", PlanKind::Hybrid),
            ("delta_only", PlanKind::DeltaOnly),
        ] {
            let config = PlanConfig {
                force: Some(kind),
                ..Default::default()
            };
            let p = plan(&q, &config).expect("plan applies");
            group.bench_with_input(BenchmarkId::new(label, lookback), &q, |b, q| {
                b.iter(|| execute(q, &store, p, SelectionPolicy::OperationBased).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bench_plans);
criterion_main!(benches);
