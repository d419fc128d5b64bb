use criterion::{black_box, criterion_group, criterion_main, Criterion};

use ccs_bench::{analysis_scenario, heavy_scenario};
use ccs_core::bus::{deserialize, serialize, tick_timestamp, Envelope, EnvelopeKind};
use ccs_core::checker::{explore, CheckerMode, ExploreParams};
use ccs_core::sim::{run_broadcast_once, run_coherent_once};
use ccs_core::{AgentId, ArtifactId, Version};

fn bench_simulation(c: &mut Criterion) {
    let analysis = analysis_scenario();
    let heavy = heavy_scenario();
    let mut group = c.benchmark_group("simulation");
    group.bench_function("coherent_run_canonical", |b| {
        b.iter(|| run_coherent_once(black_box(&analysis), 20260306).unwrap())
    });
    group.bench_function("broadcast_run_canonical", |b| {
        b.iter(|| run_broadcast_once(black_box(&analysis), 20260306).unwrap())
    });
    group.bench_function("coherent_run_heavy", |b| {
        b.iter(|| run_coherent_once(black_box(&heavy), 7).unwrap())
    });
    group.finish();
}

fn bench_checker(c: &mut Criterion) {
    let mut group = c.benchmark_group("checker");
    group.bench_function("explore_correct_3_agents", |b| {
        b.iter(|| explore(black_box(&ExploreParams::default())).unwrap())
    });
    group.bench_function("explore_broken_3_agents", |b| {
        let params = ExploreParams {
            mode: CheckerMode::BrokenUpgrade,
            ..Default::default()
        };
        b.iter(|| explore(black_box(&params)).unwrap())
    });
    group.finish();
}

fn bench_wire(c: &mut Criterion) {
    let env = Envelope::new(
        EnvelopeKind::Invalidate,
        tick_timestamp(17),
        AgentId(2),
        &ArtifactId::new("d1"),
        Version(42),
    );
    let bytes = serialize(&env);
    let mut group = c.benchmark_group("wire");
    group.bench_function("envelope_serialize", |b| {
        b.iter(|| serialize(black_box(&env)))
    });
    group.bench_function("envelope_deserialize", |b| {
        b.iter(|| deserialize(black_box(&bytes)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_simulation, bench_checker, bench_wire);
criterion_main!(benches);
