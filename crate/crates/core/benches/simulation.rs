use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qrpad_core::embedder::embed;
use qrpad_core::scenario::{
    example_fixture, generate_request, random_mesh_substrate, run_simulation_with, Execution, GeneratorConfig,
    SimulationConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn sweep(c: &mut Criterion) {
    let cfg = SimulationConfig {
        iterations: 20,
        ..SimulationConfig::default()
    };
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    group.bench_function("sequential", |b| {
        b.iter(|| run_simulation_with(black_box(&cfg), Execution::Sequential))
    });
    #[cfg(feature = "parallel")]
    group.bench_function("parallel", |b| {
        b.iter(|| run_simulation_with(black_box(&cfg), Execution::Parallel))
    });
    group.finish();
}

fn worked_example(c: &mut Criterion) {
    let (net, req, coeffs) = example_fixture();
    c.bench_function("embed/worked_example", |b| {
        b.iter(|| {
            let mut net = net.clone();
            embed(&mut net, black_box(&req), &coeffs).unwrap()
        })
    });
}

fn mesh_scaling(c: &mut Criterion) {
    let mut group = c.benchmark_group("embed/mesh");
    for nodes in [100usize, 200, 400, 800] {
        let mut rng = ChaCha8Rng::seed_from_u64(nodes as u64);
        let net = random_mesh_substrate(&mut rng, nodes, 8.0);
        let reqs: Vec<_> = (0..16)
            .map(|k| generate_request(&mut rng, &GeneratorConfig::default(), format!("r{k}")))
            .collect();
        let coeffs = Default::default();
        group.bench_with_input(BenchmarkId::from_parameter(nodes), &nodes, |b, _| {
            b.iter(|| {
                for r in &reqs {
                    let mut net = net.clone();
                    let _ = black_box(embed(&mut net, r, &coeffs));
                }
            })
        });
    }
    group.finish();
}

criterion_group!(benches, sweep, worked_example, mesh_scaling);
criterion_main!(benches);
