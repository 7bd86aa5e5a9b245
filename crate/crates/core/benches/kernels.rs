//! Kernel throughput on a single-thread pool versus the default pool.
//! Build with `--no-default-features` to measure the plain sequential path.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rayon::ThreadPoolBuilder;
use taxis_core::grid::laplacian_neumann;
use taxis_core::presets::standard_beta3;
use taxis_core::stepper::{solve_helmholtz, step, SimState};

fn kernels(c: &mut Criterion) {
    let pools = [
        ("1-thread", ThreadPoolBuilder::new().num_threads(1).build().unwrap()),
        ("default", ThreadPoolBuilder::new().build().unwrap()),
    ];
    for n in [64usize, 256] {
        let sc = standard_beta3(n, 1.0).unwrap();
        let state = SimState::initial(&sc.initial_data());

        let mut group = c.benchmark_group(format!("{n}x{n}"));
        group.sample_size(20);
        for (label, pool) in &pools {
            group.bench_with_input(BenchmarkId::new("laplacian", label), &state.u, |b, u| {
                pool.install(|| b.iter(|| laplacian_neumann(black_box(u))))
            });
            group.bench_with_input(BenchmarkId::new("helmholtz", label), &state.u, |b, u| {
                pool.install(|| b.iter(|| solve_helmholtz(black_box(u), 1e-2, 1e-10, 10_000).unwrap()))
            });
            group.bench_with_input(BenchmarkId::new("step", label), &state, |b, s| {
                pool.install(|| b.iter(|| step(black_box(s), &sc.cfg, &sc.resupply, 1e-3).unwrap()))
            });
        }
        group.finish();
    }
}

criterion_group!(benches, kernels);
criterion_main!(benches);
