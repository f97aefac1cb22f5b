//! Hot kernels under the rayon pool against a one-worker pool.
//!
//! Build with `--no-default-features` to time the sequential fallback itself.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use redqueen::analytic::stationary::{default_grid, HostOperator};
use redqueen::config::SimulationConfig;
use redqueen::grid::Grid;
use redqueen::model::ModelParams;
use redqueen::par;
use redqueen::solver::{cfl_limit, rhs_full, Integrator, SimState};

fn workers() -> Vec<(&'static str, usize)> {
    let all = std::thread::available_parallelism().map_or(1, |n| n.get());
    vec![("pool", all), ("one", 1)]
}

fn state(m: usize) -> (SimState, ModelParams) {
    let mut cfg = SimulationConfig::reference();
    cfg.grid.m = m;
    (cfg.initial_state().expect("defaults are valid"), cfg.params)
}

fn bench_rhs(c: &mut Criterion) {
    let mut g = c.benchmark_group("rhs");
    for m in [64, 128, 256] {
        let (s, p) = state(m);
        for (label, t) in workers() {
            g.bench_with_input(BenchmarkId::new(label, m), &m, |b, _| {
                par::with_threads(t, || b.iter(|| rhs_full(black_box(&s), &p).unwrap()))
            });
        }
    }
    g.finish();
}

fn bench_step(c: &mut Criterion) {
    let mut g = c.benchmark_group("rk4_step");
    for m in [64, 128, 256] {
        let (s, p) = state(m);
        let dt = cfl_limit(s.grid(), &p);
        for (label, t) in workers() {
            g.bench_with_input(BenchmarkId::new(label, m), &m, |b, _| {
                par::with_threads(t, || {
                    let mut it = Integrator::new(&s, &p);
                    b.iter(|| it.step(dt).unwrap())
                })
            });
        }
    }
    g.finish();
}

fn bench_principal(c: &mut Criterion) {
    let p = ModelParams::reference();
    let mut g = c.benchmark_group("stationary_principal");
    g.sample_size(10);
    for m in [64, 128] {
        let grid: Grid = default_grid(&p, m).unwrap();
        let op = HostOperator::new(&p, grid).unwrap();
        for (label, t) in workers() {
            g.bench_with_input(BenchmarkId::new(label, m), &m, |b, _| {
                par::with_threads(t, || b.iter(|| op.principal(black_box(5.0), None).unwrap()))
            });
        }
    }
    g.finish();
}

criterion_group!(benches, bench_rhs, bench_step, bench_principal);
criterion_main!(benches);
