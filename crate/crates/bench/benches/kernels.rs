//! Microbenchmarks for the hot kernels: spectral evolution, the averaged
//! nonlinearity and its gradient, one solver step, and the Strichartz
//! endpoint integral.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use dmsol_core::averaging::AveragingMeasure;
use dmsol_core::nonlinearity::{h_gradient, n_gradient, n_value};
use dmsol_core::potentials::Potential;
use dmsol_core::propagator::{evolve, gaussian_pulse};
use dmsol_core::solver::{solve, SolverConfig};
use dmsol_core::strichartz::{strichartz_functional, StrichartzMode};
use dmsol_core::{Grid, Problem};

fn problem(n: usize) -> Problem {
    Problem::new(
        2.0,
        0.0,
        Potential::power(4.0).unwrap(),
        AveragingMeasure::uniform(0.0, 1.0).unwrap(),
        Grid::new(n, 40.0).unwrap(),
    )
    .unwrap()
}

fn bench_evolve(c: &mut Criterion) {
    let mut group = c.benchmark_group("evolve");
    for n in [512usize, 2048, 8192] {
        let grid = Grid::new(n, 40.0).unwrap();
        let g = gaussian_pulse(1.0, 2.0, &grid).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &g, |b, g| {
            b.iter(|| evolve(g, 0.37))
        });
    }
    group.finish();
}

fn bench_nonlinearity(c: &mut Criterion) {
    let mut group = c.benchmark_group("nonlinearity");
    for n in [512usize, 2048] {
        let prob = problem(n);
        let g = gaussian_pulse(1.0, 2.0, prob.grid()).unwrap();
        group.bench_with_input(BenchmarkId::new("n_value", n), &n, |b, _| {
            b.iter(|| n_value(&g, &prob).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("n_gradient", n), &n, |b, _| {
            b.iter(|| n_gradient(&g, &prob).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("h_gradient", n), &n, |b, _| {
            b.iter(|| h_gradient(&g, &prob).unwrap())
        });
    }
    group.finish();
}

fn bench_solve_small(c: &mut Criterion) {
    let prob = problem(256);
    let cfg = SolverConfig { tol: 1e-6, max_iter: 2000, ..Default::default() };
    c.bench_function("solve/model-256", |b| b.iter(|| solve(&prob, &cfg).unwrap()));
}

fn bench_strichartz(c: &mut Criterion) {
    let grid = Grid::new(512, 40.0).unwrap();
    let g = gaussian_pulse(1.0, 1.0, &grid).unwrap();
    c.bench_function("strichartz/line-q6-512", |b| {
        b.iter(|| strichartz_functional(&g, 6.0, StrichartzMode::LebesgueLine).unwrap())
    });
}

criterion_group!(benches, bench_evolve, bench_nonlinearity, bench_solve_small, bench_strichartz);
criterion_main!(benches);
