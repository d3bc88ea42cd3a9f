//! Sequential against rayon-parallel execution on the data-parallel kernels.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use plaplab_core::calculus::curvature_lower_bound;
use plaplab_core::regularity::{run_batch, EstimateReport};
use plaplab_core::space::{doubling_estimates, generate_space, CenterSelection, DoublingOptions, SpaceKind};
use plaplab_core::variational::{solve_poisson_neumann, SolverConfig};
use plaplab_core::{Execution, ScalarField};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn curvature(c: &mut Criterion) {
    let s = generate_space(SpaceKind::Grid(30, 30)).unwrap();
    let mut group = c.benchmark_group("curvature_grid30");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| curvature_lower_bound(&s, exec)));
    }
    group.finish();
}

fn doubling(c: &mut Criterion) {
    let s = generate_space(SpaceKind::Grid(40, 40)).unwrap();
    let mut group = c.benchmark_group("doubling_grid40");
    for (name, exec) in MODES {
        let mut opts = DoublingOptions::new(20.0, vec![2.0, 4.0, 8.0]);
        opts.centers = CenterSelection::Explicit((0..s.len()).step_by(3).collect());
        opts.execution = exec;
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| doubling_estimates(&s, &opts).unwrap()));
    }
    group.finish();
}

fn batch(c: &mut Criterion) {
    let s = generate_space(SpaceKind::Grid(5, 5)).unwrap();
    let seeds: Vec<u64> = (0..16).collect();
    let check = |&seed: &u64| {
        let f = ScalarField::random_zero_mean(&s, seed);
        let r = solve_poisson_neumann(&s, 2.5, &f, &SolverConfig::default())?;
        Ok(EstimateReport::new("kkt", r.kkt_residual, 1e-10, f64::INFINITY, format!("seed={seed}")))
    };
    let mut group = c.benchmark_group("neumann_batch16");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| run_batch(exec, &seeds, check)));
    }
    group.finish();
}

criterion_group!(benches, curvature, doubling, batch);
criterion_main!(benches);
