use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use eddm_bench::channel_case;
use eddm_core::bc::ReducedOperator;
use eddm_core::sparse::{factorize, SparseMatrix};
use eddm_core::stokes::assemble_stokes_matrix;
use eddm_core::{run_ensemble_ddm, run_traditional_ddm};

fn ensemble_vs_traditional(c: &mut Criterion) {
    let mut g = c.benchmark_group("channel_ddm");
    g.sample_size(10).measurement_time(Duration::from_secs(20));
    for j in [1usize, 4, 10] {
        let (ctx, disc) = channel_case(8, j);
        g.bench_with_input(BenchmarkId::new("ensemble", j), &j, |b, _| {
            b.iter(|| black_box(run_ensemble_ddm(&ctx, &disc).unwrap().sweeps))
        });
        g.bench_with_input(BenchmarkId::new("traditional", j), &j, |b, _| {
            b.iter(|| black_box(run_traditional_ddm(&ctx, &disc).unwrap().sweeps))
        });
    }
    g.finish();
}

/// Free-dof block of the channel Stokes operator.
fn stokes_matrix(n: u32) -> SparseMatrix {
    let (_, disc) = channel_case(n, 1);
    let a = assemble_stokes_matrix(&disc.stokes, 1.0, 1.0, 1.0, &disc.pairing).unwrap();
    ReducedOperator::new(a, disc.stokes.constraints(), None).unwrap().k_ff
}

fn solve_many_vs_loop(c: &mut Criterion) {
    let a = stokes_matrix(16);
    let f = factorize(&a).unwrap();
    let n = a.n_rows();
    let mut g = c.benchmark_group("multi_rhs");
    g.sample_size(20);
    for j in [1usize, 8, 32] {
        let rhs: Vec<Vec<f64>> = (0..j).map(|k| (0..n).map(|i| ((i * 7 + k * 13) % 17) as f64 - 8.0).collect()).collect();
        g.bench_with_input(BenchmarkId::new("solve_many", j), &rhs, |b, rhs| b.iter(|| black_box(f.solve_many(rhs).unwrap())));
        g.bench_with_input(BenchmarkId::new("solve_loop", j), &rhs, |b, rhs| {
            b.iter(|| black_box(rhs.iter().map(|r| f.solve(r).unwrap()).collect::<Vec<_>>()))
        });
    }
    g.finish();
}

fn factor_once(c: &mut Criterion) {
    let a = stokes_matrix(16);
    c.bench_function("factorize_stokes_h16", |b| b.iter(|| black_box(factorize(&a).unwrap())));
}

criterion_group!(benches, ensemble_vs_traditional, solve_many_vs_loop, factor_once);
criterion_main!(benches);
