use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use extremal_bench::exp_solution;
use extremal_core::stability::singular_threshold_scan;
use extremal_core::{coupled_eta, mu1_semistability, newton_solve, trace_branch, ContinuationSettings, NewtonSettings};

fn newton(c: &mut Criterion) {
    let mut group = c.benchmark_group("newton_solve");
    for m in [256, 1024, 4096] {
        let (grid, f, _) = exp_solution(3.0, m, 1.0, 1.0);
        let z = vec![0.0; m];
        group.bench_with_input(BenchmarkId::from_parameter(m), &m, |b, _| {
            b.iter(|| newton_solve(&grid, &f, black_box(3.0), 1.5, (&z, &z), &NewtonSettings::default()).unwrap())
        });
    }
    group.finish();
}

fn eigen(c: &mut Criterion) {
    let (grid, f, sol) = exp_solution(3.0, 1024, 3.0, 0.5);
    c.bench_function("mu1_semistability/1024", |b| b.iter(|| mu1_semistability(&grid, black_box(&sol), &f).unwrap()));
    c.bench_function("coupled_eta/1024", |b| b.iter(|| coupled_eta(&grid, black_box(&sol), &f).unwrap()));
}

fn branch(c: &mut Criterion) {
    let (grid, f, _) = exp_solution(2.0, 256, 0.1, 1.0);
    let settings = ContinuationSettings { lambda_min_step: 1e-6, ..Default::default() };
    let mut group = c.benchmark_group("trace_branch");
    group.sample_size(10);
    group.bench_function("N2_m256", |b| b.iter(|| trace_branch(&grid, &f, black_box(1.0), &settings).unwrap()));
    group.finish();
}

fn scan(c: &mut Criterion) {
    let mut group = c.benchmark_group("singular_scan");
    group.sample_size(10);
    group.bench_function("m4096_3pts", |b| b.iter(|| singular_threshold_scan(black_box(&[9.0, 10.0, 11.0]), 4096).unwrap()));
    group.finish();
}

criterion_group!(benches, newton, eigen, branch, scan);
criterion_main!(benches);
