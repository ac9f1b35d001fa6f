//! Micro-benchmarks for the numerical kernels: the Remez engine (dominant
//! setup cost), the per-observation estimators (dominant experiment cost),
//! and the special functions they lean on.

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use ngamma::approx::best_poly_approx;
use ngamma::estimators::{estimate_dense, estimate_sparse};
use ngamma::model::{simulate_observations, ProblemConfig, ThetaVector};
use ngamma::priors::{matching_measures, prior_config};
use ngamma::special::{alpha_gamma, erfc, truncated_abs_moment};

fn bench_remez(c: &mut Criterion) {
    let mut group = c.benchmark_group("remez");
    for &(gamma, k) in &[(1.0, 4usize), (1.0, 12), (2.5, 16)] {
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("gamma{gamma}_K{k}")),
            &(gamma, k),
            |b, &(gamma, k)| b.iter(|| best_poly_approx(black_box(gamma), k, 1e-9).unwrap()),
        );
    }
    group.finish();
}

fn bench_estimators(c: &mut Criterion) {
    let mut group = c.benchmark_group("estimators");
    group.sample_size(30);

    let sparse_cfg = ProblemConfig::with_default_c(4096, 8, 1.0, 1.0).unwrap();
    let y_sparse = simulate_observations(&ThetaVector::zeros(4096), 1.0, 1);
    group.bench_function("sparse_d4096", |b| {
        b.iter(|| estimate_sparse(black_box(&y_sparse), &sparse_cfg).unwrap())
    });

    let dense_cfg = ProblemConfig::with_default_c(256, 256, 1.0, 1.5).unwrap();
    let y_dense = simulate_observations(&ThetaVector::zeros(256), 1.0, 2);
    // warm the coefficient cache so the benchmark measures the estimator
    estimate_dense(&y_dense, &dense_cfg, 0).unwrap();
    group.bench_function("dense_d256", |b| {
        b.iter(|| estimate_dense(black_box(&y_dense), &dense_cfg, 7).unwrap())
    });
    group.finish();
}

fn bench_special(c: &mut Criterion) {
    let mut group = c.benchmark_group("special");
    group.bench_function("erfc", |b| b.iter(|| erfc(black_box(2.34))));
    group.bench_function("truncated_abs_moment", |b| {
        b.iter(|| truncated_abs_moment(black_box(1.5), black_box(2.0)))
    });
    group.bench_function("alpha_gamma", |b| {
        b.iter(|| alpha_gamma(black_box(1.0), 4096, 8).unwrap())
    });
    group.finish();
}

fn bench_priors(c: &mut Criterion) {
    let mut group = c.benchmark_group("priors");
    group.sample_size(20);
    group.bench_function("matching_measures_K12", |b| {
        b.iter(|| matching_measures(black_box(1.0), 12, 2.0).unwrap())
    });
    group.bench_function("prior_config", |b| {
        b.iter(|| prior_config(black_box(4096), 4096, 1.0).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_remez, bench_estimators, bench_special, bench_priors);
criterion_main!(benches);
