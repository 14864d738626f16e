use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rnss::experiment::{accuracy_sweep, AccuracyConfig};
use rnss::privacy::{empirical_mi, Quantity, SampleSpec, WorstCaseSearch};
use rnss::{EvaluationDomain, Execution};

fn bench_empirical_mi(c: &mut Criterion) {
    let d = Arc::new(EvaluationDomain::grid(11, 5).unwrap());
    let mut group = c.benchmark_group("empirical_mi");
    group.sample_size(10);
    for exec in Execution::available() {
        let mut spec = SampleSpec::new(d.clone(), 100.0, Quantity::TSharesPlusMask);
        spec.samples = 50_000;
        group.bench_function(BenchmarkId::from_parameter(exec.name()), |b| {
            b.iter(|| empirical_mi(&spec, exec).unwrap())
        });
    }
    group.finish();
}

fn bench_accuracy(c: &mut Criterion) {
    let cfg = AccuracyConfig {
        sigma2_y: vec![1.0, 100.0, 1000.0],
        trials: 200,
        ..AccuracyConfig::default()
    };
    let mut group = c.benchmark_group("accuracy_sweep");
    group.sample_size(10);
    for exec in Execution::available() {
        group.bench_function(BenchmarkId::from_parameter(exec.name()), |b| {
            b.iter(|| accuracy_sweep(&cfg, exec).unwrap())
        });
    }
    group.finish();
}

fn bench_worst_case(c: &mut Criterion) {
    let d = Arc::new(EvaluationDomain::grid(11, 5).unwrap());
    let mut group = c.benchmark_group("worst_case_search");
    group.sample_size(10);
    for exec in Execution::available() {
        let search = WorstCaseSearch::new(d.clone(), 50.0, 1.0, Quantity::TShares);
        group.bench_function(BenchmarkId::from_parameter(exec.name()), |b| {
            b.iter(|| search.run(exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(
    benches,
    bench_empirical_mi,
    bench_accuracy,
    bench_worst_case
);
criterion_main!(benches);
