use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lppsim::{estimate_c, ChargeDistribution, RunSettings};

fn replicas(c: &mut Criterion) {
    let dist = ChargeDistribution::shifted_exponential();
    let mut group = c.benchmark_group("estimate_shifted_exponential");
    group.sample_size(10);
    for n in [256usize, 2048] {
        group.bench_with_input(BenchmarkId::new("sequential", n), &n, |b, &n| {
            b.iter(|| estimate_c(&dist, Some(0.7), n, RunSettings::new(1).workers(1)).unwrap())
        });
        if lppsim::par::parallel_enabled() {
            group.bench_with_input(BenchmarkId::new("parallel", n), &n, |b, &n| {
                b.iter(|| estimate_c(&dist, Some(0.7), n, RunSettings::new(1).workers(0)).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, replicas);
criterion_main!(benches);
