use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use infgen_bench::{GyreCase, GYRE_A};
use infgen_core::inflated::assemble;

fn slices(c: &mut Criterion) {
    let mut group = c.benchmark_group("slice_generators");
    group.sample_size(10);
    for (nx, ny) in [(15, 10), (38, 25)] {
        let case = GyreCase::new(nx, ny, 11);
        group.bench_with_input(BenchmarkId::from_parameter(format!("{nx}x{ny}x11")), &case, |b, case| {
            b.iter(|| case.slices())
        });
    }
    group.finish();
}

fn inflate(c: &mut Criterion) {
    let case = GyreCase::new(38, 25, 11);
    let slices = case.slices();
    let h = case.times[1] - case.times[0];
    c.bench_function("assemble/38x25x11", |b| b.iter(|| assemble(&slices, GYRE_A, h).unwrap()));
}

criterion_group!(benches, slices, inflate);
criterion_main!(benches);
