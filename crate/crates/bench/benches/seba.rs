use criterion::{criterion_group, criterion_main, Criterion};
use infgen_bench::GyreCase;
use infgen_core::seba::{seba, SebaOptions};
use infgen_core::spectrum::{leading_eigenpairs, EigenClass, EigenOptions};
use infgen_core::spectrum::classify;
use infgen_core::ClassifyOptions;

fn rotate(c: &mut Criterion) {
    let case = GyreCase::new(38, 25, 11);
    let inflated = case.inflated();
    let sol = leading_eigenpairs(&inflated.matrix, &EigenOptions::with_k(6)).unwrap();
    let measures = case.grid.measures();
    let classes = classify(&sol, inflated.n, inflated.n_t, &measures, &ClassifyOptions::default()).unwrap();
    let spatial = classes.iter().position(|c| c.class == EigenClass::SpatialReal).unwrap();
    let input = vec![sol.real_vector(0).unwrap(), sol.real_vector(spatial).unwrap()];
    let opts = SebaOptions::default();
    c.bench_function("seba/38x25x11/two_vectors", |b| b.iter(|| seba(&input, &opts).unwrap()));
}

criterion_group!(benches, rotate);
criterion_main!(benches);
