//! Benchmarks for the hot paths: pair enumeration, stabilizer-chain
//! orders, density spinning, and form normalization.

use criterion::{criterion_group, criterion_main, Criterion};

use sphg::congruence::{group_order_mod, Budget};
use sphg::construct::{build_group, PolyPair};
use sphg::density::is_dense;
use sphg::form::normalize_group;
use sphg::poly::cyclotomic_products_of_degree;
use sphg::words::standard_generators;

fn bench_enumeration(c: &mut Criterion) {
    c.bench_function("cyclotomic-products-degree-6", |b| {
        b.iter(|| cyclotomic_products_of_degree(6).len())
    });
}

fn bench_chain_order(c: &mut Criterion) {
    let gens = standard_generators(4);
    let budget = Budget::default();
    let mut g = c.benchmark_group("stabilizer-chain");
    g.sample_size(20);
    g.bench_function("sp4-order-mod-3", |b| {
        b.iter(|| group_order_mod(&gens, 3, &budget, 1).unwrap())
    });
    g.bench_function("sp4-order-mod-4", |b| {
        b.iter(|| group_order_mod(&gens, 4, &budget, 1).unwrap())
    });
    g.finish();
}

fn bench_density(c: &mut Criterion) {
    let pair = PolyPair::from_indices(&[1, 1, 1, 1], &[5]).unwrap();
    let h = build_group(&pair).unwrap();
    let gens = h.generators();
    c.bench_function("density-spin-degree-4", |b| {
        b.iter(|| is_dense(&gens, &h.h_1).unwrap().is_some())
    });
}

fn bench_normalize(c: &mut Criterion) {
    let pair = PolyPair::from_indices(&[1, 1, 1, 1, 1, 1], &[14]).unwrap();
    let h = build_group(&pair).unwrap();
    let mut g = c.benchmark_group("normalize");
    g.sample_size(10);
    g.bench_function("normalize-degree-6", |b| {
        b.iter(|| normalize_group(&h, 8, 0).unwrap().kbar)
    });
    g.finish();
}

criterion_group!(
    benches,
    bench_enumeration,
    bench_chain_order,
    bench_density,
    bench_normalize
);
criterion_main!(benches);
