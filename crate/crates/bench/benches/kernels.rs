use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion, Throughput};

use eegsync_bench::{noise, SAMPLE_RATE_HZ};
use eegsync_core::features::{differential_entropy_points, first_difference_points};
use eegsync_core::preprocess::notch_filter;
use eegsync_core::{pcc, pcc_p_value, BandDef};

fn kernels(c: &mut Criterion) {
    let n = (240.0 * SAMPLE_RATE_HZ) as usize;
    let x = noise(n, 1);
    let y = noise(n, 2);

    let mut group = c.benchmark_group("kernels");
    group.throughput(Throughput::Elements(n as u64));
    group.bench_function("pcc", |b| b.iter(|| pcc(black_box(&x), black_box(&y)).unwrap()));
    group.bench_function("first_difference_s20", |b| {
        b.iter(|| first_difference_points(black_box(&x), 20).unwrap())
    });
    let gamma = BandDef::gamma();
    group.bench_function("differential_entropy_gamma", |b| {
        b.iter(|| differential_entropy_points(black_box(&x), SAMPLE_RATE_HZ, &gamma).unwrap())
    });
    group.bench_function("notch_48_52", |b| {
        b.iter(|| notch_filter(black_box(&x), SAMPLE_RATE_HZ, 48.0, 52.0).unwrap())
    });
    group.finish();

    c.bench_function("pcc_p_value", |b| {
        b.iter(|| pcc_p_value(black_box(0.137), black_box(231)).unwrap())
    });
}

criterion_group!(benches, kernels);
criterion_main!(benches);
