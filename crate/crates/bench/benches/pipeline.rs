use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use ego_layers_bench::{event_log, planted_values};
use ego_layers_core::{build_ego_networks, calibrate_eps, kmeans_1d, parse_event_log, select_k};

fn clustering(c: &mut Criterion) {
    let mut group = c.benchmark_group("kmeans_1d");
    for n in [40, 200, 1000] {
        let values = planted_values(n, 7);
        group.bench_with_input(BenchmarkId::from_parameter(n), &values, |b, v| {
            b.iter(|| kmeans_1d(black_box(v), 4).unwrap())
        });
    }
    group.finish();

    let mut group = c.benchmark_group("select_k");
    for n in [40, 200] {
        let values = planted_values(n, 7);
        group.bench_with_input(BenchmarkId::from_parameter(n), &values, |b, v| {
            b.iter(|| select_k(black_box(v), 20).unwrap())
        });
    }
    group.finish();
}

fn density(c: &mut Criterion) {
    let values = planted_values(40, 3);
    c.bench_function("calibrate_eps/40", |b| {
        b.iter(|| calibrate_eps(black_box(&values), 4).unwrap())
    });
}

fn ingest(c: &mut Criterion) {
    let (csv, download) = event_log(200, 5);
    let mut group = c.benchmark_group("ingest");
    group.throughput(Throughput::Bytes(csv.len() as u64));
    group.bench_function("parse_event_log", |b| {
        b.iter(|| parse_event_log(black_box(csv.as_slice()), download).unwrap())
    });
    let store = parse_event_log(csv.as_slice(), download).unwrap();
    group.bench_function("build_ego_networks", |b| {
        b.iter(|| build_ego_networks(black_box(&store)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, clustering, density, ingest);
criterion_main!(benches);
