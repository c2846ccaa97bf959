//! Criterion benchmarks for the simulation and measure kernels.

use std::hint::black_box;

use criterion::{BenchmarkId, Criterion, Throughput};
use extorus::region::{monte_carlo_measure, RegionSpec};
use extorus::sim::ExperimentConfig;
use extorus::torus::{step_exact, Direction, ExactOrbitState, Modulus};
use extorus::{MetricKind, RationalPoint, ToralAutomorphism};

fn exact_steps(c: &mut Criterion) {
    let t = ToralAutomorphism::cat_map();
    let mut group = c.benchmark_group("step_exact");
    group.throughput(Throughput::Elements(1000));
    for (label, modulus) in [
        ("pow2_64", Modulus::power_of_two(64).unwrap()),
        ("pow2_128", Modulus::power_of_two(128).unwrap()),
        ("general", Modulus::general(3 * (1 << 40)).unwrap()),
    ] {
        let start = ExactOrbitState::new(12_345, 67_891, modulus).unwrap();
        group.bench_function(label, |b| {
            b.iter(|| {
                let mut s = start;
                for _ in 0..1000 {
                    s = step_exact(s, &t, Direction::Forward);
                }
                black_box(s)
            })
        });
    }
    group.finish();
}

fn trials(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_trial");
    group.sample_size(20);
    let n = 100_000u64;
    group.throughput(Throughput::Elements(n));
    for metric in [MetricKind::Euclidean, MetricKind::Adapted] {
        for bits in [64u32, 96] {
            let exp = ExperimentConfig {
                metric,
                n,
                modulus_bits: bits,
                ..Default::default()
            }
            .prepare()
            .unwrap();
            let mut id = 0u64;
            group.bench_function(BenchmarkId::new(metric.to_string(), bits), |b| {
                b.iter(|| {
                    id += 1;
                    black_box(exp.run_trial(id))
                })
            });
        }
    }
    group.finish();
}

fn measures(c: &mut Criterion) {
    let t = ToralAutomorphism::cat_map();
    let origin = RationalPoint::from_fractions(0, 1, 0, 1).unwrap();
    let samples = 100_000u64;
    let mut group = c.benchmark_group("monte_carlo_measure");
    group.sample_size(20);
    group.throughput(Throughput::Elements(samples));
    let regions = [
        ("ball", RegionSpec::ball(origin, 0.01, MetricKind::Euclidean).unwrap()),
        ("escape_set", RegionSpec::escape_set(origin, 0.01, MetricKind::Euclidean, 1).unwrap()),
        ("nested_k2", RegionSpec::nested(origin, 0.01, MetricKind::Euclidean, 1, 2).unwrap()),
    ];
    for (label, region) in &regions {
        group.bench_function(*label, |b| {
            b.iter(|| black_box(monte_carlo_measure(region, &t, samples, 7).unwrap()))
        });
    }
    group.finish();
}

pub fn benchmarks(c: &mut Criterion) {
    exact_steps(c);
    trials(c);
    measures(c);
}
