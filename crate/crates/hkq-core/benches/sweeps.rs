//! Data-parallel sweeps against their sequential twins.
//!
//! Run with `cargo bench -p hkq-core`. Disabling the `parallel` feature
//! makes both sides sequential, which is the baseline to compare against:
//! `cargo bench -p hkq-core --no-default-features`.

use criterion::{criterion_group, criterion_main, Criterion};
use hkq_core::curvature::{self, FdScheme, MetricField};
use hkq_core::quotient::{self, QuotientChartPoint};
use hkq_core::spec::{self, GroupSpec};
use hkq_core::{liealg, parallel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

fn ricci_sweep(c: &mut Criterion) {
    let (spec, lspec) = quotient::taubian_calabi(2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pts: Vec<Vec<f64>> = (0..8)
        .map(|_| quotient::random_chart_point(&spec, &lspec, &mut rng, 0.8, 4.0).to_vec())
        .collect();
    let field = MetricField::reduced(spec, lspec);
    let scheme = FdScheme::with_step(1e-3);

    let mut group = c.benchmark_group("ricci_sweep");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| black_box(curvature::ricci_sweep(&field, black_box(&pts), scheme)))
    });
    group.bench_function("sequential", |b| {
        b.iter(|| black_box(curvature::ricci_sweep_seq(&field, black_box(&pts), scheme)))
    });
    group.finish();
}

fn oracle_sweep(c: &mut Criterion) {
    let (spec, lspec) = quotient::lwy(nalgebra::DMatrix::identity(2, 2)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let pts: Vec<QuotientChartPoint> = (0..12)
        .map(|_| quotient::random_chart_point(&spec, &lspec, &mut rng, 0.5, 5.0))
        .collect();

    let mut group = c.benchmark_group("reduction_oracle_sweep");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| {
            black_box(parallel::map_indexed(pts.len(), |i| {
                quotient::reduction_oracle(&spec, &lspec, &pts[i]).map(|m| m.amax())
            }))
        })
    });
    group.bench_function("sequential", |b| {
        b.iter(|| {
            black_box(parallel::map_indexed_seq(pts.len(), |i| {
                quotient::reduction_oracle(&spec, &lspec, &pts[i]).map(|m| m.amax())
            }))
        })
    });
    group.finish();
}

fn axiom_sweep(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let specs: Vec<GroupSpec> = (0..8)
        .map(|_| spec::random_hyperkahler(&mut rng, 4))
        .collect();

    let mut group = c.benchmark_group("axiom_verification_sweep");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| {
            black_box(parallel::map_indexed(specs.len(), |i| {
                liealg::verify_hyperkahler(&specs[i], 1e-12).map(|r| r.passed)
            }))
        })
    });
    group.bench_function("sequential", |b| {
        b.iter(|| {
            black_box(parallel::map_indexed_seq(specs.len(), |i| {
                liealg::verify_hyperkahler(&specs[i], 1e-12).map(|r| r.passed)
            }))
        })
    });
    group.finish();
}

criterion_group!(benches, ricci_sweep, oracle_sweep, axiom_sweep);
criterion_main!(benches);
