use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dpm_bench::{network, train_set};
use dpm_core::diffnet::{forward_flat, forward_jet, grad_params};
use dpm_core::pdes::{PdeId, PdeSpec};
use dpm_core::refsolvers::solve_reference;
use dpm_core::sampling::{build_eval_grid, Segment};
use dpm_core::trainer::compute_bundle;
use dpm_core::{JetBatch, JetField};

fn inputs(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let f = i as f64 / n as f64;
            (2.0 * f - 1.0, 0.5 * (1.0 - f))
        })
        .collect()
}

fn network_passes(c: &mut Criterion) {
    let params = network(PdeId::ViscousBurgers, 20, 8);
    let pts = inputs(1024);
    let mut g = c.benchmark_group("network_1024_points");
    g.bench_function("forward", |b| b.iter(|| forward_flat(black_box(&params), &pts).unwrap()));
    g.bench_function("forward_jet", |b| b.iter(|| forward_jet(black_box(&params), &pts).unwrap()));
    let mut adj = JetBatch::zeros(1, pts.len());
    adj.field_mut(JetField::Value, 0).fill(1.0);
    g.bench_function("jet_backward", |b| b.iter(|| grad_params(black_box(&params), &pts, &adj).unwrap()));
    g.finish();
}

fn gradient_bundle(c: &mut Criterion) {
    let mut g = c.benchmark_group("gradient_bundle");
    g.sample_size(10);
    for pde in [PdeId::ViscousBurgers, PdeId::Nls] {
        let spec = PdeSpec::get(pde);
        let params = network(pde, 20, 8);
        let set = train_set(pde, 2000);
        g.bench_with_input(BenchmarkId::from_parameter(pde), &set, |b, set| {
            b.iter(|| compute_bundle(black_box(&params), set, &spec, 1.0, 1.0).unwrap())
        });
    }
    g.finish();
}

fn reference_solvers(c: &mut Criterion) {
    let mut g = c.benchmark_group("reference_test_segment");
    g.sample_size(10);
    for pde in PdeId::ALL {
        let grid = build_eval_grid(&PdeSpec::get(pde), Segment::Test);
        g.bench_with_input(BenchmarkId::from_parameter(pde), &grid, |b, grid| {
            b.iter(|| solve_reference(pde, grid).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, network_passes, gradient_bundle, reference_solvers);
criterion_main!(benches);
