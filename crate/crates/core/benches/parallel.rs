//! One worker against the default rayon pool on the three data-parallel hot
//! spots: the Γ candidate sweep, the Schur-complement column solves, and the
//! row sums of the half-plane form.
//!
//! Build with `--no-default-features` to time the sequential fallback; both
//! pools then run the same plain iterators.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rayon::ThreadPool;
use steklov::capacity::{gamma_search, GammaConfig, GammaMode};
use steklov::hyperbolic::{halfplane_form, LineFunction};
use steklov::mesh::{generate, GeometrySpec};
use steklov::spectral::discrete_dtn;

fn pools() -> Vec<(String, ThreadPool)> {
    let default = rayon::ThreadPoolBuilder::new().build().unwrap();
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    vec![
        ("one".to_string(), one),
        (format!("default-{}", default.current_num_threads()), default),
    ]
}

fn gamma(c: &mut Criterion) {
    let mesh = generate(&GeometrySpec::Disk { n_radial: 12, n_angular: 6 }).unwrap();
    let mut g = c.benchmark_group("gamma_search_disk72");
    g.sample_size(10);
    for (threads, pool) in pools() {
        g.bench_with_input(BenchmarkId::from_parameter(threads), &mesh, |b, m| {
            b.iter(|| pool.install(|| gamma_search(black_box(m), GammaMode::Compact, GammaConfig::default()).unwrap()))
        });
    }
    g.finish();
}

fn dtn(c: &mut Criterion) {
    let mesh = generate(&GeometrySpec::Disk { n_radial: 20, n_angular: 6 }).unwrap();
    let mut g = c.benchmark_group("discrete_dtn_disk120");
    g.sample_size(10);
    for (threads, pool) in pools() {
        g.bench_with_input(BenchmarkId::from_parameter(threads), &mesh, |b, m| {
            b.iter(|| pool.install(|| discrete_dtn(black_box(m), &[]).unwrap()))
        });
    }
    g.finish();
}

fn halfplane(c: &mut Criterion) {
    let f = LineFunction::plateau(25.0, 0.05, 30.0).unwrap();
    let mut g = c.benchmark_group("halfplane_form_1201");
    for (threads, pool) in pools() {
        g.bench_with_input(BenchmarkId::from_parameter(threads), &f, |b, f| {
            b.iter(|| pool.install(|| halfplane_form(black_box(f)).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, gamma, dtn, halfplane);
criterion_main!(benches);
