use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;

use polaron_bench::traveling_setup;
use polaron_core::memory_kernel::{compute_k, compute_m_auto, dispersive_decay};
use polaron_core::traveling_wave::solve_profile;
use polaron_core::{ComplexField, FourierGrid3, PotentialSpec};

fn fft_roundtrip(c: &mut Criterion) {
    let mut g = c.benchmark_group("fft_roundtrip");
    for n in [32, 64] {
        let grid = FourierGrid3::new(n, n as f64 / 2.0).unwrap();
        let f = ComplexField::from_fn(&grid, |x| Complex64::new((-x[0] * x[0]).exp(), x[1].sin()));
        g.bench_with_input(BenchmarkId::from_parameter(n), &f, |b, f| {
            b.iter(|| black_box(f.clone().into_spectral().into_physical()))
        });
    }
    g.finish();
}

fn integrator_step(c: &mut Criterion) {
    let mut g = c.benchmark_group("step");
    for n in [32, 64] {
        let (d, s0) = traveling_setup(n, n as f64 / 2.0, 0.05).build().unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &s0, |b, s| b.iter(|| black_box(d.step(s))));
    }
    g.finish();
}

fn profile(c: &mut Criterion) {
    let grid = FourierGrid3::new(64, 32.0).unwrap();
    let spec = PotentialSpec::default();
    c.bench_function("solve_profile_64", |b| {
        b.iter(|| black_box(solve_profile([0.0, 0.0, 0.5], &spec, &grid).unwrap()))
    });
}

fn memory_kernel(c: &mut Criterion) {
    let spec = PotentialSpec::default();
    let mut g = c.benchmark_group("memory_kernel");
    g.sample_size(10);
    g.bench_function("compute_m_t20", |b| {
        b.iter(|| black_box(compute_m_auto([0.0, 0.0, 0.4], &spec, 0.04, 500).unwrap()))
    });
    let kern = compute_m_auto([0.0, 0.0, 0.4], &spec, 0.04, 1500).unwrap();
    g.bench_function("compute_k_t60", |b| b.iter(|| black_box(compute_k(&kern, 4).unwrap())));
    g.finish();
}

fn dispersive(c: &mut Criterion) {
    let grid = FourierGrid3::new(32, 32.0).unwrap();
    let f = ComplexField::from_fn(&grid, |x| {
        Complex64::new((-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / 2.0).exp(), 0.0)
    });
    let t: Vec<f64> = (0..20).map(|i| 1.0 + 0.5 * i as f64).collect();
    let mut g = c.benchmark_group("dispersive");
    g.sample_size(10);
    g.bench_function("sigma0_32", |b| b.iter(|| black_box(dispersive_decay(&f, 0, 0.0, &t).unwrap())));
    g.finish();
}

criterion_group!(benches, fft_roundtrip, integrator_step, profile, memory_kernel, dispersive);
criterion_main!(benches);
