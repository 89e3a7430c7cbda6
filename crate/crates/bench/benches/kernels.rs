use std::f64::consts::PI;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qclock_core::corrections::{asymptotic_toa, exact_toa, series_terms};
use qclock_core::numerics::hermite_eval;
use qclock_core::phase_solver::{solve_a_from_b, solve_phase_general};
use qclock_core::toa_distribution::{distribution, tau_grid};
use qclock_core::{PacketParams, Parity, PhaseBasisTerm, PhaseSpec, SolveMethod, Truncation};

fn packet_spec() -> PhaseSpec {
    PhaseSpec::odd_even_01(9.0 / (8.0 * (6.0 * PI).sqrt()), 5.0 / (16.0 * (2.0 * PI).sqrt()))
}

fn hermite(c: &mut Criterion) {
    let mut g = c.benchmark_group("hermite");
    for n in [4usize, 16, 40] {
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| b.iter(|| hermite_eval(n, black_box(0.7))));
    }
    g.finish();
}

fn series(c: &mut Criterion) {
    let spec = packet_spec();
    let mut g = c.benchmark_group("series");
    for order in [4usize, 8] {
        g.bench_with_input(BenchmarkId::new("terms", order), &order, |b, &order| {
            b.iter(|| series_terms(black_box(120.0), -5.0 / 3.0, &spec, order).unwrap())
        });
    }
    let p = PacketParams::from_dimensionless(120.0, -5.0 / 3.0).unwrap();
    g.bench_function("asymptotic_toa", |b| {
        b.iter(|| asymptotic_toa(black_box(&p), &spec, Truncation::default()).unwrap())
    });
    g.finish();
}

fn exact(c: &mut Criterion) {
    let mut g = c.benchmark_group("exact_toa");
    g.sample_size(10);
    for k in [10.0, 30.0] {
        let p = PacketParams::from_dimensionless(k, -5.0 / 3.0).unwrap();
        g.bench_with_input(BenchmarkId::new("none", k), &p, |b, p| {
            b.iter(|| exact_toa(p, &PhaseSpec::none()).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("phased", k), &p, |b, p| b.iter(|| exact_toa(p, &packet_spec()).unwrap()));
    }
    g.finish();
}

fn solvers(c: &mut Criterion) {
    let mut g = c.benchmark_group("solve");
    let u = -0.9 * 3f64.sqrt();
    g.bench_function("closed_form", |b| {
        b.iter(|| solve_a_from_b(black_box(0.0728), 1.0, u, SolveMethod::ClosedForm).unwrap())
    });
    g.bench_function("numeric", |b| {
        b.iter(|| solve_a_from_b(black_box(0.0728), 1.0, u, SolveMethod::Numeric).unwrap())
    });
    let basis =
        [PhaseBasisTerm { parity: Parity::Odd, l: 0, m: 1 }, PhaseBasisTerm { parity: Parity::Even, l: 0, m: 1 }];
    g.sample_size(10);
    g.bench_function("general_order2", |b| {
        b.iter(|| solve_phase_general(2, &basis, u, &[None, Some(0.0728)]).unwrap())
    });
    g.finish();
}

fn dist(c: &mut Criterion) {
    let mut g = c.benchmark_group("distribution");
    g.sample_size(10);
    let p = PacketParams::natural(6.0, -10.0, 200.0).unwrap();
    let grid = tau_grid(&p, 0.0, 5.0, 201);
    g.bench_function("none_201", |b| b.iter(|| distribution(&p, &PhaseSpec::none(), 0.0, &grid).unwrap()));
    g.bench_function("phased_201", |b| b.iter(|| distribution(&p, &packet_spec(), 0.0, &grid).unwrap()));
    g.finish();
}

criterion_group!(benches, hermite, series, exact, solvers, dist);
criterion_main!(benches);
