//! Kernel benches: exact exponentials, displacement synthesis, four-pulse
//! composition, time-ordered propagation, and schedule search.
//!
//! Sample counts are kept small — every kernel bottoms out in LAPACK
//! eigensolves whose per-call variance is low.

use std::f64::consts::PI;
use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, Criterion};
use mechbus_bench::{driven_oscillator, rotating_window};
use mechbus_core::gates::four_pulse_gate;
use mechbus_core::operator::{displacement, evolution};
use mechbus_core::propagator::propagate_fixed;
use mechbus_core::scheduler::{solve_schedule, ScheduleRequest};
use num_complex::Complex64 as C64;

fn bench_evolution(c: &mut Criterion) {
    let h = driven_oscillator(50);
    c.bench_function("evolution_dim50", |b| {
        b.iter(|| evolution(black_box(&h), 1.7).unwrap())
    });
}

fn bench_displacement(c: &mut Criterion) {
    let alpha = C64::new(0.4, 0.2);
    c.bench_function("displacement_n30", |b| {
        b.iter(|| displacement(black_box(alpha), 30).unwrap())
    });
}

fn bench_four_pulse(c: &mut Criterion) {
    let a1 = C64::from_polar(0.5, 0.3);
    let a2 = C64::from_polar(0.4, 1.2);
    c.bench_function("four_pulse_n20", |b| {
        b.iter(|| four_pulse_gate(black_box(a1), black_box(a2), 20).unwrap())
    });
}

fn bench_propagate(c: &mut Criterion) {
    let h = rotating_window(0.3, 12);
    c.bench_function("propagate_fixed_n12_64steps", |b| {
        b.iter(|| propagate_fixed(&h, 0.0, black_box(PI), 64).unwrap())
    });
}

fn bench_schedule(c: &mut Criterion) {
    let req = ScheduleRequest {
        theta_target: PI / 4.0,
        g1: 0.2,
        g2: 0.25,
        omega: 1.0,
        allow_repetitions: true,
        max_repetitions: 64,
    };
    c.bench_function("solve_schedule_pi4", |b| {
        b.iter(|| solve_schedule(black_box(&req)).unwrap())
    });
}

fn config() -> Criterion {
    Criterion::default()
        .sample_size(10)
        .warm_up_time(Duration::from_millis(300))
        .measurement_time(Duration::from_secs(2))
}

criterion_group! {
    name = kernels;
    config = config();
    targets = bench_evolution, bench_displacement, bench_four_pulse, bench_propagate, bench_schedule
}
criterion_main!(kernels);
