use criterion::{black_box, criterion_group, criterion_main, Criterion};

use satcam_core::*;

fn bench_poisson_window(c: &mut Criterion) {
    let policy = TruncationPolicy::default();
    c.bench_function("poisson_window_2000", |b| {
        b.iter(|| poisson_window(black_box(2000.0), &policy))
    });
    c.bench_function("poisson_window_1e6", |b| {
        b.iter(|| poisson_window(black_box(1e6), &policy))
    });
}

fn bench_channel_row(c: &mut Criterion) {
    let cfg = DetectorConfig::saturating(256, 500.0, 12.8).unwrap();
    c.bench_function("channel_row_sat", |b| b.iter(|| channel_row(black_box(450), &cfg)));
}

fn bench_fisher_per_pixel(c: &mut Criterion) {
    let cfg = DetectorConfig::saturating(256, 500.0, 12.8).unwrap();
    let policy = TruncationPolicy::default();
    c.bench_function("fisher_per_pixel_bright", |b| {
        b.iter(|| fisher_per_pixel(black_box(2e4), black_box(120.0), &cfg, &policy))
    });
}

fn bench_fisher_total(c: &mut Criterion) {
    let beam = BeamSpec::new(1.0, 2000.0, 0.01).unwrap();
    let grid = PixelGrid::symmetric(100, 5.0).unwrap();
    let cfg = DetectorConfig::saturating(256, 500.0, 12.8).unwrap();
    let policy = TruncationPolicy::default();
    c.bench_function("fisher_total_camera", |b| {
        b.iter(|| fisher_total(&beam, &MeasurementScheme::cm(), &grid, &cfg, &policy))
    });
}

criterion_group!(
    benches,
    bench_poisson_window,
    bench_channel_row,
    bench_fisher_per_pixel,
    bench_fisher_total
);
criterion_main!(benches);
