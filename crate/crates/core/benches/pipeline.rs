//! Sequential vs parallel execution of the hot pipeline stages.
//!
//! Without the `parallel` feature both variants run the same sequential code,
//! which is a useful baseline for the overhead of the policy dispatch itself.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dwm::orbit::orbit_pose;
use dwm::validate::{ray_parity_check, TriangleSoup};
use dwm::{build_dwmesh, rasterize, DepthMap, Exec, Frame, Intrinsics, MeshParams};
use std::hint::black_box;

const POLICIES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

/// A sphere-ish bump in front of a tilted plane, with a hard edge.
fn scene(size: usize) -> (Frame, DepthMap) {
    let mut depth = Vec::with_capacity(size * size);
    let mut pixels = Vec::with_capacity(size * size);
    let c = size as f64 / 2.0;
    for i in 0..size {
        for j in 0..size {
            let (di, dj) = (i as f64 - c, j as f64 - c);
            let r = (di * di + dj * dj).sqrt() / c;
            let d = if r < 0.4 { 2.0 + r } else { 5.0 + 0.002 * i as f64 };
            depth.push(d);
            pixels.push([(i % 256) as u8, (j % 256) as u8, 128]);
        }
    }
    (Frame::new(size, size, pixels).unwrap(), DepthMap::new(size, size, depth).unwrap())
}

fn bench_build(c: &mut Criterion) {
    let mut g = c.benchmark_group("build_dwmesh");
    for size in [128, 512] {
        let (frame, depth) = scene(size);
        let params = MeshParams::default();
        for (name, exec) in POLICIES {
            g.bench_with_input(BenchmarkId::new(name, size), &size, |b, _| {
                b.iter(|| build_dwmesh(black_box(&frame), black_box(&depth), &params, exec).unwrap())
            });
        }
    }
    g.finish();
}

fn bench_rasterize(c: &mut Criterion) {
    let mut g = c.benchmark_group("rasterize");
    for size in [128, 512] {
        let (frame, depth) = scene(size);
        let mesh = build_dwmesh(&frame, &depth, &MeshParams::default(), Exec::Parallel).unwrap();
        let intr = Intrinsics::canonical(size, size);
        let pose = orbit_pose(30.0, 3.0).unwrap();
        for (name, exec) in POLICIES {
            g.bench_with_input(BenchmarkId::new(name, size), &size, |b, _| {
                b.iter(|| rasterize(black_box(&mesh), &pose, &intr, exec).unwrap())
            });
        }
    }
    g.finish();
}

fn bench_parity(c: &mut Criterion) {
    let mut g = c.benchmark_group("ray_parity_check");
    g.sample_size(10);
    let (frame, depth) = scene(128);
    let mesh = build_dwmesh(&frame, &depth, &MeshParams::default(), Exec::Parallel).unwrap();
    let rays = 10_000;
    for (name, exec) in POLICIES {
        g.bench_with_input(BenchmarkId::new(name, rays), &rays, |b, &rays| {
            b.iter(|| ray_parity_check(TriangleSoup::from(&mesh), rays, 7, exec))
        });
    }
    g.finish();
}

criterion_group!(benches, bench_build, bench_rasterize, bench_parity);
criterion_main!(benches);
