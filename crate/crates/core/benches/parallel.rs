//! Data-parallel kernels under the active execution mode.
//!
//! Compare the two modes with
//! `cargo bench -p quasifix-core` and
//! `cargo bench -p quasifix-core --no-default-features`;
//! benchmark ids carry the mode so criterion keeps both baselines apart.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use quasifix::apps::{hutchinson_step, IfsSystem};
use quasifix::classify::{classify_pairwise, sample_pairs, ContractionClass};
use quasifix::exec::PARALLEL;
use quasifix::metric::{diam, hausdorff_distance, Euclidean, FinitePointSet};
use quasifix::orbit::SelfMap;
use quasifix::solver::{multi_start_uniqueness, SolveConfig};

fn mode() -> &'static str {
    if PARALLEL {
        "parallel"
    } else {
        "sequential"
    }
}

fn sierpinski_level(depth: usize) -> FinitePointSet {
    let sys = IfsSystem::sierpinski();
    let mut s = FinitePointSet::singleton(vec![0.0, 0.0]).unwrap();
    for _ in 0..depth {
        s = hutchinson_step(&sys, &s).unwrap();
    }
    s
}

fn kernels(c: &mut Criterion) {
    let mut group = c.benchmark_group("kernels");
    group.sample_size(20);

    let space = Euclidean::new(3).unwrap();
    let points: Vec<Vec<f64>> = (0..2000)
        .map(|i| {
            let t = i as f64 * 0.01;
            vec![t.sin(), t.cos(), (0.3 * t).sin()]
        })
        .collect();
    group.bench_function(BenchmarkId::new("diam_2000", mode()), |b| {
        b.iter(|| diam(&space, black_box(&points)).unwrap())
    });

    let cos = SelfMap::scalar("cos", Euclidean::line().with_sample_box(0.0, 1.0), f64::cos);
    let pairs = sample_pairs(cos.space(), 1 << 14, 0, &[]).unwrap();
    let class = ContractionClass::Banach(0.85);
    group.bench_function(BenchmarkId::new("classify_16k_pairs", mode()), |b| {
        b.iter(|| classify_pairwise(&cos, &class, black_box(&pairs)).unwrap())
    });

    let level7 = sierpinski_level(7);
    let sys = IfsSystem::sierpinski();
    group.bench_function(BenchmarkId::new("hutchinson_step_2187", mode()), |b| {
        b.iter(|| hutchinson_step(&sys, black_box(&level7)).unwrap())
    });

    let level6 = sierpinski_level(6);
    group.bench_function(BenchmarkId::new("hausdorff_729x2187", mode()), |b| {
        b.iter(|| hausdorff_distance(black_box(&level6), black_box(&level7)).unwrap())
    });

    let harmonic = SelfMap::scalar("harmonic", Euclidean::line(), |x| x / (1.0 + x));
    let starts: Vec<Vec<f64>> = (1..=8).map(|i| vec![i as f64 / 8.0]).collect();
    let cfg = SolveConfig::new(1e-8);
    group.bench_function(BenchmarkId::new("multi_start_8", mode()), |b| {
        b.iter(|| multi_start_uniqueness(&harmonic, black_box(&starts), &cfg).unwrap())
    });

    group.finish();
}

criterion_group!(benches, kernels);
criterion_main!(benches);
