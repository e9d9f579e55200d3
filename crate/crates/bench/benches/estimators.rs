use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use geordd::frechet::{FrechetSolveConfig, KernelKind, LfrEngine, Side};
use geordd::fuzzy::{estimate_fuzzy, FuzzyConfig, FuzzyVariant, Noncompliance};
use geordd::sharp::{estimate_sharp, SharpConfig};
use geordd::simlab::ScalarSetting;
use geordd::{select_bandwidth, BandwidthConfig};
use geordd_bench::{network, scalar, sphere};

fn local_fits(c: &mut Criterion) {
    let mut g = c.benchmark_group("one_sided_fit");
    for n in [500, 2000] {
        let s = network(n);
        let engine =
            LfrEngine::from_sample(&s, KernelKind::Triangular, FrechetSolveConfig::default())
                .unwrap();
        g.bench_with_input(BenchmarkId::new("laplacian", n), &engine, |b, e| {
            b.iter(|| e.fit_side(0.0, black_box(0.4), Side::Right).unwrap())
        });
    }
    let s = sphere(1000);
    let engine =
        LfrEngine::from_sample(&s, KernelKind::Triangular, FrechetSolveConfig::default()).unwrap();
    g.bench_function("sphere/1000", |b| {
        b.iter(|| engine.fit_side(0.0, black_box(0.4), Side::Left).unwrap())
    });
    g.finish();
}

fn estimators(c: &mut Criterion) {
    let s = network(1000);
    c.bench_function("sharp/laplacian/1000", |b| {
        b.iter(|| estimate_sharp(&s, 0.4, 0.4, &SharpConfig::default()).unwrap())
    });
    let s = sphere(1000);
    let cfg = FuzzyConfig::default();
    c.bench_function("fuzzy_geodesic_tangent/sphere/1000", |b| {
        b.iter(|| {
            estimate_fuzzy(
                &s,
                0.4,
                0.4,
                FuzzyVariant::GeodesicRiemannian,
                Some(Noncompliance::AlwaysTakers),
                &cfg,
            )
            .unwrap()
        })
    });
}

fn bandwidth_search(c: &mut Criterion) {
    let mut g = c.benchmark_group("bandwidth_search");
    g.sample_size(10);
    let cfg = BandwidthConfig::default();
    let s = scalar(ScalarSetting::IV, 1000);
    g.bench_function("scalar/1000", |b| {
        b.iter(|| select_bandwidth(&s, &cfg).unwrap())
    });
    let s = network(500);
    g.bench_function("laplacian/500", |b| {
        b.iter(|| select_bandwidth(&s, &cfg).unwrap())
    });
    g.finish();
}

criterion_group!(benches, local_fits, estimators, bandwidth_search);
criterion_main!(benches);
