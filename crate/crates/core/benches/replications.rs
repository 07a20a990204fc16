use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ergorate::harness::{run_experiment, ExperimentConfig, NoProgress};
use ergorate::rng::seeded;
use ergorate::transport::{w_p_exact, Metric, PointCloud};
use rand::Rng;
use std::hint::black_box;

fn config() -> ExperimentConfig {
    serde_json::from_str(
        r#"{
            "schema_version": 1,
            "model": {"family": "wright_fisher", "q": [1.0, 1.0]},
            "bernstein": {"kind": "identity"},
            "p": 2.0,
            "horizons": [4.0, 8.0, 16.0],
            "replications": 16,
            "dt": 0.001,
            "obs_per_unit_time": 4,
            "reference_sample_size": 256,
            "master_seed": 7,
            "burn_in": 0.0
        }"#,
    )
    .expect("bench config")
}

fn replications(c: &mut Criterion) {
    let cfg = config();
    let parallel = std::thread::available_parallelism().map_or(1, |n| n.get()).max(2);
    let mut group = c.benchmark_group("run_experiment");
    group.sample_size(10);
    for workers in [1, parallel] {
        group.bench_with_input(BenchmarkId::new("workers", workers), &workers, |b, &w| {
            b.iter(|| run_experiment(black_box(&cfg), w, &NoProgress).unwrap())
        });
    }
    group.finish();
}

fn exact_transport(c: &mut Criterion) {
    let mut rng = seeded(3);
    let mut cloud = |n: usize| {
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
            .collect();
        PointCloud::uniform(pts, Metric::Euclidean).unwrap()
    };
    let a = cloud(64);
    let b = cloud(256);
    c.bench_function("w2_exact_64x256", |bench| {
        bench.iter(|| w_p_exact(black_box(&a), black_box(&b), 2.0).unwrap())
    });
}

criterion_group!(benches, replications, exact_transport);
criterion_main!(benches);
