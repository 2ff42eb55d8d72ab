use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};
use dtcast::encoder::{encode_all, Autoencoder, Shape};
use dtcast::experiment::prepare_encoder;
use dtcast::grouping::{kmeanspp_seed, lloyd, pairwise_stats, DdqnAgent};
use dtcast::{Execution, Mode, ScenarioConfig, World};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn features(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect()
}

fn bench_encode(c: &mut Criterion) {
    let shape = Shape { filters: 8, kernel: 3, dim: 8, tracks: 11 };
    let ae = Autoencoder::init(shape, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let inputs: Vec<(u32, Vec<Vec<f64>>)> = (0..512)
        .map(|u| (u, (0..11).map(|_| (0..16).map(|_| rng.random::<f64>()).collect()).collect()))
        .collect();
    let mut group = c.benchmark_group("encode_all");
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| encode_all(&inputs, &ae.encoder, exec).unwrap()));
    }
    group.finish();
}

fn bench_grouping(c: &mut Criterion) {
    let points = features(1000, 8, 3);
    let mut group = c.benchmark_group("pairwise_stats");
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| pairwise_stats(&points, exec).unwrap()));
    }
    group.finish();

    let seeds = kmeanspp_seed(&points, 8, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
    let mut group = c.benchmark_group("lloyd");
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter_batched(|| seeds.clone(), |s| lloyd(&points, s, 1e-9, 100, exec).unwrap(), BatchSize::SmallInput)
        });
    }
    group.finish();
}

fn bench_interval(c: &mut Criterion) {
    let mut cfg = ScenarioConfig::default();
    cfg.n_users = 100;
    cfg.encoder.epochs = 5;
    let mut group = c.benchmark_group("interval");
    group.sample_size(10);
    for (name, exec) in MODES {
        let mut world = World::new(cfg.clone(), exec).unwrap();
        world.set_encoder(prepare_encoder(&world).unwrap().encoder);
        world.set_agent(DdqnAgent::new(cfg.ddqn_config(), 1, 9).unwrap(), Mode::Evaluation);
        let mut idx = 0;
        group.bench_function(BenchmarkId::new("run_interval", name), |b| {
            b.iter(|| {
                let r = world.run_interval(idx).unwrap();
                idx += 1;
                r
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_encode, bench_grouping, bench_interval);
criterion_main!(benches);
