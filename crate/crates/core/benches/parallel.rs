use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use garagegen::env::EnvConfig;
use garagegen::garage_set::GarageSample;
use garagegen::grid::{Direction, EncodingMatrix};
use garagegen::maps;
use garagegen::metrics::{score_all, MetricsConfig};
use garagegen::par::Exec;
use garagegen::sim::{evaluate, SimConfig, SimGarage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Usable garages from random walks that lean toward the exit.
fn garages(map: &EncodingMatrix, n: usize) -> Vec<GarageSample> {
    let cfg = EnvConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut out = Vec::new();
    let mut episode = 0;
    while out.len() < n {
        let mut env = garagegen::env::GarageEnv::new(map.clone(), cfg.clone()).unwrap();
        env.reset(episode as u64).unwrap();
        let mut last = None;
        while !env.is_done() {
            let car = env.car().unwrap().pos;
            let exit = map.exit();
            let a = if rng.random_bool(0.35) {
                if exit.col > car.col {
                    Direction::Right
                } else if exit.row > car.row {
                    Direction::Down
                } else {
                    Direction::Up
                }
            } else {
                Direction::ALL[rng.random_range(0..4)]
            };
            last = Some(env.step(a).unwrap());
        }
        if last.is_some_and(|o| o.info.reached_exit) {
            out.push(GarageSample {
                episode,
                seed: episode as u64,
                usable: true,
                matrix: env.matrix().unwrap().clone(),
            });
        }
        episode += 1;
    }
    out
}

fn modes() -> [(&'static str, Exec); 2] {
    [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)]
}

fn bench_scoring(c: &mut Criterion) {
    let map = maps::bundled("garage-11x7").unwrap();
    let set = garages(&map, 200);
    let cfg = MetricsConfig::default();
    let mut group = c.benchmark_group("score_all");
    for (name, exec) in modes() {
        group.bench_with_input(BenchmarkId::new(name, set.len()), &exec, |b, &exec| {
            b.iter(|| score_all(&set, &map, &cfg, exec).unwrap())
        });
    }
    group.finish();
}

fn bench_evaluation(c: &mut Criterion) {
    let map = maps::bundled("garage-11x7").unwrap();
    let sims: Vec<SimGarage> = garages(&map, 8)
        .into_iter()
        .map(|g| SimGarage {
            id: g.episode.to_string(),
            lambda: 0.5,
            matrix: g.matrix,
        })
        .collect();
    let cfg = SimConfig {
        sigma: 0.3,
        trials: 20,
        ..SimConfig::default()
    };
    let mut group = c.benchmark_group("evaluate");
    group.sample_size(10);
    for (name, exec) in modes() {
        group.bench_with_input(BenchmarkId::new(name, sims.len()), &exec, |b, &exec| {
            b.iter(|| evaluate(&sims, &cfg, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_scoring, bench_evaluation);
criterion_main!(benches);
