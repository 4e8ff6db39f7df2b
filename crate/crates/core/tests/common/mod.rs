//! Episode drivers shared by the integration tests.

#![allow(dead_code)]

pub mod gradient;
pub mod oracles;

use garagegen::env::{EnvConfig, GarageEnv, StepOutcome};
use garagegen::grid::{Direction, EncodingMatrix, Position};
use garagegen::maps;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Episode {
    pub initial: EncodingMatrix,
    /// Matrix after every step, starting with the reset state.
    pub matrices: Vec<EncodingMatrix>,
    pub outcomes: Vec<StepOutcome>,
    pub error_indices: Vec<u32>,
    pub step_limit: usize,
}

impl Episode {
    pub fn last(&self) -> &EncodingMatrix {
        self.matrices.last().expect("reset state is recorded")
    }

    pub fn usable(&self) -> bool {
        self.outcomes.last().is_some_and(|o| o.info.reached_exit)
    }
}

/// Runs the actions in order until the episode ends or they run out.
pub fn replay(map: &EncodingMatrix, cfg: &EnvConfig, seed: u64, actions: &[Direction]) -> Episode {
    let mut env = GarageEnv::new(map.clone(), cfg.clone()).unwrap();
    env.reset(seed).unwrap();
    let mut ep = Episode {
        initial: map.clone(),
        matrices: vec![env.matrix().unwrap().clone()],
        outcomes: Vec::new(),
        error_indices: Vec::new(),
        step_limit: env.step_limit(),
    };
    for &a in actions {
        let out = env.step(a).unwrap();
        ep.matrices.push(env.matrix().unwrap().clone());
        ep.error_indices.push(env.error_index());
        let done = out.done;
        ep.outcomes.push(out);
        if done {
            break;
        }
    }
    ep
}

fn toward(from: Position, to: Position) -> Direction {
    let (dr, dc) = (to.row as isize - from.row as isize, to.col as isize - from.col as isize);
    if dc.abs() >= dr.abs() {
        if dc > 0 {
            Direction::Right
        } else {
            Direction::Left
        }
    } else if dr > 0 {
        Direction::Down
    } else {
        Direction::Up
    }
}

/// Random walk that heads for the exit with probability `bias`, run to the
/// end of the episode.
pub fn wander(map: &EncodingMatrix, cfg: &EnvConfig, seed: u64, bias: f64) -> Episode {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut env = GarageEnv::new(map.clone(), cfg.clone()).unwrap();
    env.reset(seed).unwrap();
    let mut actions = Vec::new();
    let mut sim = env.clone();
    while !sim.is_done() {
        let car = sim.car().unwrap().pos;
        let a = if rng.random_bool(bias) {
            toward(car, map.exit())
        } else {
            Direction::ALL[rng.random_range(0..4)]
        };
        actions.push(a);
        sim.step(a).unwrap();
    }
    replay(map, cfg, seed, &actions)
}

/// Up to `n` distinct usable garages from biased walks on a bundled map.
pub fn usable_garages(map_name: &str, n: usize, seed: u64) -> Vec<EncodingMatrix> {
    let map = maps::bundled(map_name).unwrap();
    let cfg = EnvConfig::default();
    let mut out: Vec<EncodingMatrix> = Vec::new();
    let mut s = seed;
    while out.len() < n && s < seed + 50 * n as u64 {
        let ep = wander(&map, &cfg, s, 0.35);
        if ep.usable() && !out.contains(ep.last()) {
            out.push(ep.last().clone());
        }
        s += 1;
    }
    out
}
