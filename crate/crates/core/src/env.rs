//! The partially observable coloring environment.
//!
//! A car starts on the entrance block and moves one block per step. Every
//! block it enters becomes road and the block state machine retypes the
//! neighbours. The agent only sees a `k x k` window around the car plus a few
//! scalar features.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coloring::recolor_neighbors;
use crate::grid::{Axis, BlockType, Direction, EncodingMatrix, Position};
use crate::reward::{
    constraint_reward, performance, total_reward, utility_reward, ConstraintEvent,
    PerformanceSnapshot, RewardParams,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EnvError {
    #[error("entrance at {0} has no non-obstacle neighbour")]
    NoLegalStart(Position),
    #[error("episode already finished")]
    EpisodeFinished,
    #[error("no episode in progress; call reset first")]
    NotStarted,
    #[error("invalid environment config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AxisPolicy {
    RandomPerEpisode,
    Fixed(Axis),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub visibility_k: usize,
    pub max_error: u32,
    /// `None` means `4 * width * height`.
    pub max_steps: Option<usize>,
    pub six_stall_axis: AxisPolicy,
    pub reward: RewardParams,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            visibility_k: 5,
            max_error: 10,
            max_steps: None,
            six_stall_axis: AxisPolicy::RandomPerEpisode,
            reward: RewardParams::default(),
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<(), EnvError> {
        if self.visibility_k % 2 == 0 {
            return Err(EnvError::InvalidConfig("visibility_k must be odd".into()));
        }
        if self.max_error < 1 {
            return Err(EnvError::InvalidConfig("max_error must be >= 1".into()));
        }
        if self.max_steps == Some(0) {
            return Err(EnvError::InvalidConfig("max_steps must be >= 1".into()));
        }
        self.reward
            .validate()
            .map_err(|e| EnvError::InvalidConfig(e.to_string()))
    }

    pub fn step_limit(&self, map: &EncodingMatrix) -> usize {
        self.max_steps
            .unwrap_or(4 * map.width() * map.height())
    }

    /// Length of [`encode_observation`] output.
    pub fn observation_len(&self) -> usize {
        self.visibility_k * self.visibility_k * 10 + 7
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CarState {
    pub pos: Position,
    pub orientation: Direction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub k: usize,
    /// Row-major `k x k` window, out-of-grid cells read as obstacles.
    pub visibility: Vec<BlockType>,
    pub error_index: u32,
    pub max_error: u32,
    pub coverage: f64,
    pub connected: bool,
    pub orientation: Direction,
}

/// One-hot visibility (10 codes per cell), then `e / max_error` (capped at
/// 1), coverage, connectivity and a one-hot orientation.
pub fn encode_observation(o: &Observation) -> Vec<f64> {
    let mut v = vec![0.0; o.k * o.k * 10 + 7];
    for (i, b) in o.visibility.iter().enumerate() {
        v[i * 10 + b.code() as usize] = 1.0;
    }
    let base = o.k * o.k * 10;
    v[base] = (o.error_index as f64 / o.max_error as f64).min(1.0);
    v[base + 1] = o.coverage;
    v[base + 2] = if o.connected { 1.0 } else { 0.0 };
    v[base + 3 + o.orientation.index()] = 1.0;
    v
}

/// Inverse of the visibility part of [`encode_observation`].
pub fn decode_visibility(v: &[f64], k: usize) -> Vec<BlockType> {
    v[..k * k * 10]
        .chunks(10)
        .map(|cell| {
            let code = cell.iter().position(|&x| x == 1.0).unwrap_or(2);
            BlockType::from_code(code as u8).unwrap_or(BlockType::Obstacle)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    Collision,
    Network,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StepInfo {
    pub violation: Option<Violation>,
    pub reached_exit: bool,
    pub error_overflow: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

#[derive(Debug, Clone)]
struct Episode {
    matrix: EncodingMatrix,
    car: CarState,
    axis: Axis,
    error_index: u32,
    connected: bool,
    steps: usize,
    done: bool,
    perf: PerformanceSnapshot,
}

/// Single-threaded environment over one initial map.
#[derive(Debug, Clone)]
pub struct GarageEnv {
    initial: EncodingMatrix,
    cfg: EnvConfig,
    initially_free: Vec<Position>,
    step_limit: usize,
    episode: Option<Episode>,
}

impl GarageEnv {
    pub fn new(map: EncodingMatrix, cfg: EnvConfig) -> Result<Self, EnvError> {
        cfg.validate()?;
        let initially_free = map
            .iter()
            .filter(|&(_, b)| b == BlockType::Free)
            .map(|(p, _)| p)
            .collect();
        let step_limit = cfg.step_limit(&map);
        Ok(Self {
            initial: map,
            cfg,
            initially_free,
            step_limit,
            episode: None,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn initial_map(&self) -> &EncodingMatrix {
        &self.initial
    }

    pub fn step_limit(&self) -> usize {
        self.step_limit
    }

    pub fn reset(&mut self, seed: u64) -> Result<Observation, EnvError> {
        let start = self.initial.entrance();
        let orientation = Direction::ALL
            .into_iter()
            .find(|&d| {
                self.initial
                    .step(start, d)
                    .is_some_and(|p| self.initial.get(p) != Some(BlockType::Obstacle))
            })
            .ok_or(EnvError::NoLegalStart(start))?;
        let axis = match self.cfg.six_stall_axis {
            AxisPolicy::Fixed(a) => a,
            AxisPolicy::RandomPerEpisode => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                if rng.random::<bool>() {
                    Axis::NorthSouth
                } else {
                    Axis::EastWest
                }
            }
        };
        let matrix = self.initial.clone();
        let perf = performance(&matrix, &self.cfg.reward);
        self.episode = Some(Episode {
            matrix,
            car: CarState {
                pos: start,
                orientation,
            },
            axis,
            error_index: 0,
            connected: false,
            steps: 0,
            done: false,
            perf,
        });
        self.observe()
    }

    fn episode(&self) -> Result<&Episode, EnvError> {
        self.episode.as_ref().ok_or(EnvError::NotStarted)
    }

    pub fn matrix(&self) -> Option<&EncodingMatrix> {
        self.episode.as_ref().map(|e| &e.matrix)
    }

    pub fn car(&self) -> Option<CarState> {
        self.episode.as_ref().map(|e| e.car)
    }

    pub fn axis(&self) -> Option<Axis> {
        self.episode.as_ref().map(|e| e.axis)
    }

    pub fn is_done(&self) -> bool {
        self.episode.as_ref().is_none_or(|e| e.done)
    }

    pub fn step(&mut self, action: Direction) -> Result<StepOutcome, EnvError> {
        let params = self.cfg.reward.clone();
        let max_error = self.cfg.max_error;
        let step_limit = self.step_limit;
        let ep = self.episode.as_mut().ok_or(EnvError::NotStarted)?;
        if ep.done {
            return Err(EnvError::EpisodeFinished);
        }
        ep.steps += 1;
        let mut info = StepInfo::default();
        let mut constraint = 0.0;
        let mut utility = 0.0;

        let target = ep.matrix.step(ep.car.pos, action);
        match target {
            None => {
                info.violation = Some(Violation::Collision);
            }
            Some(t) if ep.matrix.get(t) == Some(BlockType::Obstacle) => {
                info.violation = Some(Violation::Collision);
            }
            Some(t) => {
                let block = ep.matrix.get(t).unwrap_or(BlockType::Obstacle);
                let colors = !block.is_road_like();
                if colors && ep.matrix.creates_2x2_road(t).unwrap_or(false) {
                    info.violation = Some(Violation::Network);
                } else {
                    if ep.matrix.paint_road(t) {
                        recolor_neighbors(ep.matrix.grid_mut(), t, ep.axis);
                    }
                    if action == ep.car.orientation.opposite() {
                        info.violation = Some(Violation::Backward);
                        constraint += constraint_reward(ConstraintEvent::Backward, &params);
                    }
                    let perf = performance(&ep.matrix, &params);
                    utility = utility_reward(&ep.perf, &perf, &params);
                    ep.perf = perf;
                    ep.car = CarState {
                        pos: t,
                        orientation: action,
                    };
                    if t == ep.matrix.exit() {
                        ep.connected = true;
                        info.reached_exit = true;
                        constraint += constraint_reward(ConstraintEvent::ReachedExit, &params);
                        ep.done = true;
                    }
                }
            }
        }
        match info.violation {
            Some(Violation::Collision) => {
                ep.error_index += 1;
                constraint += constraint_reward(ConstraintEvent::Collision, &params);
            }
            Some(Violation::Network) => {
                ep.error_index += 1;
                constraint += constraint_reward(ConstraintEvent::NetworkViolation, &params);
            }
            _ => {}
        }
        if ep.error_index > max_error && !ep.done {
            info.error_overflow = true;
            constraint += constraint_reward(ConstraintEvent::ErrorOverflow, &params);
            ep.done = true;
        }
        if ep.steps >= step_limit {
            ep.done = true;
        }
        let reward = total_reward(constraint, utility, &params);
        let done = ep.done;
        Ok(StepOutcome {
            observation: self.observe()?,
            reward,
            done,
            info,
        })
    }

    pub fn observe(&self) -> Result<Observation, EnvError> {
        let ep = self.episode()?;
        let k = self.cfg.visibility_k;
        let half = (k / 2) as isize;
        let mut visibility = Vec::with_capacity(k * k);
        for dr in -half..=half {
            for dc in -half..=half {
                let r = ep.car.pos.row as isize + dr;
                let c = ep.car.pos.col as isize + dc;
                let block = if r < 0 || c < 0 {
                    BlockType::Obstacle
                } else {
                    ep.matrix
                        .block_or_wall(Position::new(r as usize, c as usize))
                };
                visibility.push(block);
            }
        }
        Ok(Observation {
            k,
            visibility,
            error_index: ep.error_index,
            max_error: self.cfg.max_error,
            coverage: self.coverage_of(&ep.matrix),
            connected: ep.connected,
            orientation: ep.car.orientation,
        })
    }

    /// Share of initially free blocks whose type has changed.
    pub fn coverage_of(&self, m: &EncodingMatrix) -> f64 {
        if self.initially_free.is_empty() {
            return 0.0;
        }
        let changed = self
            .initially_free
            .iter()
            .filter(|&&p| m.get(p) != Some(BlockType::Free))
            .count();
        changed as f64 / self.initially_free.len() as f64
    }

    pub fn error_index(&self) -> u32 {
        self.episode.as_ref().map_or(0, |e| e.error_index)
    }

    pub fn steps(&self) -> usize {
        self.episode.as_ref().map_or(0, |e| e.steps)
    }

    pub fn connected(&self) -> bool {
        self.episode.as_ref().is_some_and(|e| e.connected)
    }
}

/// Convenience for a fresh environment: builds it and resets it.
pub fn reset(
    map: EncodingMatrix,
    cfg: EnvConfig,
    seed: u64,
) -> Result<(GarageEnv, Observation), EnvError> {
    let mut env = GarageEnv::new(map, cfg)?;
    let obs = env.reset(seed)?;
    Ok((env, obs))
}
