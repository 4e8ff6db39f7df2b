//! Cruise test stand-in: drivable paths, a noisy pure-pursuit vehicle on a
//! kinematic bicycle, and the difficulty vs success-rate regression.
//!
//! All geometry is in plan coordinates (see [`crate::roadnet`]). Obstacle,
//! stall and out-of-grid area is solid, as are the pillars at road/stall
//! corners; free and road-like blocks are drivable.

use std::collections::{HashSet, VecDeque};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{BlockGrid, BlockType, Direction, EncodingMatrix, Position};
use crate::par::{self, Exec};
use crate::roadnet::{cell_center, chain_pieces, pillar_corners, BLOCK};
use crate::roadnet::mesh::PILLAR_SIZE;

pub const CAR_LENGTH: f64 = 4.5;
pub const CAR_WIDTH: f64 = 1.8;
pub const GOAL_RADIUS: f64 = 2.0;
pub const MAX_STEER: f64 = 0.6;
pub const WAYPOINT_SPACING: f64 = 1.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("garage has no stalls")]
    NoStalls,
    #[error("no stall is reachable from the entrance")]
    NoReachableStall,
    #[error("regression needs distinct difficulty values")]
    DegenerateVariance,
    #[error("regression needs at least 3 rows, got {0}")]
    TooFewPoints(usize),
    #[error("invalid sim config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub wheelbase: f64,
    pub v_cruise: f64,
    pub lookahead: f64,
    pub dt: f64,
    /// Standard deviation of the per-step steering noise, radians.
    pub sigma: f64,
    pub timeout: f64,
    pub deadlock_window: f64,
    pub deadlock_distance: f64,
    pub trials: u32,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            wheelbase: 2.7,
            v_cruise: 3.0,
            lookahead: 4.0,
            dt: 0.05,
            sigma: 0.08,
            timeout: 120.0,
            deadlock_window: 10.0,
            deadlock_distance: 0.5,
            trials: 50,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidConfig(m.to_string()));
        if !(self.dt > 0.0) {
            return bad("dt must be positive");
        }
        if !(self.lookahead > 0.0) {
            return bad("lookahead must be positive");
        }
        if !(self.wheelbase > 0.0) || !(self.v_cruise >= 0.0) || !(self.sigma >= 0.0) {
            return bad("wheelbase must be positive, v_cruise and sigma non-negative");
        }
        if !(self.timeout > 0.0) || !(self.deadlock_window > 0.0) {
            return bad("timeout and deadlock_window must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DrivablePath {
    pub stall: Position,
    /// Entrance to the road cell serving the stall.
    pub cells: Vec<Position>,
    pub waypoints: Vec<(f64, f64)>,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub paths: Vec<DrivablePath>,
    pub unreachable: Vec<Position>,
}

/// Samples pieces every `spacing` meters, always including both ends.
fn densify(cells: &[Position], spacing: f64) -> (Vec<(f64, f64)>, f64) {
    let pieces = chain_pieces(cells, None, None);
    let Some(first) = pieces.first() else {
        return (cells.first().map(|&c| vec![cell_center(c)]).unwrap_or_default(), 0.0);
    };
    let total: f64 = pieces.iter().map(|p| p.length).sum();
    let mut points = vec![first.start];
    let mut offset = 0.0;
    let mut next = spacing;
    for p in &pieces {
        while next < offset + p.length - 1e-9 {
            points.push(p.point_at(next - offset));
            next += spacing;
        }
        offset += p.length;
    }
    points.push(pieces.last().map(|p| p.end()).unwrap_or(first.start));
    (points, total)
}

/// Shortest entrance-to-stall routes, one per stall block in row-major
/// order. Each route ends on the road-like neighbour of the stall closest to
/// the entrance; ties go to the first neighbour in direction order.
pub fn drivable_paths(m: &EncodingMatrix) -> Result<PathSet, SimError> {
    let g: &BlockGrid = m;
    let stalls: Vec<Position> = g.iter().filter(|(_, b)| b.is_stall()).map(|(p, _)| p).collect();
    if stalls.is_empty() {
        return Err(SimError::NoStalls);
    }
    let idx = |p: Position| p.row * g.width() + p.col;
    let mut parent: Vec<Option<Position>> = vec![None; g.width() * g.height()];
    let mut dist: Vec<Option<usize>> = vec![None; g.width() * g.height()];
    let start = m.entrance();
    dist[idx(start)] = Some(0);
    let mut queue = VecDeque::from([start]);
    while let Some(p) = queue.pop_front() {
        for d in Direction::ALL {
            if let Some(n) = g.step(p, d) {
                if dist[idx(n)].is_none() && g.get(n).is_some_and(BlockType::is_road_like) {
                    dist[idx(n)] = Some(dist[idx(p)].unwrap_or(0) + 1);
                    parent[idx(n)] = Some(p);
                    queue.push_back(n);
                }
            }
        }
    }
    let mut set = PathSet {
        paths: Vec::new(),
        unreachable: Vec::new(),
    };
    for stall in stalls {
        let target = Direction::ALL
            .into_iter()
            .filter_map(|d| g.step(stall, d))
            .filter_map(|n| dist[idx(n)].map(|d| (d, n)))
            .min_by_key(|&(d, _)| d)
            .map(|(_, n)| n);
        let Some(target) = target else {
            set.unreachable.push(stall);
            continue;
        };
        let mut cells = vec![target];
        while let Some(p) = parent[idx(*cells.last().expect("non-empty"))] {
            cells.push(p);
        }
        cells.reverse();
        let (waypoints, length) = densify(&cells, WAYPOINT_SPACING);
        set.paths.push(DrivablePath {
            stall,
            cells,
            waypoints,
            length,
        });
    }
    if set.paths.is_empty() {
        return Err(SimError::NoReachableStall);
    }
    Ok(set)
}

/// Solid geometry of a garage.
#[derive(Debug, Clone)]
pub struct Course {
    width: usize,
    height: usize,
    solid: Vec<bool>,
    pillars: HashSet<(usize, usize)>,
}

impl Course {
    pub fn new(g: &BlockGrid) -> Self {
        Self {
            width: g.width(),
            height: g.height(),
            solid: g
                .cells()
                .iter()
                .map(|b| *b == BlockType::Obstacle || b.is_stall())
                .collect(),
            pillars: pillar_corners(g).into_iter().collect(),
        }
    }

    fn is_solid(&self, row: i64, col: i64) -> bool {
        row < 0
            || col < 0
            || row >= self.height as i64
            || col >= self.width as i64
            || self.solid[row as usize * self.width + col as usize]
    }

    /// Whether the footprint centered at `(x, y)` with heading `theta`
    /// touches anything solid.
    pub fn collides(&self, x: f64, y: f64, theta: f64) -> bool {
        let fp = Footprint::new(x, y, theta);
        let (min_x, max_x, min_y, max_y) = fp.bounds();
        // plan y is negative downward; rows grow southward
        let (c0, c1) = ((min_x / BLOCK).floor() as i64, (max_x / BLOCK).floor() as i64);
        let (r0, r1) = ((-max_y / BLOCK).floor() as i64, (-min_y / BLOCK).floor() as i64);
        for r in r0..=r1 {
            for c in c0..=c1 {
                if self.is_solid(r, c) {
                    let x0 = c as f64 * BLOCK;
                    let y1 = -(r as f64) * BLOCK;
                    if fp.overlaps_box(x0, x0 + BLOCK, y1 - BLOCK, y1) {
                        return true;
                    }
                }
            }
        }
        let h = PILLAR_SIZE / 2.0;
        for r in r0.max(1)..=(r1 + 1) {
            for c in c0.max(1)..=(c1 + 1) {
                if self.pillars.contains(&(r as usize, c as usize)) {
                    let (px, py) = (c as f64 * BLOCK, -(r as f64) * BLOCK);
                    if fp.overlaps_box(px - h, px + h, py - h, py + h) {
                        return true;
                    }
                }
            }
        }
        false
    }
}

struct Footprint {
    center: (f64, f64),
    axes: [(f64, f64); 2],
    half: [f64; 2],
}

impl Footprint {
    fn new(x: f64, y: f64, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self {
            center: (x, y),
            axes: [(c, s), (-s, c)],
            half: [CAR_LENGTH / 2.0, CAR_WIDTH / 2.0],
        }
    }

    fn radius_along(&self, axis: (f64, f64)) -> f64 {
        self.axes
            .iter()
            .zip(self.half)
            .map(|(a, h)| h * (a.0 * axis.0 + a.1 * axis.1).abs())
            .sum()
    }

    fn bounds(&self) -> (f64, f64, f64, f64) {
        let rx = self.radius_along((1.0, 0.0));
        let ry = self.radius_along((0.0, 1.0));
        (self.center.0 - rx, self.center.0 + rx, self.center.1 - ry, self.center.1 + ry)
    }

    /// Separating-axis test against an axis-aligned box.
    fn overlaps_box(&self, x0: f64, x1: f64, y0: f64, y1: f64) -> bool {
        let (bx, by) = ((x0 + x1) / 2.0, (y0 + y1) / 2.0);
        let (hx, hy) = ((x1 - x0) / 2.0, (y1 - y0) / 2.0);
        let d = (self.center.0 - bx, self.center.1 - by);
        let axes = [(1.0, 0.0), (0.0, 1.0), self.axes[0], self.axes[1]];
        axes.iter().all(|&a| {
            let dist = (d.0 * a.0 + d.1 * a.1).abs();
            let box_r = hx * a.0.abs() + hy * a.1.abs();
            dist < self.radius_along(a) + box_r
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Success,
    Collision,
    Timeout,
    Deadlock,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState {
    /// Rear axle position.
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
}

impl VehicleState {
    fn center(&self, wheelbase: f64) -> (f64, f64) {
        let half = wheelbase / 2.0;
        (self.x + half * self.heading.cos(), self.y + half * self.heading.sin())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialResult {
    pub outcome: Outcome,
    pub elapsed: f64,
    /// Footprint center at the moment of collision.
    pub failure_position: Option<(f64, f64)>,
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

/// Drives one path with pure pursuit plus Gaussian steering noise.
pub fn run_trial(course: &Course, path: &DrivablePath, cfg: &SimConfig, seed: u64) -> TrialResult {
    let wps = &path.waypoints;
    let goal = *wps.last().expect("paths have at least one waypoint");
    let heading = if wps.len() >= 2 {
        (wps[1].1 - wps[0].1).atan2(wps[1].0 - wps[0].0)
    } else {
        0.0
    };
    let half = cfg.wheelbase / 2.0;
    let mut car = VehicleState {
        x: wps[0].0 - half * heading.cos(),
        y: wps[0].1 - half * heading.sin(),
        heading,
        speed: cfg.v_cruise,
    };
    let noise = Normal::new(0.0, cfg.sigma).expect("sigma is finite and non-negative");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let window = (cfg.deadlock_window / cfg.dt).round().max(1.0) as usize;
    let mut history: VecDeque<(f64, f64)> = VecDeque::with_capacity(window + 1);
    let mut target = 0;
    let mut t = 0.0;
    loop {
        let center = car.center(cfg.wheelbase);
        if dist(center, goal) <= GOAL_RADIUS {
            return TrialResult {
                outcome: Outcome::Success,
                elapsed: t,
                failure_position: None,
            };
        }
        if course.collides(center.0, center.1, car.heading) {
            return TrialResult {
                outcome: Outcome::Collision,
                elapsed: t,
                failure_position: Some(center),
            };
        }
        if t > cfg.timeout {
            return TrialResult {
                outcome: Outcome::Timeout,
                elapsed: t,
                failure_position: None,
            };
        }
        history.push_back((car.x, car.y));
        if history.len() > window {
            let old = history.pop_front().expect("non-empty");
            if dist(old, (car.x, car.y)) < cfg.deadlock_distance {
                return TrialResult {
                    outcome: Outcome::Deadlock,
                    elapsed: t,
                    failure_position: None,
                };
            }
        }

        while target + 1 < wps.len() && dist((car.x, car.y), wps[target]) < cfg.lookahead {
            target += 1;
        }
        let (tx, ty) = wps[target];
        let alpha = (ty - car.y).atan2(tx - car.x) - car.heading;
        let ld = dist((car.x, car.y), (tx, ty)).max(1e-6);
        let steer = (2.0 * cfg.wheelbase * alpha.sin()).atan2(ld).clamp(-MAX_STEER, MAX_STEER)
            + noise.sample(&mut rng);
        car.x += car.speed * car.heading.cos() * cfg.dt;
        car.y += car.speed * car.heading.sin() * cfg.dt;
        car.heading += car.speed / cfg.wheelbase * steer.tan() * cfg.dt;
        t += cfg.dt;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimGarage {
    pub id: String,
    pub lambda: f64,
    pub matrix: EncodingMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationRow {
    pub garage: String,
    pub lambda: f64,
    pub trials: u32,
    pub collision: u32,
    pub timeout: u32,
    pub deadlock: u32,
}

impl EvaluationRow {
    pub fn failures(&self) -> u32 {
        self.collision + self.timeout + self.deadlock
    }

    /// `None` when no trials ran.
    pub fn success_rate(&self) -> Option<f64> {
        (self.trials > 0).then(|| 100.0 * (self.trials - self.failures()) as f64 / self.trials as f64)
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of one trial, independent of evaluation order.
pub fn trial_seed(base: u64, garage: usize, trial: u32) -> u64 {
    splitmix(splitmix(base ^ splitmix(garage as u64)) ^ trial as u64)
}

/// Runs `cfg.trials` trials per garage, each on a uniformly drawn path.
pub fn evaluate(garages: &[SimGarage], cfg: &SimConfig, exec: Exec) -> Result<Vec<EvaluationRow>, SimError> {
    cfg.validate()?;
    let prepared: Vec<(Course, PathSet)> = garages
        .iter()
        .map(|g| Ok((Course::new(&g.matrix), drivable_paths(&g.matrix)?)))
        .collect::<Result<_, SimError>>()?;
    let trials = cfg.trials as usize;
    let outcomes = par::map_range(exec, garages.len() * trials, |job| {
        let (gi, ti) = (job / trials, (job % trials) as u32);
        let (course, set) = &prepared[gi];
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(cfg.seed, gi, ti));
        let path = &set.paths[rng.random_range(0..set.paths.len())];
        run_trial(course, path, cfg, rng.random()).outcome
    });
    Ok(garages
        .iter()
        .enumerate()
        .map(|(gi, g)| {
            let mut row = EvaluationRow {
                garage: g.id.clone(),
                lambda: g.lambda,
                trials: cfg.trials,
                collision: 0,
                timeout: 0,
                deadlock: 0,
            };
            for o in &outcomes[gi * trials..(gi + 1) * trials] {
                match o {
                    Outcome::Success => {}
                    Outcome::Collision => row.collision += 1,
                    Outcome::Timeout => row.timeout += 1,
                    Outcome::Deadlock => row.deadlock += 1,
                }
            }
            row
        })
        .collect())
}

pub fn evaluation_csv(rows: &[EvaluationRow]) -> String {
    let mut out = String::from("garage,lambda,test_count,failure_count,collision,timeout,deadlock,success_rate\n");
    for r in rows {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},",
            r.garage,
            r.lambda,
            r.trials,
            r.failures(),
            r.collision,
            r.timeout,
            r.deadlock
        );
        if let Some(s) = r.success_rate() {
            let _ = write!(out, "{s}");
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regression {
    pub slope: f64,
    pub intercept: f64,
    /// Pearson coefficient; `None` when the success rates are constant.
    pub r: Option<f64>,
    pub n: usize,
}

/// Least squares of `y` on `x` with the Pearson correlation.
pub fn regression(points: &[(f64, f64)]) -> Result<Regression, SimError> {
    let n = points.len();
    if n == 0 {
        return Err(SimError::DegenerateVariance);
    }
    let nf = n as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= f64::EPSILON * nf {
        return Err(SimError::DegenerateVariance);
    }
    if n < 3 {
        return Err(SimError::TooFewPoints(n));
    }
    let slope = sxy / sxx;
    Ok(Regression {
        slope,
        intercept: my - slope * mx,
        r: (syy > 0.0).then(|| sxy / (sxx * syy).sqrt()),
        n,
    })
}

pub fn regression_rows(rows: &[EvaluationRow]) -> Result<Regression, SimError> {
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.success_rate().map(|s| (r.lambda, s)))
        .collect();
    regression(&points)
}

pub fn regression_csv(r: &Regression) -> String {
    let corr = r.r.map(|v| v.to_string()).unwrap_or_default();
    format!("slope,intercept,r,n\n{},{},{corr},{}\n", r.slope, r.intercept, r.n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::parse_initial_map;

    fn corridor() -> EncodingMatrix {
        parse_initial_map("22222222\n71111118\n24444442").unwrap()
    }

    #[test]
    fn straight_corridor_paths() {
        let set = drivable_paths(&corridor()).unwrap();
        assert_eq!(set.paths.len(), 6);
        let far = set.paths.last().unwrap();
        assert_eq!(far.cells.len(), 7);
        assert!((far.length - 6.0 * 9.0).abs() < 1e-9);
        assert_eq!(far.waypoints.len(), 55);
        let near = &set.paths[0];
        assert_eq!(near.cells, vec![Position::new(1, 0), Position::new(1, 1)]);
    }

    #[test]
    fn stall_next_to_entrance() {
        let m = parse_initial_map("742\n108").unwrap();
        let set = drivable_paths(&m).unwrap();
        assert_eq!(set.paths[0].cells, vec![m.entrance()]);
        assert_eq!(set.paths[0].waypoints.len(), 1);
    }

    #[test]
    fn path_errors() {
        assert_eq!(drivable_paths(&parse_initial_map("7118").unwrap()), Err(SimError::NoStalls));
    }

    #[test]
    fn noise_free_straight_run_succeeds() {
        let m = corridor();
        let set = drivable_paths(&m).unwrap();
        let cfg = SimConfig {
            sigma: 0.0,
            ..SimConfig::default()
        };
        let r = run_trial(&Course::new(&m), set.paths.last().unwrap(), &cfg, 1);
        assert_eq!(r.outcome, Outcome::Success);
        assert!(r.failure_position.is_none());
    }

    #[test]
    fn standing_still_deadlocks() {
        let m = corridor();
        let set = drivable_paths(&m).unwrap();
        let cfg = SimConfig {
            v_cruise: 0.0,
            ..SimConfig::default()
        };
        let r = run_trial(&Course::new(&m), set.paths.last().unwrap(), &cfg, 1);
        assert_eq!(r.outcome, Outcome::Deadlock);
        assert!((r.elapsed - cfg.deadlock_window).abs() < 2.0 * cfg.dt);
    }

    #[test]
    fn footprint_hits_walls() {
        let course = Course::new(&corridor().into_grid());
        assert!(!course.collides(30.0, -13.5, 0.0));
        assert!(!course.collides(30.0, -13.5, std::f64::consts::FRAC_PI_2));
        assert!(course.collides(30.0, -9.5, 0.0));
        assert!(course.collides(1.0, -13.5, 0.0));
    }

    #[test]
    fn regression_cases() {
        let r = regression(&[(0.0, 100.0), (0.5, 75.0), (1.0, 50.0)]).unwrap();
        assert!((r.r.unwrap() + 1.0).abs() < 1e-12);
        assert!((r.slope + 50.0).abs() < 1e-12);
        assert_eq!(r.intercept, 100.0);
        let flat = regression(&[(0.0, 90.0), (0.5, 90.0), (1.0, 90.0)]).unwrap();
        assert_eq!(flat.r, None);
        assert_eq!(regression(&[(0.3, 1.0), (0.3, 2.0), (0.3, 3.0)]), Err(SimError::DegenerateVariance));
        assert_eq!(regression(&[(0.3, 1.0)]), Err(SimError::DegenerateVariance));
        assert_eq!(regression(&[(0.3, 1.0), (0.4, 1.0)]), Err(SimError::TooFewPoints(2)));
    }

    #[test]
    fn rows_and_csv() {
        let rows = evaluate(
            &[SimGarage {
                id: "a".into(),
                lambda: 0.5,
                matrix: corridor(),
            }],
            &SimConfig {
                trials: 0,
                ..SimConfig::default()
            },
            Exec::Sequential,
        )
        .unwrap();
        assert_eq!(rows[0].success_rate(), None);
        assert_eq!(evaluation_csv(&rows).lines().nth(1), Some("a,0.5,0,0,0,0,0,"));
    }

    #[test]
    fn evaluation_is_deterministic_across_modes() {
        let g = vec![SimGarage {
            id: "c".into(),
            lambda: 0.1,
            matrix: corridor(),
        }];
        let cfg = SimConfig {
            trials: 8,
            sigma: 0.3,
            ..SimConfig::default()
        };
        let a = evaluate(&g, &cfg, Exec::Sequential).unwrap();
        let b = evaluate(&g, &cfg, Exec::Parallel).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0].trials, 8);
    }
}
