//! Constraint and utility rewards.
//!
//! The step reward is `k_c * R_c + k_u * R_u`, where `R_c` collects the
//! constraint penalties and bonus of the step and `R_u` is the weighted change
//! of three structural performance values: stall capacity, the road-length
//! distribution and the intersection distribution.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{BlockGrid, Position};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RewardError {
    #[error("garage has no road-like blocks")]
    EmptyNetwork,
    #[error("invalid weight table entry {0:?}, expected `key:weight`")]
    WeightTable(String),
    #[error("invalid reward parameter: {0}")]
    InvalidParam(String),
}

/// Weights keyed by an integer category. Lookups fall back to the largest key
/// not above the query, so `{6: 1.0}` also covers lengths 7, 8, ...
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct WeightTable(BTreeMap<u32, f64>);

impl WeightTable {
    pub fn new(entries: impl IntoIterator<Item = (u32, f64)>) -> Self {
        Self(entries.into_iter().collect())
    }

    pub fn weight(&self, key: u32) -> f64 {
        self.0.range(..=key).next_back().map_or(0.0, |(_, &w)| w)
    }

    pub fn entries(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.0.iter().map(|(&k, &w)| (k, w))
    }

    pub fn max_weight(&self) -> f64 {
        self.0.values().copied().fold(0.0, f64::max)
    }
}

impl fmt::Display for WeightTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (k, w)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{k}:{w:?}")?;
        }
        Ok(())
    }
}

impl FromStr for WeightTable {
    type Err = RewardError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut map = BTreeMap::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let bad = || RewardError::WeightTable(part.to_string());
            let (k, w) = part.split_once(':').ok_or_else(bad)?;
            let k: u32 = k.trim().parse().map_err(|_| bad())?;
            let w: f64 = w.trim().parse().map_err(|_| bad())?;
            if !w.is_finite() {
                return Err(bad());
            }
            map.insert(k, w);
        }
        Ok(Self(map))
    }
}

impl TryFrom<String> for WeightTable {
    type Error = RewardError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<WeightTable> for String {
    fn from(t: WeightTable) -> String {
        t.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardParams {
    pub k_c: f64,
    pub k_u: f64,
    pub w_s: f64,
    pub w_r: f64,
    pub w_c: f64,
    pub collision_penalty: f64,
    pub network_penalty: f64,
    pub backward_penalty: f64,
    pub overflow_penalty: f64,
    pub connectivity_bonus: f64,
    /// Weight per road run length.
    pub road_length_weights: WeightTable,
    /// Weight per intersection degree (3 = T, 4 = cross).
    pub intersection_weights: WeightTable,
}

impl Default for RewardParams {
    fn default() -> Self {
        Self {
            k_c: 1.0,
            k_u: 1.0,
            w_s: 1.0,
            w_r: 0.5,
            w_c: 0.5,
            collision_penalty: -10.0,
            network_penalty: -5.0,
            backward_penalty: -1.0,
            overflow_penalty: -100.0,
            connectivity_bonus: 100.0,
            road_length_weights: WeightTable::new([
                (1, 0.0),
                (2, 0.2),
                (3, 0.4),
                (4, 0.6),
                (5, 0.8),
                (6, 1.0),
            ]),
            intersection_weights: WeightTable::new([(3, 0.4), (4, 1.0)]),
        }
    }
}

impl RewardParams {
    pub fn validate(&self) -> Result<(), RewardError> {
        let bad = |msg: &str| Err(RewardError::InvalidParam(msg.to_string()));
        if !(0.0..=1.0).contains(&self.k_c) || !(0.0..=1.0).contains(&self.k_u) {
            return bad("k_c and k_u must lie in [0, 1]");
        }
        if self.w_s < 0.0 || self.w_r < 0.0 || self.w_c < 0.0 {
            return bad("utility weights must be non-negative");
        }
        let penalties = [
            self.collision_penalty,
            self.network_penalty,
            self.backward_penalty,
            self.overflow_penalty,
        ];
        if penalties.iter().any(|&p| !(p <= 0.0)) {
            return bad("penalties must be <= 0");
        }
        if !(self.connectivity_bonus >= 0.0) {
            return bad("connectivity bonus must be >= 0");
        }
        Ok(())
    }
}

/// Constraint events a step can raise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConstraintEvent {
    Collision,
    NetworkViolation,
    Backward,
    ErrorOverflow,
    ReachedExit,
    None,
}

pub fn constraint_reward(event: ConstraintEvent, p: &RewardParams) -> f64 {
    match event {
        ConstraintEvent::Collision => p.collision_penalty,
        ConstraintEvent::NetworkViolation => p.network_penalty,
        ConstraintEvent::Backward => p.backward_penalty,
        ConstraintEvent::ErrorOverflow => p.overflow_penalty,
        ConstraintEvent::ReachedExit => p.connectivity_bonus,
        ConstraintEvent::None => 0.0,
    }
}

/// Probability mass over integer outcomes.
pub type Distribution = BTreeMap<u32, f64>;

/// Maximal straight runs of road-like cells, as lengths in blocks.
///
/// A cell belongs to a horizontal run when its left or right neighbour is
/// road-like, and likewise vertically. A road-like cell with no road-like
/// neighbour is a run of length one.
pub fn road_runs(grid: &BlockGrid) -> Vec<u32> {
    let road = |r: usize, c: usize| grid.cells()[r * grid.width() + c].is_road_like();
    let mut runs = Vec::new();
    let mut scan = |outer: usize, inner: usize, at: &dyn Fn(usize, usize) -> bool| {
        for o in 0..outer {
            let mut len = 0u32;
            for i in 0..=inner {
                if i < inner && at(o, i) {
                    len += 1;
                } else {
                    if len >= 2 {
                        runs.push(len);
                    }
                    len = 0;
                }
            }
        }
    };
    scan(grid.height(), grid.width(), &|r, c| road(r, c));
    scan(grid.width(), grid.height(), &|c, r| road(r, c));
    for (p, b) in grid.iter() {
        if b.is_road_like() && grid.road_like_degree(p) == 0 {
            runs.push(1);
        }
    }
    runs
}

fn normalize(counts: BTreeMap<u32, usize>) -> Distribution {
    let total: usize = counts.values().sum();
    counts
        .into_iter()
        .map(|(k, n)| (k, n as f64 / total as f64))
        .collect()
}

pub fn road_length_distribution(grid: &BlockGrid) -> Result<Distribution, RewardError> {
    let runs = road_runs(grid);
    if runs.is_empty() {
        return Err(RewardError::EmptyNetwork);
    }
    let mut counts = BTreeMap::new();
    for len in runs {
        *counts.entry(len).or_insert(0) += 1;
    }
    Ok(normalize(counts))
}

/// Road-like cells with three (T) or four (cross) road-like neighbours.
pub fn intersections(grid: &BlockGrid) -> Vec<(Position, u32)> {
    grid.iter()
        .filter(|(_, b)| b.is_road_like())
        .filter_map(|(p, _)| {
            let d = grid.road_like_degree(p) as u32;
            (d >= 3).then_some((p, d))
        })
        .collect()
}

/// Distribution over intersection categories; empty when there are none.
pub fn intersection_distribution(grid: &BlockGrid) -> Distribution {
    let mut counts = BTreeMap::new();
    for (_, d) in intersections(grid) {
        *counts.entry(d).or_insert(0) += 1;
    }
    if counts.is_empty() {
        return Distribution::new();
    }
    normalize(counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PerformanceSnapshot {
    pub stalls: u32,
    pub road_length: f64,
    pub intersection: f64,
}

fn weighted(dist: &Distribution, weights: &WeightTable) -> f64 {
    dist.iter().map(|(&k, &p)| p * weights.weight(k)).sum()
}

pub fn performance(grid: &BlockGrid, p: &RewardParams) -> PerformanceSnapshot {
    let road_length = road_length_distribution(grid)
        .map(|d| weighted(&d, &p.road_length_weights))
        .unwrap_or(0.0);
    PerformanceSnapshot {
        stalls: grid.stall_capacity(),
        road_length,
        intersection: weighted(&intersection_distribution(grid), &p.intersection_weights),
    }
}

pub fn utility_reward(
    prev: &PerformanceSnapshot,
    curr: &PerformanceSnapshot,
    p: &RewardParams,
) -> f64 {
    p.w_s * (curr.stalls as f64 - prev.stalls as f64)
        + p.w_r * (curr.road_length - prev.road_length)
        + p.w_c * (curr.intersection - prev.intersection)
}

pub fn total_reward(constraint: f64, utility: f64, p: &RewardParams) -> f64 {
    p.k_c * constraint + p.k_u * utility
}
