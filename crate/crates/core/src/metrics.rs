//! Coverage and difficulty scoring of generated garages.
//!
//! Coverage is the share of initially free blocks that were colored. Difficulty
//! blends two hardness values: short straight runs and few junctions along the
//! drivable paths both make a garage harder. Each hardness value is the
//! expectation mapped linearly onto `[0, 1]` over a configured range, with the
//! upper end of the range as the easy side.

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::garage_set::GarageSample;
use crate::grid::{BlockGrid, Direction, EncodingMatrix, Position};
use crate::par::{self, Exec};
use crate::reward::road_runs;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("matrices differ in size: {0:?} vs {1:?}")]
    DimensionMismatch((usize, usize), (usize, usize)),
    #[error("initial map has no free blocks")]
    NoFreeBlocks,
    #[error("garage has no road-like blocks")]
    EmptyNetwork,
    #[error("no stall is reachable from the entrance")]
    NoStalls,
    #[error("degenerate range [{lo}, {hi}]")]
    DegenerateRange { lo: f64, hi: f64 },
}

/// `1 - free(final) / free(initial)`.
pub fn coverage(final_: &BlockGrid, initial: &BlockGrid) -> Result<f64, MetricsError> {
    if (final_.width(), final_.height()) != (initial.width(), initial.height()) {
        return Err(MetricsError::DimensionMismatch(
            (final_.width(), final_.height()),
            (initial.width(), initial.height()),
        ));
    }
    let free = |g: &BlockGrid| g.count(crate::grid::BlockType::Free);
    let initial_free = free(initial);
    if initial_free == 0 {
        return Err(MetricsError::NoFreeBlocks);
    }
    Ok((1.0 - free(final_) as f64 / initial_free as f64).clamp(0.0, 1.0))
}

/// Mean length of the maximal straight road runs.
pub fn mean_run_length(grid: &BlockGrid) -> Result<f64, MetricsError> {
    let runs = road_runs(grid);
    if runs.is_empty() {
        return Err(MetricsError::EmptyNetwork);
    }
    Ok(runs.iter().map(|&r| r as f64).sum::<f64>() / runs.len() as f64)
}

/// Road-like cells adjacent to at least one stall block, in row-major order.
pub fn stall_access_cells(grid: &BlockGrid) -> Vec<Position> {
    grid.iter()
        .filter(|&(p, b)| {
            b.is_road_like()
                && Direction::ALL
                    .iter()
                    .any(|&d| grid.step(p, d).and_then(|n| grid.get(n)).is_some_and(|n| n.is_stall()))
        })
        .map(|(p, _)| p)
        .collect()
}

fn is_junction(grid: &BlockGrid, p: Position) -> bool {
    grid.road_like_degree(p) >= 3
}

/// For every road-like cell reachable from `start`, the fewest junction cells
/// on any shortest path from `start` (both ends included).
pub fn junctions_on_shortest_paths(grid: &BlockGrid, start: Position) -> Vec<Option<usize>> {
    let dist = grid.road_distances(start);
    let mut order: Vec<Position> = grid
        .positions()
        .filter(|&p| grid.distance_at(&dist, p).is_some())
        .collect();
    order.sort_by_key(|&p| grid.distance_at(&dist, p));
    let idx = |p: Position| p.row * grid.width() + p.col;
    let mut best: Vec<Option<usize>> = vec![None; dist.len()];
    for p in order {
        let d = dist[idx(p)].unwrap_or(0);
        let own = usize::from(is_junction(grid, p));
        let prev = if d == 0 {
            Some(0)
        } else {
            Direction::ALL
                .iter()
                .filter_map(|&dir| grid.step(p, dir))
                .filter(|&n| dist[idx(n)] == Some(d - 1))
                .filter_map(|n| best[idx(n)])
                .min()
        };
        best[idx(p)] = prev.map(|b| b + own);
    }
    best
}

/// Mean number of junctions met on the way from the entrance to each
/// reachable stall-access cell.
pub fn mean_path_junctions(m: &EncodingMatrix) -> Result<f64, MetricsError> {
    let best = junctions_on_shortest_paths(m, m.entrance());
    let counts: Vec<usize> = stall_access_cells(m)
        .into_iter()
        .filter_map(|p| best[p.row * m.width() + p.col])
        .collect();
    if counts.is_empty() {
        return Err(MetricsError::NoStalls);
    }
    Ok(counts.iter().sum::<usize>() as f64 / counts.len() as f64)
}

/// `(E(X), E(Y))`: mean run length and mean junctions per drivable path.
pub fn expectations(m: &EncodingMatrix) -> Result<(f64, f64), MetricsError> {
    Ok((mean_run_length(m)?, mean_path_junctions(m)?))
}

/// `clamp((hi - e) / (hi - lo), 0, 1)`.
pub fn hardness(e: f64, lo: f64, hi: f64) -> Result<f64, MetricsError> {
    if !(hi > lo) {
        return Err(MetricsError::DegenerateRange { lo, hi });
    }
    Ok(((hi - e) / (hi - lo)).clamp(0.0, 1.0))
}

pub fn difficulty(h1: f64, h2: f64, w1: f64, w2: f64) -> f64 {
    w1 * h1 + w2 * h2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RangePreset {
    /// Run length in [2, 6], junctions in [2, 4].
    Text,
    /// Run length in [2, 4], junctions in [2, 6].
    TableCompat,
}

impl RangePreset {
    /// `((road_lo, road_hi), (junction_lo, junction_hi))`.
    pub fn ranges(self) -> ((f64, f64), (f64, f64)) {
        match self {
            RangePreset::Text => ((2.0, 6.0), (2.0, 4.0)),
            RangePreset::TableCompat => ((2.0, 4.0), (2.0, 6.0)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsConfig {
    pub preset: RangePreset,
    pub w1: f64,
    pub w2: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            preset: RangePreset::Text,
            w1: 0.33,
            w2: 0.67,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DifficultyScores {
    pub ex: f64,
    pub ey: f64,
    pub h1: f64,
    pub h2: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GarageRecord {
    pub index: usize,
    pub matrix: EncodingMatrix,
    pub usable: bool,
    pub delta: f64,
    /// `None` when the garage has no reachable stall.
    pub scores: Option<DifficultyScores>,
    pub hash: String,
}

pub fn difficulty_scores(
    m: &EncodingMatrix,
    cfg: &MetricsConfig,
) -> Result<DifficultyScores, MetricsError> {
    let (ex, ey) = expectations(m)?;
    let ((rl, rh), (cl, ch)) = cfg.preset.ranges();
    let h1 = hardness(ex, rl, rh)?;
    let h2 = hardness(ey, cl, ch)?;
    Ok(DifficultyScores {
        ex,
        ey,
        h1,
        h2,
        lambda: difficulty(h1, h2, cfg.w1, cfg.w2),
    })
}

pub fn score(
    index: usize,
    m: &EncodingMatrix,
    initial: &EncodingMatrix,
    usable: bool,
    cfg: &MetricsConfig,
) -> Result<GarageRecord, MetricsError> {
    Ok(GarageRecord {
        index,
        matrix: m.clone(),
        usable,
        delta: coverage(m, initial)?,
        scores: difficulty_scores(m, cfg).ok(),
        hash: content_hash(m),
    })
}

/// Hex SHA-256 prefix of the matrix text, stable across runs and platforms.
/// Scores every sample of a garage set, indexed by position in the set.
pub fn score_all(
    samples: &[GarageSample],
    initial: &EncodingMatrix,
    cfg: &MetricsConfig,
    exec: Exec,
) -> Result<Vec<GarageRecord>, MetricsError> {
    let indexed: Vec<(usize, &GarageSample)> = samples.iter().enumerate().collect();
    par::map(exec, &indexed, |&(i, g)| score(i, &g.matrix, initial, g.usable, cfg))
        .into_iter()
        .collect()
}

pub fn content_hash(m: &BlockGrid) -> String {
    let mut h = Sha256::new();
    h.update(format!("{}x{}\n{}", m.width(), m.height(), m).as_bytes());
    h.finalize()[..8].iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Keeps the first record of every distinct matrix, in order.
pub fn dedupe(records: Vec<GarageRecord>) -> Vec<GarageRecord> {
    let mut seen = HashSet::new();
    records
        .into_iter()
        .filter(|r| seen.insert(r.matrix.clone()))
        .collect()
}

/// Up to `count` scored records whose difficulties sit closest to `count`
/// evenly spaced targets between the lowest and highest difficulty, each
/// record used at most once. Returned in ascending difficulty, ties by index.
pub fn spanning_sample(records: &[GarageRecord], count: usize) -> Vec<&GarageRecord> {
    let mut scored: Vec<(f64, &GarageRecord)> = records
        .iter()
        .filter_map(|r| r.scores.map(|s| (s.lambda, r)))
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.index.cmp(&b.1.index)));
    if scored.len() <= count {
        return scored.into_iter().map(|(_, r)| r).collect();
    }
    let (lo, hi) = (scored[0].0, scored[scored.len() - 1].0);
    let mut used = vec![false; scored.len()];
    for k in 0..count {
        let target = if count == 1 {
            lo
        } else {
            lo + (hi - lo) * k as f64 / (count - 1) as f64
        };
        let pick = (0..scored.len())
            .filter(|&i| !used[i])
            .min_by(|&a, &b| {
                (scored[a].0 - target)
                    .abs()
                    .total_cmp(&(scored[b].0 - target).abs())
                    .then(a.cmp(&b))
            })
            .expect("fewer picks than records");
        used[pick] = true;
    }
    scored
        .into_iter()
        .zip(used)
        .filter_map(|((_, r), u)| u.then_some(r))
        .collect()
}

pub const BINS: usize = 10;

/// Usable garages binned by difficulty (first index) and coverage (second),
/// 0.1 wide bins, 1.0 in the top bin.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Histogram2D {
    pub counts: [[u32; BINS]; BINS],
}

pub fn bin_of(v: f64) -> usize {
    ((v * BINS as f64 + 1e-9).floor().max(0.0) as usize).min(BINS - 1)
}

impl Histogram2D {
    pub fn add(&mut self, lambda: f64, delta: f64) {
        self.counts[bin_of(lambda)][bin_of(delta)] += 1;
    }

    pub fn total(&self) -> u32 {
        self.counts.iter().flatten().sum()
    }

    /// One row per coverage bin (top = highest), one column per difficulty bin.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("coverage\\difficulty");
        for d in 0..BINS {
            let _ = write!(out, ",{:.1}", d as f64 / BINS as f64);
        }
        out.push('\n');
        for c in (0..BINS).rev() {
            let _ = write!(out, "{:.1}", c as f64 / BINS as f64);
            for d in 0..BINS {
                let _ = write!(out, ",{}", self.counts[d][c]);
            }
            out.push('\n');
        }
        out
    }
}

pub fn heatmap<'a>(records: impl IntoIterator<Item = &'a GarageRecord>) -> Histogram2D {
    let mut h = Histogram2D::default();
    for r in records {
        if let (true, Some(s)) = (r.usable, r.scores) {
            h.add(s.lambda, r.delta);
        }
    }
    h
}

/// `index,usable,delta,ex,ey,h1,h2,lambda`; unscoreable garages leave the
/// difficulty columns empty.
pub fn scores_csv<'a>(records: impl IntoIterator<Item = &'a GarageRecord>) -> String {
    let mut out = String::from("index,usable,delta,ex,ey,h1,h2,lambda\n");
    for r in records {
        let _ = write!(out, "{},{},{}", r.index, u8::from(r.usable), r.delta);
        match r.scores {
            Some(s) => {
                let _ = writeln!(out, ",{},{},{},{},{}", s.ex, s.ey, s.h1, s.h2, s.lambda);
            }
            None => out.push_str(",,,,,\n"),
        }
    }
    out
}
