use std::collections::BTreeMap;

use garagegen::coloring::apply_coloring;
use garagegen::env::EnvConfig;
use garagegen::grid::{Axis, BlockGrid, BlockType, Direction, EncodingMatrix, Position};
use garagegen::maps;
use garagegen::metrics::{
    dedupe, difficulty, hardness, heatmap, mean_path_junctions, score, stall_access_cells,
    MetricsConfig, RangePreset,
};
use garagegen::reward::{
    intersection_distribution, performance, road_length_distribution, total_reward, RewardParams,
};
use proptest::prelude::*;

mod common;

const MAPS: [&str; 4] = ["garage-11x7", "corridor-5x5", "s-13x13", "u-13x13"];

fn actions() -> impl Strategy<Value = Vec<Direction>> {
    prop::collection::vec((0usize..4).prop_map(|i| Direction::ALL[i]), 0..250)
}

fn roads(m: &BlockGrid) -> Vec<Position> {
    m.iter()
        .filter(|&(_, b)| b == BlockType::Road)
        .map(|(p, _)| p)
        .collect()
}

/// Small matrix over FREE/ROAD/OBSTACLE with one entrance and one exit.
fn small_matrix(codes: &[u8], w: usize, ent: usize, exit: usize) -> EncodingMatrix {
    let mut cells: Vec<BlockType> = codes
        .iter()
        .map(|&c| BlockType::from_code(c).unwrap())
        .collect();
    cells[ent] = BlockType::Entrance;
    cells[exit] = BlockType::Exit;
    EncodingMatrix::from_grid(BlockGrid::new(w, codes.len() / w, cells).unwrap()).unwrap()
}

fn matrix_strategy(w: usize, h: usize, codes: &'static [u8]) -> impl Strategy<Value = EncodingMatrix> {
    (
        prop::collection::vec(prop::sample::select(codes), w * h),
        0..w * h,
        0..w * h - 1,
    )
        .prop_map(move |(cells, ent, exit)| {
            let exit = if exit >= ent { exit + 1 } else { exit };
            small_matrix(&cells, w, ent, exit)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn episode_invariants(map in prop::sample::select(&MAPS[..]), seed in 0u64..1000, acts in actions()) {
        let map = maps::bundled(map).unwrap();
        let cfg = EnvConfig::default();
        let ep = common::replay(&map, &cfg, seed, &acts);
        let (ent, exit) = (map.entrance(), map.exit());

        prop_assert!(ep.outcomes.len() <= ep.step_limit);
        for w in ep.matrices.windows(2) {
            prop_assert_eq!(w[1].get(ent), Some(BlockType::Entrance));
            prop_assert_eq!(w[1].get(exit), Some(BlockType::Exit));
            for p in roads(&w[0]) {
                prop_assert_eq!(w[1].get(p), Some(BlockType::Road));
            }
        }
        for m in &ep.matrices {
            prop_assert!(m.find_2x2_road().is_none(), "2x2 road in\n{}", m);
            prop_assert!(m.stall_adjacency_violations().is_empty(), "stall rule broken in\n{}", m);
        }
        let mut coverage = 0.0;
        let mut errors = 0;
        for (out, &e) in ep.outcomes.iter().zip(&ep.error_indices) {
            prop_assert!(out.observation.coverage >= coverage);
            prop_assert!(e >= errors);
            if e > cfg.max_error {
                prop_assert!(out.done);
            }
            coverage = out.observation.coverage;
            errors = e;
        }
        if ep.usable() {
            prop_assert!(ep.last().connectivity());
        }

        let again = common::replay(&map, &cfg, seed, &acts);
        prop_assert_eq!(&again.matrices, &ep.matrices);
        prop_assert_eq!(&again.outcomes, &ep.outcomes);
    }

    #[test]
    fn utility_rewards_telescope(map in prop::sample::select(&MAPS[..]), seed in 0u64..1000, acts in actions()) {
        let map = maps::bundled(map).unwrap();
        let reward = RewardParams { k_c: 0.0, k_u: 1.0, ..RewardParams::default() };
        let cfg = EnvConfig { reward: reward.clone(), ..EnvConfig::default() };
        let ep = common::replay(&map, &cfg, seed, &acts);
        let sum: f64 = ep.outcomes.iter().map(|o| o.reward).sum();
        let (a, b) = (performance(&map, &reward), performance(ep.last(), &reward));
        let expected = reward.w_s * (b.stalls as f64 - a.stalls as f64)
            + reward.w_r * (b.road_length - a.road_length)
            + reward.w_c * (b.intersection - a.intersection);
        prop_assert!((sum - expected).abs() < 1e-9, "{} vs {}", sum, expected);
    }

    #[test]
    fn distributions_sum_to_one(m in matrix_strategy(6, 6, &[0, 1, 1, 1, 2, 4])) {
        if let Ok(d) = road_length_distribution(&m) {
            prop_assert!((d.values().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
        let d = intersection_distribution(&m);
        if !d.is_empty() {
            prop_assert!((d.values().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn total_reward_is_linear(a in -100.0..100.0f64, b in -100.0..100.0f64, c in -100.0..100.0f64, d in -100.0..100.0f64, k in -3.0..3.0f64) {
        let p = RewardParams { k_c: 0.7, k_u: 0.4, ..RewardParams::default() };
        let sum = total_reward(a + b, c + d, &p);
        prop_assert!((sum - total_reward(a, c, &p) - total_reward(b, d, &p)).abs() < 1e-9);
        prop_assert!((total_reward(k * a, k * c, &p) - k * total_reward(a, c, &p)).abs() < 1e-9);
    }

    #[test]
    fn coloring_is_idempotent_and_keeps_stalls_served(
        m in matrix_strategy(5, 5, &[0, 0, 1, 1, 2]),
        pos in 0usize..25,
        east_west in any::<bool>(),
    ) {
        let p = Position::new(pos / 5, pos % 5);
        let axis = if east_west { Axis::EastWest } else { Axis::NorthSouth };
        let once = apply_coloring(&m, p, axis);
        prop_assert_eq!(&apply_coloring(&once, p, axis), &once);
        prop_assert!(once.stall_adjacency_violations().is_empty(), "\n{}", once);
        prop_assert_eq!(once.get(m.entrance()), Some(BlockType::Entrance));
        prop_assert_eq!(once.get(m.exit()), Some(BlockType::Exit));

        let lost = m.iter().any(|(q, b)| once.get(q).unwrap().stall_count() < b.stall_count());
        let gained = m.iter().any(|(q, b)| !b.is_stall() && once.get(q).unwrap().is_stall());
        if gained && !lost {
            prop_assert!(once.stall_capacity() > m.stall_capacity());
        }
    }

    #[test]
    fn scores_stay_in_unit_interval(seed in 0u64..400, table in any::<bool>()) {
        let map = maps::bundled("garage-11x7").unwrap();
        let ep = common::wander(&map, &EnvConfig::default(), seed, 0.3);
        let preset = if table { RangePreset::TableCompat } else { RangePreset::Text };
        let cfg = MetricsConfig { preset, ..MetricsConfig::default() };
        let rec = score(0, ep.last(), &map, ep.usable(), &cfg).unwrap();
        prop_assert!((0.0..=1.0).contains(&rec.delta));
        if let Some(s) = rec.scores {
            for v in [s.h1, s.h2, s.lambda] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            prop_assert!((s.lambda - (cfg.w1 * s.h1 + cfg.w2 * s.h2)).abs() < 1e-12);
        }
    }

    #[test]
    fn difficulty_is_monotone(h1 in 0.0..1.0f64, h2 in 0.0..1.0f64, d1 in 0.0..1.0f64, d2 in 0.0..1.0f64) {
        let base = difficulty(h1, h2, 0.33, 0.67);
        prop_assert!(difficulty((h1 + d1).min(1.0), h2, 0.33, 0.67) >= base);
        prop_assert!(difficulty(h1, (h2 + d2).min(1.0), 0.33, 0.67) >= base);
    }

    #[test]
    fn hardness_complements_normalized_easiness(lo in -5.0..5.0f64, span in 0.1..10.0f64, t in 0.0..=1.0f64) {
        let hi = lo + span;
        let e = lo + t * span;
        let easiness = (e - lo) / (hi - lo);
        prop_assert!((hardness(e, lo, hi).unwrap() + easiness - 1.0).abs() < 1e-12);
    }

    #[test]
    fn path_junctions_match_enumeration(m in matrix_strategy(5, 4, &[0, 1, 1, 1, 1, 2, 4, 5])) {
        match (mean_path_junctions(&m), oracle_mean_junctions(&m)) {
            (Ok(got), Some(want)) => prop_assert!((got - want).abs() < 1e-12, "{} vs {} in\n{}", got, want, m),
            (Err(_), None) => {}
            (got, want) => prop_assert!(false, "{:?} vs {:?} in\n{}", got, want, m),
        }
    }

    #[test]
    fn dedupe_and_heatmap_count(picks in prop::collection::vec(0usize..6, 0..40)) {
        let map = maps::bundled("corridor-5x5").unwrap();
        let pool: Vec<EncodingMatrix> = (0..6u64)
            .map(|s| common::wander(&map, &EnvConfig::default(), s, 0.5).last().clone())
            .collect();
        let cfg = MetricsConfig::default();
        let records: Vec<_> = picks
            .iter()
            .enumerate()
            .map(|(i, &k)| score(i, &pool[k], &map, true, &cfg).unwrap())
            .collect();
        let mut distinct: Vec<&EncodingMatrix> = picks.iter().map(|&k| &pool[k]).collect();
        distinct.sort_by_key(|m| m.to_string());
        distinct.dedup();
        let scored = records.iter().filter(|r| r.scores.is_some()).count() as u32;
        prop_assert_eq!(heatmap(&records).total(), scored);
        prop_assert_eq!(dedupe(records).len(), distinct.len());
    }
}

/// Junction counts by enumerating every shortest path with a depth-first
/// search, then taking the fewest junctions per stall-access cell.
fn oracle_mean_junctions(m: &EncodingMatrix) -> Option<f64> {
    let (w, h) = (m.width() as isize, m.height() as isize);
    let code = |r: isize, c: isize| {
        if r < 0 || c < 0 || r >= h || c >= w {
            2
        } else {
            m.get(Position::new(r as usize, c as usize)).unwrap().code()
        }
    };
    let road = |r: isize, c: isize| matches!(code(r, c), 1 | 7 | 8);
    let steps = [(-1, 0), (1, 0), (0, -1), (0, 1)];
    let junction = |r: isize, c: isize| steps.iter().filter(|(dr, dc)| road(r + dr, c + dc)).count() >= 3;

    // every simple path from the entrance, recording the best junction count
    // per (cell, length)
    let start = m.entrance();
    let mut best: BTreeMap<(isize, isize), (usize, usize)> = BTreeMap::new();
    let mut visited = vec![false; (w * h) as usize];
    fn dfs(
        cell: (isize, isize),
        len: usize,
        count: usize,
        w: isize,
        visited: &mut Vec<bool>,
        best: &mut BTreeMap<(isize, isize), (usize, usize)>,
        road: &dyn Fn(isize, isize) -> bool,
        junction: &dyn Fn(isize, isize) -> bool,
    ) {
        let count = count + usize::from(junction(cell.0, cell.1));
        let e = best.entry(cell).or_insert((len, count));
        if len < e.0 || (len == e.0 && count < e.1) {
            *e = (len, count);
        }
        visited[(cell.0 * w + cell.1) as usize] = true;
        for (dr, dc) in [(-1, 0), (1, 0), (0, -1), (0, 1)] {
            let n = (cell.0 + dr, cell.1 + dc);
            if road(n.0, n.1) && !visited[(n.0 * w + n.1) as usize] {
                dfs(n, len + 1, count, w, visited, best, road, junction);
            }
        }
        visited[(cell.0 * w + cell.1) as usize] = false;
    }
    dfs(
        (start.row as isize, start.col as isize),
        0,
        0,
        w,
        &mut visited,
        &mut best,
        &road,
        &junction,
    );
    let counts: Vec<usize> = stall_access_cells(m)
        .iter()
        .filter_map(|p| best.get(&(p.row as isize, p.col as isize)).map(|&(_, c)| c))
        .collect();
    (!counts.is_empty()).then(|| counts.iter().sum::<usize>() as f64 / counts.len() as f64)
}
