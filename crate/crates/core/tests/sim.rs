use std::collections::VecDeque;

use garagegen::grid::{parse_initial_map, EncodingMatrix, Position};
use garagegen::par::Exec;
use garagegen::roadnet::ARC_LENGTH;
use garagegen::sim::{
    drivable_paths, evaluate, run_trial, Course, Outcome, SimConfig, SimGarage,
};

mod common;

/// One-block-wide staircase: every interior cell is a curve.
const STAIRCASE: &str = "2222222\n7122222\n2112222\n2211222\n2221122\n2222118\n2222242";

fn bfs_steps(m: &EncodingMatrix, to: Position) -> Option<usize> {
    let (w, h) = (m.width(), m.height());
    let mut dist = vec![None; w * h];
    let start = m.entrance();
    dist[start.row * w + start.col] = Some(0);
    let mut queue = VecDeque::from([start]);
    while let Some(p) = queue.pop_front() {
        let d = dist[p.row * w + p.col].unwrap();
        let mut next = vec![Position::new(p.row + 1, p.col), Position::new(p.row, p.col + 1)];
        if p.row > 0 {
            next.push(Position::new(p.row - 1, p.col));
        }
        if p.col > 0 {
            next.push(Position::new(p.row, p.col - 1));
        }
        for q in next {
            if q.row < h && q.col < w && m.get(q).unwrap().is_road_like() && dist[q.row * w + q.col].is_none() {
                dist[q.row * w + q.col] = Some(d + 1);
                queue.push_back(q);
            }
        }
    }
    dist[to.row * w + to.col]
}

#[test]
fn path_lengths_follow_grid_distance() {
    let mut checked = 0;
    for m in common::usable_garages("garage-11x7", 20, 100) {
        for p in drivable_paths(&m).unwrap().paths {
            let last = *p.cells.last().unwrap();
            let steps = bfs_steps(&m, last).unwrap();
            assert_eq!(p.cells.len(), steps + 1);
            let turns = p
                .cells
                .windows(3)
                .filter(|w| {
                    let d1 = (w[1].row as isize - w[0].row as isize, w[1].col as isize - w[0].col as isize);
                    let d2 = (w[2].row as isize - w[1].row as isize, w[2].col as isize - w[1].col as isize);
                    d1 != d2
                })
                .count();
            let expected = 9.0 * steps as f64 - turns as f64 * (9.0 - ARC_LENGTH);
            assert!((p.length - expected).abs() < 1e-9, "{} vs {expected}", p.length);
            for w in p.waypoints.windows(2) {
                let gap = ((w[1].0 - w[0].0).powi(2) + (w[1].1 - w[0].1).powi(2)).sqrt();
                assert!(gap <= 1.0 + 1e-9);
            }
            checked += 1;
        }
    }
    assert!(checked > 50);
}

#[test]
fn noise_free_follower_never_collides() {
    let cfg = SimConfig {
        sigma: 0.0,
        ..SimConfig::default()
    };
    let mut staircase = vec![parse_initial_map(STAIRCASE).unwrap()];
    staircase.extend(common::usable_garages("garage-11x7", 20, 7));
    for m in &staircase {
        let course = Course::new(m);
        for p in drivable_paths(m).unwrap().paths {
            let r = run_trial(&course, &p, &cfg, 0);
            assert_ne!(r.outcome, Outcome::Collision, "path to {:?} in\n{m}", p.stall);
        }
    }
}

#[test]
fn heavy_noise_in_a_staircase_mostly_collides() {
    let m = parse_initial_map(STAIRCASE).unwrap();
    let rows = evaluate(
        &[SimGarage {
            id: "staircase".into(),
            lambda: 1.0,
            matrix: m,
        }],
        &SimConfig {
            sigma: 0.6,
            trials: 100,
            ..SimConfig::default()
        },
        Exec::default(),
    )
    .unwrap();
    let row = &rows[0];
    assert_eq!(row.collision + row.timeout + row.deadlock + (row.trials - row.failures()), row.trials);
    assert!(row.collision > 50, "{row:?}");
}

#[test]
fn trials_replay_from_their_seed() {
    let m = common::usable_garages("garage-11x7", 1, 3).remove(0);
    let course = Course::new(&m);
    let paths = drivable_paths(&m).unwrap().paths;
    let cfg = SimConfig {
        sigma: 0.4,
        ..SimConfig::default()
    };
    for (i, p) in paths.iter().enumerate() {
        let a = run_trial(&course, p, &cfg, i as u64);
        let b = run_trial(&course, p, &cfg, i as u64);
        assert_eq!(a, b);
        assert_eq!(a.failure_position.is_some(), a.outcome == Outcome::Collision);
    }
}
