//! Independent re-implementations used as test oracles.

use std::collections::{BTreeMap, BTreeSet};

use garagegen::grid::{BlockGrid, BlockType, Position};
use garagegen::reward::{intersection_distribution, road_length_distribution, road_runs};
use garagegen::roadnet::{
    classify, GraphEdge, GraphNode, RoadKind, TopologyGraph, ARC_LENGTH, BLOCK, HALF,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Block at (r, c), with everything outside the grid read as a wall.
fn at(cells: &[u8], w: usize, h: usize, r: isize, c: isize) -> u8 {
    if r < 0 || c < 0 || r >= h as isize || c >= w as isize {
        2
    } else {
        cells[r as usize * w + c as usize]
    }
}

fn road_like(code: u8) -> bool {
    matches!(code, 1 | 7 | 8)
}

const NEIGHBOURS: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];

fn oracle_adj(cells: &[u8], w: usize, h: usize, r: isize, c: isize) -> u8 {
    NEIGHBOURS
        .iter()
        .filter(|(dr, dc)| at(cells, w, h, r + dr, c + dc) == 1)
        .count() as u8
}

fn oracle_sym(cells: &[u8], w: usize, h: usize, r: isize, c: isize) -> bool {
    let road = |dr: isize, dc: isize| at(cells, w, h, r + dr, c + dc) == 1;
    (road(0, -1) && road(0, 1)) || (road(-1, 0) && road(1, 0))
}

fn oracle_2x2(cells: &[u8], w: usize, h: usize) -> bool {
    let mut found = false;
    for r in 0..h as isize {
        for c in 0..w as isize {
            let square = [(0, 0), (0, 1), (1, 0), (1, 1)];
            if square.iter().all(|(dr, dc)| {
                r + dr < h as isize && c + dc < w as isize && at(cells, w, h, r + dr, c + dc) == 1
            }) {
                found = true;
            }
        }
    }
    found
}

fn oracle_capacity(cells: &[u8]) -> u32 {
    cells
        .iter()
        .map(|&b| match b {
            3 | 4 => 3,
            5 | 9 => 4,
            6 => 6,
            _ => 0,
        })
        .sum()
}

/// Run lengths from union-find style labelling: each horizontal (vertical)
/// component of two or more road-like cells is one run; cells with no
/// road-like neighbour at all are runs of one.
fn oracle_runs(cells: &[u8], w: usize, h: usize) -> Vec<u32> {
    let mut runs = Vec::new();
    for (dr, dc) in [(0isize, 1isize), (1, 0)] {
        let mut label = vec![usize::MAX; w * h];
        let mut sizes: Vec<u32> = Vec::new();
        for i in 0..w * h {
            if !road_like(cells[i]) || label[i] != usize::MAX {
                continue;
            }
            let id = sizes.len();
            sizes.push(0);
            let mut stack = vec![i];
            label[i] = id;
            while let Some(j) = stack.pop() {
                sizes[id] += 1;
                let (r, c) = ((j / w) as isize, (j % w) as isize);
                for s in [-1, 1] {
                    let (nr, nc) = (r + s * dr, c + s * dc);
                    if road_like(at(cells, w, h, nr, nc)) {
                        let k = nr as usize * w + nc as usize;
                        if label[k] == usize::MAX {
                            label[k] = id;
                            stack.push(k);
                        }
                    }
                }
            }
        }
        runs.extend(sizes.into_iter().filter(|&n| n >= 2));
    }
    for i in 0..w * h {
        let (r, c) = ((i / w) as isize, (i % w) as isize);
        if road_like(cells[i])
            && NEIGHBOURS
                .iter()
                .all(|(dr, dc)| !road_like(at(cells, w, h, r + dr, c + dc)))
        {
            runs.push(1);
        }
    }
    runs.sort_unstable();
    runs
}

fn oracle_intersections(cells: &[u8], w: usize, h: usize) -> BTreeMap<u32, usize> {
    let mut out = BTreeMap::new();
    for i in 0..w * h {
        let (r, c) = ((i / w) as isize, (i % w) as isize);
        if !road_like(cells[i]) {
            continue;
        }
        let deg = NEIGHBOURS
            .iter()
            .filter(|(dr, dc)| road_like(at(cells, w, h, r + dr, c + dc)))
            .count() as u32;
        if deg >= 3 {
            *out.entry(deg).or_insert(0) += 1;
        }
    }
    out
}

fn to_grid(cells: &[u8], w: usize, h: usize) -> BlockGrid {
    let blocks = cells
        .iter()
        .map(|&c| BlockType::from_code(c).unwrap())
        .collect();
    BlockGrid::new(w, h, blocks).unwrap()
}

fn normalized(counts: &BTreeMap<u32, usize>) -> BTreeMap<u32, f64> {
    let total: usize = counts.values().sum();
    counts
        .iter()
        .map(|(&k, &n)| (k, n as f64 / total as f64))
        .collect()
}

pub fn check_all(cells: &[u8], w: usize, h: usize) {
    let g = to_grid(cells, w, h);
    for p in g.positions() {
        let (r, c) = (p.row as isize, p.col as isize);
        assert_eq!(g.adj_count(p).unwrap(), oracle_adj(cells, w, h, r, c), "adj at {p} in\n{g}");
        assert_eq!(g.sym_flag(p).unwrap(), oracle_sym(cells, w, h, r, c), "sym at {p} in\n{g}");
    }
    assert_eq!(g.find_2x2_road().is_some(), oracle_2x2(cells, w, h), "2x2 in\n{g}");
    assert_eq!(g.stall_capacity(), oracle_capacity(cells));

    let mut runs = road_runs(&g);
    runs.sort_unstable();
    let expected_runs = oracle_runs(cells, w, h);
    assert_eq!(runs, expected_runs, "runs in\n{g}");
    match road_length_distribution(&g) {
        Ok(d) => {
            let mut counts = BTreeMap::new();
            for &n in &expected_runs {
                *counts.entry(n).or_insert(0) += 1;
            }
            let want = normalized(&counts);
            assert_eq!(d.len(), want.len());
            for (k, p) in d {
                assert!((p - want[&k]).abs() < 1e-12);
            }
        }
        Err(_) => assert!(expected_runs.is_empty()),
    }

    let got = intersection_distribution(&g);
    let counts = oracle_intersections(cells, w, h);
    if counts.is_empty() {
        assert!(got.is_empty());
    } else {
        let want = normalized(&counts);
        assert_eq!(got.len(), want.len(), "intersections in\n{g}");
        for (k, p) in got {
            assert!((p - want[&k]).abs() < 1e-12);
        }
    }
}

/// Road graph contracted straight from the grid: junctions (three or more
/// road-like neighbours) and dead ends are nodes, chains between them are
/// edges labelled with their non-junction cell count.
pub fn contraction_oracle(g: &BlockGrid) -> TopologyGraph {
    let road = |p: Position| g.get(p).is_some_and(|b| b.is_road_like());
    let neighbours = |p: Position| -> Vec<Position> {
        let mut out = Vec::new();
        if p.row > 0 {
            out.push(Position::new(p.row - 1, p.col));
        }
        out.push(Position::new(p.row + 1, p.col));
        if p.col > 0 {
            out.push(Position::new(p.row, p.col - 1));
        }
        out.push(Position::new(p.row, p.col + 1));
        out.into_iter().filter(|&q| road(q)).collect()
    };
    let cells: Vec<Position> = g.positions().filter(|&p| road(p)).collect();
    let node = |p: Position| match neighbours(p).len() {
        1 => Some(GraphNode::Cap(p)),
        3 | 4 => Some(GraphNode::Junction(p)),
        _ => None,
    };
    let nodes: BTreeSet<GraphNode> = cells.iter().filter_map(|&p| node(p)).collect();
    let mut walks = Vec::new();
    for &start in &cells {
        let Some(a) = node(start) else { continue };
        for first in neighbours(start) {
            let (mut prev, mut cur) = (start, first);
            let mut count = usize::from(matches!(a, GraphNode::Cap(_)));
            while node(cur).is_none() {
                count += 1;
                let next = neighbours(cur).into_iter().find(|&q| q != prev).unwrap();
                (prev, cur) = (cur, next);
            }
            let b = node(cur).unwrap();
            if let GraphNode::Cap(_) = b {
                count += 1;
            }
            walks.push(GraphEdge::Path(a.min(b), a.max(b), count));
        }
    }
    // every chain is walked once from each end
    walks.sort();
    let mut edges: Vec<GraphEdge> = walks.chunks(2).map(|pair| pair[0]).collect();
    if nodes.is_empty() && !cells.is_empty() {
        edges.push(GraphEdge::Ring(cells[0], cells.len()));
    }
    edges.sort();
    TopologyGraph { nodes, edges }
}

/// 9 m per straight, a quarter arc per curve, half a block per dead end and
/// 9 m per pair of touching junctions.
pub fn analytic_length(g: &BlockGrid) -> f64 {
    let cells = classify(g).unwrap();
    let junctions: BTreeSet<Position> = cells
        .iter()
        .filter(|c| c.kind.is_junction())
        .map(|c| c.pos)
        .collect();
    let mut total = 0.0;
    for c in &cells {
        total += match c.kind {
            RoadKind::Straight => BLOCK,
            RoadKind::Curve => ARC_LENGTH,
            RoadKind::Endpoint => HALF,
            RoadKind::TJunction | RoadKind::Cross => 0.0,
        };
    }
    for p in &junctions {
        for q in [Position::new(p.row + 1, p.col), Position::new(p.row, p.col + 1)] {
            if junctions.contains(&q) {
                total += BLOCK;
            }
        }
    }
    total
}


/// Every 3x3 matrix over FREE/ROAD/OBSTACLE.
pub fn exhaustive_3x3() {
    let mut cells = [0u8; 9];
    for n in 0..3u32.pow(9) {
        let mut k = n;
        for c in cells.iter_mut() {
            *c = (k % 3) as u8;
            k /= 3;
        }
        check_all(&cells, 3, 3);
    }
}

/// `count` random 6x6 matrices over every block code, road-heavy so that
/// runs and junctions are common.
pub fn random_6x6(count: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..count {
        let cells: Vec<u8> = (0..36)
            .map(|_| {
                if rng.random_bool(0.45) {
                    1
                } else {
                    rng.random_range(0..10)
                }
            })
            .collect();
        check_all(&cells, 6, 6);
    }
}
