//! The block state machine: how blocks next to freshly colored road turn
//! into stall groups.
//!
//! A FREE or stall block with at least one ROAD neighbour is retyped from its
//! current neighbourhood every time a neighbour is colored:
//!
//! | neighbourhood                         | result                          |
//! |---------------------------------------|---------------------------------|
//! | three or four ROAD neighbours         | `STALL3`                        |
//! | opposite ROAD pair, facing the episode axis | `STALL6`                  |
//! | opposite ROAD pair, wrong facing      | `STALL3`                        |
//! | two ROAD neighbours at a corner       | `STALL4` / `OBST_STALL4`        |
//! | one ROAD neighbour                    | `STALL3` / `OBST_STALL3`        |
//!
//! The obstructed variants are chosen when any neighbour is an obstacle (the
//! grid edge counts). Entrance, exit, obstacle and road blocks never change.

use crate::grid::{Axis, BlockGrid, BlockType, Direction, EncodingMatrix, Position};

/// The block `pos` should become given its neighbourhood, or `None` when the
/// rules leave it untouched.
pub fn stall_transition(grid: &BlockGrid, pos: Position, axis: Axis) -> Option<BlockType> {
    let current = grid.get(pos)?;
    if current != BlockType::Free && !current.is_stall() {
        return None;
    }
    let adj = grid.adj_count(pos).ok()?;
    let next = match adj {
        0 => return None,
        3.. => BlockType::Stall3,
        _ => match grid.symmetric_axis(pos) {
            Some(facing) if facing == axis => BlockType::Stall6,
            Some(_) => BlockType::Stall3,
            None if adj == 2 => {
                if grid.touches_obstacle(pos) {
                    BlockType::ObstStall4
                } else {
                    BlockType::Stall4
                }
            }
            None => {
                if grid.touches_obstacle(pos) {
                    BlockType::ObstStall3
                } else {
                    BlockType::Stall3
                }
            }
        },
    };
    Some(next)
}

/// Retypes the four neighbours of `newly_road` in place.
pub fn recolor_neighbors(grid: &mut BlockGrid, newly_road: Position, axis: Axis) {
    for dir in Direction::ALL {
        if let Some(n) = grid.step(newly_road, dir) {
            if let Some(block) = stall_transition(grid, n, axis) {
                grid.set(n, block);
            }
        }
    }
}

/// Retypes every eligible block of the grid. Equivalent to
/// [`recolor_neighbors`] applied around every road cell.
pub fn recolor_all(grid: &mut BlockGrid, axis: Axis) {
    let positions: Vec<Position> = grid.positions().collect();
    for p in positions {
        if let Some(block) = stall_transition(grid, p, axis) {
            grid.set(p, block);
        }
    }
}

/// Pure form of the coloring step: a copy of `m` with the neighbours of
/// `newly_road` retyped.
pub fn apply_coloring(m: &EncodingMatrix, newly_road: Position, axis: Axis) -> EncodingMatrix {
    let mut out = m.clone();
    recolor_neighbors(out.grid_mut(), newly_road, axis);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::parse_initial_map;

    fn grid(text: &str) -> BlockGrid {
        text.parse().unwrap()
    }

    const CENTER: Position = Position::new(1, 1);

    /// Rule table written out independently of `stall_transition`.
    fn oracle(n: [BlockType; 4], axis: Axis) -> BlockType {
        // n = [left, top, right, down]
        let road: Vec<bool> = n.iter().map(|&b| b == BlockType::Road).collect();
        let obstacle = n.contains(&BlockType::Obstacle);
        let adj = road.iter().filter(|&&r| r).count();
        let horizontal = road[0] && road[2];
        let vertical = road[1] && road[3];
        if adj >= 3 {
            return BlockType::Stall3;
        }
        if horizontal {
            return if axis == Axis::EastWest {
                BlockType::Stall6
            } else {
                BlockType::Stall3
            };
        }
        if vertical {
            return if axis == Axis::NorthSouth {
                BlockType::Stall6
            } else {
                BlockType::Stall3
            };
        }
        match (adj, obstacle) {
            (2, true) => BlockType::ObstStall4,
            (2, false) => BlockType::Stall4,
            (1, true) => BlockType::ObstStall3,
            (1, false) => BlockType::Stall3,
            _ => BlockType::Free,
        }
    }

    #[test]
    fn entrance_never_changes() {
        let m = parse_initial_map("710\n008").unwrap();
        let out = apply_coloring(&m, Position::new(0, 1), Axis::EastWest);
        assert_eq!(out.get(Position::new(0, 0)), Some(BlockType::Entrance));
        assert_eq!(out.get(Position::new(0, 2)), Some(BlockType::ObstStall3));
    }

    #[test]
    fn single_road_neighbor_gives_three_stall() {
        let mut g = grid("000\n010\n000");
        recolor_neighbors(&mut g, CENTER, Axis::EastWest);
        // (0,1) touches the top wall, so it is obstructed
        assert_eq!(g.get(Position::new(0, 1)), Some(BlockType::ObstStall3));

        let mut g = grid("00000\n00000\n00100\n00000\n00000");
        recolor_neighbors(&mut g, Position::new(2, 2), Axis::EastWest);
        assert_eq!(g.get(Position::new(1, 2)), Some(BlockType::Stall3));
        assert_eq!(g.get(Position::new(2, 1)), Some(BlockType::Stall3));
    }

    #[test]
    fn six_stall_orientation() {
        let mut g = grid("00000\n01010\n00000");
        g.set(Position::new(1, 3), BlockType::Road);
        recolor_neighbors(&mut g, Position::new(1, 3), Axis::EastWest);
        assert_eq!(g.get(Position::new(1, 2)), Some(BlockType::Stall6));

        let mut g = grid("00000\n01010\n00000");
        recolor_neighbors(&mut g, Position::new(1, 3), Axis::NorthSouth);
        assert_eq!(g.get(Position::new(1, 2)), Some(BlockType::Stall3));
    }

    #[test]
    fn exhaustive_three_by_three_matches_rule_table() {
        let palette = [BlockType::Free, BlockType::Road, BlockType::Obstacle];
        for axis in [Axis::EastWest, Axis::NorthSouth] {
            for code in 0..3usize.pow(9) {
                let mut c = code;
                let cells: Vec<BlockType> = (0..9)
                    .map(|_| {
                        let b = palette[c % 3];
                        c /= 3;
                        b
                    })
                    .collect();
                if cells[4] != BlockType::Free {
                    continue;
                }
                let g = BlockGrid::new(3, 3, cells.clone()).unwrap();
                let n = [cells[3], cells[1], cells[5], cells[7]];
                let expected = oracle(n, axis);
                let got = stall_transition(&g, CENTER, axis).unwrap_or(BlockType::Free);
                assert_eq!(got, expected, "grid\n{g}\naxis {axis:?}");
            }
        }
    }

    #[test]
    fn coloring_is_idempotent() {
        let mut g = grid("000000\n011100\n000100\n000110\n000000");
        recolor_all(&mut g, Axis::NorthSouth);
        let once = g.clone();
        recolor_all(&mut g, Axis::NorthSouth);
        assert_eq!(g, once);
        assert!(g.stall_adjacency_violations().is_empty());
    }
}
