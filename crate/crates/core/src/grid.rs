//! Block taxonomy, the encoding matrix and the neighbourhood queries the
//! coloring rules are built on.
//!
//! Cells outside the grid always read as [`BlockType::Obstacle`]; garages are
//! walled.

use std::collections::VecDeque;
use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GridError {
    #[error("map is empty")]
    Empty,
    #[error("line {line} has {found} blocks, expected {expected}")]
    NonRectangular {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("invalid block code {found:?} at line {line}, column {col}")]
    InvalidCode { line: usize, col: usize, found: char },
    #[error("expected exactly one entrance and one exit, found {entrances} and {exits}")]
    EntranceExitCount { entrances: usize, exits: usize },
    #[error("position {0} is outside the grid")]
    OutOfBounds(Position),
    #[error("cell count {cells} does not match {width}x{height}")]
    DimensionMismatch {
        width: usize,
        height: usize,
        cells: usize,
    },
}

/// Block codes 0-9.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum BlockType {
    Free = 0,
    Road = 1,
    Obstacle = 2,
    ObstStall3 = 3,
    Stall3 = 4,
    Stall4 = 5,
    Stall6 = 6,
    Entrance = 7,
    Exit = 8,
    ObstStall4 = 9,
}

impl BlockType {
    pub const ALL: [BlockType; 10] = [
        BlockType::Free,
        BlockType::Road,
        BlockType::Obstacle,
        BlockType::ObstStall3,
        BlockType::Stall3,
        BlockType::Stall4,
        BlockType::Stall6,
        BlockType::Entrance,
        BlockType::Exit,
        BlockType::ObstStall4,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    pub fn from_char(c: char) -> Option<Self> {
        c.to_digit(10).and_then(|d| Self::from_code(d as u8))
    }

    pub fn to_char(self) -> char {
        char::from(b'0' + self.code())
    }

    pub fn name(self) -> &'static str {
        match self {
            BlockType::Free => "FREE",
            BlockType::Road => "ROAD",
            BlockType::Obstacle => "OBSTACLE",
            BlockType::ObstStall3 => "OBST_STALL3",
            BlockType::Stall3 => "STALL3",
            BlockType::Stall4 => "STALL4",
            BlockType::Stall6 => "STALL6",
            BlockType::Entrance => "ENTRANCE",
            BlockType::Exit => "EXIT",
            BlockType::ObstStall4 => "OBST_STALL4",
        }
    }

    pub fn is_stall(self) -> bool {
        self.stall_count() > 0
    }

    pub fn is_obstructed_stall(self) -> bool {
        matches!(self, BlockType::ObstStall3 | BlockType::ObstStall4)
    }

    /// Road, entrance and exit: everything a vehicle drives on.
    pub fn is_road_like(self) -> bool {
        matches!(self, BlockType::Road | BlockType::Entrance | BlockType::Exit)
    }

    /// Number of parking spaces the block holds.
    pub fn stall_count(self) -> u32 {
        match self {
            BlockType::Stall3 | BlockType::ObstStall3 => 3,
            BlockType::Stall4 | BlockType::ObstStall4 => 4,
            BlockType::Stall6 => 6,
            _ => 0,
        }
    }
}

impl fmt::Display for BlockType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Position {
    pub row: usize,
    pub col: usize,
}

impl Position {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    pub fn manhattan(self, other: Position) -> usize {
        self.row.abs_diff(other.row) + self.col.abs_diff(other.col)
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

/// The four absolute moves. The discriminant is the action index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    Left = 0,
    Right = 1,
    Up = 2,
    Down = 3,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::Left,
        Direction::Right,
        Direction::Up,
        Direction::Down,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn opposite(self) -> Self {
        match self {
            Direction::Left => Direction::Right,
            Direction::Right => Direction::Left,
            Direction::Up => Direction::Down,
            Direction::Down => Direction::Up,
        }
    }

    /// (row, col) offset.
    pub fn delta(self) -> (isize, isize) {
        match self {
            Direction::Left => (0, -1),
            Direction::Right => (0, 1),
            Direction::Up => (-1, 0),
            Direction::Down => (1, 0),
        }
    }

    pub fn axis(self) -> Axis {
        match self {
            Direction::Left | Direction::Right => Axis::EastWest,
            Direction::Up | Direction::Down => Axis::NorthSouth,
        }
    }
}

/// Facing axis of six-stall blocks, fixed for one episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    NorthSouth,
    EastWest,
}

/// A rectangular grid of blocks with no entrance/exit requirement.
///
/// Every neighbourhood query lives here so it can be exercised on arbitrary
/// grids; [`EncodingMatrix`] adds the garage invariants on top.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BlockGrid {
    width: usize,
    height: usize,
    cells: Vec<BlockType>,
}

impl BlockGrid {
    pub fn new(width: usize, height: usize, cells: Vec<BlockType>) -> Result<Self, GridError> {
        if width == 0 || height == 0 {
            return Err(GridError::Empty);
        }
        if cells.len() != width * height {
            return Err(GridError::DimensionMismatch {
                width,
                height,
                cells: cells.len(),
            });
        }
        Ok(Self {
            width,
            height,
            cells,
        })
    }

    pub fn filled(width: usize, height: usize, block: BlockType) -> Self {
        assert!(width > 0 && height > 0, "grid must be non-empty");
        Self {
            width,
            height,
            cells: vec![block; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cells(&self) -> &[BlockType] {
        &self.cells
    }

    pub fn in_bounds(&self, pos: Position) -> bool {
        pos.row < self.height && pos.col < self.width
    }

    fn index(&self, pos: Position) -> usize {
        pos.row * self.width + pos.col
    }

    pub fn get(&self, pos: Position) -> Option<BlockType> {
        self.in_bounds(pos).then(|| self.cells[self.index(pos)])
    }

    /// Block at `pos`, reading out-of-bounds as an obstacle.
    pub fn block_or_wall(&self, pos: Position) -> BlockType {
        self.get(pos).unwrap_or(BlockType::Obstacle)
    }

    pub(crate) fn set(&mut self, pos: Position, block: BlockType) {
        let i = self.index(pos);
        self.cells[i] = block;
    }

    pub fn positions(&self) -> impl Iterator<Item = Position> + '_ {
        (0..self.height).flat_map(move |row| (0..self.width).map(move |col| Position { row, col }))
    }

    pub fn iter(&self) -> impl Iterator<Item = (Position, BlockType)> + '_ {
        self.positions().zip(self.cells.iter().copied())
    }

    /// In-bounds neighbour of `pos` in `dir`.
    pub fn step(&self, pos: Position, dir: Direction) -> Option<Position> {
        let (dr, dc) = dir.delta();
        let row = pos.row.checked_add_signed(dr)?;
        let col = pos.col.checked_add_signed(dc)?;
        let next = Position { row, col };
        self.in_bounds(next).then_some(next)
    }

    pub fn neighbor(&self, pos: Position, dir: Direction) -> BlockType {
        self.step(pos, dir)
            .map_or(BlockType::Obstacle, |p| self.cells[self.index(p)])
    }

    fn check(&self, pos: Position) -> Result<(), GridError> {
        if self.in_bounds(pos) {
            Ok(())
        } else {
            Err(GridError::OutOfBounds(pos))
        }
    }

    /// Number of ROAD blocks among the four neighbours.
    pub fn adj_count(&self, pos: Position) -> Result<u8, GridError> {
        self.check(pos)?;
        Ok(Direction::ALL
            .iter()
            .filter(|&&d| self.neighbor(pos, d) == BlockType::Road)
            .count() as u8)
    }

    /// True when both left and right, or both top and bottom, are ROAD.
    pub fn sym_flag(&self, pos: Position) -> Result<bool, GridError> {
        self.check(pos)?;
        Ok(self.symmetric_axis(pos).is_some())
    }

    /// Facing of a six-stall block at `pos`: stalls face the roads, so a
    /// left/right road pair gives an east-west block. Left/right wins when
    /// both pairs are present.
    pub(crate) fn symmetric_axis(&self, pos: Position) -> Option<Axis> {
        let road = |d| self.neighbor(pos, d) == BlockType::Road;
        if road(Direction::Left) && road(Direction::Right) {
            Some(Axis::EastWest)
        } else if road(Direction::Up) && road(Direction::Down) {
            Some(Axis::NorthSouth)
        } else {
            None
        }
    }

    pub fn touches_obstacle(&self, pos: Position) -> bool {
        Direction::ALL
            .iter()
            .any(|&d| self.neighbor(pos, d) == BlockType::Obstacle)
    }

    /// Whether turning `candidate` into ROAD would complete a 2x2 square of
    /// ROAD blocks. Only code 1 counts.
    pub fn creates_2x2_road(&self, candidate: Position) -> Result<bool, GridError> {
        self.check(candidate)?;
        let is_road = |r: isize, c: isize| -> bool {
            if r == candidate.row as isize && c == candidate.col as isize {
                return true;
            }
            if r < 0 || c < 0 {
                return false;
            }
            self.get(Position::new(r as usize, c as usize)) == Some(BlockType::Road)
        };
        let (r0, c0) = (candidate.row as isize, candidate.col as isize);
        for (dr, dc) in [(-1, -1), (-1, 0), (0, -1), (0, 0)] {
            let (r, c) = (r0 + dr, c0 + dc);
            if is_road(r, c) && is_road(r + 1, c) && is_road(r, c + 1) && is_road(r + 1, c + 1) {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Top-left corner of the first all-ROAD 2x2 window, if any.
    pub fn find_2x2_road(&self) -> Option<Position> {
        if self.width < 2 || self.height < 2 {
            return None;
        }
        (0..self.height - 1)
            .flat_map(|r| (0..self.width - 1).map(move |c| Position::new(r, c)))
            .find(|p| {
                [(0, 0), (0, 1), (1, 0), (1, 1)].iter().all(|(dr, dc)| {
                    self.get(Position::new(p.row + dr, p.col + dc)) == Some(BlockType::Road)
                })
            })
    }

    pub fn stall_capacity(&self) -> u32 {
        self.cells.iter().map(|b| b.stall_count()).sum()
    }

    pub fn count(&self, block: BlockType) -> usize {
        self.cells.iter().filter(|&&b| b == block).count()
    }

    /// Number of road-like blocks (road, entrance, exit) among the four
    /// in-bounds neighbours.
    pub fn road_like_degree(&self, pos: Position) -> u8 {
        Direction::ALL
            .iter()
            .filter(|&&d| self.neighbor(pos, d).is_road_like())
            .count() as u8
    }

    /// Cells violating the stall adjacency rules: stalls without a ROAD
    /// neighbour, and obstructed stalls without an obstacle neighbour.
    pub fn stall_adjacency_violations(&self) -> Vec<Position> {
        self.iter()
            .filter(|&(p, b)| {
                b.is_stall()
                    && (self.adj_count(p).unwrap_or(0) == 0
                        || (b.is_obstructed_stall() && !self.touches_obstacle(p)))
            })
            .map(|(p, _)| p)
            .collect()
    }

    /// Breadth-first distances over road-like cells from `start`.
    pub fn road_distances(&self, start: Position) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.cells.len()];
        if !self.get(start).is_some_and(BlockType::is_road_like) {
            return dist;
        }
        let mut queue = VecDeque::from([start]);
        dist[self.index(start)] = Some(0);
        while let Some(p) = queue.pop_front() {
            let d = dist[self.index(p)].unwrap_or(0);
            for dir in Direction::ALL {
                if let Some(n) = self.step(p, dir) {
                    let i = self.index(n);
                    if dist[i].is_none() && self.cells[i].is_road_like() {
                        dist[i] = Some(d + 1);
                        queue.push_back(n);
                    }
                }
            }
        }
        dist
    }

    pub fn distance_at(&self, dist: &[Option<usize>], pos: Position) -> Option<usize> {
        self.in_bounds(pos).then(|| dist[self.index(pos)]).flatten()
    }

    fn render(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (r, row) in self.cells.chunks(self.width).enumerate() {
            if r > 0 {
                f.write_str("\n")?;
            }
            for b in row {
                write!(f, "{}", b.to_char())?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for BlockGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.render(f)
    }
}

impl FromStr for BlockGrid {
    type Err = GridError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let lines: Vec<&str> = text.lines().map(str::trim_end).collect();
        let end = lines
            .iter()
            .rposition(|l| !l.is_empty())
            .ok_or(GridError::Empty)?;
        let lines = &lines[..=end];
        let width = lines[0].chars().count();
        if width == 0 {
            return Err(GridError::Empty);
        }
        let mut cells = Vec::with_capacity(width * lines.len());
        for (i, line) in lines.iter().enumerate() {
            let found = line.chars().count();
            if found != width {
                return Err(GridError::NonRectangular {
                    line: i + 1,
                    expected: width,
                    found,
                });
            }
            for (j, ch) in line.chars().enumerate() {
                let block = BlockType::from_char(ch).ok_or(GridError::InvalidCode {
                    line: i + 1,
                    col: j + 1,
                    found: ch,
                })?;
                cells.push(block);
            }
        }
        BlockGrid::new(width, lines.len(), cells)
    }
}

/// A garage: a block grid with exactly one entrance and one exit.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EncodingMatrix {
    grid: BlockGrid,
    entrance: Position,
    exit: Position,
}

impl EncodingMatrix {
    pub fn from_grid(grid: BlockGrid) -> Result<Self, GridError> {
        let entrances: Vec<Position> = grid
            .iter()
            .filter(|&(_, b)| b == BlockType::Entrance)
            .map(|(p, _)| p)
            .collect();
        let exits: Vec<Position> = grid
            .iter()
            .filter(|&(_, b)| b == BlockType::Exit)
            .map(|(p, _)| p)
            .collect();
        if entrances.len() != 1 || exits.len() != 1 {
            return Err(GridError::EntranceExitCount {
                entrances: entrances.len(),
                exits: exits.len(),
            });
        }
        Ok(Self {
            grid,
            entrance: entrances[0],
            exit: exits[0],
        })
    }

    pub fn entrance(&self) -> Position {
        self.entrance
    }

    pub fn exit(&self) -> Position {
        self.exit
    }

    pub fn grid(&self) -> &BlockGrid {
        &self.grid
    }

    pub fn into_grid(self) -> BlockGrid {
        self.grid
    }

    /// Turns `pos` into ROAD unless it is the entrance or exit. Returns
    /// whether the cell changed.
    pub(crate) fn paint_road(&mut self, pos: Position) -> bool {
        match self.grid.get(pos) {
            Some(BlockType::Entrance | BlockType::Exit | BlockType::Road) | None => false,
            Some(_) => {
                self.grid.set(pos, BlockType::Road);
                true
            }
        }
    }

    pub(crate) fn grid_mut(&mut self) -> &mut BlockGrid {
        &mut self.grid
    }

    /// Entrance and exit joined by a 4-connected path of road-like cells.
    pub fn connectivity(&self) -> bool {
        let dist = self.grid.road_distances(self.entrance);
        self.grid.distance_at(&dist, self.exit).is_some()
    }
}

impl Deref for EncodingMatrix {
    type Target = BlockGrid;

    fn deref(&self) -> &BlockGrid {
        &self.grid
    }
}

impl fmt::Display for EncodingMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.grid.render(f)
    }
}

impl FromStr for EncodingMatrix {
    type Err = GridError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        EncodingMatrix::from_grid(text.parse()?)
    }
}

/// Parses the plain-text initial map format: one digit per block, one row
/// per line.
pub fn parse_initial_map(text: &str) -> Result<EncodingMatrix, GridError> {
    text.parse()
}
