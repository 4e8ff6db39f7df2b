//! Road-network view of a garage: typed road cells, segment/junction
//! topology, and exporters (OpenDrive, mesh, SVG).
//!
//! Plan coordinates put x east and y north, with the grid's top-left corner at
//! the origin, so a cell center is `(col * 9 + 4.5, -(row * 9 + 4.5))`.
//! Headings are degrees counterclockwise from +x.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::FRAC_PI_2;

use thiserror::Error;

use crate::grid::{BlockGrid, Direction, Position};

pub mod mesh;
pub mod opendrive;
pub mod svg;

pub use mesh::{emit_mesh, parse_mesh, pillar_corners, Material, MeshModel};
pub use opendrive::{emit_opendrive, parse_opendrive};
pub use svg::{render_histogram_svg, render_matrix_svg};

pub const BLOCK: f64 = 9.0;
pub const HALF: f64 = 4.5;
pub const LANE_WIDTH: f64 = 3.0;
/// Length of a quarter arc of radius [`HALF`].
pub const ARC_LENGTH: f64 = HALF * FRAC_PI_2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RoadnetError {
    #[error("road cell at {0} has no road neighbour")]
    IsolatedRoadCell(Position),
    #[error("road network is disconnected")]
    DisconnectedNetwork,
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("linkage error: {0}")]
    LinkageError(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RoadKind {
    Straight,
    Curve,
    TJunction,
    Cross,
    Endpoint,
}

impl RoadKind {
    pub fn is_junction(self) -> bool {
        matches!(self, RoadKind::TJunction | RoadKind::Cross)
    }
}

/// Compass heading of a grid direction.
pub fn heading_of(d: Direction) -> u16 {
    match d {
        Direction::Right => 0,
        Direction::Up => 90,
        Direction::Left => 180,
        Direction::Down => 270,
    }
}

/// Unit vector of a grid direction in plan coordinates.
pub fn unit(d: Direction) -> (f64, f64) {
    match d {
        Direction::Right => (1.0, 0.0),
        Direction::Up => (0.0, 1.0),
        Direction::Left => (-1.0, 0.0),
        Direction::Down => (0.0, -1.0),
    }
}

pub fn cell_center(p: Position) -> (f64, f64) {
    (p.col as f64 * BLOCK + HALF, -(p.row as f64 * BLOCK + HALF))
}

/// Cell containing a plan point, if the point has non-negative grid
/// coordinates.
pub fn cell_at(x: f64, y: f64) -> Option<Position> {
    let (col, row) = ((x / BLOCK).floor(), (-y / BLOCK).floor());
    (col >= 0.0 && row >= 0.0).then(|| Position::new(row as usize, col as usize))
}

/// Direction from `a` to the 4-neighbour `b`.
pub fn direction_between(a: Position, b: Position) -> Option<Direction> {
    Direction::ALL.into_iter().find(|d| {
        let (dr, dc) = d.delta();
        a.row.checked_add_signed(dr) == Some(b.row) && a.col.checked_add_signed(dc) == Some(b.col)
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoadCell {
    pub kind: RoadKind,
    pub center: (f64, f64),
    pub heading: u16,
    pub pos: Position,
    /// Road-like neighbours, indexed by [`Direction::index`].
    pub arms: [bool; 4],
}

impl RoadCell {
    pub fn degree(&self) -> usize {
        self.arms.iter().filter(|&&a| a).count()
    }

    pub fn arm_directions(&self) -> impl Iterator<Item = Direction> + '_ {
        Direction::ALL.into_iter().filter(|d| self.arms[d.index()])
    }
}

fn kind_and_heading(arms: [bool; 4]) -> Option<(RoadKind, u16)> {
    use Direction::*;
    let has = |d: Direction| arms[d.index()];
    let degree = arms.iter().filter(|&&a| a).count();
    Some(match degree {
        0 => return None,
        1 => {
            let d = Direction::ALL.into_iter().find(|&d| has(d))?;
            (RoadKind::Endpoint, heading_of(d))
        }
        2 if has(Left) && has(Right) => (RoadKind::Straight, 0),
        2 if has(Up) && has(Down) => (RoadKind::Straight, 90),
        2 => {
            let heading = match (has(Right), has(Up), has(Left)) {
                (true, true, _) => 0,
                (_, true, true) => 90,
                (_, _, true) => 180,
                _ => 270,
            };
            (RoadKind::Curve, heading)
        }
        3 => {
            let missing = Direction::ALL.into_iter().find(|&d| !has(d))?;
            (RoadKind::TJunction, (heading_of(missing) + 180) % 360)
        }
        _ => (RoadKind::Cross, 0),
    })
}

/// Road cells in row-major order.
pub fn classify(g: &BlockGrid) -> Result<Vec<RoadCell>, RoadnetError> {
    g.iter()
        .filter(|(_, b)| b.is_road_like())
        .map(|(pos, _)| {
            let mut arms = [false; 4];
            for d in Direction::ALL {
                arms[d.index()] = g.neighbor(pos, d).is_road_like();
            }
            let (kind, heading) = kind_and_heading(arms).ok_or(RoadnetError::IsolatedRoadCell(pos))?;
            Ok(RoadCell {
                kind,
                center: cell_center(pos),
                heading,
                pos,
                arms,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SegmentEnd {
    Junction(usize),
    /// The segment stops at the center of its end cell.
    Cap,
    /// Ring without junctions; the segment closes on itself.
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Contact {
    Start,
    End,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub id: usize,
    /// Non-junction cells in travel order; empty for connectors.
    pub cells: Vec<Position>,
    pub start: SegmentEnd,
    pub end: SegmentEnd,
    /// Implicit link between two directly adjacent junctions.
    pub connector: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Arm {
    pub dir: Direction,
    pub road: usize,
    pub contact: Contact,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JunctionNode {
    pub id: usize,
    pub pos: Position,
    pub kind: RoadKind,
    /// One entry per road-like neighbour, in [`Direction::ALL`] order.
    pub arms: Vec<Arm>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoadTopology {
    pub width: usize,
    pub height: usize,
    pub segments: Vec<Segment>,
    pub junctions: Vec<JunctionNode>,
}

/// One reference-line piece in plan coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub start: (f64, f64),
    /// Radians counterclockwise from +x.
    pub hdg: f64,
    pub length: f64,
    /// Zero for straight lines.
    pub curvature: f64,
}

impl Piece {
    pub fn point_at(&self, s: f64) -> (f64, f64) {
        let (x0, y0) = self.start;
        if self.curvature == 0.0 {
            (x0 + s * self.hdg.cos(), y0 + s * self.hdg.sin())
        } else {
            let k = self.curvature;
            let h = self.hdg + k * s;
            (
                x0 + (h.sin() - self.hdg.sin()) / k,
                y0 - (h.cos() - self.hdg.cos()) / k,
            )
        }
    }

    pub fn end(&self) -> (f64, f64) {
        self.point_at(self.length)
    }
}

fn boundary_point(p: Position, d: Direction) -> (f64, f64) {
    let (cx, cy) = cell_center(p);
    let (ux, uy) = unit(d);
    (cx + HALF * ux, cy + HALF * uy)
}

/// The piece crossing `cell`, entering from `from` (the side facing that
/// neighbour) and leaving toward `to`. A missing side means the piece starts
/// or stops at the cell center.
pub fn cell_piece(cell: Position, from: Option<Direction>, to: Option<Direction>) -> Option<Piece> {
    match (from, to) {
        (None, None) => None,
        (Some(f), None) => Some(Piece {
            start: boundary_point(cell, f),
            hdg: (heading_of(f.opposite()) as f64).to_radians(),
            length: HALF,
            curvature: 0.0,
        }),
        (None, Some(t)) => Some(Piece {
            start: cell_center(cell),
            hdg: (heading_of(t) as f64).to_radians(),
            length: HALF,
            curvature: 0.0,
        }),
        (Some(f), Some(t)) => {
            let travel = f.opposite();
            let start = boundary_point(cell, f);
            let hdg = (heading_of(travel) as f64).to_radians();
            if t == travel {
                Some(Piece {
                    start,
                    hdg,
                    length: BLOCK,
                    curvature: 0.0,
                })
            } else {
                let left = (heading_of(t) + 360 - heading_of(travel)) % 360 == 90;
                Some(Piece {
                    start,
                    hdg,
                    length: ARC_LENGTH,
                    curvature: if left { 1.0 / HALF } else { -1.0 / HALF },
                })
            }
        }
    }
}

/// Pieces along a chain of cells. `before` and `after` are the cells the
/// chain connects to at each end, if any.
pub fn chain_pieces(cells: &[Position], before: Option<Position>, after: Option<Position>) -> Vec<Piece> {
    (0..cells.len())
        .filter_map(|i| {
            let prev = if i == 0 { before } else { Some(cells[i - 1]) };
            let next = if i + 1 == cells.len() { after } else { Some(cells[i + 1]) };
            cell_piece(
                cells[i],
                prev.and_then(|p| direction_between(cells[i], p)),
                next.and_then(|n| direction_between(cells[i], n)),
            )
        })
        .collect()
}

impl RoadTopology {
    pub fn junction(&self, id: usize) -> Option<&JunctionNode> {
        self.junctions.iter().find(|j| j.id == id)
    }

    pub fn segment(&self, id: usize) -> Option<&Segment> {
        self.segments.iter().find(|s| s.id == id)
    }

    fn end_cell(&self, end: SegmentEnd) -> Option<Position> {
        match end {
            SegmentEnd::Junction(id) => self.junction(id).map(|j| j.pos),
            _ => None,
        }
    }

    /// Reference-line pieces of a segment. Connectors run between the two
    /// junction centers.
    pub fn segment_pieces(&self, s: &Segment) -> Vec<Piece> {
        if s.connector {
            let (Some(a), Some(b)) = (self.end_cell(s.start), self.end_cell(s.end)) else {
                return Vec::new();
            };
            let Some(d) = direction_between(a, b) else {
                return Vec::new();
            };
            return vec![Piece {
                start: cell_center(a),
                hdg: (heading_of(d) as f64).to_radians(),
                length: BLOCK,
                curvature: 0.0,
            }];
        }
        let (before, after) = if s.start == SegmentEnd::Closed {
            (s.cells.last().copied(), s.cells.first().copied())
        } else {
            (self.end_cell(s.start), self.end_cell(s.end))
        };
        chain_pieces(&s.cells, before, after)
    }

    pub fn segment_length(&self, s: &Segment) -> f64 {
        self.segment_pieces(s).iter().map(|p| p.length).sum()
    }

    /// Total reference-line length of all segments and connectors
    /// (junction-internal connecting roads excluded).
    pub fn total_length(&self) -> f64 {
        self.segments.iter().map(|s| self.segment_length(s)).sum()
    }

    /// Junction-center-to-junction graph with caps as leaf nodes, labelled by
    /// grid position so that equal graphs are isomorphic by construction.
    pub fn graph(&self) -> TopologyGraph {
        let mut nodes = BTreeSet::new();
        let mut edges = Vec::new();
        for j in &self.junctions {
            nodes.insert(GraphNode::Junction(j.pos));
        }
        for s in &self.segments {
            let node = |end: SegmentEnd, cell: Option<&Position>| match end {
                SegmentEnd::Junction(id) => self.junction(id).map(|j| GraphNode::Junction(j.pos)),
                SegmentEnd::Cap => cell.map(|&p| GraphNode::Cap(p)),
                SegmentEnd::Closed => None,
            };
            match (node(s.start, s.cells.first()), node(s.end, s.cells.last())) {
                (Some(a), Some(b)) => {
                    if let GraphNode::Cap(_) = a {
                        nodes.insert(a);
                    }
                    if let GraphNode::Cap(_) = b {
                        nodes.insert(b);
                    }
                    edges.push(GraphEdge::Path(a.min(b), a.max(b), s.cells.len()));
                }
                _ => {
                    let min = s.cells.iter().min().copied().unwrap_or(Position::new(0, 0));
                    edges.push(GraphEdge::Ring(min, s.cells.len()));
                }
            }
        }
        edges.sort();
        TopologyGraph { nodes, edges }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum GraphNode {
    Junction(Position),
    Cap(Position),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum GraphEdge {
    /// Endpoints (ordered) and the number of non-junction cells between
    /// junction centers, counting cap cells.
    Path(GraphNode, GraphNode, usize),
    /// Junction-free loop: smallest cell and cell count.
    Ring(Position, usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopologyGraph {
    pub nodes: BTreeSet<GraphNode>,
    pub edges: Vec<GraphEdge>,
}

/// Contracts the classified road cells into segments and junctions.
pub fn build_topology(g: &BlockGrid) -> Result<RoadTopology, RoadnetError> {
    let cells = classify(g)?;
    let by_pos: BTreeMap<Position, RoadCell> = cells.iter().map(|c| (c.pos, *c)).collect();
    if let Some(first) = cells.first() {
        let dist = g.road_distances(first.pos);
        if cells.iter().any(|c| g.distance_at(&dist, c.pos).is_none()) {
            return Err(RoadnetError::DisconnectedNetwork);
        }
    }

    let mut junction_ids = BTreeMap::new();
    let mut junctions = Vec::new();
    for c in cells.iter().filter(|c| c.kind.is_junction()) {
        junction_ids.insert(c.pos, junctions.len());
        junctions.push(JunctionNode {
            id: junctions.len(),
            pos: c.pos,
            kind: c.kind,
            arms: Vec::new(),
        });
    }

    let mut segments: Vec<Segment> = Vec::new();
    let mut owner: BTreeMap<Position, usize> = BTreeMap::new();
    let mut connectors: BTreeMap<(usize, usize), usize> = BTreeMap::new();

    // walks from `from` into `first` until a junction or a cap
    let walk = |from: Position, first: Position| -> (Vec<Position>, SegmentEnd) {
        let mut chain = vec![];
        let (mut prev, mut cur) = (from, first);
        loop {
            if let Some(&id) = junction_ids.get(&cur) {
                return (chain, SegmentEnd::Junction(id));
            }
            chain.push(cur);
            let c = &by_pos[&cur];
            let next = c
                .arm_directions()
                .filter_map(|d| g.step(cur, d))
                .find(|&n| n != prev);
            match next {
                Some(n) if c.kind != RoadKind::Endpoint => {
                    prev = cur;
                    cur = n;
                }
                _ => return (chain, SegmentEnd::Cap),
            }
        }
    };

    for j in 0..junctions.len() {
        let pos = junctions[j].pos;
        for d in by_pos[&pos].arm_directions().collect::<Vec<_>>() {
            let n = g.step(pos, d).expect("arm is in bounds");
            if let Some(&k) = junction_ids.get(&n) {
                let key = (j.min(k), j.max(k));
                if !connectors.contains_key(&key) {
                    connectors.insert(key, segments.len());
                    segments.push(Segment {
                        id: segments.len(),
                        cells: Vec::new(),
                        start: SegmentEnd::Junction(key.0),
                        end: SegmentEnd::Junction(key.1),
                        connector: true,
                    });
                }
            } else if !owner.contains_key(&n) {
                let (chain, end) = walk(pos, n);
                for &c in &chain {
                    owner.insert(c, segments.len());
                }
                segments.push(Segment {
                    id: segments.len(),
                    cells: chain,
                    start: SegmentEnd::Junction(j),
                    end,
                    connector: false,
                });
            }
        }
    }

    // junction-free chains start at their first cap in row-major order
    for c in cells.iter().filter(|c| c.kind == RoadKind::Endpoint) {
        if owner.contains_key(&c.pos) {
            continue;
        }
        let mut chain = vec![c.pos];
        let (rest, end) = match c.arm_directions().next().and_then(|d| g.step(c.pos, d)) {
            Some(n) => walk(c.pos, n),
            None => (Vec::new(), SegmentEnd::Cap),
        };
        chain.extend(rest);
        for &p in &chain {
            owner.insert(p, segments.len());
        }
        segments.push(Segment {
            id: segments.len(),
            cells: chain,
            start: SegmentEnd::Cap,
            end,
            connector: false,
        });
    }

    // anything left lies on a ring
    for c in &cells {
        if c.kind.is_junction() || owner.contains_key(&c.pos) {
            continue;
        }
        let mut chain = vec![c.pos];
        let mut prev = c.pos;
        let mut cur = c
            .arm_directions()
            .filter_map(|d| g.step(c.pos, d))
            .next()
            .expect("ring cells have two arms");
        while cur != c.pos {
            chain.push(cur);
            let next = by_pos[&cur]
                .arm_directions()
                .filter_map(|d| g.step(cur, d))
                .find(|&n| n != prev)
                .expect("ring cells have two arms");
            prev = cur;
            cur = next;
        }
        for &p in &chain {
            owner.insert(p, segments.len());
        }
        segments.push(Segment {
            id: segments.len(),
            cells: chain,
            start: SegmentEnd::Closed,
            end: SegmentEnd::Closed,
            connector: false,
        });
    }

    // arm table, now that every neighbour has an owning segment
    for j in 0..junctions.len() {
        let pos = junctions[j].pos;
        let mut arms = Vec::new();
        for d in by_pos[&pos].arm_directions() {
            let n = g.step(pos, d).expect("arm is in bounds");
            let (road, contact) = if let Some(&k) = junction_ids.get(&n) {
                let road = connectors[&(j.min(k), j.max(k))];
                (road, if j < k { Contact::Start } else { Contact::End })
            } else {
                let road = owner[&n];
                let s = &segments[road];
                let at_start = s.start == SegmentEnd::Junction(j) && s.cells.first() == Some(&n);
                (road, if at_start { Contact::Start } else { Contact::End })
            };
            arms.push(Arm { dir: d, road, contact });
        }
        junctions[j].arms = arms;
    }

    Ok(RoadTopology {
        width: g.width(),
        height: g.height(),
        segments,
        junctions,
    })
}
