//! Plain-text polygon mesh (Wavefront OBJ subset with `usemtl` groups).
//!
//! Coordinates are plan meters (x east, y north) with z up. Every
//! non-obstacle block gets a 9 m floor quad, every stall block one 3 m x
//! 5.4 m marking quad per stall, every obstacle block a 9 m x 9 m x 3 m wall
//! box, and every interior grid corner shared by a road-like block and a
//! stall block a 0.6 m x 0.6 m x 3 m pillar box.

use std::fmt::Write as _;

use super::{RoadnetError, BLOCK};
use crate::grid::{BlockGrid, BlockType, Direction, Position};

pub const WALL_HEIGHT: f64 = 3.0;
pub const PILLAR_SIZE: f64 = 0.6;
pub const STALL_WIDTH: f64 = 3.0;
pub const STALL_DEPTH: f64 = 5.4;
const MARKING_Z: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Material {
    Floor,
    StallMarking,
    Wall,
    Pillar,
}

impl Material {
    pub const ALL: [Material; 4] = [Material::Floor, Material::StallMarking, Material::Wall, Material::Pillar];

    pub fn name(self) -> &'static str {
        match self {
            Material::Floor => "floor",
            Material::StallMarking => "stall-marking",
            Material::Wall => "wall",
            Material::Pillar => "pillar",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    pub material: Material,
    /// Zero-based vertex indices, counterclockwise seen from outside.
    pub vertices: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MeshModel {
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<Face>,
}

impl MeshModel {
    fn quad(&mut self, material: Material, corners: [[f64; 3]; 4]) {
        let base = self.vertices.len();
        self.vertices.extend(corners);
        self.faces.push(Face {
            material,
            vertices: (base..base + 4).collect(),
        });
    }

    /// Axis-aligned box from `(x0, y0, 0)` to `(x1, y1, h)`.
    fn cuboid(&mut self, material: Material, (x0, y0): (f64, f64), (x1, y1): (f64, f64), h: f64) {
        let b = self.vertices.len();
        for z in [0.0, h] {
            self.vertices
                .extend([[x0, y0, z], [x1, y0, z], [x1, y1, z], [x0, y1, z]]);
        }
        let faces = [
            [b, b + 3, b + 2, b + 1],
            [b + 4, b + 5, b + 6, b + 7],
            [b, b + 1, b + 5, b + 4],
            [b + 1, b + 2, b + 6, b + 5],
            [b + 2, b + 3, b + 7, b + 6],
            [b + 3, b, b + 4, b + 7],
        ];
        for f in faces {
            self.faces.push(Face {
                material,
                vertices: f.to_vec(),
            });
        }
    }

    pub fn count(&self, material: Material) -> usize {
        self.faces.iter().filter(|f| f.material == material).count()
    }

    pub fn is_valid(&self) -> bool {
        self.faces
            .iter()
            .all(|f| f.vertices.len() >= 3 && f.vertices.iter().all(|&v| v < self.vertices.len()))
    }

    /// OBJ text with one `usemtl` group per material present.
    pub fn to_obj(&self) -> String {
        let mut out = format!(
            "# garage mesh: {} vertices, {} faces\n",
            self.vertices.len(),
            self.faces.len()
        );
        for [x, y, z] in &self.vertices {
            let _ = writeln!(out, "v {x} {y} {z}");
        }
        for m in Material::ALL {
            let mut group = self.faces.iter().filter(|f| f.material == m).peekable();
            if group.peek().is_none() {
                continue;
            }
            let _ = writeln!(out, "usemtl {}", m.name());
            for f in group {
                out.push('f');
                for v in &f.vertices {
                    let _ = write!(out, " {}", v + 1);
                }
                out.push('\n');
            }
        }
        out
    }
}

/// Reads back the subset written by [`MeshModel::to_obj`]. Faces come back
/// grouped by material.
pub fn parse_mesh(text: &str) -> Result<MeshModel, RoadnetError> {
    let bad = |line: usize, what: &str| RoadnetError::SchemaViolation(format!("mesh line {line}: {what}"));
    let mut mesh = MeshModel::default();
    let mut material = None;
    for (i, line) in text.lines().enumerate() {
        let mut parts = line.split_whitespace();
        match parts.next() {
            None | Some("#") => {}
            Some("v") => {
                let xyz: Vec<f64> = parts
                    .map(|p| p.parse().map_err(|_| bad(i + 1, "bad coordinate")))
                    .collect::<Result<_, _>>()?;
                let [x, y, z] = xyz[..] else {
                    return Err(bad(i + 1, "vertex needs three coordinates"));
                };
                mesh.vertices.push([x, y, z]);
            }
            Some("usemtl") => {
                material = Some(
                    parts
                        .next()
                        .and_then(Material::from_name)
                        .ok_or_else(|| bad(i + 1, "unknown material"))?,
                );
            }
            Some("f") => {
                let vertices = parts
                    .map(|p| match p.parse::<usize>() {
                        Ok(v) if v >= 1 => Ok(v - 1),
                        _ => Err(bad(i + 1, "bad vertex index")),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                mesh.faces.push(Face {
                    material: material.ok_or_else(|| bad(i + 1, "face before usemtl"))?,
                    vertices,
                });
            }
            Some(other) if other.starts_with('#') => {}
            Some(_) => return Err(bad(i + 1, "unknown record")),
        }
    }
    if !mesh.is_valid() {
        return Err(RoadnetError::SchemaViolation("face references a missing vertex".into()));
    }
    Ok(mesh)
}

/// Interior grid corners `(row, col)` touched by at least one road-like and
/// one stall block.
pub fn pillar_corners(g: &BlockGrid) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for r in 1..g.height() {
        for c in 1..g.width() {
            let around = [(r - 1, c - 1), (r - 1, c), (r, c - 1), (r, c)]
                .map(|(row, col)| g.get(Position::new(row, col)).unwrap_or(BlockType::Obstacle));
            if around.iter().any(|b| b.is_road_like()) && around.iter().any(|b| b.is_stall()) {
                out.push((r, c));
            }
        }
    }
    out
}

fn plan(row: f64, col: f64) -> (f64, f64) {
    (col * BLOCK, -row * BLOCK)
}

/// Marking quads for one stall block, in rows of three along the sides that
/// face road-like neighbours.
fn stall_quads(g: &BlockGrid, pos: Position, n: u32) -> Vec<[[f64; 3]; 4]> {
    let mut sides: Vec<Direction> = Direction::ALL
        .into_iter()
        .filter(|&d| g.neighbor(pos, d).is_road_like())
        .collect();
    if sides.is_empty() {
        sides.push(Direction::Down);
    }
    let (x0, y1) = plan(pos.row as f64, pos.col as f64);
    let (x1, y0) = (x0 + BLOCK, y1 - BLOCK);
    (0..n as usize)
        .map(|i| {
            let (row, slot) = (i / 3, (i % 3) as f64);
            let side = sides[row % sides.len()];
            let a = slot * STALL_WIDTH;
            let b = a + STALL_WIDTH;
            let (xa, xb, ya, yb) = match side {
                Direction::Down => (x0 + a, x0 + b, y0, y0 + STALL_DEPTH),
                Direction::Up => (x0 + a, x0 + b, y1 - STALL_DEPTH, y1),
                Direction::Left => (x0, x0 + STALL_DEPTH, y0 + a, y0 + b),
                Direction::Right => (x1 - STALL_DEPTH, x1, y0 + a, y0 + b),
            };
            [
                [xa, ya, MARKING_Z],
                [xb, ya, MARKING_Z],
                [xb, yb, MARKING_Z],
                [xa, yb, MARKING_Z],
            ]
        })
        .collect()
}

pub fn emit_mesh(g: &BlockGrid) -> MeshModel {
    let mut mesh = MeshModel::default();
    for (pos, block) in g.iter() {
        let (x0, y1) = plan(pos.row as f64, pos.col as f64);
        let (x1, y0) = (x0 + BLOCK, y1 - BLOCK);
        if block == BlockType::Obstacle {
            mesh.cuboid(Material::Wall, (x0, y0), (x1, y1), WALL_HEIGHT);
            continue;
        }
        mesh.quad(
            Material::Floor,
            [[x0, y0, 0.0], [x1, y0, 0.0], [x1, y1, 0.0], [x0, y1, 0.0]],
        );
        for q in stall_quads(g, pos, block.stall_count()) {
            mesh.quad(Material::StallMarking, q);
        }
    }
    let h = PILLAR_SIZE / 2.0;
    for (r, c) in pillar_corners(g) {
        let (x, y) = plan(r as f64, c as f64);
        mesh.cuboid(Material::Pillar, (x - h, y - h), (x + h, y + h), WALL_HEIGHT);
    }
    mesh
}
