//! Bundled initial maps and the published evaluation table.

use thiserror::Error;

use crate::grid::{parse_initial_map, EncodingMatrix};

pub const GARAGE_11X7: &str = include_str!("../data/maps/garage_11x7.txt");
/// Entrance and exit on opposite walls, different rows.
pub const PLAIN_13X13_OFFSET: &str = include_str!("../data/maps/plain_13x13_offset.txt");
/// Entrance and exit facing each other.
pub const PLAIN_13X13_ALIGNED: &str = include_str!("../data/maps/plain_13x13_aligned.txt");
pub const S_13X13: &str = include_str!("../data/maps/s_13x13.txt");
pub const U_13X13: &str = include_str!("../data/maps/u_13x13.txt");
/// Single-lane L corridor used for quick training checks.
pub const CORRIDOR_5X5: &str = include_str!("../data/maps/corridor_5x5.txt");

/// Published 16-garage evaluation: scores and trial outcomes per garage.
pub const EVALUATION_TABLE_CSV: &str = include_str!("../data/evaluation_table.csv");

pub const NAMED: [(&str, &str); 6] = [
    ("garage-11x7", GARAGE_11X7),
    ("plain-13x13-offset", PLAIN_13X13_OFFSET),
    ("plain-13x13-aligned", PLAIN_13X13_ALIGNED),
    ("s-13x13", S_13X13),
    ("u-13x13", U_13X13),
    ("corridor-5x5", CORRIDOR_5X5),
];

/// Looks up a bundled map by name.
pub fn bundled(name: &str) -> Option<EncodingMatrix> {
    NAMED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| parse_initial_map(text).expect("bundled maps are valid"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub index: u32,
    /// Mean run length (the published header calls this column delta).
    pub ex: f64,
    pub n1: f64,
    /// Mean junction count (published header: lambda).
    pub ey: f64,
    pub n2: f64,
    pub difficulty: f64,
    pub test_count: u32,
    pub failure_count: u32,
    pub collision: u32,
    pub timeout: u32,
    pub deadlock: u32,
    pub success_rate: f64,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct TableError {
    pub line: usize,
    pub message: String,
}

pub fn parse_evaluation_table(text: &str) -> Result<Vec<TableRow>, TableError> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| TableError { line: i + 1, message };
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 12 {
            return Err(err(format!("expected 12 fields, found {}", f.len())));
        }
        let num = |j: usize| f[j].parse::<f64>().map_err(|e| err(format!("field {}: {e}", j + 1)));
        let int = |j: usize| f[j].parse::<u32>().map_err(|e| err(format!("field {}: {e}", j + 1)));
        rows.push(TableRow {
            index: int(0)?,
            ex: num(1)?,
            n1: num(2)?,
            ey: num(3)?,
            n2: num(4)?,
            difficulty: num(5)?,
            test_count: int(6)?,
            failure_count: int(7)?,
            collision: int(8)?,
            timeout: int(9)?,
            deadlock: int(10)?,
            success_rate: num(11)?,
        });
    }
    Ok(rows)
}

pub fn evaluation_table() -> Vec<TableRow> {
    parse_evaluation_table(EVALUATION_TABLE_CSV).expect("bundled table is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::BlockType;

    #[test]
    fn maps_have_stated_sizes() {
        let sizes: Vec<(usize, usize)> = NAMED
            .iter()
            .map(|(n, _)| {
                let m = bundled(n).unwrap();
                assert!(m.count(BlockType::Free) > 0);
                (m.width(), m.height())
            })
            .collect();
        assert_eq!(sizes, vec![(11, 7), (13, 13), (13, 13), (13, 13), (13, 13), (5, 5)]);
        assert!(bundled("nope").is_none());
    }

    #[test]
    fn table_rows_are_consistent() {
        let rows = evaluation_table();
        assert_eq!(rows.len(), 16);
        for r in &rows {
            assert_eq!(r.failure_count, r.collision + r.timeout + r.deadlock, "{}", r.index);
            let rate = 100.0 * (r.test_count - r.failure_count) as f64 / r.test_count as f64;
            assert_eq!(rate, r.success_rate, "{}", r.index);
        }
    }

    #[test]
    fn table_errors_carry_lines() {
        let e = parse_evaluation_table("h\n1,2\n").unwrap_err();
        assert_eq!(e.line, 2);
    }
}
