//! Garage-set files: the matrices produced by a training run.
//!
//! ```text
//! # episode=<n> usable=<0|1> seed=<s>
//! <digit grid>
//!
//! # episode=...
//! ```

use std::fmt::Write as _;

use thiserror::Error;

use crate::grid::{EncodingMatrix, GridError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GarageSample {
    pub episode: usize,
    pub seed: u64,
    pub usable: bool,
    pub matrix: EncodingMatrix,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GarageSetError {
    #[error("line {line}: malformed header {text:?}")]
    Header { line: usize, text: String },
    #[error("line {line}: record has no matrix")]
    MissingMatrix { line: usize },
    #[error("line {line}: {source}")]
    Matrix {
        line: usize,
        #[source]
        source: GridError,
    },
    #[error("line {line}: expected a record header")]
    Stray { line: usize },
}

pub fn write_garage_set(samples: &[GarageSample]) -> String {
    let mut out = String::new();
    for (i, s) in samples.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "# episode={} usable={} seed={}\n{}",
            s.episode,
            u8::from(s.usable),
            s.seed,
            s.matrix
        );
    }
    out
}

fn parse_header(text: &str, line: usize) -> Result<(usize, bool, u64), GarageSetError> {
    let bad = || GarageSetError::Header {
        line,
        text: text.to_string(),
    };
    let body = text.strip_prefix('#').ok_or_else(bad)?;
    let (mut episode, mut usable, mut seed) = (None, None, None);
    for field in body.split_whitespace() {
        let (k, v) = field.split_once('=').ok_or_else(bad)?;
        match k {
            "episode" => episode = Some(v.parse().map_err(|_| bad())?),
            "usable" => {
                usable = Some(match v {
                    "0" => false,
                    "1" => true,
                    _ => return Err(bad()),
                })
            }
            "seed" => seed = Some(v.parse().map_err(|_| bad())?),
            _ => return Err(bad()),
        }
    }
    match (episode, usable, seed) {
        (Some(e), Some(u), Some(s)) => Ok((e, u, s)),
        _ => Err(bad()),
    }
}

pub fn parse_garage_set(text: &str) -> Result<Vec<GarageSample>, GarageSetError> {
    let lines: Vec<&str> = text.lines().map(str::trim_end).collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        if lines[i].is_empty() {
            i += 1;
            continue;
        }
        if !lines[i].starts_with('#') {
            return Err(GarageSetError::Stray { line: i + 1 });
        }
        let (episode, usable, seed) = parse_header(lines[i], i + 1)?;
        let header_line = i + 1;
        i += 1;
        let start = i;
        while i < lines.len() && !lines[i].is_empty() && !lines[i].starts_with('#') {
            i += 1;
        }
        if start == i {
            return Err(GarageSetError::MissingMatrix { line: header_line });
        }
        let matrix = lines[start..i]
            .join("\n")
            .parse::<EncodingMatrix>()
            .map_err(|source| {
                let line = match &source {
                    GridError::NonRectangular { line, .. } | GridError::InvalidCode { line, .. } => {
                        start + line
                    }
                    _ => start + 1,
                };
                GarageSetError::Matrix { line, source }
            })?;
        out.push(GarageSample {
            episode,
            seed,
            usable,
            matrix,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(episode: usize, usable: bool, text: &str) -> GarageSample {
        GarageSample {
            episode,
            seed: 42 + episode as u64,
            usable,
            matrix: text.parse().unwrap(),
        }
    }

    #[test]
    fn round_trip() {
        let set = vec![sample(0, false, "708\n000"), sample(1, true, "718\n454")];
        let text = write_garage_set(&set);
        assert!(text.starts_with("# episode=0 usable=0 seed=42\n708\n000\n\n# episode=1"));
        assert_eq!(parse_garage_set(&text).unwrap(), set);
        assert!(parse_garage_set("").unwrap().is_empty());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_garage_set("# episode=0 usable=1 seed=1\n718\n\n# episode=1 usable=1 seed=2\n7x8\n")
            .unwrap_err();
        assert!(matches!(err, GarageSetError::Matrix { line: 5, .. }), "{err:?}");
        let err = parse_garage_set("# episode=0 usable=2 seed=1\n718\n").unwrap_err();
        assert!(matches!(err, GarageSetError::Header { line: 1, .. }));
        let err = parse_garage_set("718\n").unwrap_err();
        assert_eq!(err, GarageSetError::Stray { line: 1 });
        let err = parse_garage_set("# episode=0 usable=1 seed=1\n\n").unwrap_err();
        assert_eq!(err, GarageSetError::MissingMatrix { line: 1 });
    }
}
