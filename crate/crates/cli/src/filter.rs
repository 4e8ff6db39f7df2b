//! Selection expressions such as `lambda in [0.6,1.0] and delta in [0.5,0.9]`.
//!
//! Each clause bounds one of `lambda` or `delta` by a closed interval; clauses
//! are joined with `and`. A missing clause leaves that score unconstrained.

use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Filter {
    pub lambda: Option<(f64, f64)>,
    pub delta: Option<(f64, f64)>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("bad filter ({0}); expected e.g. `lambda in [0.6,1.0] and delta in [0.5,0.9]`")]
pub struct FilterError(pub String);

impl Filter {
    pub fn matches(&self, lambda: f64, delta: f64) -> bool {
        let inside = |b: Option<(f64, f64)>, v: f64| b.is_none_or(|(lo, hi)| lo <= v && v <= hi);
        inside(self.lambda, lambda) && inside(self.delta, delta)
    }
}

fn interval(text: &str) -> Result<(f64, f64), FilterError> {
    let bad = || FilterError(format!("interval {text:?}"));
    let inner = text
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .ok_or_else(bad)?;
    let (a, b) = inner.split_once(',').ok_or_else(bad)?;
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    if !(a <= b) {
        return Err(FilterError(format!("empty interval {text:?}")));
    }
    Ok((a, b))
}

impl FromStr for Filter {
    type Err = FilterError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut filter = Filter {
            lambda: None,
            delta: None,
        };
        let words: Vec<&str> = s.split_whitespace().collect();
        let clauses: Vec<&[&str]> = words.split(|w| w.eq_ignore_ascii_case("and")).collect();
        for clause in clauses {
            let [name, op, rest @ ..] = clause else {
                return Err(FilterError(format!("clause {:?}", clause.join(" "))));
            };
            if !op.eq_ignore_ascii_case("in") || rest.is_empty() {
                return Err(FilterError(format!("clause {:?}", clause.join(" "))));
            }
            let bounds = interval(&rest.concat())?;
            let slot = match name.to_ascii_lowercase().as_str() {
                "lambda" => &mut filter.lambda,
                "delta" => &mut filter.delta,
                other => return Err(FilterError(format!("unknown score {other:?}"))),
            };
            if slot.replace(bounds).is_some() {
                return Err(FilterError(format!("{name} constrained twice")));
            }
        }
        Ok(filter)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_both_clauses_in_any_order() {
        let f: Filter = "lambda in [0.6,1.0] and delta in [0.5, 0.9]".parse().unwrap();
        assert_eq!(f.lambda, Some((0.6, 1.0)));
        assert_eq!(f.delta, Some((0.5, 0.9)));
        let g: Filter = "delta in [0.5,0.9] AND lambda in [0.6,1]".parse().unwrap();
        assert_eq!(f, g);
        let l: Filter = "lambda in [ 0.2 , 0.4 ]".parse().unwrap();
        assert_eq!((l.lambda, l.delta), (Some((0.2, 0.4)), None));
    }

    #[test]
    fn bounds_are_closed() {
        let f: Filter = "lambda in [0.6,1.0]".parse().unwrap();
        assert!(f.matches(0.6, 0.0) && f.matches(1.0, 5.0));
        assert!(!f.matches(0.5999, 0.7));
        let both: Filter = "lambda in [0,1] and delta in [0.5,0.9]".parse().unwrap();
        assert!(!both.matches(0.5, 0.95));
    }

    #[test]
    fn rejects_malformed() {
        for s in [
            "",
            "lambda [0,1]",
            "lambda in 0,1",
            "lambda in [1,0]",
            "lambda in [0,1] and",
            "gamma in [0,1]",
            "lambda in [0,1] and lambda in [0,2]",
            "lambda in [a,1]",
        ] {
            assert!(s.parse::<Filter>().is_err(), "{s:?}");
        }
    }
}
