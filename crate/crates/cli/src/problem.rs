//! Problem files: `K L`, then the `K` source probabilities, then `K` rows of
//! `L` distortions. Blank lines and `#` comments are ignored.

use std::fmt;
use std::path::Path;

use rdlab_core::{DistortionMeasure, SourceDistribution};

use crate::Failure;

#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub source: SourceDistribution,
    pub measure: DistortionMeasure,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    /// 1-based; 0 when the problem is with the file as a whole.
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

impl std::error::Error for ParseError {}

fn err(line: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        message: message.into(),
    }
}

fn numbers(line: usize, text: &str, expected: usize, what: &str) -> Result<Vec<f64>, ParseError> {
    let values = text
        .split_whitespace()
        .map(|tok| match tok.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            Ok(_) => Err(err(line, format!("{what}: '{tok}' is not finite"))),
            Err(_) => Err(err(line, format!("{what}: '{tok}' is not a number"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    if values.len() != expected {
        return Err(err(
            line,
            format!("{what}: expected {expected} values, found {}", values.len()),
        ));
    }
    Ok(values)
}

pub fn parse_problem(text: &str) -> Result<Problem, ParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, raw)| (i + 1, raw.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (no, header) = lines.next().ok_or_else(|| err(0, "empty problem file"))?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    let (k, l) = match dims.as_slice() {
        [k, l] => match (k.parse::<usize>(), l.parse::<usize>()) {
            (Ok(k), Ok(l)) if k > 0 && l > 0 => (k, l),
            _ => {
                return Err(err(
                    no,
                    format!("alphabet sizes must be positive integers, got '{header}'"),
                ))
            }
        },
        _ => return Err(err(no, format!("expected 'K L', got '{header}'"))),
    };

    let (no, text) = lines
        .next()
        .ok_or_else(|| err(0, "missing source probabilities"))?;
    let probs = numbers(no, text, k, "source")?;
    let source = SourceDistribution::new(probs).map_err(|e| err(no, e.to_string()))?;

    let mut rows = Vec::with_capacity(k);
    let mut last = no;
    for row in 0..k {
        let (no, text) = lines
            .next()
            .ok_or_else(|| err(0, format!("missing distortion row {} of {k}", row + 1)))?;
        let values = numbers(no, text, l, "distortion row")?;
        if let Some(v) = values.iter().find(|v| **v < 0.0) {
            return Err(err(no, format!("distortion {v} is negative")));
        }
        rows.push(values);
        last = no;
    }
    if let Some((no, extra)) = lines.next() {
        return Err(err(
            no,
            format!("unexpected content after row {k} (line {last}): '{extra}'"),
        ));
    }
    let measure = DistortionMeasure::new(rows).map_err(|e| err(0, e.to_string()))?;
    Ok(Problem { source, measure })
}

pub fn read_input(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::io(anyhow::anyhow!("cannot read {}: {e}", path.display())))
}

pub fn read_problem(path: &Path) -> Result<Problem, Failure> {
    parse_problem(&read_input(path)?)
        .map_err(|e| Failure::parse(anyhow::anyhow!("{}: {e}", path.display())))
}
