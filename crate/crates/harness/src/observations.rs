//! Reading observation streams from text.
//!
//! One observation per line. Blank lines and lines starting with `#` are
//! skipped. A line is either a single 1-based category index, `K`
//! comma-separated simplex coordinates, or with box input `K − 1`
//! coordinates in `[0, 1]` that are embedded into the simplex.

use std::io::BufRead;

use gambling_cs::reduce::{embed, BoxObservation};
use gambling_cs::ProbVector;

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Simplex,
    Box,
}

fn lines<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String)>> {
    reader
        .lines()
        .enumerate()
        .filter_map(|(i, line)| match line {
            Err(e) => Some(Err(e.into())),
            Ok(l) => {
                let l = l.trim().to_string();
                (!l.is_empty() && !l.starts_with('#')).then_some(Ok((i + 1, l)))
            }
        })
}

fn bad(line: usize, msg: impl Into<String>) -> HarnessError {
    HarnessError::Observation {
        line,
        msg: msg.into(),
    }
}

fn parse_category(line: usize, text: &str, k: usize) -> Result<usize> {
    let c: usize = text
        .parse()
        .map_err(|_| bad(line, format!("`{text}` is not a category")))?;
    if c == 0 || c > k {
        return Err(bad(line, format!("category {c} outside 1..={k}")));
    }
    Ok(c - 1)
}

/// Parse one observation.
pub fn parse_observation(line: usize, text: &str, k: usize, format: Format) -> Result<ProbVector> {
    let fields: Vec<&str> = text.split(',').map(str::trim).collect();
    if fields.len() == 1 && !fields[0].contains('.') {
        let c = parse_category(line, fields[0], k)?;
        return Ok(ProbVector::vertex(k, c)?);
    }
    let values = fields
        .iter()
        .map(|f| {
            f.parse::<f64>()
                .map_err(|_| bad(line, format!("`{f}` is not a number")))
        })
        .collect::<Result<Vec<_>>>()?;
    match format {
        Format::Simplex => {
            if values.len() != k {
                return Err(bad(
                    line,
                    format!("expected {k} coordinates, got {}", values.len()),
                ));
            }
            ProbVector::new(values).map_err(|e| bad(line, e.to_string()))
        }
        Format::Box => {
            if values.len() + 1 != k {
                return Err(bad(
                    line,
                    format!("expected {} box coordinates, got {}", k - 1, values.len()),
                ));
            }
            let b = BoxObservation::new(values).map_err(|e| bad(line, e.to_string()))?;
            Ok(embed(&b)?)
        }
    }
}

/// All observations of a stream.
pub fn read_observations<R: BufRead>(
    reader: R,
    k: usize,
    format: Format,
) -> Result<Vec<ProbVector>> {
    lines(reader)
        .map(|r| r.and_then(|(i, l)| parse_observation(i, &l, k, format)))
        .collect()
}

/// 0-based categories from a stream of 1-based category lines.
pub fn read_categories<R: BufRead>(reader: R, k: usize) -> Result<Vec<usize>> {
    lines(reader)
        .map(|r| r.and_then(|(i, l)| parse_category(i, &l, k)))
        .collect()
}
