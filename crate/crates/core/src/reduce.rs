//! Observations in the unit box `[0, 1]^{K−1}` mapped onto the simplex
//! `Δ^{K−1}` by `y ↦ (y / (K − 1), 1 − Σ y / (K − 1))`.
//!
//! The map is affine and injective, so the mean of the embedded stream is
//! the embedding of the mean, and a box candidate is in the confidence set
//! exactly when its image is.

use std::str::FromStr;

use crate::confset::{log_threshold, WealthProcess};
use crate::error::{check_dim, Error, Result};
use crate::simplex::{parse_list, ProbVector, SIMPLEX_TOLERANCE};

/// A point of `[0, 1]^{K−1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxObservation {
    coords: Vec<f64>,
}

impl BoxObservation {
    /// Coordinates within `1e-9` of the box are clamped into it.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidInput(
                "box observation needs at least one coordinate".into(),
            ));
        }
        let mut coords = coords;
        for (j, x) in coords.iter_mut().enumerate() {
            if !x.is_finite() || *x < -SIMPLEX_TOLERANCE || *x > 1.0 + SIMPLEX_TOLERANCE {
                return Err(Error::Domain(format!(
                    "box coordinate {} = {x} outside [0, 1]",
                    j + 1
                )));
            }
            *x = x.clamp(0.0, 1.0);
        }
        Ok(BoxObservation { coords })
    }

    /// Box dimension `K − 1`.
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }
}

impl FromStr for BoxObservation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BoxObservation::new(parse_list(s)?)
    }
}

/// Simplex coordinates of a box point, without validation.
fn embed_coords(y: &[f64]) -> Vec<f64> {
    let d = y.len() as f64;
    let mut out: Vec<f64> = y.iter().map(|&v| v / d).collect();
    let last = 1.0 - y.iter().sum::<f64>() / d;
    out.push(last.max(0.0));
    out
}

/// The probability-vector representation, of dimension `K`.
pub fn embed(y: &BoxObservation) -> Result<ProbVector> {
    ProbVector::new(embed_coords(&y.coords))
}

/// Inverse of [`embed`] on its image: drop the last coordinate and rescale.
pub fn project(m: &ProbVector) -> Result<BoxObservation> {
    let d = (m.dim() - 1) as f64;
    BoxObservation::new(m.as_slice()[..m.dim() - 1].iter().map(|&x| x * d).collect())
}

/// Log-wealth of the process at the embedded box candidate.
pub fn box_log_wealth<P: WealthProcess + ?Sized>(
    process: &P,
    m_box: &BoxObservation,
) -> Result<f64> {
    check_dim(process.dim(), m_box.dim() + 1)?;
    Ok(process.log_wealth_at(&embed_coords(&m_box.coords)))
}

/// Tracks the running-maximum log-wealth of a fixed list of box candidates.
#[derive(Debug, Clone)]
pub struct BoxConfidenceSet {
    candidates: Vec<BoxObservation>,
    embedded: Vec<Vec<f64>>,
    running_max: Vec<f64>,
    threshold: f64,
}

impl BoxConfidenceSet {
    pub fn new(candidates: Vec<BoxObservation>, delta: f64) -> Result<Self> {
        let threshold = log_threshold(delta)?;
        if let Some(first) = candidates.first() {
            for c in &candidates {
                check_dim(first.dim(), c.dim())?;
            }
        }
        let embedded = candidates.iter().map(|c| embed_coords(&c.coords)).collect();
        let n = candidates.len();
        Ok(BoxConfidenceSet {
            candidates,
            embedded,
            running_max: vec![0.0; n],
            threshold,
        })
    }

    pub fn candidates(&self) -> &[BoxObservation] {
        &self.candidates
    }

    pub fn refresh<P: WealthProcess + ?Sized>(&mut self, process: &P) -> Result<()> {
        for (rm, m) in self.running_max.iter_mut().zip(&self.embedded) {
            check_dim(process.dim(), m.len())?;
            let v = process.log_wealth_at(m);
            if v > *rm {
                *rm = v;
            }
        }
        Ok(())
    }

    pub fn contains(&self, i: usize) -> bool {
        self.running_max[i] < self.threshold
    }

    pub fn active_count(&self) -> usize {
        (0..self.running_max.len())
            .filter(|&i| self.contains(i))
            .count()
    }
}

/// Membership of a box candidate in a simplex-level set whose candidate
/// list includes the embedded point. `None` when it is not among them.
pub fn box_membership(m_box: &BoxObservation, set: &crate::confset::ConfidenceSet) -> Option<bool> {
    let target = embed_coords(&m_box.coords);
    if target.len() != set.dim() {
        return None;
    }
    (0..set.len())
        .find(|&i| {
            set.candidate(i)
                .iter()
                .zip(&target)
                .all(|(a, b)| (a - b).abs() <= 1e-12)
        })
        .map(|i| set.is_active(i))
}
