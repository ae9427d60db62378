//! Census hypotheses for a finite population sampled without replacement.
//!
//! Every integer census `n ∈ G(K, N)` carries its own running wealth. A
//! census is dropped for good once its wealth reaches `1/δ`, so the active
//! set only shrinks; with `N = 1000, K = 3` it starts near half a million
//! and collapses within a few dozen draws.

use std::fmt;
use std::str::FromStr;

use crate::confset::log_threshold;
use crate::error::{Error, Result};
use crate::numerics::LogFactorials;
use crate::simplex::{CountVector, GridIndex};
use crate::wealth::DirichletPrior;

/// Which without-replacement wealth drives the exclusions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WorMethod {
    /// KT wealth against the remaining-population mean.
    WorKt,
    /// Posterior-to-prior ratio.
    Ppr,
    /// Product of per-draw KT predictive bets against the remaining shares.
    PerRound,
}

impl WorMethod {
    pub fn name(self) -> &'static str {
        match self {
            WorMethod::WorKt => "wor-kt",
            WorMethod::Ppr => "ppr",
            WorMethod::PerRound => "perround",
        }
    }
}

impl fmt::Display for WorMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WorMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "wor-kt" | "kt" => Ok(WorMethod::WorKt),
            "ppr" => Ok(WorMethod::Ppr),
            "perround" => Ok(WorMethod::PerRound),
            other => Err(Error::InvalidInput(format!(
                "unknown without-replacement method `{other}`"
            ))),
        }
    }
}

/// Running state of one audit: draws so far and the surviving censuses.
#[derive(Debug, Clone)]
pub struct AuditState {
    population: usize,
    k: usize,
    method: WorMethod,
    delta: f64,
    threshold: f64,
    prior: DirichletPrior,
    drawn: CountVector,
    // active censuses, flattened K at a time
    censuses: Vec<u32>,
    running_max: Vec<f64>,
    // per-round wealth is accumulated, the others are recomputed
    current: Vec<f64>,
    log_fact: LogFactorials,
    ln: Vec<f64>,
}

impl AuditState {
    /// All `C(N + K − 1, K − 1)` censuses start active.
    pub fn new(population: usize, k: usize, method: WorMethod, delta: f64) -> Result<Self> {
        let threshold = log_threshold(delta)?;
        if k < 2 {
            return Err(Error::InvalidInput(format!(
                "need K >= 2 categories, got {k}"
            )));
        }
        if population < 2 {
            return Err(Error::InvalidInput(format!(
                "population must have at least 2 members, got {population}"
            )));
        }
        let index = GridIndex::new(k, population)?;
        let mut censuses = Vec::with_capacity(index.len() * k);
        index.for_each(|_, point| censuses.extend_from_slice(point));
        let n = index.len();
        Ok(AuditState {
            population,
            k,
            method,
            delta,
            threshold,
            prior: DirichletPrior::kt(k),
            drawn: CountVector::zeros(k),
            censuses,
            running_max: vec![0.0; n],
            current: if method == WorMethod::PerRound {
                vec![0.0; n]
            } else {
                Vec::new()
            },
            log_fact: LogFactorials::new(population),
            ln: (0..=population).map(|i| (i as f64).ln()).collect(),
        })
    }

    pub fn population(&self) -> usize {
        self.population
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn method(&self) -> WorMethod {
        self.method
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn drawn(&self) -> &CountVector {
        &self.drawn
    }

    pub fn time(&self) -> usize {
        self.drawn.total()
    }

    pub fn active_count(&self) -> usize {
        self.running_max.len()
    }

    /// Active censuses with their running-maximum log-wealth.
    pub fn active(&self) -> impl Iterator<Item = (&[u32], f64)> {
        self.censuses
            .chunks_exact(self.k)
            .zip(self.running_max.iter().copied())
    }

    pub fn is_active(&self, census: &[u32]) -> bool {
        census.len() == self.k && self.censuses.chunks_exact(self.k).any(|c| c == census)
    }

    /// Record a draw of `category` (0-based) and apply exclusions.
    ///
    /// Drawing the last member is refused: the guarantee covers
    /// `t ≤ N − 1` only. A draw that no active census can explain leaves the
    /// set empty rather than failing.
    pub fn absorb(&mut self, category: usize) -> Result<()> {
        if category >= self.k {
            return Err(Error::InvalidInput(format!(
                "category {} out of range for K = {}",
                category + 1,
                self.k
            )));
        }
        let t = self.drawn.total();
        if t + 1 >= self.population {
            return Err(Error::InvalidInput(format!(
                "cannot draw beyond t = N − 1 = {}",
                self.population - 1
            )));
        }
        let k = self.k;
        let prev = self.drawn.clone();
        self.drawn.increment(category);
        let drawn = self.drawn.as_slice();
        let t_new = t + 1;
        let rest = self.population - t_new;
        let log_q = self.prior.log_q(&self.drawn.to_f64());

        let mut values = Vec::with_capacity(self.running_max.len());
        match self.method {
            WorMethod::WorKt => {
                let ln_rest = self.ln[rest];
                for c in self.censuses.chunks_exact(k) {
                    let mut v = log_q;
                    for (&n, &d) in c.iter().zip(drawn) {
                        if d == 0 {
                            continue;
                        }
                        if n <= d {
                            v = f64::INFINITY;
                            break;
                        }
                        v -= d as f64 * (self.ln[(n - d) as usize] - ln_rest);
                    }
                    values.push(v);
                }
            }
            WorMethod::Ppr => {
                let base = log_q + self.log_fact.get(self.population) - self.log_fact.get(rest);
                for c in self.censuses.chunks_exact(k) {
                    let mut v = base;
                    for (&n, &d) in c.iter().zip(drawn) {
                        if n < d {
                            v = f64::INFINITY;
                            break;
                        }
                        v -= self.log_fact.get(n as usize) - self.log_fact.get((n - d) as usize);
                    }
                    values.push(v);
                }
            }
            WorMethod::PerRound => {
                let bet = self.prior.predictive(&prev.to_f64(), category).ln();
                let ln_left = self.ln[self.population - t];
                let seen = prev.get(category);
                for (c, cur) in self.censuses.chunks_exact(k).zip(self.current.iter_mut()) {
                    let n = c[category];
                    *cur = if n <= seen {
                        f64::INFINITY
                    } else {
                        *cur + bet - (self.ln[(n - seen) as usize] - ln_left)
                    };
                    values.push(*cur);
                }
            }
        }

        for (rm, v) in self.running_max.iter_mut().zip(values) {
            if v > *rm {
                *rm = v;
            }
        }
        self.compact();
        Ok(())
    }

    fn compact(&mut self) {
        let k = self.k;
        let mut w = 0;
        for r in 0..self.running_max.len() {
            if self.running_max[r] < self.threshold {
                if w != r {
                    self.running_max[w] = self.running_max[r];
                    self.censuses.copy_within(r * k..(r + 1) * k, w * k);
                    if !self.current.is_empty() {
                        self.current[w] = self.current[r];
                    }
                }
                w += 1;
            }
        }
        self.running_max.truncate(w);
        self.censuses.truncate(w * k);
        if !self.current.is_empty() {
            self.current.truncate(w);
        }
    }

    /// Per-category `[min, max]` of the count over active censuses.
    pub fn category_count_bounds(&self) -> Result<Vec<(u32, u32)>> {
        if self.running_max.is_empty() {
            return Err(Error::EmptySet(format!(
                "no census survives after {} draws (counts {}); either the truth was excluded or the draws are inconsistent with N = {}",
                self.drawn.total(),
                self.drawn,
                self.population
            )));
        }
        let mut bounds = vec![(u32::MAX, 0u32); self.k];
        for c in self.censuses.chunks_exact(self.k) {
            for (b, &n) in bounds.iter_mut().zip(c) {
                b.0 = b.0.min(n);
                b.1 = b.1.max(n);
            }
        }
        Ok(bounds)
    }

    /// Whether the count intervals are pairwise disjoint, which fixes the
    /// full ranking of the categories. False on an empty set.
    pub fn rank_decided(&self) -> bool {
        match self.category_count_bounds() {
            Ok(b) => intervals_disjoint(&b),
            Err(_) => false,
        }
    }
}

/// Pairwise disjointness of closed integer intervals.
pub fn intervals_disjoint(bounds: &[(u32, u32)]) -> bool {
    for i in 0..bounds.len() {
        for j in i + 1..bounds.len() {
            let (a, b) = (bounds[i], bounds[j]);
            if !(a.1 < b.0 || b.1 < a.0) {
                return false;
            }
        }
    }
    true
}

/// Replay draws (0-based categories) until the ranking is decided.
///
/// Returns the first deciding `t`, or `N` if the stream runs out or reaches
/// `N − 1` draws undecided.
pub fn stopping_time(
    population: usize,
    k: usize,
    method: WorMethod,
    delta: f64,
    draws: impl IntoIterator<Item = usize>,
) -> Result<usize> {
    let mut state = AuditState::new(population, k, method, delta)?;
    if state.rank_decided() {
        return Ok(0);
    }
    for c in draws.into_iter().take(population - 1) {
        state.absorb(c)?;
        if state.rank_decided() {
            return Ok(state.time());
        }
    }
    Ok(population)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn actives(s: &AuditState) -> Vec<Vec<u32>> {
        let mut v: Vec<Vec<u32>> = s.active().map(|(c, _)| c.to_vec()).collect();
        v.sort();
        v
    }

    #[test]
    fn no_draws_keeps_every_census() {
        let s = AuditState::new(10, 3, WorMethod::Ppr, 0.05).unwrap();
        assert_eq!(s.active_count(), 66);
        let s = AuditState::new(3, 2, WorMethod::WorKt, 0.05).unwrap();
        assert_eq!(s.category_count_bounds().unwrap(), vec![(0, 3), (0, 3)]);
    }

    #[test]
    fn two_member_population_after_one_draw() {
        let mut ppr = AuditState::new(2, 2, WorMethod::Ppr, 0.05).unwrap();
        ppr.absorb(0).unwrap();
        assert_eq!(actives(&ppr), vec![vec![1, 1], vec![2, 0]]);
        let w11 = ppr.active().find(|(c, _)| *c == [1, 1]).unwrap().1;
        assert!(w11.abs() < 1e-12);
        assert_eq!(ppr.category_count_bounds().unwrap()[0], (1, 2));

        let mut kt = AuditState::new(2, 2, WorMethod::WorKt, 0.05).unwrap();
        kt.absorb(0).unwrap();
        assert_eq!(actives(&kt), vec![vec![2, 0]]);

        let mut pr = AuditState::new(2, 2, WorMethod::PerRound, 0.05).unwrap();
        pr.absorb(0).unwrap();
        assert_eq!(actives(&pr), actives(&ppr));
        assert!(pr.absorb(0).is_err());
    }

    #[test]
    fn draws_no_census_explains_empty_the_set() {
        // (2,1) and (3,0) survive the first draw; drawing the second
        // category then exhausts both under the remaining-mean kernel
        let mut s = AuditState::new(3, 2, WorMethod::WorKt, 0.9).unwrap();
        s.absorb(0).unwrap();
        assert_eq!(actives(&s), vec![vec![2, 1], vec![3, 0]]);
        s.absorb(1).unwrap();
        assert_eq!(s.active_count(), 0);
        assert!(matches!(s.category_count_bounds(), Err(Error::EmptySet(_))));
        assert!(!s.rank_decided());
        assert!(s.absorb(5).is_err());
    }

    #[test]
    fn disjointness_rule() {
        assert!(!intervals_disjoint(&[(5, 7), (6, 9)]));
        assert!(intervals_disjoint(&[(5, 7), (8, 9)]));
        assert!(intervals_disjoint(&[(3, 3), (1, 1), (0, 0)]));
    }

    #[test]
    fn method_names_round_trip() {
        for m in [WorMethod::WorKt, WorMethod::Ppr, WorMethod::PerRound] {
            assert_eq!(m.name().parse::<WorMethod>().unwrap(), m);
        }
        assert!("bogus".parse::<WorMethod>().is_err());
    }
}
