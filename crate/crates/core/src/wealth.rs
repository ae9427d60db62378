//! Gambling wealth kernels, all evaluated in log space.
//!
//! A candidate mean `m` fixes the odds `1/m_j` of a `K`-horse race. Each
//! kernel returns the log-wealth of a particular mixture strategy against
//! those odds:
//!
//! | kernel | data | strategy |
//! |---|---|---|
//! | [`kt_log_wealth`] | categorical counts | Dirichlet mixture of constant bets |
//! | [`constant_bettor_log_wealth`] | simplex points | one constant bet `b` |
//! | [`up_log_wealth`] | simplex points | Dirichlet mixture of constant bets (universal portfolio) |
//! | [`wor_kt_log_wealth`] | draws without replacement | KT with the final remaining-mean odds |
//! | [`perround_wor_log_wealth`] | draws without replacement | KT with the odds refreshed every round |
//! | [`ppr_log_wealth`] | draws without replacement | posterior-to-prior ratio |
//!
//! `+inf` means the candidate is excluded with certainty (a bet paid off
//! against zero odds), `-inf` means the gambler went broke.

use crate::error::{check_dim, Error, Result};
use crate::numerics::{log_gamma_unchecked, log_multi_beta_unchecked, LogValue};
use crate::simplex::{CountVector, GridIndex, ProbVector};

/// Dirichlet mixing prior over constant bets.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletPrior {
    alpha: Vec<f64>,
    log_beta: f64,
}

impl DirichletPrior {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::InvalidInput("Dirichlet prior with K = 0".into()));
        }
        if let Some(bad) = alpha.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return Err(Error::Domain(format!(
                "Dirichlet parameters must be positive, got {bad}"
            )));
        }
        let log_beta = log_multi_beta_unchecked(&alpha);
        Ok(DirichletPrior { alpha, log_beta })
    }

    /// The Krichevsky–Trofimov (Jeffreys) prior `α = (1/2, …, 1/2)`.
    pub fn kt(k: usize) -> Self {
        Self::symmetric(k, 0.5).expect("1/2 is a valid concentration")
    }

    pub fn symmetric(k: usize, a: f64) -> Result<Self> {
        Self::new(vec![a; k])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    #[inline]
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    #[inline]
    pub fn log_beta(&self) -> f64 {
        self.log_beta
    }

    pub fn total(&self) -> f64 {
        self.alpha.iter().sum()
    }

    /// `ln q^KT(x) = ln B(x + α) − ln B(α)` without validation.
    #[inline]
    pub(crate) fn log_q(&self, x: &[f64]) -> f64 {
        let mut total = 0.0;
        let mut acc = 0.0;
        for (&xi, &ai) in x.iter().zip(&self.alpha) {
            total += xi + ai;
            acc += log_gamma_unchecked(xi + ai);
        }
        acc - log_gamma_unchecked(total) - self.log_beta
    }

    /// KT predictive probability of category `j` after observing `counts`.
    pub fn predictive(&self, counts: &[f64], j: usize) -> f64 {
        let n: f64 = counts.iter().sum();
        (counts[j] + self.alpha[j]) / (n + self.total())
    }
}

/// `ln q^KT(x) = ln [B(x + α) / B(α)]`: the KT mixture of `b^x`.
pub fn q_kt(x: &[f64], prior: &DirichletPrior) -> Result<LogValue> {
    check_dim(prior.dim(), x.len())?;
    if let Some(bad) = x.iter().zip(prior.alpha()).find(|(xi, ai)| {
        let s = **xi + **ai;
        s.is_nan() || s <= 0.0
    }) {
        return Err(Error::Domain(format!(
            "x + α must be positive, got x = {}",
            bad.0
        )));
    }
    LogValue::new(prior.log_q(x))
}

/// `−Σ_j k_j ln m_j` with `0 · ln 0 = 0` and `k_j > 0, m_j = 0 ↦ +inf`.
#[inline]
fn neg_log_odds_power(counts: &[f64], m: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&k, &mj) in counts.iter().zip(m) {
        if k == 0.0 {
            continue;
        }
        if mj <= 0.0 {
            return f64::INFINITY;
        }
        acc -= k * mj.ln();
    }
    acc
}

/// KT mixture wealth `m^{−k} B(k + α) / B(α)` against odds `1/m`.
///
/// `counts` may be fractional: with `counts = Σ_i y_i` for simplex-valued
/// `y_i` the same expression lower-bounds the universal-portfolio wealth, so
/// it still defines a valid (conservative) confidence sequence.
pub fn kt_log_wealth(counts: &[f64], m: &ProbVector, prior: &DirichletPrior) -> Result<LogValue> {
    check_dim(prior.dim(), counts.len())?;
    check_dim(counts.len(), m.dim())?;
    if let Some(bad) = counts.iter().find(|c| c.is_nan() || **c < 0.0) {
        return Err(Error::Domain(format!(
            "counts must be nonnegative, got {bad}"
        )));
    }
    let power = neg_log_odds_power(counts, m.as_slice());
    if power == f64::INFINITY {
        return Ok(LogValue::INFINITY);
    }
    LogValue::new(power + prior.log_q(counts))
}

/// Wealth of the constant bettor `b` against odds `1/m`:
/// `Σ_i ln Σ_j b_j y_ij / m_j`.
///
/// Coordinates with `m_j = 0` are admissible only while every `y_ij = 0`.
pub fn constant_bettor_log_wealth(
    obs: &[ProbVector],
    b: &ProbVector,
    m: &ProbVector,
) -> Result<LogValue> {
    let k = m.dim();
    check_dim(k, b.dim())?;
    let mut acc = 0.0;
    for y in obs {
        check_dim(k, y.dim())?;
        let mut gain = 0.0;
        for j in 0..k {
            let yj = y.as_slice()[j];
            if yj == 0.0 {
                continue;
            }
            let mj = m.as_slice()[j];
            if mj == 0.0 {
                return Err(Error::InvalidInput(format!(
                    "candidate coordinate {j} is zero but an observation has mass {yj} there"
                )));
            }
            gain += b.as_slice()[j] * yj / mj;
        }
        if gain == 0.0 {
            return Ok(LogValue::ZERO);
        }
        acc += gain.ln();
    }
    LogValue::new(acc)
}

/// Scaled bet `λ(m) = b / (m (1 − m)) − 1 / (1 − m)` of the two-horse race,
/// under which the gain `b y / m + (1 − b)(1 − y)/(1 − m)` equals
/// `1 + λ(m)(y − m)`.
pub fn scaled_bet(b: f64, m: f64) -> f64 {
    b / (m * (1.0 - m)) - 1.0 / (1.0 - m)
}

/// Universal-portfolio statistics `ln y^t[k]` for every `k ∈ G(K, t)`.
///
/// `y^t[k]` is the total weight of paths through the observations whose
/// horse-count vector is `k`; it is maintained by the recursion
/// `y^t[k] = Σ_j y_tj · y^{t−1}[k − e_j]`.
#[derive(Debug, Clone)]
pub struct UpState {
    k: usize,
    t: usize,
    prior: DirichletPrior,
    table: Vec<f64>,
    cap: usize,
}

impl UpState {
    pub fn new(prior: DirichletPrior) -> Self {
        Self::with_cap(prior, crate::simplex::DEFAULT_GRID_CAP)
    }

    /// Like [`UpState::new`] with a custom cap on the table size.
    pub fn with_cap(prior: DirichletPrior, cap: usize) -> Self {
        UpState {
            k: prior.dim(),
            t: 0,
            prior,
            table: vec![0.0],
            cap,
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn time(&self) -> usize {
        self.t
    }

    pub fn prior(&self) -> &DirichletPrior {
        &self.prior
    }

    /// `ln y^t[k]` in the rank order of `G(K, t)`.
    pub fn table(&self) -> &[f64] {
        &self.table
    }

    /// `ln y^t[k]` for one count vector.
    pub fn entry(&self, counts: &CountVector) -> Result<f64> {
        let index = GridIndex::with_cap(self.k, self.t, self.cap)?;
        Ok(self.table[index.rank(counts.as_slice())?])
    }

    /// Return the state after one more observation.
    pub fn absorb(&self, y: &ProbVector) -> Result<UpState> {
        let mut next = self.clone();
        next.absorb_in_place(y)?;
        Ok(next)
    }

    /// Advance the recursion by one observation, `O(|G(K, t+1)| · K)`.
    pub fn absorb_in_place(&mut self, y: &ProbVector) -> Result<()> {
        check_dim(self.k, y.dim())?;
        let k = self.k;
        let t = self.t;
        let index = GridIndex::with_cap(k, t + 1, self.cap)?;
        let log_y: Vec<f64> = y.as_slice().iter().map(|v| v.ln()).collect();
        let old = &self.table;
        let mut next = Vec::with_capacity(index.len());
        let mut free = vec![0u32; k.saturating_sub(1)];
        let mut terms = vec![0.0f64; k];
        index.for_each(|_, point| {
            let mut n = 0;
            for j in 0..k {
                if point[j] == 0 || log_y[j] == f64::NEG_INFINITY {
                    continue;
                }
                free.copy_from_slice(&point[..k - 1]);
                if j + 1 < k {
                    free[j] -= 1;
                }
                let prev = old[index.rank_free(&free, t)];
                if prev == f64::NEG_INFINITY {
                    continue;
                }
                terms[n] = log_y[j] + prev;
                n += 1;
            }
            next.push(small_log_sum_exp(&terms[..n]));
        });
        self.table = next;
        self.t = t + 1;
        Ok(())
    }

    /// `ln Σ_k y^t[k]`; zero whenever every observation lies on the simplex.
    pub fn log_total_mass(&self) -> f64 {
        crate::numerics::log_sum_exp(&self.table)
    }

    /// Precompute the `m`-independent part of the wealth for fast repeated
    /// evaluation.
    pub fn evaluator(&self) -> UpEvaluator {
        UpEvaluator::new(self)
    }
}

#[inline]
fn small_log_sum_exp(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => f64::NEG_INFINITY,
        1 => xs[0],
        _ => {
            let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            max + xs.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
        }
    }
}

/// Terms below `max − LSE_CUTOFF` are dropped from a log-sum-exp; each
/// contributes less than `e^{-60}` relative to the largest term.
const LSE_CUTOFF: f64 = 60.0;

/// `ln y^t[k] + ln q^KT(k)` for every `k`, ready for evaluation at any `m`.
///
/// The UP wealth at `m` is `Σ_k exp(coeff[k] − Σ_j k_j ln m_j)`. The
/// lattice is walked row by row: within a row only `k_1` (and with it `k_K`)
/// changes, so the exponent is affine in the position and the row sum is a
/// polynomial in `m_K / m_1`, evaluated by Horner's rule on coefficients
/// stored relative to the row maximum.
#[derive(Debug, Clone)]
pub struct UpEvaluator {
    k: usize,
    t: usize,
    coeff: Vec<f64>,
    /// `exp(coeff − row max)`, row by row.
    scaled: Vec<f64>,
    row_max: Vec<f64>,
    index: GridIndex,
}

/// Horner's rule is used while `|ln r| · row length` stays below this, so
/// neither `r^i` nor the flushed-to-zero coefficients can matter.
const HORNER_SPAN: f64 = 400.0;

impl UpEvaluator {
    fn new(state: &UpState) -> Self {
        let k = state.k;
        let t = state.t;
        let prior = &state.prior;
        // ln Γ(c + α_j) for c = 0..=t, per coordinate
        let lg: Vec<Vec<f64>> = prior
            .alpha()
            .iter()
            .map(|&a| (0..=t).map(|c| log_gamma_unchecked(c as f64 + a)).collect())
            .collect();
        let offset = -log_gamma_unchecked(t as f64 + prior.total()) - prior.log_beta();
        let index = GridIndex::with_cap(k, t, usize::MAX).expect("grid already materialized");
        let mut coeff = Vec::with_capacity(index.len());
        index.for_each(|r, p| {
            let entry = state.table[r];
            if entry == f64::NEG_INFINITY {
                coeff.push(f64::NEG_INFINITY);
                return;
            }
            let mut q = offset;
            for (j, &c) in p.iter().enumerate() {
                q += lg[j][c as usize];
            }
            coeff.push(entry + q);
        });
        let mut scaled = vec![0.0; coeff.len()];
        let mut row_max = Vec::new();
        if k >= 2 {
            let zero = vec![0.0; k - 1];
            let mut cursor = 0;
            walk_rows(&zero, k - 1, t, 0.0, &mut cursor, &mut |start, len, _| {
                let row = &coeff[start..start + len];
                let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if max > f64::NEG_INFINITY {
                    for (s, &c) in scaled[start..start + len].iter_mut().zip(row) {
                        *s = (c - max).exp();
                    }
                }
                row_max.push(max);
            });
        }
        UpEvaluator {
            k,
            t,
            coeff,
            scaled,
            row_max,
            index,
        }
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn time(&self) -> usize {
        self.t
    }

    /// Log-wealth at `m`, which must have `K` nonnegative coordinates.
    pub fn log_wealth(&self, m: &[f64]) -> f64 {
        debug_assert_eq!(m.len(), self.k);
        if m.iter().any(|&x| x <= 0.0) {
            return self.log_wealth_on_boundary(m);
        }
        let k = self.k;
        if k == 1 {
            return self.coeff[0] - self.t as f64 * m[0].ln();
        }
        // exponent = coeff[r] + t·w_K + Σ_{j<K} k_j (w_j − w_K), w = −ln m
        let w_last = -m[k - 1].ln();
        let slope: Vec<f64> = m[..k - 1].iter().map(|&x| -x.ln() - w_last).collect();
        let base = self.t as f64 * w_last;
        let v = slope[0];
        let ratio = v.exp();

        let mut rows = Vec::with_capacity(self.row_max.len());
        let mut row = 0;
        let mut cursor = 0;
        walk_rows(
            &slope,
            k - 1,
            self.t,
            base,
            &mut cursor,
            &mut |start, len, a| {
                let max = self.row_max[row];
                row += 1;
                if max == f64::NEG_INFINITY {
                    return;
                }
                if v.abs() * len as f64 <= HORNER_SPAN {
                    let s = self.scaled[start..start + len]
                        .iter()
                        .rev()
                        .fold(0.0f64, |acc, &c| acc.mul_add(ratio, c));
                    rows.push(max + a + s.ln());
                } else {
                    rows.push(row_log_sum_exp(&self.coeff[start..start + len], a, v));
                }
            },
        );
        crate::numerics::log_sum_exp(&rows)
    }

    fn log_wealth_on_boundary(&self, m: &[f64]) -> f64 {
        let mut terms = Vec::new();
        let mut infinite = false;
        self.index.for_each(|r, p| {
            if infinite || self.coeff[r] == f64::NEG_INFINITY {
                return;
            }
            let mut acc = self.coeff[r];
            for (&c, &mj) in p.iter().zip(m) {
                if c == 0 {
                    continue;
                }
                if mj <= 0.0 {
                    infinite = true;
                    return;
                }
                acc -= c as f64 * mj.ln();
            }
            terms.push(acc);
        });
        if infinite {
            f64::INFINITY
        } else {
            crate::numerics::log_sum_exp(&terms)
        }
    }
}

/// `ln Σ_i exp(coeff[i] + a + i v)` term by term.
fn row_log_sum_exp(coeff: &[f64], a: f64, v: f64) -> f64 {
    let mut max = f64::NEG_INFINITY;
    let mut x = a;
    for &c in coeff {
        max = max.max(c + x);
        x += v;
    }
    if max.is_infinite() {
        return max;
    }
    let mut sum = 0.0;
    let mut x = a - max;
    for &c in coeff {
        let e = c + x;
        if e > -LSE_CUTOFF {
            sum += e.exp();
        }
        x += v;
    }
    max + sum.ln()
}

/// Recursive row walk over the free coordinates `1..=depth`; `budget` is the
/// sum still available to them. Each row of varying `k_1` is handed over as
/// its start offset, its length and the exponent at `k_1 = 0`.
fn walk_rows(
    slope: &[f64],
    depth: usize,
    budget: usize,
    acc: f64,
    cursor: &mut usize,
    f: &mut impl FnMut(usize, usize, f64),
) {
    if depth == 1 {
        let len = budget + 1;
        f(*cursor, len, acc);
        *cursor += len;
        return;
    }
    let v = slope[depth - 1];
    for c in 0..=budget {
        walk_rows(slope, depth - 1, budget - c, acc + c as f64 * v, cursor, f);
    }
}

/// UP wealth `Σ_k y^t[k] m^{−k} B(k + α)/B(α)` at a single candidate.
pub fn up_log_wealth(state: &UpState, m: &ProbVector) -> Result<LogValue> {
    check_dim(state.dim(), m.dim())?;
    LogValue::new(state.evaluator().log_wealth(m.as_slice()))
}

/// Mean of the population still to be drawn if the full population mean is
/// `m`: `(N m − drawn) / (N − t)`. Coordinates may be negative.
pub fn wor_mean_transform(
    m: &ProbVector,
    drawn: &CountVector,
    population: usize,
) -> Result<Vec<f64>> {
    check_dim(m.dim(), drawn.dim())?;
    let t = drawn.total();
    if t >= population {
        return Err(Error::InvalidInput(format!(
            "{t} draws leave nothing of a population of {population}"
        )));
    }
    let n = population as f64;
    let left = (population - t) as f64;
    Ok(m.as_slice()
        .iter()
        .zip(drawn.as_slice())
        .map(|(&mj, &kj)| (n * mj - kj as f64) / left)
        .collect())
}

/// KT wealth with the odds set by the remaining-mean transform at the
/// current prefix: `q^KT(K_t) · ((N m − K_t)/(N − t))^{−K_t}`.
///
/// A category drawn more often than `N m_j` permits, or exhausted while it
/// has been drawn, gives `+inf`; so does a negative remaining count.
pub fn wor_kt_log_wealth(
    drawn: &CountVector,
    m: &ProbVector,
    population: usize,
    prior: &DirichletPrior,
) -> Result<LogValue> {
    check_dim(prior.dim(), drawn.dim())?;
    check_dim(m.dim(), drawn.dim())?;
    let t = drawn.total();
    if t >= population {
        return Err(Error::InvalidInput(format!(
            "{t} draws leave nothing of a population of {population}"
        )));
    }
    let n = population as f64;
    let left = (population - t) as f64;
    let mut acc = prior.log_q(&drawn.to_f64());
    for (&mj, &kj) in m.as_slice().iter().zip(drawn.as_slice()) {
        let mut remaining = n * mj - kj as f64;
        if remaining.abs() <= 1e-9 * n {
            remaining = 0.0;
        }
        if kj == 0 {
            if remaining < 0.0 {
                return Ok(LogValue::INFINITY);
            }
            continue;
        }
        if remaining <= 0.0 {
            return Ok(LogValue::INFINITY);
        }
        acc -= kj as f64 * (remaining / left).ln();
    }
    LogValue::new(acc)
}

/// Integer census `N m`, rejecting candidates that are not on `G(K, N)`.
pub fn census_of(m: &ProbVector, population: usize) -> Result<CountVector> {
    let n = population as f64;
    let counts = m
        .as_slice()
        .iter()
        .map(|&mj| {
            let x = n * mj;
            let r = x.round();
            if (x - r).abs() > 1e-9 {
                Err(Error::InvalidInput(format!(
                    "N·m = {x} is not an integer; census hypotheses must lie on G(K, N)"
                )))
            } else {
                Ok(r as u32)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let census = CountVector::new(counts)?;
    if census.total() != population {
        return Err(Error::InvalidInput(format!(
            "census {census} does not sum to N = {population}"
        )));
    }
    Ok(census)
}

/// `ln (a)_b = ln [a! / (a − b)!]`, the falling factorial; `b <= a`.
#[inline]
fn log_falling(a: u64, b: u64) -> f64 {
    log_gamma_unchecked(a as f64 + 1.0) - log_gamma_unchecked((a - b) as f64 + 1.0)
}

/// KT betting with the remaining-mean odds refreshed at every draw:
/// `Π_i [KT predictive of Z_i] / [remaining share of Z_i]`, which telescopes
/// to `q^KT(K_t) (N)_t / Π_j (N m_j)_{K_{t,j}}`.
pub fn perround_wor_log_wealth(
    draws: &[ProbVector],
    m: &ProbVector,
    population: usize,
    prior: &DirichletPrior,
) -> Result<LogValue> {
    check_dim(prior.dim(), m.dim())?;
    let census = census_of(m, population)?;
    if draws.is_empty() {
        return Ok(LogValue::ONE);
    }
    let drawn = CountVector::from_one_hot(draws)?;
    check_dim(m.dim(), drawn.dim())?;
    let t = drawn.total();
    if t >= population {
        return Err(Error::InvalidInput(format!(
            "{t} draws leave nothing of a population of {population}"
        )));
    }
    let mut acc = prior.log_q(&drawn.to_f64()) + log_falling(population as u64, t as u64);
    for (&nj, &kj) in census.as_slice().iter().zip(drawn.as_slice()) {
        if kj > nj {
            return Ok(LogValue::INFINITY);
        }
        acc -= log_falling(nj as u64, kj as u64);
    }
    LogValue::new(acc)
}

fn log_multinomial(parts: impl Iterator<Item = u64>) -> f64 {
    let mut n = 0u64;
    let mut acc = 0.0;
    for p in parts {
        n += p;
        acc -= log_gamma_unchecked(p as f64 + 1.0);
    }
    acc + log_gamma_unchecked(n as f64 + 1.0)
}

/// Posterior-to-prior ratio martingale
/// `q^KT(K_t) · multinom(N; n) / multinom(N − t; n − K_t)` at census `n`.
pub fn ppr_log_wealth(
    drawn: &CountVector,
    census: &CountVector,
    prior: &DirichletPrior,
) -> Result<LogValue> {
    check_dim(prior.dim(), drawn.dim())?;
    check_dim(census.dim(), drawn.dim())?;
    let population = census.total();
    let t = drawn.total();
    if t >= population {
        return Err(Error::InvalidInput(format!(
            "{t} draws leave nothing of a population of {population}"
        )));
    }
    if census
        .as_slice()
        .iter()
        .zip(drawn.as_slice())
        .any(|(n, k)| k > n)
    {
        return Ok(LogValue::INFINITY);
    }
    let q = prior.log_q(&drawn.to_f64());
    let before = log_multinomial(census.as_slice().iter().map(|&n| n as u64));
    let after = log_multinomial(
        census
            .as_slice()
            .iter()
            .zip(drawn.as_slice())
            .map(|(&n, &k)| (n - k) as u64),
    );
    LogValue::new(q + before - after)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pv(v: &[f64]) -> ProbVector {
        ProbVector::new(v.to_vec()).unwrap()
    }

    fn cv(v: &[u32]) -> CountVector {
        CountVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn kt_spot_values() {
        let prior = DirichletPrior::kt(2);
        assert_eq!(
            kt_log_wealth(&[0.0, 0.0], &pv(&[0.3, 0.7]), &prior).unwrap(),
            LogValue::ONE
        );
        let w = kt_log_wealth(&[1.0, 0.0], &pv(&[0.5, 0.5]), &prior).unwrap();
        assert!(w.value().abs() < 1e-12);
        let w = kt_log_wealth(&[2.0, 0.0], &pv(&[0.75, 0.25]), &prior).unwrap();
        assert_relative_eq!(w.value(), (2.0f64 / 3.0).ln(), max_relative = 1e-12);
    }

    #[test]
    fn kt_boundary_candidates() {
        let prior = DirichletPrior::kt(2);
        let w = kt_log_wealth(&[1.0, 0.0], &pv(&[0.0, 1.0]), &prior).unwrap();
        assert!(w.is_infinite_wealth());
        // zero count against zero odds contributes nothing
        let w = kt_log_wealth(&[2.0, 0.0], &pv(&[1.0, 0.0]), &prior).unwrap();
        assert_relative_eq!(w.value(), prior.log_q(&[2.0, 0.0]), max_relative = 1e-12);
        assert!(kt_log_wealth(&[1.0], &pv(&[0.5, 0.5]), &prior).is_err());
    }

    #[test]
    fn q_kt_spot_values() {
        let prior = DirichletPrior::kt(2);
        assert_eq!(q_kt(&[0.0, 0.0], &prior).unwrap().value(), 0.0);
        assert_relative_eq!(
            q_kt(&[1.0, 0.0], &prior).unwrap().value(),
            0.5f64.ln(),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            q_kt(&[1.0, 1.0], &prior).unwrap().value(),
            0.125f64.ln(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn constant_bettor_spot_values() {
        let m = pv(&[0.5, 0.5]);
        let obs = vec![pv(&[0.75, 0.25])];
        assert_relative_eq!(
            constant_bettor_log_wealth(&obs, &pv(&[1.0, 0.0]), &m)
                .unwrap()
                .value(),
            1.5f64.ln(),
            max_relative = 1e-12
        );
        assert_eq!(
            constant_bettor_log_wealth(&[], &pv(&[1.0, 0.0]), &m).unwrap(),
            LogValue::ONE
        );
        let m = pv(&[0.2, 0.3, 0.5]);
        let obs = vec![pv(&[0.1, 0.1, 0.8]), pv(&[1.0, 0.0, 0.0])];
        assert!(
            constant_bettor_log_wealth(&obs, &m, &m)
                .unwrap()
                .value()
                .abs()
                < 1e-15
        );
        // a bettor who stakes everything on a losing horse goes broke
        let broke =
            constant_bettor_log_wealth(&[pv(&[0.0, 1.0])], &pv(&[1.0, 0.0]), &pv(&[0.5, 0.5]))
                .unwrap();
        assert!(broke.is_zero_wealth());
    }

    #[test]
    fn up_first_step_reads_off_the_observation() {
        let y = pv(&[0.2, 0.3, 0.5]);
        let s = UpState::new(DirichletPrior::kt(3)).absorb(&y).unwrap();
        for j in 0..3 {
            let e = ProbVector::vertex(3, j).unwrap();
            let c = CountVector::from_one_hot(&[e]).unwrap();
            assert_relative_eq!(
                s.entry(&c).unwrap(),
                y.as_slice()[j].ln(),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn up_two_steps_binomial_expansion() {
        let y = pv(&[0.5, 0.5]);
        let s = UpState::new(DirichletPrior::kt(2))
            .absorb(&y)
            .unwrap()
            .absorb(&y)
            .unwrap();
        assert_relative_eq!(
            s.entry(&cv(&[2, 0])).unwrap().exp(),
            0.25,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            s.entry(&cv(&[1, 1])).unwrap().exp(),
            0.5,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            s.entry(&cv(&[0, 2])).unwrap().exp(),
            0.25,
            max_relative = 1e-12
        );
    }

    #[test]
    fn up_one_hot_stream_is_an_indicator() {
        let mut s = UpState::new(DirichletPrior::kt(3));
        for &j in &[0, 2, 2, 1, 0] {
            s.absorb_in_place(&ProbVector::vertex(3, j).unwrap())
                .unwrap();
        }
        let hit = GridIndex::new(3, 5).unwrap().rank(&[2, 1, 2]).unwrap();
        for (r, &v) in s.table().iter().enumerate() {
            if r == hit {
                assert_eq!(v, 0.0);
            } else {
                assert_eq!(v, f64::NEG_INFINITY);
            }
        }
    }

    #[test]
    fn up_spot_value() {
        let s = UpState::new(DirichletPrior::kt(2))
            .absorb(&pv(&[0.75, 0.25]))
            .unwrap();
        let w = up_log_wealth(&s, &pv(&[0.25, 0.75])).unwrap();
        assert_relative_eq!(w.value(), (5.0f64 / 3.0).ln(), max_relative = 1e-12);
    }

    #[test]
    fn up_wealth_is_one_when_observations_equal_the_candidate() {
        let m = pv(&[0.2, 0.3, 0.1, 0.4]);
        let mut s = UpState::new(DirichletPrior::kt(4));
        for _ in 0..12 {
            s.absorb_in_place(&m).unwrap();
            assert!(up_log_wealth(&s, &m).unwrap().value().abs() < 1e-10);
        }
    }

    #[test]
    fn up_boundary_candidates() {
        let mut s = UpState::new(DirichletPrior::kt(3));
        s.absorb_in_place(&pv(&[0.5, 0.5, 0.0])).unwrap();
        s.absorb_in_place(&pv(&[0.2, 0.8, 0.0])).unwrap();
        // the third horse never paid, so m_3 = 0 is not excluded for free
        let w = up_log_wealth(&s, &pv(&[0.4, 0.6, 0.0])).unwrap();
        assert!(w.value().is_finite());
        let w = up_log_wealth(&s, &pv(&[0.0, 0.6, 0.4])).unwrap();
        assert!(w.is_infinite_wealth());
        // boundary path agrees with the interior path as m_3 -> 0
        let near = up_log_wealth(&s, &pv(&[0.4, 0.6 - 1e-13, 1e-13])).unwrap();
        assert!((near.value() - w_at(&s, &[0.4, 0.6, 0.0])).abs() < 1e-9);
    }

    fn w_at(s: &UpState, m: &[f64]) -> f64 {
        s.evaluator().log_wealth(m)
    }

    #[test]
    fn wor_transform_examples() {
        let m = pv(&[0.5, 0.5]);
        assert_eq!(
            wor_mean_transform(&m, &cv(&[0, 0]), 4).unwrap(),
            vec![0.5, 0.5]
        );
        let r = wor_mean_transform(&m, &cv(&[1, 0]), 4).unwrap();
        assert_relative_eq!(r[0], 1.0 / 3.0);
        assert_relative_eq!(r[1], 2.0 / 3.0);
        assert_eq!(
            wor_mean_transform(&m, &cv(&[1, 0]), 2).unwrap(),
            vec![0.0, 1.0]
        );
        assert!(wor_mean_transform(&m, &cv(&[1, 1]), 2).is_err());
    }

    #[test]
    fn wor_kernels_spot_values() {
        let prior = DirichletPrior::kt(2);
        assert_eq!(
            wor_kt_log_wealth(&cv(&[0, 0]), &pv(&[0.3, 0.7]), 10, &prior).unwrap(),
            LogValue::ONE
        );
        let w = wor_kt_log_wealth(&cv(&[2, 0]), &pv(&[0.75, 0.25]), 4, &prior).unwrap();
        assert_relative_eq!(w.value(), 1.5f64.ln(), max_relative = 1e-12);
        let w = wor_kt_log_wealth(&cv(&[1, 0]), &pv(&[0.5, 0.5]), 2, &prior).unwrap();
        assert!(w.is_infinite_wealth());
        // a category with no draws and a negative remaining count
        let w = wor_kt_log_wealth(&cv(&[3, 0]), &pv(&[0.5, 0.5]), 4, &prior).unwrap();
        assert!(w.is_infinite_wealth());

        let draws = |js: &[usize]| -> Vec<ProbVector> {
            js.iter()
                .map(|&j| ProbVector::vertex(2, j).unwrap())
                .collect()
        };
        let w = perround_wor_log_wealth(&draws(&[0, 0]), &pv(&[0.75, 0.25]), 4, &prior).unwrap();
        assert_relative_eq!(w.value(), 0.75f64.ln(), max_relative = 1e-12);
        assert_eq!(
            perround_wor_log_wealth(&[], &pv(&[0.75, 0.25]), 4, &prior).unwrap(),
            LogValue::ONE
        );
        let w = perround_wor_log_wealth(&draws(&[0]), &pv(&[0.5, 0.5]), 2, &prior).unwrap();
        assert!(w.value().abs() < 1e-12);
        assert!(perround_wor_log_wealth(&draws(&[0]), &pv(&[0.3, 0.7]), 4, &prior).is_err());

        assert_eq!(
            ppr_log_wealth(&cv(&[0, 0]), &cv(&[3, 1]), &prior)
                .unwrap()
                .value(),
            0.0
        );
        assert!(
            ppr_log_wealth(&cv(&[1, 0]), &cv(&[1, 1]), &prior)
                .unwrap()
                .value()
                .abs()
                < 1e-12
        );
        let w = ppr_log_wealth(&cv(&[2, 0]), &cv(&[3, 1]), &prior).unwrap();
        assert_relative_eq!(w.value(), 0.75f64.ln(), max_relative = 1e-12);
        assert!(ppr_log_wealth(&cv(&[1, 0]), &cv(&[0, 2]), &prior)
            .unwrap()
            .is_infinite_wealth());
        assert!(ppr_log_wealth(&cv(&[1, 1]), &cv(&[1, 1]), &prior).is_err());
    }

    #[test]
    fn row_polynomial_matches_term_by_term_sum() {
        // deterministic non-vertex stream, so every table entry is finite
        let obs = [
            pv(&[0.5, 0.3, 0.2]),
            pv(&[0.1, 0.1, 0.8]),
            pv(&[0.7, 0.2, 0.1]),
        ];
        let mut s = UpState::new(DirichletPrior::kt(3));
        for i in 0..60 {
            s.absorb_in_place(&obs[i % 3]).unwrap();
        }
        let ev = s.evaluator();
        // the middle candidate exceeds the Horner span and takes the fallback
        for m in [
            [0.3f64, 0.3, 0.4],
            [1e-6, 0.5, 0.5 - 1e-6],
            [0.98, 0.01, 0.01],
        ] {
            let mut terms = Vec::new();
            ev.index.for_each(|r, p| {
                let mut e = ev.coeff[r];
                for (&c, &mj) in p.iter().zip(&m) {
                    e -= c as f64 * mj.ln();
                }
                terms.push(e);
            });
            let brute = crate::numerics::log_sum_exp(&terms);
            assert_relative_eq!(
                ev.log_wealth(&m),
                brute,
                max_relative = 1e-12,
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn scaled_bet_bridge_example() {
        let (b, y, m) = (0.3, 0.8, 0.4);
        let gain = b * y / m + (1.0 - b) * (1.0 - y) / (1.0 - m);
        assert_relative_eq!(gain, 1.0 + scaled_bet(b, m) * (y - m), max_relative = 1e-12);
    }
}
