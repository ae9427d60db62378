//! Special functions and log-domain primitives.
//!
//! Every wealth magnitude in this crate is carried on the natural-log scale:
//! `-inf` is zero wealth and `+inf` is diverged wealth, i.e. a hypothesis that
//! has been excluded with certainty. Products of per-round gains overflow
//! `f64` after a few hundred rounds, sums of them are taken with a max shift.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{check_dim, Error, Result};

/// A natural-log magnitude that is never NaN.
///
/// `LogValue::ZERO` (`-inf`) is zero wealth, `LogValue::INFINITY` (`+inf`)
/// is wealth that has diverged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogValue(f64);

impl LogValue {
    pub const ZERO: LogValue = LogValue(f64::NEG_INFINITY);
    pub const ONE: LogValue = LogValue(0.0);
    pub const INFINITY: LogValue = LogValue(f64::INFINITY);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() {
            Err(Error::Domain("log-domain value is NaN".into()))
        } else {
            Ok(LogValue(value))
        }
    }

    /// Log of a nonnegative linear-scale magnitude.
    pub fn from_linear(x: f64) -> Result<Self> {
        if x.is_nan() || x < 0.0 {
            return Err(Error::Domain(format!("cannot take the log of {x}")));
        }
        Ok(LogValue(x.ln()))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn exp(self) -> f64 {
        self.0.exp()
    }

    pub fn is_infinite_wealth(self) -> bool {
        self.0 == f64::INFINITY
    }

    pub fn is_zero_wealth(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    pub fn max(self, other: LogValue) -> LogValue {
        if other.0 > self.0 {
            other
        } else {
            self
        }
    }
}

impl Eq for LogValue {}

impl Ord for LogValue {
    fn cmp(&self, other: &Self) -> Ordering {
        // constructors reject NaN, so the partial order is total
        self.0.partial_cmp(&other.0).unwrap_or(Ordering::Equal)
    }
}

impl PartialOrd for LogValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for LogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl TryFrom<f64> for LogValue {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        LogValue::new(value)
    }
}

impl From<LogValue> for f64 {
    fn from(v: LogValue) -> f64 {
        v.0
    }
}

/// `ln Γ(x)` for `x > 0`.
///
/// Uses the correctly-rounded-in-practice `lgamma` from `libm`, which applies
/// the reflection formula below one half.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::Domain(format!("log_gamma requires x > 0, got {x}")));
    }
    Ok(libm::lgamma(x))
}

/// `ln Γ(x)` without argument validation. Callers guarantee `x > 0`.
#[inline]
pub(crate) fn log_gamma_unchecked(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `ln B(a) = Σ ln Γ(a_i) − ln Γ(Σ a_i)`.
pub fn log_multi_beta(a: &[f64]) -> Result<f64> {
    if a.is_empty() {
        return Err(Error::InvalidInput(
            "multivariate beta of an empty vector".into(),
        ));
    }
    if let Some(bad) = a.iter().find(|&&ai| !(ai.is_finite() && ai > 0.0)) {
        return Err(Error::Domain(format!(
            "multivariate beta requires positive arguments, got {bad}"
        )));
    }
    Ok(log_multi_beta_unchecked(a))
}

#[inline]
pub(crate) fn log_multi_beta_unchecked(a: &[f64]) -> f64 {
    let mut total = 0.0;
    let mut acc = 0.0;
    for &ai in a {
        total += ai;
        acc += log_gamma_unchecked(ai);
    }
    acc - log_gamma_unchecked(total)
}

/// `x ln y` with the convention `0 ln y = 0` for every `y >= 0`.
#[inline]
pub fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

/// Kullback-Leibler divergence `D(p‖q) = Σ p_j ln(p_j / q_j)`.
///
/// Terms with `p_j = 0` vanish; `p_j > 0` with `q_j = 0` gives `+inf`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    check_dim(p.len(), q.len())?;
    let mut d = 0.0;
    for (&pj, &qj) in p.iter().zip(q) {
        if pj == 0.0 {
            continue;
        }
        if qj == 0.0 {
            return Ok(f64::INFINITY);
        }
        d += pj * (pj / qj).ln();
    }
    // Rounding can leave a tiny negative residue when p == q.
    Ok(d.max(0.0))
}

/// Shannon entropy `H(p) = −Σ p_j ln p_j` in nats.
pub fn shannon_entropy(p: &[f64]) -> f64 {
    -p.iter().map(|&pj| xlogy(pj, pj)).sum::<f64>()
}

/// `ln(e^a + e^b)`.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi.is_infinite() {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `ln Σ e^{x_i}` with a max shift. Empty input gives `-inf`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max.is_infinite() {
        return max;
    }
    let sum: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}

/// Tail selector for [`log_binomial_tail`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tail {
    /// `P(X <= k)`
    Lower,
    /// `P(X >= k)`
    Upper,
}

/// `ln C(n, k)`.
pub fn log_binomial_coefficient(n: u64, k: u64) -> Result<f64> {
    if k > n {
        return Err(Error::InvalidInput(format!("C({n}, {k}) with k > n")));
    }
    Ok(log_gamma_unchecked(n as f64 + 1.0)
        - log_gamma_unchecked(k as f64 + 1.0)
        - log_gamma_unchecked((n - k) as f64 + 1.0))
}

fn log_binomial_pmf(n: u64, i: u64, p: f64) -> f64 {
    let log_c = log_gamma_unchecked(n as f64 + 1.0)
        - log_gamma_unchecked(i as f64 + 1.0)
        - log_gamma_unchecked((n - i) as f64 + 1.0);
    let a = if i == 0 { 0.0 } else { i as f64 * p.ln() };
    let b = if i == n {
        0.0
    } else {
        (n - i) as f64 * (-p).ln_1p()
    };
    log_c + a + b
}

/// `ln P(Bin(n, p) <= k)` or `ln P(Bin(n, p) >= k)`, summed over exact
/// log-pmf terms.
pub fn log_binomial_tail(n: u64, k: u64, p: f64, side: Tail) -> Result<f64> {
    if k > n {
        return Err(Error::InvalidInput(format!(
            "binomial tail with k={k} > n={n}"
        )));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!(
            "binomial probability {p} outside [0, 1]"
        )));
    }
    let range = match side {
        Tail::Lower => 0..=k,
        Tail::Upper => k..=n,
    };
    let terms: Vec<f64> = range.map(|i| log_binomial_pmf(n, i, p)).collect();
    Ok(log_sum_exp(&terms).min(0.0))
}

/// Table of `ln n!` for `n = 0..=max`.
#[derive(Debug, Clone)]
pub struct LogFactorials {
    table: Vec<f64>,
}

impl LogFactorials {
    pub fn new(max: usize) -> Self {
        let table = (0..=max)
            .map(|n| log_gamma_unchecked(n as f64 + 1.0))
            .collect();
        LogFactorials { table }
    }

    #[inline]
    pub fn get(&self, n: usize) -> f64 {
        self.table[n]
    }

    pub fn max(&self) -> usize {
        self.table.len() - 1
    }
}
