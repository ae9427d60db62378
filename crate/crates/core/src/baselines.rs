//! Comparators: coordinatewise aggregation of two-horse sets, and the
//! fixed-time (not time-uniform) Sanov, Mardia and Clopper–Pearson sets.

use crate::confset::{log_threshold, KtProcess, UpProcess, WealthProcess};
use crate::error::{check_dim, Error, Result};
use crate::numerics::{kl_divergence, log_binomial_tail, log_sum_exp, Tail};
use crate::simplex::{CountVector, ProbVector};
use crate::wealth::DirichletPrior;

/// Per-coordinate log-wealths at one candidate. Coordinate `j` is the
/// two-horse race `(m_j, 1 − m_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateWealths(pub Vec<f64>);

impl CoordinateWealths {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// In iff every coordinate log-wealth is below `ln(K/δ)`.
pub fn bonferroni_membership(w: &CoordinateWealths, delta: f64) -> Result<bool> {
    let limit = (w.dim() as f64).ln() + log_threshold(delta)?;
    Ok(w.max() < limit)
}

/// In iff the averaged wealth `(1/K) Σ_j W_j` is below `1/δ`.
///
/// Since `ln Σ e^{w_j} ≥ max_j w_j` holds exactly in floating point here,
/// this set is always inside the Bonferroni one.
pub fn mixture_membership(w: &CoordinateWealths, delta: f64) -> Result<bool> {
    let limit = (w.dim() as f64).ln() + log_threshold(delta)?;
    Ok(log_sum_exp(&w.0) < limit)
}

/// How coordinate wealths are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregation {
    Bonferroni,
    Mixture,
}

/// `K` independent two-horse processes, one per coordinate, combined into a
/// single statistic. As a [`WealthProcess`] it reports `max_j w_j` or
/// `ln Σ_j e^{w_j}` with level offset `ln K`.
#[derive(Debug, Clone)]
pub struct CoordinateProcess<P> {
    coords: Vec<P>,
    aggregation: Aggregation,
    t: usize,
}

impl CoordinateProcess<KtProcess> {
    pub fn kt(k: usize, aggregation: Aggregation) -> Result<Self> {
        Self::from_fn(k, aggregation, || KtProcess::new(DirichletPrior::kt(2)))
    }
}

impl CoordinateProcess<UpProcess> {
    pub fn up(k: usize, aggregation: Aggregation) -> Result<Self> {
        Self::from_fn(k, aggregation, || UpProcess::new(DirichletPrior::kt(2)))
    }
}

impl<P: WealthProcess> CoordinateProcess<P> {
    pub fn from_fn(
        k: usize,
        aggregation: Aggregation,
        mut make: impl FnMut() -> P,
    ) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidInput(format!(
                "need K >= 2 coordinates, got {k}"
            )));
        }
        let coords: Vec<P> = (0..k).map(|_| make()).collect();
        if let Some(p) = coords.iter().find(|p| p.dim() != 2) {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: p.dim(),
            });
        }
        Ok(CoordinateProcess {
            coords,
            aggregation,
            t: 0,
        })
    }

    pub fn aggregation(&self) -> Aggregation {
        self.aggregation
    }

    pub fn coordinate_wealths(&self, m: &[f64]) -> CoordinateWealths {
        CoordinateWealths(
            self.coords
                .iter()
                .zip(m)
                .map(|(p, &mj)| p.log_wealth_at(&[mj, 1.0 - mj]))
                .collect(),
        )
    }
}

impl<P: WealthProcess> WealthProcess for CoordinateProcess<P> {
    fn dim(&self) -> usize {
        self.coords.len()
    }

    fn time(&self) -> usize {
        self.t
    }

    fn observe(&mut self, y: &ProbVector) -> Result<()> {
        check_dim(self.coords.len(), y.dim())?;
        for (p, &yj) in self.coords.iter_mut().zip(y.as_slice()) {
            p.observe(&ProbVector::new(vec![yj, 1.0 - yj])?)?;
        }
        self.t += 1;
        Ok(())
    }

    fn log_wealth_at(&self, m: &[f64]) -> f64 {
        let w = self.coordinate_wealths(m);
        match self.aggregation {
            Aggregation::Bonferroni => w.max(),
            Aggregation::Mixture => log_sum_exp(&w.0),
        }
    }

    fn log_level_offset(&self) -> f64 {
        (self.coords.len() as f64).ln()
    }
}

/// `ln(1/δ)/t + (K/t) ln(t + 1)`.
pub fn sanov_radius(t: usize, k: usize, delta: f64) -> Result<f64> {
    if t == 0 {
        return Err(Error::InvalidInput("Sanov radius needs t >= 1".into()));
    }
    let tf = t as f64;
    Ok(log_threshold(delta)? / tf + k as f64 / tf * (tf + 1.0).ln())
}

/// `D(μ̂‖m)` below the Sanov radius. Valid at a fixed `t` only.
pub fn sanov_membership(mu_hat: &ProbVector, m: &ProbVector, t: usize, delta: f64) -> Result<bool> {
    check_dim(mu_hat.dim(), m.dim())?;
    let r = sanov_radius(t, m.dim(), delta)?;
    Ok(kl_divergence(mu_hat.as_slice(), m.as_slice())? < r)
}

/// Smallest `t` with `t >= 8π(K/e)^3`, below which the Mardia bound does
/// not apply.
pub fn mardia_min_time(k: usize) -> usize {
    let gate = 8.0 * std::f64::consts::PI * (k as f64 / std::f64::consts::E).powi(3);
    gate.ceil() as usize
}

/// `((K − 1)/t) ln(2(K − 1)/δ)`, or `None` below the applicability gate.
pub fn mardia_radius(t: usize, k: usize, delta: f64) -> Result<Option<f64>> {
    let lt = log_threshold(delta)?;
    if k < 2 {
        return Err(Error::InvalidInput(format!("need K >= 2, got {k}")));
    }
    if t == 0 || t < mardia_min_time(k) {
        return Ok(None);
    }
    let km1 = (k - 1) as f64;
    Ok(Some(km1 / t as f64 * ((2.0 * km1).ln() + lt)))
}

/// `None` when `t` is below the gate.
pub fn mardia_membership(
    mu_hat: &ProbVector,
    m: &ProbVector,
    t: usize,
    delta: f64,
) -> Result<Option<bool>> {
    check_dim(mu_hat.dim(), m.dim())?;
    match mardia_radius(t, m.dim(), delta)? {
        None => Ok(None),
        Some(r) => Ok(Some(kl_divergence(mu_hat.as_slice(), m.as_slice())? < r)),
    }
}

/// Bisection stops once the bracket is this narrow.
pub const CP_TOLERANCE: f64 = 1e-10;

/// Exact two-sided binomial interval at level `1 − δ'`.
pub fn clopper_pearson_interval(k: u64, n: u64, delta_prime: f64) -> Result<(f64, f64)> {
    if n == 0 || k > n {
        return Err(Error::InvalidInput(format!(
            "Clopper–Pearson needs 0 <= k <= n, n >= 1; got k={k}, n={n}"
        )));
    }
    let target = (delta_prime / 2.0).ln();
    log_threshold(delta_prime)?;
    // P(X >= k) rises with p; P(X <= k) falls with p.
    let lower = if k == 0 {
        0.0
    } else {
        bisect(|p| Ok(log_binomial_tail(n, k, p, Tail::Upper)? < target))?
    };
    let upper = if k == n {
        1.0
    } else {
        bisect(|p| Ok(log_binomial_tail(n, k, p, Tail::Lower)? >= target))?
    };
    Ok((lower, upper))
}

/// Boundary of a predicate that is true on `[0, b)` and false on `[b, 1]`.
fn bisect(mut below: impl FnMut(f64) -> Result<bool>) -> Result<f64> {
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > CP_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if below(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Product of coordinate Clopper–Pearson intervals at `δ/K`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClopperPearsonBox {
    pub intervals: Vec<(f64, f64)>,
}

impl ClopperPearsonBox {
    pub fn new(counts: &CountVector, delta: f64) -> Result<Self> {
        let n = counts.total() as u64;
        let dp = delta / counts.dim() as f64;
        let intervals = counts
            .as_slice()
            .iter()
            .map(|&k| clopper_pearson_interval(k as u64, n, dp))
            .collect::<Result<Vec<_>>>()?;
        Ok(ClopperPearsonBox { intervals })
    }

    pub fn contains(&self, m: &[f64]) -> bool {
        self.intervals.len() == m.len()
            && self
                .intervals
                .iter()
                .zip(m)
                .all(|(&(lo, hi), &x)| lo <= x && x <= hi)
    }
}
