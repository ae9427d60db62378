//! Confidence sets from wealth processes.
//!
//! A candidate `m` belongs to the set at time `t` while its wealth has stayed
//! strictly below `1/δ` at every time so far. The running maximum of the
//! log-wealth is kept per candidate, which is the running intersection of
//! the per-time sublevel sets; once a candidate leaves it is never evaluated
//! again.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{check_dim, Error, Result};
use crate::numerics::{kl_divergence, shannon_entropy, LogValue};
use crate::simplex::{simplex_lattice, CountVector, ProbVector};
use crate::wealth::{DirichletPrior, UpEvaluator, UpState};

/// A sequentially updated log-wealth (or aggregated log-statistic) that can
/// be evaluated at any candidate mean.
pub trait WealthProcess: Send + Sync {
    fn dim(&self) -> usize;

    /// Number of observations absorbed.
    fn time(&self) -> usize;

    fn observe(&mut self, y: &ProbVector) -> Result<()>;

    /// Log-wealth at `m`; `+inf` excludes `m` with certainty.
    fn log_wealth_at(&self, m: &[f64]) -> f64;

    /// Added to `ln(1/δ)` before comparing. Aggregates that report a sum of
    /// `K` wealths instead of their average use `ln K` here.
    fn log_level_offset(&self) -> f64 {
        0.0
    }
}

/// `ln(1/δ)`, rejecting `δ` outside `(0, 1)`.
pub fn log_threshold(delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("δ must lie in (0, 1), got {delta}")));
    }
    Ok(-delta.ln())
}

/// `W < 1/δ`, strictly.
pub fn membership(log_wealth: LogValue, delta: f64) -> Result<bool> {
    Ok(log_wealth.value() < log_threshold(delta)?)
}

/// KT wealth as a process over categorical or simplex-valued observations.
///
/// Simplex-valued observations are accumulated as fractional counts.
#[derive(Debug, Clone)]
pub struct KtProcess {
    counts: Vec<f64>,
    prior: DirichletPrior,
    log_q: f64,
    t: usize,
}

impl KtProcess {
    pub fn new(prior: DirichletPrior) -> Self {
        KtProcess {
            counts: vec![0.0; prior.dim()],
            prior,
            log_q: 0.0,
            t: 0,
        }
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }
}

impl WealthProcess for KtProcess {
    fn dim(&self) -> usize {
        self.counts.len()
    }

    fn time(&self) -> usize {
        self.t
    }

    fn observe(&mut self, y: &ProbVector) -> Result<()> {
        check_dim(self.counts.len(), y.dim())?;
        for (c, &v) in self.counts.iter_mut().zip(y.as_slice()) {
            *c += v;
        }
        self.log_q = self.prior.log_q(&self.counts);
        self.t += 1;
        Ok(())
    }

    fn log_wealth_at(&self, m: &[f64]) -> f64 {
        let mut acc = self.log_q;
        for (&k, &mj) in self.counts.iter().zip(m) {
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
}

/// Universal-portfolio wealth as a process.
#[derive(Debug, Clone)]
pub struct UpProcess {
    state: UpState,
    evaluator: UpEvaluator,
}

impl UpProcess {
    pub fn new(prior: DirichletPrior) -> Self {
        Self::from_state(UpState::new(prior))
    }

    pub fn from_state(state: UpState) -> Self {
        let evaluator = state.evaluator();
        UpProcess { state, evaluator }
    }

    pub fn state(&self) -> &UpState {
        &self.state
    }
}

impl WealthProcess for UpProcess {
    fn dim(&self) -> usize {
        self.state.dim()
    }

    fn time(&self) -> usize {
        self.state.time()
    }

    fn observe(&mut self, y: &ProbVector) -> Result<()> {
        self.state.absorb_in_place(y)?;
        self.evaluator = self.state.evaluator();
        Ok(())
    }

    fn log_wealth_at(&self, m: &[f64]) -> f64 {
        self.evaluator.log_wealth(m)
    }
}

/// Candidates with their running-maximum log-wealth and activity flags.
#[derive(Debug, Clone)]
pub struct ConfidenceSet {
    delta: f64,
    threshold: f64,
    dim: usize,
    candidates: Vec<f64>,
    running_max: Vec<f64>,
    active: Vec<bool>,
    active_idx: Vec<usize>,
    t: usize,
}

impl ConfidenceSet {
    /// A set with every candidate active and running maximum `ln 1 = 0`.
    pub fn new(candidates: &[ProbVector], delta: f64) -> Result<Self> {
        let threshold = log_threshold(delta)?;
        let dim = candidates.first().map(ProbVector::dim).ok_or_else(|| {
            Error::InvalidInput("confidence set over an empty candidate list".into())
        })?;
        let mut flat = Vec::with_capacity(dim * candidates.len());
        for c in candidates {
            check_dim(dim, c.dim())?;
            flat.extend_from_slice(c.as_slice());
        }
        let n = candidates.len();
        Ok(ConfidenceSet {
            delta,
            threshold,
            dim,
            candidates: flat,
            running_max: vec![0.0; n],
            active: vec![true; n],
            active_idx: (0..n).collect(),
            t: 0,
        })
    }

    /// Over the lattice `{ k / G : k ∈ G(K, G) }`.
    pub fn on_simplex_lattice(k: usize, resolution: usize, delta: f64) -> Result<Self> {
        Self::new(&simplex_lattice(k, resolution)?, delta)
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `ln(1/δ)`.
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Time of the last refresh.
    pub fn time(&self) -> usize {
        self.t
    }

    pub fn len(&self) -> usize {
        self.running_max.len()
    }

    pub fn is_empty(&self) -> bool {
        self.running_max.is_empty()
    }

    pub fn candidate(&self, i: usize) -> &[f64] {
        &self.candidates[i * self.dim..(i + 1) * self.dim]
    }

    pub fn running_max(&self, i: usize) -> f64 {
        self.running_max[i]
    }

    pub fn is_active(&self, i: usize) -> bool {
        self.active[i]
    }

    pub fn active_count(&self) -> usize {
        self.active_idx.len()
    }

    pub fn active_indices(&self) -> &[usize] {
        &self.active_idx
    }

    /// Fraction of candidates still active. This is a grid measure, not a
    /// Lebesgue volume.
    pub fn relative_volume(&self) -> f64 {
        self.active_idx.len() as f64 / self.running_max.len() as f64
    }

    /// Evaluate the process at every active candidate and apply exclusions.
    pub fn refresh<P: WealthProcess + ?Sized>(&mut self, process: &P) -> Result<()> {
        check_dim(self.dim, process.dim())?;
        let dim = self.dim;
        let cands = &self.candidates;
        let values: Vec<f64> = self
            .active_idx
            .par_iter()
            .map(|&i| process.log_wealth_at(&cands[i * dim..(i + 1) * dim]))
            .collect();
        for (&i, v) in self.active_idx.iter().zip(values) {
            if v.is_nan() {
                return Err(Error::Domain(format!("NaN log-wealth at candidate {i}")));
            }
            if v > self.running_max[i] {
                self.running_max[i] = v;
            }
        }
        let threshold = self.threshold + process.log_level_offset();
        let (running_max, active) = (&self.running_max, &mut self.active);
        self.active_idx.retain(|&i| {
            let keep = running_max[i] < threshold;
            if !keep {
                active[i] = false;
            }
            keep
        });
        self.t = process.time();
        Ok(())
    }

    /// Dump one row per candidate: coordinates, running maximum
    /// log-wealth, active flag.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let header: Vec<String> = (1..=self.dim).map(|j| format!("m{j}")).collect();
        writeln!(out, "{},running_max_log_wealth,active", header.join(","))?;
        for i in 0..self.len() {
            let coords: Vec<String> = self.candidate(i).iter().map(|x| x.to_string()).collect();
            writeln!(
                out,
                "{},{},{}",
                coords.join(","),
                self.running_max[i],
                self.active[i]
            )?;
        }
        Ok(())
    }
}

/// Build a set from the process's current state.
pub fn realize_on_grid<P: WealthProcess + ?Sized>(
    process: &P,
    candidates: &[ProbVector],
    delta: f64,
) -> Result<ConfidenceSet> {
    let mut set = ConfidenceSet::new(candidates, delta)?;
    set.refresh(process)?;
    Ok(set)
}

/// Feed one observation to the process and refresh the set.
pub fn update<P: WealthProcess + ?Sized>(
    set: &mut ConfidenceSet,
    process: &mut P,
    y: &ProbVector,
) -> Result<()> {
    process.observe(y)?;
    set.refresh(process)
}

/// A process and the running-intersection set it induces.
#[derive(Debug, Clone)]
pub struct ConfidenceSequence<P> {
    process: P,
    set: ConfidenceSet,
}

impl<P: WealthProcess> ConfidenceSequence<P> {
    pub fn new(process: P, candidates: &[ProbVector], delta: f64) -> Result<Self> {
        let set = realize_on_grid(&process, candidates, delta)?;
        Ok(ConfidenceSequence { process, set })
    }

    pub fn observe(&mut self, y: &ProbVector) -> Result<()> {
        update(&mut self.set, &mut self.process, y)
    }

    pub fn process(&self) -> &P {
        &self.process
    }

    pub fn set(&self) -> &ConfidenceSet {
        &self.set
    }

    pub fn into_parts(self) -> (P, ConfidenceSet) {
        (self.process, self.set)
    }
}

/// Radius of the KT set written as a KL ball around the empirical mean:
/// `m` is in the set iff `D(μ̂‖m)` is below this value.
pub fn kt_kl_threshold(counts: &[f64], delta: f64, prior: &DirichletPrior) -> Result<f64> {
    check_dim(prior.dim(), counts.len())?;
    let t: f64 = counts.iter().sum();
    if t.is_nan() || t <= 0.0 {
        return Err(Error::InvalidInput(
            "KL radius needs at least one observation".into(),
        ));
    }
    let mu_hat: Vec<f64> = counts.iter().map(|&c| c / t).collect();
    let h = shannon_entropy(&mu_hat);
    Ok((log_threshold(delta)? - t * h - prior.log_q(counts)) / t)
}

/// KL-ball form of KT membership.
pub fn kt_kl_membership(
    counts: &[f64],
    m: &ProbVector,
    delta: f64,
    prior: &DirichletPrior,
) -> Result<bool> {
    let radius = kt_kl_threshold(counts, delta, prior)?;
    let t: f64 = counts.iter().sum();
    let mu_hat: Vec<f64> = counts.iter().map(|&c| c / t).collect();
    Ok(kl_divergence(&mu_hat, m.as_slice())? < radius)
}

/// Coordinatewise lower bounds `m_j > (δ q^KT(k))^{1/k_j}` (zero when
/// `k_j = 0`) that hold for every member of the KT set.
///
/// Membership means `q(k) Π_i m_i^{-k_i} < 1/δ`, and every factor with
/// `i ≠ j` is at least one. When `k_j = t` this equals
/// `(k_j / t)(δ q(k))^{1/t}`; for other counts that Jensen-style form can cut
/// off members and is not used.
pub fn kt_lower_bounds(
    counts: &CountVector,
    delta: f64,
    prior: &DirichletPrior,
) -> Result<Vec<f64>> {
    check_dim(prior.dim(), counts.dim())?;
    log_threshold(delta)?;
    if counts.total() == 0 {
        return Err(Error::InvalidInput(
            "lower bound needs at least one observation".into(),
        ));
    }
    let log_dq = delta.ln() + prior.log_q(&counts.to_f64());
    Ok(counts
        .as_slice()
        .iter()
        .map(|&k| {
            if k == 0 {
                0.0
            } else {
                (log_dq / k as f64).exp()
            }
        })
        .collect())
}

/// Two leading terms of the large-sample KL radius,
/// `ln(1/δ)/t + (K − 1) ln t / (2t)`.
pub fn kt_asymptotic_radius(t: usize, k: usize, delta: f64) -> Result<f64> {
    if t < 2 {
        return Err(Error::InvalidInput(format!(
            "asymptotic radius needs t >= 2, got {t}"
        )));
    }
    let tf = t as f64;
    Ok(log_threshold(delta)? / tf + (k as f64 - 1.0) / (2.0 * tf) * tf.ln())
}

/// Boundary of the current (single-time) set of a three-horse process,
/// traced by bisection along `rays` directions from `center`.
///
/// Relies on convexity of the set: along each ray membership is an interval
/// containing `center`. Returns one boundary point per ray.
pub fn boundary_on_rays<P: WealthProcess + ?Sized>(
    process: &P,
    center: &ProbVector,
    delta: f64,
    rays: usize,
    steps: usize,
) -> Result<Vec<ProbVector>> {
    if process.dim() != 3 {
        return Err(Error::InvalidInput(
            "ray tracing is implemented for K = 3".into(),
        ));
    }
    check_dim(3, center.dim())?;
    let threshold = log_threshold(delta)? + process.log_level_offset();
    let at_center = process.log_wealth_at(center.as_slice());
    if at_center.is_nan() || at_center >= threshold {
        return Err(Error::InvalidInput(
            "ray center is not inside the set".into(),
        ));
    }
    let c = center.as_slice();
    // orthonormal basis of the plane Σ x = 0
    let u = [1.0 / 2f64.sqrt(), -1.0 / 2f64.sqrt(), 0.0];
    let v = [1.0 / 6f64.sqrt(), 1.0 / 6f64.sqrt(), -2.0 / 6f64.sqrt()];
    let mut out = Vec::with_capacity(rays);
    for r in 0..rays {
        let angle = std::f64::consts::TAU * r as f64 / rays as f64;
        let d: Vec<f64> = (0..3)
            .map(|j| angle.cos() * u[j] + angle.sin() * v[j])
            .collect();
        // largest step keeping every coordinate nonnegative
        let s_max = (0..3)
            .filter(|&j| d[j] < 0.0)
            .map(|j| -c[j] / d[j])
            .fold(f64::INFINITY, f64::min);
        let at = |s: f64| -> Vec<f64> { (0..3).map(|j| (c[j] + s * d[j]).max(0.0)).collect() };
        let (mut lo, mut hi) = (0.0, s_max);
        if process.log_wealth_at(&at(hi)) < threshold {
            lo = hi;
        } else {
            for _ in 0..steps {
                let mid = 0.5 * (lo + hi);
                if process.log_wealth_at(&at(mid)) < threshold {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
        }
        let mut p = at(lo);
        let s: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= s);
        out.push(ProbVector::new(p)?);
    }
    Ok(out)
}
