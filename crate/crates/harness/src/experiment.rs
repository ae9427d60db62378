//! Running trials and summarizing them.

use std::fmt;
use std::str::FromStr;

use gambling_cs::baselines::{
    mardia_radius, sanov_radius, Aggregation, ClopperPearsonBox, CoordinateProcess,
};
use gambling_cs::confset::{log_threshold, ConfidenceSet, KtProcess, UpProcess, WealthProcess};
use gambling_cs::numerics::kl_divergence;
use gambling_cs::simplex::{binomial, simplex_lattice};
use gambling_cs::wor::{AuditState, WorMethod};
use gambling_cs::{CountVector, DirichletPrior, ProbVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::generate::{gen_categorical, gen_dirichlet, gen_wor, trial_rng};

/// Methods for i.i.d. simplex-valued data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Kt,
    Up,
    Kt2Mix,
    Kt2Bonf,
    Up2Mix,
    Up2Bonf,
    Sanov,
    Mardia,
    CpBonf,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Kt => "kt",
            Method::Up => "up",
            Method::Kt2Mix => "kt2-mix",
            Method::Kt2Bonf => "kt2-bonf",
            Method::Up2Mix => "up2-mix",
            Method::Up2Bonf => "up2-bonf",
            Method::Sanov => "sanov",
            Method::Mardia => "mardia",
            Method::CpBonf => "cp-bonf",
        }
    }

    /// Whether the guarantee holds over all times at once.
    pub fn time_uniform(self) -> bool {
        !matches!(self, Method::Sanov | Method::Mardia | Method::CpBonf)
    }

    fn categorical_only(self) -> bool {
        !self.time_uniform()
    }

    /// A fresh wealth process for a time-uniform method.
    pub fn process(self, k: usize) -> Result<Box<dyn WealthProcess>> {
        Ok(match self {
            Method::Kt => Box::new(KtProcess::new(DirichletPrior::kt(k))),
            Method::Up => Box::new(UpProcess::new(DirichletPrior::kt(k))),
            Method::Kt2Mix => Box::new(CoordinateProcess::kt(k, Aggregation::Mixture)?),
            Method::Kt2Bonf => Box::new(CoordinateProcess::kt(k, Aggregation::Bonferroni)?),
            Method::Up2Mix => Box::new(CoordinateProcess::up(k, Aggregation::Mixture)?),
            Method::Up2Bonf => Box::new(CoordinateProcess::up(k, Aggregation::Bonferroni)?),
            other => unreachable!("{other} has no wealth process"),
        })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "kt" => Method::Kt,
            "up" => Method::Up,
            "kt2-mix" => Method::Kt2Mix,
            "kt2-bonf" => Method::Kt2Bonf,
            "up2-mix" => Method::Up2Mix,
            "up2-bonf" => Method::Up2Bonf,
            "sanov" => Method::Sanov,
            "mardia" => Method::Mardia,
            "cp-bonf" => Method::CpBonf,
            other => return Err(HarnessError::UnknownMethod(other.to_string())),
        })
    }
}

/// Requested but deliberately absent; reported in the summary.
pub const NOT_IMPLEMENTED: &[&str] = &["sison-glaz"];

/// One output line: a method's state in one trial at one time. In
/// without-replacement mode there is one line per permutation, at the
/// stopping time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub method: String,
    pub trial: usize,
    pub t: usize,
    pub volume: f64,
    pub covered: bool,
    pub active_count: usize,
    pub stop_t: Option<usize>,
    pub time_uniform: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StopSummary {
    pub mean: f64,
    /// Permutations that never decided, counted at `N`.
    pub undecided: usize,
    pub bin_width: usize,
    pub histogram: Vec<usize>,
    /// Share of permutations whose true census was still active at the end.
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub time_uniform: bool,
    /// Mean relative volume per time step.
    pub volume: Vec<f64>,
    /// Share of trials whose set contains the truth at each step.
    pub coverage: Vec<f64>,
    /// Share of trials whose set contained the truth at every step so far.
    pub uniform_coverage: Vec<f64>,
    pub stop: Option<StopSummary>,
}

/// Stopping times of the remaining-mean audit relative to the posterior
/// ratio audit, over the same permutations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StopRatio {
    pub numerator: String,
    pub denominator: String,
    pub mean_ratio: f64,
    pub ratio_of_means: f64,
    pub share_no_later: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub methods: Vec<MethodSummary>,
    pub not_implemented: Vec<String>,
    pub stop_ratio: Option<StopRatio>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Results {
    pub config: ExperimentConfig,
    pub rows: Vec<Row>,
    pub summary: Summary,
}

/// Run every trial and method of `config`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Results> {
    config.validate()?;
    let mut not_implemented = Vec::new();
    let mut names = Vec::new();
    for m in &config.methods {
        let m = m.trim();
        if NOT_IMPLEMENTED.contains(&m) {
            not_implemented.push(m.to_string());
        } else {
            names.push(m.to_string());
        }
    }
    let (rows, mut summary) = if config.is_without_replacement() {
        let methods = names
            .iter()
            .map(|s| {
                s.parse::<WorMethod>()
                    .map_err(|_| HarnessError::UnknownMethod(s.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        run_without_replacement(config, &methods)?
    } else {
        let methods = names
            .iter()
            .map(|s| s.parse::<Method>())
            .collect::<Result<Vec<_>>>()?;
        run_simplex(config, &methods)?
    };
    summary.not_implemented = not_implemented;
    Ok(Results {
        config: config.clone(),
        rows,
        summary,
    })
}

enum Law {
    Categorical(ProbVector),
    Dirichlet(Vec<f64>),
}

fn run_simplex(config: &ExperimentConfig, methods: &[Method]) -> Result<(Vec<Row>, Summary)> {
    let (law, truth) = match (&config.mu, &config.conc) {
        (Some(mu), _) => {
            let mu = ProbVector::new(mu.clone())?;
            (Law::Categorical(mu.clone()), mu)
        }
        (_, Some(conc)) => {
            let s: f64 = conc.iter().sum();
            let truth = ProbVector::new(conc.iter().map(|a| a / s).collect())?;
            (Law::Dirichlet(conc.clone()), truth)
        }
        _ => unreachable!("validated"),
    };
    if matches!(law, Law::Dirichlet(_)) {
        if let Some(m) = methods.iter().find(|m| m.categorical_only()) {
            return Err(HarnessError::Config(format!(
                "method {m} needs categorical data (give --mu)"
            )));
        }
    }
    let cands = simplex_lattice(config.k, config.grid())?;
    let horizon = config.t;

    let per_trial: Vec<Vec<Vec<Row>>> = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(config.seed, trial as u64);
            let data = match &law {
                Law::Categorical(mu) => gen_categorical(mu, horizon, &mut rng),
                Law::Dirichlet(conc) => gen_dirichlet(conc, horizon, &mut rng)?,
            };
            methods
                .iter()
                .map(|&m| simplex_trial(m, trial, &data, &truth, &cands, config.delta))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::with_capacity(methods.len() * config.trials * (horizon + 1));
    let mut summaries = Vec::with_capacity(methods.len());
    for (mi, m) in methods.iter().enumerate() {
        let mut volume = vec![0.0; horizon + 1];
        let mut coverage = vec![0.0; horizon + 1];
        let mut uniform = vec![0.0; horizon + 1];
        for trial_rows in &per_trial {
            let mut ok = true;
            for r in &trial_rows[mi] {
                volume[r.t] += r.volume;
                coverage[r.t] += f64::from(u8::from(r.covered));
                ok &= r.covered;
                uniform[r.t] += f64::from(u8::from(ok));
            }
            rows.extend(trial_rows[mi].iter().cloned());
        }
        let n = config.trials as f64;
        for v in volume
            .iter_mut()
            .chain(coverage.iter_mut())
            .chain(uniform.iter_mut())
        {
            *v /= n;
        }
        summaries.push(MethodSummary {
            method: m.name().to_string(),
            time_uniform: m.time_uniform(),
            volume,
            coverage,
            uniform_coverage: uniform,
            stop: None,
        });
    }
    // rows are grouped by method, then trial, then time
    rows.sort_by_key(|r| {
        let mi = methods
            .iter()
            .position(|m| m.name() == r.method)
            .unwrap_or(usize::MAX);
        (mi, r.trial, r.t)
    });
    Ok((
        rows,
        Summary {
            methods: summaries,
            not_implemented: Vec::new(),
            stop_ratio: None,
        },
    ))
}

fn row(method: Method, trial: usize, t: usize, active: usize, total: usize, covered: bool) -> Row {
    Row {
        method: method.name().to_string(),
        trial,
        t,
        volume: active as f64 / total as f64,
        covered,
        active_count: active,
        stop_t: None,
        time_uniform: method.time_uniform(),
    }
}

/// Membership in a fixed-time set recomputed at one time.
type MembershipTest = dyn Fn(&ProbVector) -> Result<bool>;

/// Rows `t = 0..=T` for one method on one data stream. Coverage is judged
/// at the exact true mean, not at a lattice point.
pub fn simplex_trial(
    method: Method,
    trial: usize,
    data: &[ProbVector],
    truth: &ProbVector,
    cands: &[ProbVector],
    delta: f64,
) -> Result<Vec<Row>> {
    let total = cands.len();
    let mut rows = Vec::with_capacity(data.len() + 1);
    rows.push(row(method, trial, 0, total, total, true));
    if method.time_uniform() {
        let mut process = method.process(truth.dim())?;
        let mut set = ConfidenceSet::new(cands, delta)?;
        let limit = log_threshold(delta)? + process.log_level_offset();
        let mut truth_max = 0.0f64;
        for (i, y) in data.iter().enumerate() {
            process.observe(y)?;
            set.refresh(process.as_ref())?;
            truth_max = truth_max.max(process.log_wealth_at(truth.as_slice()));
            rows.push(row(
                method,
                trial,
                i + 1,
                set.active_count(),
                total,
                truth_max < limit,
            ));
        }
        return Ok(rows);
    }
    let k = truth.dim();
    let mut counts = CountVector::zeros(k);
    for (i, y) in data.iter().enumerate() {
        let j = y.one_hot_index().ok_or_else(|| {
            HarnessError::Config(format!("method {method} needs one-hot observations"))
        })?;
        counts.increment(j);
        let t = i + 1;
        let mu_hat = counts.empirical_mean()?;
        let inside: Box<MembershipTest> = match method {
            Method::Sanov => {
                let r = sanov_radius(t, k, delta)?;
                Box::new(move |m| Ok(kl_divergence(mu_hat.as_slice(), m.as_slice())? < r))
            }
            Method::Mardia => match mardia_radius(t, k, delta)? {
                // below the applicability gate the set is the whole simplex
                None => Box::new(|_| Ok(true)),
                Some(r) => {
                    Box::new(move |m| Ok(kl_divergence(mu_hat.as_slice(), m.as_slice())? < r))
                }
            },
            Method::CpBonf => {
                let cp = ClopperPearsonBox::new(&counts, delta)?;
                Box::new(move |m| Ok(cp.contains(m.as_slice())))
            }
            _ => unreachable!(),
        };
        let mut active = 0;
        for m in cands {
            active += usize::from(inside(m)?);
        }
        rows.push(row(method, trial, t, active, total, inside(truth)?));
    }
    Ok(rows)
}

/// Outcome of one audit replay.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditOutcome {
    /// First decided time, or `N` when never decided.
    pub stop: usize,
    /// Draws absorbed.
    pub t: usize,
    pub active_count: usize,
    pub truth_active: bool,
}

/// Replay `draws` until the ranking is decided or `N − 1` draws are in.
pub fn replay_audit(
    census: &CountVector,
    method: WorMethod,
    delta: f64,
    draws: &[usize],
) -> Result<AuditOutcome> {
    let n = census.total();
    let mut state = AuditState::new(n, census.dim(), method, delta)?;
    let mut stop = n;
    for &c in draws.iter().take(n - 1) {
        state.absorb(c)?;
        if state.rank_decided() {
            stop = state.time();
            break;
        }
    }
    Ok(AuditOutcome {
        stop,
        t: state.time(),
        active_count: state.active_count(),
        truth_active: state.is_active(census.as_slice()),
    })
}

const HISTOGRAM_BINS: usize = 20;

fn run_without_replacement(
    config: &ExperimentConfig,
    methods: &[WorMethod],
) -> Result<(Vec<Row>, Summary)> {
    let census = CountVector::new(config.census.clone().expect("validated"))?;
    let n = census.total();
    let k = census.dim();
    let total = binomial((n + k - 1) as u64, (k - 1) as u64) as usize;

    let outcomes: Vec<Vec<AuditOutcome>> = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let draws = gen_wor(&census, &mut trial_rng(config.seed, trial as u64));
            methods
                .iter()
                .map(|&m| replay_audit(&census, m, config.delta, &draws))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::with_capacity(methods.len() * config.trials);
    let mut summaries = Vec::new();
    let bin_width = n.div_ceil(HISTOGRAM_BINS).max(1);
    for (mi, m) in methods.iter().enumerate() {
        let mut histogram = vec![0usize; n / bin_width + 1];
        let (mut sum, mut undecided, mut covered) = (0.0, 0, 0);
        for (trial, o) in outcomes.iter().enumerate() {
            let o = &o[mi];
            rows.push(Row {
                method: m.name().to_string(),
                trial,
                t: o.t,
                volume: o.active_count as f64 / total as f64,
                covered: o.truth_active,
                active_count: o.active_count,
                stop_t: Some(o.stop),
                time_uniform: true,
            });
            sum += o.stop as f64;
            histogram[o.stop / bin_width] += 1;
            undecided += usize::from(o.stop == n);
            covered += usize::from(o.truth_active);
        }
        let trials = config.trials as f64;
        summaries.push(MethodSummary {
            method: m.name().to_string(),
            time_uniform: true,
            volume: Vec::new(),
            coverage: Vec::new(),
            uniform_coverage: Vec::new(),
            stop: Some(StopSummary {
                mean: sum / trials,
                undecided,
                bin_width,
                histogram,
                coverage: covered as f64 / trials,
            }),
        });
    }

    let kt = methods.iter().position(|&m| m == WorMethod::WorKt);
    let ppr = methods.iter().position(|&m| m == WorMethod::Ppr);
    let stop_ratio = match (kt, ppr) {
        (Some(a), Some(b)) => {
            let trials = config.trials as f64;
            let ratios: f64 = outcomes
                .iter()
                .map(|o| o[a].stop as f64 / o[b].stop as f64)
                .sum();
            let no_later = outcomes.iter().filter(|o| o[a].stop <= o[b].stop).count();
            let (sa, sb) = outcomes.iter().fold((0.0, 0.0), |acc, o| {
                (acc.0 + o[a].stop as f64, acc.1 + o[b].stop as f64)
            });
            Some(StopRatio {
                numerator: methods[a].name().to_string(),
                denominator: methods[b].name().to_string(),
                mean_ratio: ratios / trials,
                ratio_of_means: sa / sb,
                share_no_later: no_later as f64 / trials,
            })
        }
        _ => None,
    };
    Ok((
        rows,
        Summary {
            methods: summaries,
            not_implemented: Vec::new(),
            stop_ratio,
        },
    ))
}
