//! Data generators. Every stream is a pure function of `(seed, trial)`.

use gambling_cs::{CountVector, ProbVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{HarnessError, Result};

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Independent generator for one trial. Trials never share state, so the
/// order they run in does not matter.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(trial)))
}

/// `horizon` i.i.d. one-hot draws with mean `mu`.
pub fn gen_categorical<R: Rng>(mu: &ProbVector, horizon: usize, rng: &mut R) -> Vec<ProbVector> {
    let k = mu.dim();
    (0..horizon)
        .map(|_| {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut j = k - 1;
            for (i, &p) in mu.as_slice().iter().enumerate() {
                acc += p;
                if u < acc {
                    j = i;
                    break;
                }
            }
            // skip zero-probability categories that rounding could land on
            while mu.as_slice()[j] == 0.0 {
                j -= 1;
            }
            ProbVector::vertex(k, j).expect("index in range")
        })
        .collect()
}

/// `horizon` i.i.d. Dirichlet(`conc`) points, by normalized gamma variates.
pub fn gen_dirichlet<R: Rng>(conc: &[f64], horizon: usize, rng: &mut R) -> Result<Vec<ProbVector>> {
    if conc.len() < 2 || conc.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
        return Err(HarnessError::Config(format!(
            "Dirichlet concentrations must be positive, got {conc:?}"
        )));
    }
    let gammas: Vec<Gamma<f64>> = conc
        .iter()
        .map(|&a| Gamma::new(a, 1.0).map_err(|e| HarnessError::Config(e.to_string())))
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(horizon);
    while out.len() < horizon {
        let raw: Vec<f64> = gammas.iter().map(|g| g.sample(rng)).collect();
        let s: f64 = raw.iter().sum();
        // all-underflow draws are possible for tiny concentrations; redraw
        if s.is_nan() || s <= 0.0 {
            continue;
        }
        out.push(ProbVector::new(raw.iter().map(|x| x / s).collect())?);
    }
    Ok(out)
}

/// A uniformly random ordering of the population described by `census`,
/// as 0-based category labels.
pub fn gen_wor<R: Rng>(census: &CountVector, rng: &mut R) -> Vec<usize> {
    let mut draws: Vec<usize> = census
        .as_slice()
        .iter()
        .enumerate()
        .flat_map(|(j, &c)| std::iter::repeat_n(j, c as usize))
        .collect();
    draws.shuffle(rng);
    draws
}
