use gambling_cs::confset::{kt_kl_membership, kt_kl_threshold, membership};
use gambling_cs::numerics::log_sum_exp;
use gambling_cs::simplex::empirical_mean;
use gambling_cs::wealth::{constant_bettor_log_wealth, kt_log_wealth, scaled_bet, up_log_wealth};
use gambling_cs::{DirichletPrior, ProbVector, UpState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Normalized exponentials; a Dirichlet(1, ..., 1) draw. `power` > 1 pushes
/// mass toward the faces.
fn random_simplex(rng: &mut ChaCha8Rng, k: usize, power: f64) -> ProbVector {
    let raw: Vec<f64> = (0..k)
        .map(|_| (-(rng.random::<f64>().max(1e-300)).ln()).powf(power))
        .collect();
    let s: f64 = raw.iter().sum();
    ProbVector::new(raw.iter().map(|x| x / s).collect()).unwrap()
}

fn one_hot_dfs(
    state: &UpState,
    counts: &mut Vec<f64>,
    depth: usize,
    rng: &mut ChaCha8Rng,
    checked: &mut usize,
) {
    let k = state.dim();
    let prior = DirichletPrior::kt(k);
    for _ in 0..50 {
        let m = random_simplex(rng, k, 1.0);
        let up = up_log_wealth(state, &m).unwrap().value();
        let kt = kt_log_wealth(counts, &m, &prior).unwrap().value();
        assert!(
            (up - kt).abs() <= 1e-9,
            "up {up} vs kt {kt} at counts {counts:?}"
        );
        *checked += 1;
    }
    if depth == 0 {
        return;
    }
    for j in 0..k {
        let next = state.absorb(&ProbVector::vertex(k, j).unwrap()).unwrap();
        counts[j] += 1.0;
        one_hot_dfs(&next, counts, depth - 1, rng, checked);
        counts[j] -= 1.0;
    }
}

#[test]
fn universal_portfolio_equals_kt_on_one_hot_sequences() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut checked = 0;
    for k in 2..=4 {
        let state = UpState::new(DirichletPrior::kt(k));
        one_hot_dfs(&state, &mut vec![0.0; k], 8, &mut rng, &mut checked);
    }
    assert!(checked > 4_000_000);
}

#[test]
fn up_table_stays_normalized() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for k in 2..=4 {
        for _ in 0..4 {
            let mut state = UpState::new(DirichletPrior::kt(k));
            for _ in 0..50 {
                state
                    .absorb_in_place(&random_simplex(&mut rng, k, 2.0))
                    .unwrap();
                let total = log_sum_exp(state.table()).exp();
                assert!(
                    (total - 1.0).abs() <= 1e-9,
                    "mass {total} at t={}",
                    state.time()
                );
            }
        }
    }
}

#[test]
fn no_constant_bettor_profits_at_the_empirical_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..1000 {
        let k = 2 + case % 4;
        let t = 1 + rng.random_range(0..30);
        let obs: Vec<ProbVector> = (0..t).map(|_| random_simplex(&mut rng, k, 3.0)).collect();
        let b = random_simplex(&mut rng, k, 1.5);
        let mu_hat = empirical_mean(&obs).unwrap();
        let w = constant_bettor_log_wealth(&obs, &b, &mu_hat)
            .unwrap()
            .value();
        assert!(w <= 1e-12, "constant bettor earned {w}");
        if case % 8 == 0 {
            let mut state = UpState::new(DirichletPrior::kt(k));
            for y in &obs {
                state.absorb_in_place(y).unwrap();
            }
            let up = up_log_wealth(&state, &mu_hat).unwrap().value();
            assert!(up <= 1e-12, "universal portfolio earned {up}");
        }
    }
}

#[test]
fn kt_wealth_has_unit_mean_at_the_truth() {
    let mu = [0.6, 0.25, 0.15];
    let m = ProbVector::new(mu.to_vec()).unwrap();
    let prior = DirichletPrior::kt(3);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for &t in &[1usize, 2, 5] {
        let trials = 100_000;
        let (mut sum, mut sq) = (0.0, 0.0);
        for _ in 0..trials {
            let mut counts = [0.0; 3];
            for _ in 0..t {
                let u: f64 = rng.random();
                let j = if u < mu[0] {
                    0
                } else if u < mu[0] + mu[1] {
                    1
                } else {
                    2
                };
                counts[j] += 1.0;
            }
            let w = kt_log_wealth(&counts, &m, &prior).unwrap().exp();
            sum += w;
            sq += w * w;
        }
        let mean = sum / trials as f64;
        let se = ((sq / trials as f64 - mean * mean) / trials as f64).sqrt();
        assert!(
            (mean - 1.0).abs() <= 3.0 * se,
            "t={t}: mean {mean}, se {se}"
        );
    }
}

#[test]
fn two_horse_gain_is_a_scaled_bet() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10_000 {
        let b: f64 = rng.random();
        let y: f64 = rng.random();
        let m: f64 = rng.random_range(0.01..0.99);
        let gain = b * y / m + (1.0 - b) * (1.0 - y) / (1.0 - m);
        let bridged = 1.0 + scaled_bet(b, m) * (y - m);
        assert!(
            (gain - bridged).abs() <= 1e-12 * gain.abs().max(1.0),
            "{gain} vs {bridged}"
        );
    }
}

#[test]
fn kl_ball_and_wealth_tests_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..1000 {
        let k = rng.random_range(2..=5);
        let prior = DirichletPrior::kt(k);
        let counts: Vec<f64> = (0..k).map(|_| rng.random_range(0..20) as f64).collect();
        let t: f64 = counts.iter().sum();
        if t == 0.0 {
            continue;
        }
        let m = random_simplex(&mut rng, k, 1.0);
        let delta = rng.random_range(0.001..0.5);
        let w = kt_log_wealth(&counts, &m, &prior).unwrap();
        let by_wealth = membership(w, delta).unwrap();
        let by_kl = kt_kl_membership(&counts, &m, delta, &prior).unwrap();
        // same inequality after dividing by t; only a rounding-level tie may differ
        let mu_hat: Vec<f64> = counts.iter().map(|c| c / t).collect();
        let d = gambling_cs::numerics::kl_divergence(&mu_hat, m.as_slice()).unwrap();
        let gap_kl = d - kt_kl_threshold(&counts, delta, &prior).unwrap();
        let gap_w = (w.value() + delta.ln()) / t;
        assert!(
            (gap_kl - gap_w).abs() <= 1e-12 * gap_w.abs().max(1.0),
            "{gap_kl} vs {gap_w}"
        );
        if gap_w.abs() > 1e-12 {
            assert_eq!(by_wealth, by_kl);
        }
    }
}
