#![allow(dead_code)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use record_erasure::game::{build_best_reply_chain, erasure_cost_bound, validate_assumptions, StageGame};
use record_erasure::solver::{prepare, regime_diagnostics, reputation_failure_cutoff, Discounting};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn cumsum(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut acc = 0.0;
    (0..n)
        .map(|_| {
            let v = acc;
            acc += rng.random_range(lo..hi);
            v
        })
        .collect()
}

/// A random game satisfying every assumption, with the given action counts.
pub fn random_game(rng: &mut ChaCha8Rng, m1: usize, m2: usize) -> StageGame {
    loop {
        let a = cumsum(rng, m2, 0.5, 2.0);
        let b = cumsum(rng, m1, 0.5, 2.0);
        let u1: Vec<Vec<f64>> =
            (0..m1).map(|i| (0..m2).map(|j| a[j] - b[i] + rng.random_range(-0.2..0.2)).collect()).collect();
        let h = cumsum(rng, m2, 0.3, 1.5);
        let th = cumsum(rng, m1, 0.3, 1.5);
        let g: Vec<f64> = (0..m2).map(|_| rng.random_range(-2.0..2.0)).collect();
        let u2: Vec<Vec<f64>> = (0..m1).map(|i| (0..m2).map(|j| g[j] + th[i] * h[j]).collect()).collect();
        let star = rng.random_range(1..m1);
        let labels = |p: &str, n: usize| (0..n).map(|i| format!("{p}{i}")).collect::<Vec<_>>();
        let Ok(game) = StageGame::new(labels("a", m1), labels("b", m2), u1, u2, star, 0.0) else {
            continue;
        };
        if !validate_assumptions(&game).is_valid() || build_best_reply_chain(&game).is_err() {
            continue;
        }
        let Ok(bound) = erasure_cost_bound(&game) else { continue };
        let c = bound.c_bar * rng.random_range(0.2..0.8);
        let game = game.with_erase_cost(c).unwrap();
        if prepare(&game).is_ok() {
            return game;
        }
    }
}

/// A random game with parameters inside the regime where the bounds force
/// the payoff `(1−δ)c/δ`.
pub fn random_forced_to_bound_instance(rng: &mut ChaCha8Rng) -> (StageGame, Discounting, f64) {
    loop {
        let (m1, m2) = (rng.random_range(2..4), rng.random_range(2..4));
        let game = random_game(rng, m1, m2);
        let chain = build_best_reply_chain(&game).unwrap();
        let pi_star = chain.pi_star();
        let pi = pi_star + rng.random_range(0.05..0.9) * (1.0 - pi_star);
        let delta_hat = rng.random_range(0.6..0.95);
        let cutoff = reputation_failure_cutoff(&game, delta_hat, pi).unwrap();
        if cutoff >= 1.0 {
            continue;
        }
        let delta_bar = cutoff + rng.random_range(0.1..0.9) * (1.0 - cutoff);
        let Ok(disc) = Discounting::new(delta_hat, delta_bar) else { continue };
        if regime_diagnostics(&game, &chain, &disc, pi).unwrap().forced_to_bound {
            return (game, disc, pi);
        }
    }
}
