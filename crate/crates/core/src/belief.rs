//! Geometric age prior and the Bayesian recursion linking player 2's beliefs
//! `x_k` to the opportunistic type's play probabilities `p_k` and history
//! masses `μ_k`.
//!
//! The general step allows an erase probability `e_k` after `a̲₁` at `h_*^k`:
//! stationarity reads `μ_k (1 − δ̄ e_k (1 − p_k)) = A_k` with inflow
//! `A_0 = 1 − δ̄` and `A_k = δ̄ μ_{k−1} p_{k−1}`. With `e_k = 1` this is the
//! usual closed form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::EquilibriumProfile;

/// Play probabilities at or below this are an exact zero.
pub const P_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgePrior {
    delta_bar: f64,
}

impl AgePrior {
    pub fn new(delta_bar: f64) -> Result<Self> {
        if !(delta_bar > 0.0 && delta_bar < 1.0) {
            return Err(Error::InvalidDiscount { name: "delta_bar", value: delta_bar });
        }
        Ok(Self { delta_bar })
    }

    pub fn delta_bar(&self) -> f64 {
        self.delta_bar
    }

    /// Probability that the long-run player's age is `t`.
    pub fn mass(&self, t: usize) -> f64 {
        (1.0 - self.delta_bar) * self.delta_bar.powi(t as i32)
    }

    /// Probability that the age is at least `t`.
    pub fn tail(&self, t: usize) -> f64 {
        self.delta_bar.powi(t as i32)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BeliefPath {
    pub p_star: Vec<f64>,
    pub mu_star: Vec<f64>,
    pub x: Vec<f64>,
    /// Erase probability after `a̲₁` at `h_*^k`.
    pub erase: Vec<f64>,
    /// `π_0 … π_t`.
    pub reputation: Vec<f64>,
    /// Likelihood ratio `π / (1 − π)`.
    pub l: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BeliefRun {
    pub p_star: Vec<f64>,
    pub mu_star: Vec<f64>,
}

pub fn likelihood_ratio(pi: f64) -> f64 {
    pi / (1.0 - pi)
}

/// `p₀*` for `x₀`, `l` and `δ̄` when erasure follows `a̲₁` for sure.
pub fn p0_closed_form(x0: f64, l: f64, delta_bar: f64) -> Result<f64> {
    let numerator = x0 - (1.0 - delta_bar) * l * (1.0 - x0);
    if numerator < 0.0 {
        return Err(Error::NoInteriorSolution { k: 0, numerator });
    }
    Ok(numerator / (1.0 + delta_bar * l * (1.0 - x0)))
}

/// One step: the raw (unclamped) `p_k` and the matching `μ_k` given the
/// inflow into `h_*^k`.
pub fn belief_step(inflow: f64, x: f64, erase: f64, l: f64, delta_bar: f64, k: usize) -> (f64, f64) {
    let c = l * (1.0 - delta_bar) * delta_bar.powi(k as i32);
    let num = inflow * x - c * (1.0 - x) * (1.0 - delta_bar * erase);
    let den = inflow + c * (1.0 - x) * delta_bar * erase;
    let p = if den > 0.0 { num / den } else { 0.0 };
    (p, stationary_mass(inflow, p, erase, delta_bar))
}

/// `μ_k` from the stationarity identity.
pub fn stationary_mass(inflow: f64, p: f64, erase: f64, delta_bar: f64) -> f64 {
    inflow / (1.0 - delta_bar * erase * (1.0 - p))
}

/// Recursion with erasure after `a̲₁` for sure. Stops once `p_k ≤ 1e−10`
/// (that `k` is `t − 1`) or when `x` runs out.
pub fn forward_belief_recursion(x: &[f64], l: f64, delta_bar: f64) -> Result<BeliefRun> {
    forward_belief_recursion_with_erasure(x, &vec![1.0; x.len()], l, delta_bar)
}

pub fn forward_belief_recursion_with_erasure(x: &[f64], erase: &[f64], l: f64, delta_bar: f64) -> Result<BeliefRun> {
    if erase.len() != x.len() {
        return Err(Error::ShapeMismatch("x and erase lengths differ".into()));
    }
    let mut run = BeliefRun::default();
    let mut inflow = 1.0 - delta_bar;
    for (k, (&xk, &ek)) in x.iter().zip(erase).enumerate() {
        let (p, _) = belief_step(inflow, xk, ek, l, delta_bar, k);
        if k == 0 && p < -P_TOL {
            let numerator = inflow * xk - l * (1.0 - delta_bar) * (1.0 - xk) * (1.0 - delta_bar * ek);
            return Err(Error::NoInteriorSolution { k, numerator });
        }
        let p = if p <= P_TOL { 0.0 } else { p };
        let mu = stationary_mass(inflow, p, ek, delta_bar);
        if mu.is_nan() || mu < 0.0 {
            return Err(Error::NegativeMass { k });
        }
        run.p_star.push(p);
        run.mu_star.push(mu);
        if p == 0.0 {
            break;
        }
        inflow = delta_bar * mu * p;
    }
    Ok(run)
}

/// Player 2's belief on `a₁*` at `h_*^k`.
pub fn posterior_x(pi: f64, delta_bar: f64, k: usize, mu: f64, p: f64) -> Result<f64> {
    let low = (1.0 - pi) * mu * (1.0 - p);
    if low.is_nan() || low <= 0.0 {
        return Err(Error::DegenerateHistory);
    }
    let high = pi * (1.0 - delta_bar) * delta_bar.powi(k as i32) + (1.0 - pi) * mu * p;
    Ok(high / (high + low))
}

/// Posterior on the honest type at `h_*^k`.
pub fn reputation_at(pi: f64, delta_bar: f64, k: usize, mu: f64) -> f64 {
    if pi <= 0.0 {
        return 0.0;
    }
    let h = pi * (1.0 - delta_bar) * delta_bar.powi(k as i32);
    h / (h + (1.0 - pi) * mu)
}

/// Stationary mass over player-2 histories, per type.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordDistribution {
    /// Honest mass at `h_*^k`; the last entry is the tail `k ≥ len − 1`.
    pub honest: Vec<f64>,
    /// Opportunistic mass at `h_*^k` for `k = 0..=t`.
    pub opportunistic_chain: Vec<f64>,
    /// Opportunistic mass `j` periods after separation; the last entry is the
    /// tail.
    pub opportunistic_separated: Vec<f64>,
}

impl RecordDistribution {
    pub fn opportunistic_total(&self) -> f64 {
        self.opportunistic_chain.iter().sum::<f64>() + self.opportunistic_separated.iter().sum::<f64>()
    }

    pub fn honest_total(&self) -> f64 {
        self.honest.iter().sum()
    }
}

fn geometric_with_tail(first: f64, delta_bar: f64, len: usize) -> Vec<f64> {
    let mut out: Vec<f64> = (0..len - 1).map(|j| first * delta_bar.powi(j as i32)).collect();
    out.push(first * delta_bar.powi(len as i32 - 1) / (1.0 - delta_bar));
    out
}

/// Stationary record distribution with `len` buckets per geometric tail.
pub fn record_distribution_with_len(
    profile: &EquilibriumProfile,
    path: &BeliefPath,
    pi: f64,
    delta_bar: f64,
    len: usize,
) -> RecordDistribution {
    let len = len.max(2);
    let honest = if pi > 0.0 { geometric_with_tail(1.0 - delta_bar, delta_bar, len) } else { vec![0.0; len] };

    let t = profile.t;
    let mut chain = path.mu_star[..t.min(path.mu_star.len())].to_vec();
    let inflow = if t == 0 { 1.0 - delta_bar } else { delta_bar * path.mu_star[t - 1] * path.p_star[t - 1] };
    let tail_erase = profile.tail_erase_prob();
    chain.push(stationary_mass(inflow, 0.0, tail_erase, delta_bar));

    let mut leave = 0.0;
    for (k, m) in chain.iter().enumerate() {
        let (p, e) = if k < t { (path.p_star[k], path.erase[k]) } else { (0.0, tail_erase) };
        leave += m * (1.0 - p) * (1.0 - e);
    }
    let separated = geometric_with_tail(delta_bar * leave, delta_bar, len);
    RecordDistribution { honest, opportunistic_chain: chain, opportunistic_separated: separated }
}

/// Stationary record distribution, tails folded where the geometric mass
/// falls below `1e−10`.
pub fn record_distribution(
    profile: &EquilibriumProfile,
    path: &BeliefPath,
    pi: f64,
    delta_bar: f64,
) -> RecordDistribution {
    let len = (1e-10_f64.ln() / delta_bar.ln()).ceil() as usize + 1;
    record_distribution_with_len(profile, path, pi, delta_bar, len)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p0_hand_value() {
        let p0 = p0_closed_form(0.5, 1.0, 0.9).unwrap();
        assert!((p0 - 0.45 / 1.45).abs() < 1e-15);
        assert!((p0 - 0.310345).abs() < 1e-6);
        assert_eq!(p0_closed_form(0.3, 0.0, 0.9).unwrap(), 0.3);
        let edge = 0.5 / (0.5 * 0.1);
        assert!(p0_closed_form(0.5, edge * 1.001, 0.9).is_err());
    }

    #[test]
    fn recursion_first_step() {
        let run = forward_belief_recursion(&[0.5; 3], 1.0, 0.9).unwrap();
        assert!((run.p_star[0] - 0.310345).abs() < 1e-6);
        assert!((run.mu_star[0] - 0.263636).abs() < 1e-6);
        let residual = run.mu_star[0] * (0.5 - run.p_star[0]) / 0.5 - 0.1;
        assert!(residual.abs() < 1e-12);
        let x = posterior_x(0.5, 0.9, 0, run.mu_star[0], run.p_star[0]).unwrap();
        assert!((x - 0.5).abs() < 1e-12);
    }

    #[test]
    fn no_honest_mass_copies_beliefs() {
        let run = forward_belief_recursion(&[0.4; 5], 0.0, 0.95).unwrap();
        assert!(run.p_star.iter().all(|p| (p - 0.4).abs() < 1e-15));
        assert!((posterior_x(0.0, 0.95, 2, run.mu_star[2], 0.4).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn reputation_edges() {
        assert_eq!(reputation_at(0.0, 0.9, 3, 0.2), 0.0);
        assert_eq!(reputation_at(0.4, 0.9, 3, 0.0), 1.0);
        assert!(reputation_at(0.5, 0.999_999, 0, 1.0) < 1e-5);
        assert!(matches!(posterior_x(0.5, 0.9, 0, 0.3, 1.0), Err(Error::DegenerateHistory)));
    }

    #[test]
    fn zero_play_absorbs_at_root() {
        let (p, mu) = belief_step(0.1, 0.0, 1.0, 0.0, 0.9, 0);
        assert_eq!(p, 0.0);
        assert!((mu - 1.0).abs() < 1e-12);
    }
}
