//! Disclosure policies for the honest type and the payoff bounds they admit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::StageGame;

/// Truncation mass allowed when summing over true record lengths.
pub const TRUNCATION_LIMIT: f64 = 1e-8;

/// A map from true record length `m` to a distribution over disclosed
/// lengths `n`, stored sparsely.
#[derive(Clone, Debug, PartialEq)]
pub struct DisclosurePolicy {
    rows: Vec<Vec<(usize, f64)>>,
    restrict_n_le_m: bool,
}

#[derive(Serialize, Deserialize)]
struct PolicyJson {
    rows: Vec<Vec<f64>>,
    #[serde(default = "default_restrict")]
    restrict_n_le_m: bool,
}

fn default_restrict() -> bool {
    true
}

/// Smallest `M` with `δ̄^{M+1} < 1e−8`.
pub fn required_max_length(delta_bar: f64) -> usize {
    let mut m = (TRUNCATION_LIMIT.ln() / delta_bar.ln()).ceil() as usize;
    while m > 0 && delta_bar.powi(m as i32) < TRUNCATION_LIMIT {
        m -= 1;
    }
    while delta_bar.powi(m as i32 + 1) >= TRUNCATION_LIMIT {
        m += 1;
    }
    m
}

impl DisclosurePolicy {
    pub fn new(rows: Vec<Vec<(usize, f64)>>, restrict_n_le_m: bool) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidPolicy("no rows".into()));
        }
        for (m, row) in rows.iter().enumerate() {
            if row.iter().any(|&(_, q)| q < 0.0 || !q.is_finite()) {
                return Err(Error::InvalidPolicy(format!("row {m} has a negative or non-finite entry")));
            }
            let total: f64 = row.iter().map(|&(_, q)| q).sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidPolicy(format!("row {m} sums to {total}")));
            }
            if restrict_n_le_m && row.iter().any(|&(n, q)| n > m && q > 0.0) {
                return Err(Error::InvalidPolicy(format!("row {m} discloses a length above {m}")));
            }
        }
        Ok(Self { rows, restrict_n_le_m })
    }

    /// Disclose the true length.
    pub fn full(max_length: usize) -> Self {
        Self::from_fn(max_length, |m| m)
    }

    /// Always disclose length 0.
    pub fn none(max_length: usize) -> Self {
        Self::from_fn(max_length, |_| 0)
    }

    /// Deterministic policy `m ↦ f(m)`.
    pub fn from_fn(max_length: usize, f: impl Fn(usize) -> usize) -> Self {
        let rows: Vec<Vec<(usize, f64)>> = (0..=max_length).map(|m| vec![(f(m), 1.0)]).collect();
        let restrict = rows.iter().enumerate().all(|(m, r)| r[0].0 <= m);
        Self { rows, restrict_n_le_m: restrict }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: PolicyJson = serde_json::from_str(text)?;
        let rows =
            raw.rows.into_iter().map(|r| r.into_iter().enumerate().filter(|&(_, q)| q != 0.0).collect()).collect();
        Self::new(rows, raw.restrict_n_le_m)
    }

    pub fn to_json(&self) -> Result<String> {
        let width = self.max_disclosed() + 1;
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let mut dense = vec![0.0; width];
                for &(n, q) in r {
                    dense[n] += q;
                }
                dense
            })
            .collect();
        Ok(serde_json::to_string(&PolicyJson { rows, restrict_n_le_m: self.restrict_n_le_m })?)
    }

    pub fn max_length(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn max_disclosed(&self) -> usize {
        self.rows.iter().flatten().map(|&(n, _)| n).max().unwrap_or(0)
    }

    pub fn restrict_n_le_m(&self) -> bool {
        self.restrict_n_le_m
    }

    pub fn row(&self, m: usize) -> &[(usize, f64)] {
        &self.rows[m]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnconditionalDisclosed {
    pub q_tilde: Vec<f64>,
    pub truncation_mass: f64,
}

impl UnconditionalDisclosed {
    pub fn at(&self, n: usize) -> f64 {
        self.q_tilde.get(n).copied().unwrap_or(0.0)
    }
}

/// `q̃(n) = Σ_m (1−δ̄)δ̄^m q_m(n)`.
pub fn unconditional_distribution(policy: &DisclosurePolicy, delta_bar: f64) -> Result<UnconditionalDisclosed> {
    let m_max = policy.max_length();
    let truncation_mass = delta_bar.powi(m_max as i32 + 1);
    if truncation_mass >= TRUNCATION_LIMIT {
        return Err(Error::TruncationTooCoarse { mass: truncation_mass, needed: required_max_length(delta_bar) + 1 });
    }
    let mut q_tilde = vec![0.0; policy.max_disclosed() + 1];
    let mut weight = 1.0 - delta_bar;
    for m in 0..=m_max {
        for &(n, q) in policy.row(m) {
            q_tilde[n] += weight * q;
        }
        weight *= delta_bar;
    }
    Ok(UnconditionalDisclosed { q_tilde, truncation_mass })
}

/// Lowest and highest best replies to `π a₁* + (1−π) a̲₁`.
pub fn boundary_best_replies(game: &StageGame, pi: f64) -> (usize, usize) {
    let set = game.u2_posterior_best_reply(pi);
    (set[0], *set.last().unwrap())
}

/// Bounds on the opportunistic type's payoff when nothing is disclosed.
pub fn no_disclosure_bounds(game: &StageGame, pi: f64, delta: f64) -> (f64, f64) {
    let (low, high) = boundary_best_replies(game, pi);
    let c = game.erase_cost();
    let lower = (game.u1(0, low) - c).max(0.0);
    (lower, disclosure_cap_with(game, high, delta))
}

fn disclosure_cap_with(game: &StageGame, high: usize, delta: f64) -> f64 {
    let c = game.erase_cost();
    ((1.0 - delta) * c / delta).max(game.u1(0, high) - c)
}

/// Payoff cap that holds under every disclosure policy.
pub fn disclosure_cap(game: &StageGame, pi: f64, delta: f64) -> f64 {
    disclosure_cap_with(game, boundary_best_replies(game, pi).1, delta)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditRow {
    pub k: usize,
    pub q_tilde: f64,
    pub mu_p: f64,
    pub mass_bound_ok: bool,
    /// Likelihood ratio of `a₁*` at a disclosed length `k`.
    pub ic_lhs: f64,
    /// `x / (1 − x)`.
    pub ic_rhs: f64,
    pub ic_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub rows: Vec<AuditRow>,
    pub sum_mu_p: f64,
    /// `t (1 − δ̄)` with `t` the path length.
    pub mass_budget: f64,
    pub aggregate_ok: bool,
}

impl AuditReport {
    pub fn all_pass(&self) -> bool {
        self.aggregate_ok && self.rows.iter().all(|r| r.mass_bound_ok && r.ic_ok)
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["k", "q_tilde", "mass_bound_ok", "ic_ok"])?;
        for r in &self.rows {
            w.write_record([
                r.k.to_string(),
                crate::report::fmt_num(r.q_tilde),
                r.mass_bound_ok.to_string(),
                r.ic_ok.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Checks a candidate path `(p_k, μ_k)` against the mass bound and player 2's
/// incentive to play above `a̲₂` at each disclosed length.
pub fn audit_constraints(
    p_star: &[f64],
    mu_star: &[f64],
    q_tilde: &UnconditionalDisclosed,
    pi: f64,
    x_required: f64,
    delta_bar: f64,
) -> Result<AuditReport> {
    if p_star.len() != mu_star.len() {
        return Err(Error::ShapeMismatch("p_star and mu_star lengths differ".into()));
    }
    let ic_rhs = x_required / (1.0 - x_required);
    let budget = 1.0 - delta_bar;
    let rows: Vec<AuditRow> = p_star
        .iter()
        .zip(mu_star)
        .enumerate()
        .map(|(k, (&p, &mu))| {
            let q = q_tilde.at(k);
            let den = (1.0 - pi) * mu * (1.0 - p);
            let num = pi * q + (1.0 - pi) * mu * p;
            let ic_lhs = if den > 0.0 { num / den } else { f64::INFINITY };
            AuditRow {
                k,
                q_tilde: q,
                mu_p: mu * p,
                mass_bound_ok: mu * p <= budget + 1e-12,
                ic_lhs,
                ic_rhs,
                ic_ok: ic_lhs >= ic_rhs - 1e-9,
            }
        })
        .collect();
    let sum_mu_p: f64 = rows.iter().map(|r| r.mu_p).sum();
    let mass_budget = rows.len() as f64 * budget;
    Ok(AuditReport { rows, sum_mu_p, mass_budget, aggregate_ok: sum_mu_p <= mass_budget + 1e-12 })
}
