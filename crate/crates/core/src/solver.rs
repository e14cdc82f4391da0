//! Equilibrium value/action path on clean records.
//!
//! The opportunistic type's continuation value at `h_*^k` is
//! `V_k = max{L(β_k) − c, (1−δ) L(β_k)}` with `L(β) = u1(a̲₁, β)` and
//! `H(β) = u1(a₁*, β)`; while he mixes, `V_k = (1−δ) H(β_k) + δ V_{k+1}`.
//! Given `β_0` this pins the whole path. Beliefs are then closed by choosing
//! `β_0` (and, at points where the belief or the erase probability is not
//! pinned, that free quantity) so that `p_{t−1} = 0`.

use serde::{Deserialize, Serialize};

use crate::belief::{belief_step, likelihood_ratio, p0_closed_form, reputation_at, stationary_mass, BeliefPath, P_TOL};
use crate::error::{Error, Result};
use crate::game::{
    build_best_reply_chain, chain_point_with_u1, erasure_cost_bound, incentive_gap, u1_on_chain, validate_assumptions,
    BestReplyChain, ChainPoint, StageGame, TOL,
};

/// Residual tolerance for a consistent profile.
pub const RESIDUAL_TOL: f64 = 1e-8;
const MAX_ITER: usize = 200;
const SNAP: f64 = 1e-9;

pub const DIRECTION_NOTE: &str = "clean-record actions beta_k and reputations pi_k increase with record length k";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Discounting {
    pub delta_hat: f64,
    pub delta_bar: f64,
    pub delta: f64,
}

impl Discounting {
    pub fn new(delta_hat: f64, delta_bar: f64) -> Result<Self> {
        for (name, value) in [("delta_hat", delta_hat), ("delta_bar", delta_bar)] {
            if !(value > 0.0 && value < 1.0) {
                return Err(Error::InvalidDiscount { name, value });
            }
        }
        Ok(Self { delta_hat, delta_bar, delta: delta_hat * delta_bar })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Keep,
    Indifferent,
    Erase,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveBranch {
    Minmax,
    ForcedToBound,
    Search,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiplicityEntry {
    pub k: usize,
    /// Index into the player-2 action labels.
    pub action: usize,
    /// Beliefs on `a₁*` consistent with the pure action.
    pub x_interval: (f64, f64),
    pub x_chosen: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumProfile {
    pub delta_hat: f64,
    pub delta_bar: f64,
    pub pi: f64,
    pub t: usize,
    pub t0: i64,
    /// `β_0 … β_t`; `β_t` is played at every longer clean record.
    pub beta: Vec<ChainPoint>,
    pub values: Vec<f64>,
    pub regimes: Vec<Regime>,
    pub payoff: f64,
    pub branch: SolveBranch,
    pub multiplicity: Vec<MultiplicityEntry>,
    pub notes: Vec<String>,
}

impl EquilibriumProfile {
    pub fn delta(&self) -> f64 {
        self.delta_hat * self.delta_bar
    }

    /// Erase probability after `a̲₁` on records of length `≥ t`.
    pub fn tail_erase_prob(&self) -> f64 {
        match self.regimes[self.t] {
            Regime::Keep => 0.0,
            Regime::Indifferent | Regime::Erase => 1.0,
        }
    }

    /// `β` shown to player 2 on a clean record of length `k`.
    pub fn beta_at(&self, k: usize) -> ChainPoint {
        self.beta[k.min(self.t)]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub profile: EquilibriumProfile,
    pub path: BeliefPath,
}

/// `δ̲ = c / u1(a̲₁, a₂*)`.
pub fn delta_lower(game: &StageGame, chain: &BestReplyChain) -> f64 {
    game.erase_cost() / u1_on_chain(game, chain, 0, &chain.top())
}

fn regime_for_low_payoff(low: f64, c: f64, delta: f64) -> Regime {
    let d = delta * low - c;
    if d.abs() <= TOL {
        Regime::Indifferent
    } else if d > 0.0 {
        Regime::Erase
    } else {
        Regime::Keep
    }
}

/// `max{L(β) − c, (1−δ)L(β)}` and the branch attaining it.
pub fn value_of(game: &StageGame, chain: &BestReplyChain, delta: f64, beta: &ChainPoint) -> (f64, Regime) {
    let low = u1_on_chain(game, chain, 0, beta);
    let c = game.erase_cost();
    let v = (low - c).max((1.0 - delta) * low);
    (v, regime_for_low_payoff(low, c, delta))
}

/// The chain point whose value is `v`.
fn point_with_value(game: &StageGame, chain: &BestReplyChain, delta: f64, v: f64) -> Option<ChainPoint> {
    let c = game.erase_cost();
    let low = if delta * v >= (1.0 - delta) * c { v + c } else { v / (1.0 - delta) };
    chain_point_with_u1(game, chain, 0, low)
}

/// `β†` with `u1(a̲₁, β†) = c/δ`; `None` when `c/δ` exceeds `u1(a̲₁, a₂*)`.
pub fn beta_dagger(game: &StageGame, chain: &BestReplyChain, delta: f64) -> Option<ChainPoint> {
    chain_point_with_u1(game, chain, 0, game.erase_cost() / delta)
}

/// `T̄ = u1(a̲₁, a₂*) / ((1−δ)Δ)`.
pub fn t_upper_bound(game: &StageGame, chain: &BestReplyChain, delta: f64) -> Result<f64> {
    let gap = incentive_gap(game, chain)?;
    Ok(u1_on_chain(game, chain, 0, &chain.top()) / ((1.0 - delta) * gap))
}

pub fn t_lower_bound(p0_star: f64, delta_bar: f64) -> f64 {
    p0_star / (1.0 - delta_bar)
}

/// `(1−δ)c/δ`.
pub fn erasure_payoff_bound(game: &StageGame, delta: f64) -> f64 {
    (1.0 - delta) * game.erase_cost() / delta
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaPath {
    pub beta: Vec<ChainPoint>,
    pub values: Vec<f64>,
    pub regimes: Vec<Regime>,
    pub t: usize,
    pub t0: i64,
}

fn t0_of(regimes: &[Regime], t: usize) -> i64 {
    if let Some(k) = regimes.iter().position(|r| *r == Regime::Indifferent) {
        return k as i64;
    }
    match regimes.iter().position(|r| *r == Regime::Erase) {
        Some(k) => k as i64 - 1,
        None => t as i64,
    }
}

pub fn forward_beta_recursion(
    game: &StageGame,
    chain: &BestReplyChain,
    delta: f64,
    beta0: ChainPoint,
) -> Result<BetaPath> {
    let cap = (10.0 * t_upper_bound(game, chain, delta)?).ceil() as usize + 10;
    let top = chain.top();
    let (v_top, _) = value_of(game, chain, delta, &top);
    let mut beta = vec![beta0];
    let mut values = vec![value_of(game, chain, delta, &beta0).0];
    loop {
        let k = beta.len() - 1;
        if k >= cap {
            return Err(Error::NoTermination { cap });
        }
        let high = u1_on_chain(game, chain, game.a1_star(), &beta[k]);
        let need = (values[k] - (1.0 - delta) * high) / delta;
        if need > v_top + TOL {
            break;
        }
        if need < values[k] - TOL {
            return Err(Error::NonMonotone { k });
        }
        let next = point_with_value(game, chain, delta, need.min(v_top)).ok_or(Error::NonMonotone { k })?;
        beta.push(next);
        values.push(need.min(v_top));
    }
    beta.push(top);
    values.push(v_top);
    let t = beta.len() - 1;
    let regimes: Vec<Regime> = beta.iter().map(|b| value_of(game, chain, delta, b).1).collect();
    let t0 = t0_of(&regimes, t);
    Ok(BetaPath { beta, values, regimes, t, t0 })
}

/// Bound diagnostics for one parameterization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeDiagnostics {
    pub pi_star: f64,
    pub delta_lower: f64,
    pub beta_dagger: Option<ChainPoint>,
    pub t_upper: f64,
    /// Closed-form `p₀*` at the belief implied by `β_0 = β†`.
    pub p0_hat: Option<f64>,
    pub t_lower: Option<f64>,
    /// `t_lower > t_upper`: the bound mechanism forcing payoff `(1−δ)c/δ`.
    pub bounds_cross: bool,
    pub forced_to_bound: bool,
}

pub fn regime_diagnostics(
    game: &StageGame,
    chain: &BestReplyChain,
    disc: &Discounting,
    pi: f64,
) -> Result<RegimeDiagnostics> {
    let delta = disc.delta;
    let pi_star = chain.pi_star();
    let dl = delta_lower(game, chain);
    let t_upper = t_upper_bound(game, chain, delta)?;
    let bd = beta_dagger(game, chain, delta);
    let p0_hat =
        bd.and_then(|b| p0_closed_form(chain.belief_interval(&b).0, likelihood_ratio(pi), disc.delta_bar).ok());
    let t_lower = p0_hat.map(|p| t_lower_bound(p, disc.delta_bar));
    let bounds_cross = t_lower.is_some_and(|lower| lower > t_upper);
    let forced_to_bound = pi > pi_star && delta > dl && bd.is_some() && bounds_cross;
    Ok(RegimeDiagnostics {
        pi_star,
        delta_lower: dl,
        beta_dagger: bd,
        t_upper,
        p0_hat,
        t_lower,
        bounds_cross,
        forced_to_bound,
    })
}

/// A β path with beliefs and erase probabilities filled in, plus the
/// signed consistency residual.
#[derive(Clone, Debug)]
struct Candidate {
    path: BetaPath,
    x: Vec<f64>,
    erase: Vec<f64>,
    p: Vec<f64>,
    mu: Vec<f64>,
    residual: f64,
    has_free: bool,
}

struct Model<'a> {
    game: &'a StageGame,
    chain: &'a BestReplyChain,
    disc: Discounting,
    l: f64,
    dagger: Option<ChainPoint>,
}

impl Model<'_> {
    fn snap(&self, path: &mut BetaPath) {
        let n = self.chain.n_pure();
        for k in 0..path.t {
            let b = &mut path.beta[k];
            if let Some(d) = self.dagger {
                if (b.position() - d.position()).abs() <= SNAP {
                    *b = d;
                    path.regimes[k] = Regime::Indifferent;
                    continue;
                }
            }
            let pos = b.position();
            let nearest = pos.round();
            if (pos - nearest).abs() <= SNAP {
                *b = ChainPoint::from_position(nearest, n);
                path.regimes[k] = value_of(self.game, self.chain, self.disc.delta, b).1;
            }
        }
        path.t0 = t0_of(&path.regimes, path.t);
    }

    fn candidate(&self, beta0: ChainPoint, theta: f64) -> Result<Candidate> {
        let mut path = forward_beta_recursion(self.game, self.chain, self.disc.delta, beta0)?;
        self.snap(&mut path);
        let t = path.t;
        let mut has_free = false;
        let mut x = Vec::with_capacity(t);
        let mut erase = Vec::with_capacity(t);
        for k in 0..t {
            let b = &path.beta[k];
            let (lo, hi) = self.chain.belief_interval(b);
            x.push(if b.is_pure() {
                has_free = true;
                lo + theta * (hi.min(1.0 - 1e-12) - lo)
            } else {
                lo
            });
            erase.push(match path.regimes[k] {
                Regime::Keep => 0.0,
                Regime::Erase => 1.0,
                Regime::Indifferent => {
                    has_free = true;
                    theta
                }
            });
        }
        let db = self.disc.delta_bar;
        let (mut p, mut mu) = (Vec::with_capacity(t), Vec::with_capacity(t));
        let mut inflow = 1.0 - db;
        let mut residual = f64::NAN;
        for k in 0..t {
            let (pk, mk) = belief_step(inflow, x[k], erase[k], self.l, db, k);
            p.push(pk);
            mu.push(mk);
            if k + 1 == t {
                residual = pk;
            } else if pk <= P_TOL {
                residual = pk - (t - 1 - k) as f64;
                break;
            }
            inflow = db * mk * pk;
        }
        Ok(Candidate { path, x, erase, p, mu, residual, has_free })
    }

    /// Bisection over the blend of free quantities at a fixed `β_0`.
    fn solve_theta(&self, beta0: ChainPoint) -> Result<Option<Candidate>> {
        let c0 = self.candidate(beta0, 0.0)?;
        if !c0.has_free || c0.residual >= 0.0 {
            return Ok((c0.residual.abs() <= RESIDUAL_TOL).then_some(c0));
        }
        let c1 = self.candidate(beta0, 1.0)?;
        if c1.residual < 0.0 {
            return Ok((c1.residual.abs() <= RESIDUAL_TOL).then_some(c1));
        }
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        let mut best = if c1.residual < -c0.residual { c1 } else { c0 };
        for _ in 0..MAX_ITER {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let c = self.candidate(beta0, mid)?;
            if c.residual < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if c.residual.abs() < best.residual.abs() {
                best = c;
            }
            if best.residual == 0.0 {
                break;
            }
        }
        Ok((best.residual.abs() <= RESIDUAL_TOL).then_some(best))
    }

    fn bracket_at(&self, pos: f64) -> Result<(f64, f64)> {
        let b = self.chain.point(pos);
        Ok((self.candidate(b, 0.0)?.residual, self.candidate(b, 1.0)?.residual))
    }

    /// Bisection over `β_0` positions in `[from, to]`; a coarse scan locates
    /// the bracket when the endpoints do not straddle zero.
    fn search(&self, from: f64, to: f64) -> Result<Candidate> {
        let span = (to - from).max(0.0);
        let scan = ((64.0 * span).ceil() as usize).max(8);
        let grid: Vec<f64> = (0..=scan).map(|i| from + span * i as f64 / scan as f64).collect();
        let mut prev: Option<(f64, (f64, f64))> = None;
        let mut diagnostics = Vec::new();
        for &pos in &grid {
            let r = self.bracket_at(pos)?;
            if r.0 <= 0.0 && r.1 >= 0.0 {
                if let Some(c) = self.settle(pos)? {
                    return Ok(c);
                }
            }
            if let Some((lo_pos, lo_r)) = prev {
                let rising = lo_r.1 < 0.0 && r.0 > 0.0;
                let falling = lo_r.0 > 0.0 && r.1 < 0.0;
                if rising || falling {
                    if let Some(c) = self.bisect(lo_pos, pos, rising)? {
                        return Ok(c);
                    }
                    diagnostics.push(format!("bracket [{lo_pos:.6}, {pos:.6}] did not converge"));
                }
            }
            prev = Some((pos, r));
        }
        let (first, last) = (self.bracket_at(from)?, self.bracket_at(to)?);
        Err(Error::NoEquilibriumFound(format!(
            "beta_0 positions [{from:.6}, {to:.6}]: residual at lowest in [{:.3e}, {:.3e}], at highest in [{:.3e}, {:.3e}]; {}",
            first.0,
            first.1,
            last.0,
            last.1,
            if diagnostics.is_empty() { "no sign change".to_string() } else { diagnostics.join("; ") }
        )))
    }

    /// Consistent profile at `pos`, preferring the exact `β†` when `pos` is
    /// within the indifference band around it.
    fn settle(&self, pos: f64) -> Result<Option<Candidate>> {
        if let Some(d) = self.dagger {
            let point = self.chain.point(pos);
            let near = (pos - d.position()).abs() <= 1e-6
                || value_of(self.game, self.chain, self.disc.delta, &point).1 == Regime::Indifferent;
            if near {
                if let Some(c) = self.solve_theta(d)? {
                    return Ok(Some(c));
                }
            }
        }
        self.solve_theta(self.chain.point(pos))
    }

    /// Bisection on a bracket whose residual changes sign upward (`rising`)
    /// or downward.
    fn bisect(&self, mut lo: f64, mut hi: f64, rising: bool) -> Result<Option<Candidate>> {
        for _ in 0..MAX_ITER {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let (r0, r1) = self.bracket_at(mid)?;
            let (below, above) = (r1 < 0.0, r0 > 0.0);
            if (rising && below) || (!rising && above) {
                lo = mid;
            } else if (rising && above) || (!rising && below) {
                hi = mid;
            } else {
                return self.settle(mid);
            }
        }
        for pos in [lo, hi] {
            if let Some(c) = self.settle(pos)? {
                return Ok(Some(c));
            }
        }
        Ok(None)
    }

    fn finish(&self, c: Candidate, branch: SolveBranch, pi: f64) -> Solution {
        let Candidate { path, x, erase, mut p, mut mu, .. } = c;
        let t = path.t;
        let db = self.disc.delta_bar;
        p.truncate(t);
        mu.truncate(t);
        if t > 0 {
            p[t - 1] = 0.0;
            let inflow = if t == 1 { 1.0 - db } else { db * mu[t - 2] * p[t - 2] };
            mu[t - 1] = stationary_mass(inflow, 0.0, erase[t - 1], db);
        }
        let mut reputation: Vec<f64> = (0..t).map(|k| reputation_at(pi, db, k, mu[k])).collect();
        reputation.push(1.0);
        let multiplicity = (0..t)
            .filter(|&k| path.beta[k].is_pure())
            .map(|k| MultiplicityEntry {
                k,
                action: self.chain.pure_actions[path.beta[k].segment],
                x_interval: self.chain.belief_interval(&path.beta[k]),
                x_chosen: x[k],
            })
            .collect();
        let profile = EquilibriumProfile {
            delta_hat: self.disc.delta_hat,
            delta_bar: db,
            pi,
            t,
            t0: path.t0,
            payoff: path.values[0],
            beta: path.beta,
            values: path.values,
            regimes: path.regimes,
            branch,
            multiplicity,
            notes: vec![DIRECTION_NOTE.to_string()],
        };
        Solution { profile, path: BeliefPath { p_star: p, mu_star: mu, x, erase, reputation, l: self.l } }
    }
}

/// Checks the solver preconditions and returns the chain.
pub fn prepare(game: &StageGame) -> Result<BestReplyChain> {
    let report = validate_assumptions(game);
    if !report.is_valid() {
        return Err(Error::AssumptionsViolated(report.to_string().trim_end().replace('\n', "; ")));
    }
    let chain = build_best_reply_chain(game)?;
    let bound = erasure_cost_bound(game)?;
    if game.erase_cost() >= bound.c_bar {
        return Err(Error::NonPositiveGap { gap: bound.c_bar - game.erase_cost() });
    }
    incentive_gap(game, &chain)?;
    Ok(chain)
}

fn minmax_solution(game: &StageGame, chain: &BestReplyChain, disc: &Discounting) -> Solution {
    let low = chain.lowest();
    let (v, regime) = value_of(game, chain, disc.delta, &low);
    let profile = EquilibriumProfile {
        delta_hat: disc.delta_hat,
        delta_bar: disc.delta_bar,
        pi: 0.0,
        t: 0,
        t0: 0,
        beta: vec![low],
        values: vec![v],
        regimes: vec![regime],
        payoff: v,
        branch: SolveBranch::Minmax,
        multiplicity: vec![],
        notes: vec!["no honest type: the lowest actions are played at every history".into()],
    };
    Solution { profile, path: BeliefPath { reputation: vec![0.0], ..Default::default() } }
}

pub fn solve(game: &StageGame, disc: &Discounting, pi: f64) -> Result<Solution> {
    if !(0.0..1.0).contains(&pi) {
        return Err(Error::InvalidPrior(pi));
    }
    let chain = prepare(game)?;
    solve_with_chain(game, &chain, disc, pi)
}

/// [`solve`] for a game already checked by [`prepare`].
pub fn solve_with_chain(game: &StageGame, chain: &BestReplyChain, disc: &Discounting, pi: f64) -> Result<Solution> {
    if !(0.0..1.0).contains(&pi) {
        return Err(Error::InvalidPrior(pi));
    }
    if pi == 0.0 {
        return Ok(minmax_solution(game, chain, disc));
    }
    let diag = regime_diagnostics(game, chain, disc, pi)?;
    let model = Model { game, chain, disc: *disc, l: likelihood_ratio(pi), dagger: diag.beta_dagger };
    if diag.forced_to_bound {
        if let Some(c) = model.solve_theta(diag.beta_dagger.expect("checked"))? {
            return Ok(model.finish(c, SolveBranch::ForcedToBound, pi));
        }
    }
    let c = model.search(0.0, chain.top_position())?;
    Ok(model.finish(c, SolveBranch::Search, pi))
}

/// Searches only initial actions `β_0` with chain position in `[from, to]`.
/// Used to pin down one equilibrium when several exist.
pub fn solve_in_range(game: &StageGame, disc: &Discounting, pi: f64, from: f64, to: f64) -> Result<Solution> {
    if !(0.0..1.0).contains(&pi) || pi == 0.0 {
        return Err(Error::InvalidPrior(pi));
    }
    let chain = prepare(game)?;
    let top = chain.top_position();
    let (from, to) = (from.clamp(0.0, top), to.clamp(0.0, top));
    let model = Model {
        game,
        chain: &chain,
        disc: *disc,
        l: likelihood_ratio(pi),
        dagger: beta_dagger(game, &chain, disc.delta),
    };
    let c = model.search(from.min(to), from.max(to))?;
    Ok(model.finish(c, SolveBranch::Search, pi))
}

/// Smallest survival probability (grid step 1e−4, refined by bisection) above
/// which the lower bound on `t − t₀` exceeds `T̄`. Returns 1.0 when the bounds
/// have not crossed at `1 − 1e−6`.
pub fn reputation_failure_cutoff(game: &StageGame, delta_hat: f64, pi: f64) -> Result<f64> {
    let chain = prepare(game)?;
    let crosses = |db: f64| -> Result<bool> {
        let disc = Discounting::new(delta_hat, db)?;
        Ok(regime_diagnostics(game, &chain, &disc, pi)?.bounds_cross)
    };
    let mut hi = 1.0 - 1e-6;
    if !crosses(hi)? {
        return Ok(1.0);
    }
    let step = 1e-4;
    let mut lo = hi - step;
    while lo > step && crosses(lo)? {
        hi = lo;
        lo -= step;
    }
    if lo <= step {
        return Ok(hi);
    }
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if crosses(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviationStatus {
    Ok,
    Tie,
    Violation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HonestDeviation {
    pub from_k: usize,
    /// First period (counted from `from_k`'s record length) at which the
    /// deviation erases.
    pub tau: usize,
    pub never_erase: f64,
    pub deviation: f64,
    pub status: DeviationStatus,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HonestReport {
    pub rows: Vec<HonestDeviation>,
}

impl HonestReport {
    pub fn violations(&self) -> impl Iterator<Item = &HonestDeviation> {
        self.rows.iter().filter(|r| r.status == DeviationStatus::Violation)
    }

    pub fn ties(&self) -> impl Iterator<Item = &HonestDeviation> {
        self.rows.iter().filter(|r| r.status == DeviationStatus::Tie)
    }

    pub fn is_empty(&self) -> bool {
        self.violations().next().is_none()
    }
}

/// Compares, from every clean record `k ≤ t`, the honest type's payoff from
/// never erasing with "keep until record length τ, then erase every action".
pub fn check_honest_no_erase(game: &StageGame, chain: &BestReplyChain, profile: &EquilibriumProfile) -> HonestReport {
    let delta = profile.delta();
    let c = game.erase_cost();
    let t = profile.t;
    let high = |s: usize| u1_on_chain(game, chain, game.a1_star(), &profile.beta_at(s));
    let mut rows = Vec::new();
    for k in 0..=t {
        let mut prefix = 0.0;
        let mut weight = 1.0;
        let mut prefixes = Vec::new();
        for s in k..=t + 1 {
            prefixes.push((prefix, weight));
            prefix += (1.0 - delta) * weight * high(s);
            weight *= delta;
        }
        let (pt, wt) = prefixes[t - k];
        let never = pt + wt * high(t);
        for tau in k..=t + 1 {
            let (pre, w) = prefixes[tau - k];
            let deviation = pre + w * (high(tau) - c);
            let diff = deviation - never;
            let status = if diff.abs() <= TOL {
                DeviationStatus::Tie
            } else if diff > 0.0 {
                DeviationStatus::Violation
            } else {
                DeviationStatus::Ok
            };
            rows.push(HonestDeviation { from_k: k, tau, never_erase: never, deviation, status });
        }
    }
    HonestReport { rows }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (StageGame, BestReplyChain) {
        let g = StageGame::product_choice(1.0, 0.5, 0.2).unwrap();
        let chain = build_best_reply_chain(&g).unwrap();
        (g, chain)
    }

    #[test]
    fn dagger_values() {
        let (g, chain) = setup();
        let b = beta_dagger(&g, &chain, 0.891).unwrap();
        assert!((b.weight - 0.2 / 0.891 / 2.0).abs() < 1e-15);
        assert!((b.weight - 0.112233).abs() < 1e-6);
        assert_eq!(beta_dagger(&g, &chain, 0.1).unwrap(), chain.top());
        assert!(beta_dagger(&g, &chain, 0.05).is_none());
    }

    #[test]
    fn values_and_regimes() {
        let (g, chain) = setup();
        let b = beta_dagger(&g, &chain, 0.891).unwrap();
        let (v, r) = value_of(&g, &chain, 0.891, &b);
        assert!((v - 0.109 * 0.2 / 0.891).abs() < 1e-12);
        assert_eq!(r, Regime::Indifferent);
        assert_eq!(value_of(&g, &chain, 0.891, &chain.lowest()), (0.0, Regime::Keep));
        let (v, r) = value_of(&g, &chain, 0.891, &chain.top());
        assert!((v - 1.8).abs() < 1e-12);
        assert_eq!(r, Regime::Erase);
    }

    #[test]
    fn first_recursion_step() {
        let (g, chain) = setup();
        let b = beta_dagger(&g, &chain, 0.891).unwrap();
        let path = forward_beta_recursion(&g, &chain, 0.891, b).unwrap();
        assert!((path.values[1] - 0.122334).abs() < 1e-6);
        assert!((path.beta[1].weight - 0.161167).abs() < 1e-6);
        assert_eq!(path.t0, 0);
        let top = forward_beta_recursion(&g, &chain, 0.891, chain.top()).unwrap();
        assert_eq!(top.t, 1);
    }

    #[test]
    fn bounds() {
        let (g, chain) = setup();
        assert!((t_upper_bound(&g, &chain, 0.891).unwrap() - 2.0 / (0.109 * 0.8)).abs() < 1e-9);
        assert!((t_upper_bound(&g, &chain, 0.5).unwrap() - 5.0).abs() < 1e-12);
        assert!((t_lower_bound(0.31034, 0.9) - 3.1034).abs() < 1e-9);
        assert!((t_lower_bound(0.31034, 0.99) - 31.034).abs() < 1e-9);
        assert!((erasure_payoff_bound(&g, 0.5) - 0.2).abs() < 1e-15);
        assert!((erasure_payoff_bound(&g, 0.891) - 0.024467).abs() < 1e-6);
    }

    #[test]
    fn forced_to_bound_example() {
        let (g, _) = setup();
        let disc = Discounting::new(0.9, 0.99).unwrap();
        let sol = solve(&g, &disc, 0.6).unwrap();
        assert_eq!(sol.profile.branch, SolveBranch::ForcedToBound);
        assert!((sol.profile.payoff - erasure_payoff_bound(&g, disc.delta)).abs() < 1e-12);
        assert_eq!(sol.profile.t0, 0);
        assert!((sol.profile.beta[0].weight - 0.112233).abs() < 1e-6);
        let e0 = sol.path.erase[0];
        assert!(e0 > 0.0 && e0 < 1.0, "erase mixing {e0}");
    }

    #[test]
    fn minmax_example() {
        let (g, chain) = setup();
        let sol = solve(&g, &Discounting::new(0.9, 0.99).unwrap(), 0.0).unwrap();
        assert_eq!(sol.profile.payoff, 0.0);
        assert!(sol.profile.beta.iter().all(|b| *b == chain.lowest()));
    }

    #[test]
    fn invalid_prior() {
        let (g, _) = setup();
        assert!(matches!(solve(&g, &Discounting::new(0.9, 0.99).unwrap(), 1.0), Err(Error::InvalidPrior(_))));
    }

    #[test]
    fn honest_check_flags_decreasing_beta() {
        let (g, chain) = setup();
        let sol = solve(&g, &Discounting::new(0.9, 0.99).unwrap(), 0.6).unwrap();
        assert!(check_honest_no_erase(&g, &chain, &sol.profile).is_empty());
        let mut bad = sol.profile.clone();
        bad.beta.reverse();
        assert!(!check_honest_no_erase(&g, &chain, &bad).is_empty());
    }
}
