//! Independent checks of candidate equilibria.
//!
//! Nothing here calls the solver or the belief engine: payoffs are summed
//! directly from the matrices, best replies are found by enumeration, and
//! the brute-force search uses bisection where the solver uses closed forms.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::belief::BeliefPath;
use crate::error::{Error, Result};
use crate::game::{BestReplyChain, ChainPoint, StageGame};
use crate::solver::{Discounting, EquilibriumProfile, Regime};

pub const VERIFY_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ConstraintId {
    #[serde(rename = "P1-optimality")]
    P1Optimality,
    #[serde(rename = "P2-best-reply")]
    P2BestReply,
    #[serde(rename = "Bayes")]
    Bayes,
    #[serde(rename = "boundary")]
    Boundary,
    #[serde(rename = "mass")]
    Mass,
}

impl ConstraintId {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::P1Optimality => "P1-optimality",
            Self::P2BestReply => "P2-best-reply",
            Self::Bayes => "Bayes",
            Self::Boundary => "boundary",
            Self::Mass => "mass",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintRow {
    pub k: usize,
    pub id: ConstraintId,
    pub detail: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub tol: f64,
    pub rows: Vec<ConstraintRow>,
}

impl ConstraintReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ConstraintRow> {
        self.rows.iter().filter(|r| !r.pass)
    }
}

struct Rows {
    tol: f64,
    rows: Vec<ConstraintRow>,
}

impl Rows {
    /// `lhs ≥ rhs`.
    fn geq(&mut self, k: usize, id: ConstraintId, detail: impl Into<String>, lhs: f64, rhs: f64) {
        let slack = lhs - rhs;
        self.push(k, id, detail.into(), lhs, rhs, slack);
    }

    /// `lhs = rhs`.
    fn eq(&mut self, k: usize, id: ConstraintId, detail: impl Into<String>, lhs: f64, rhs: f64) {
        let slack = -(lhs - rhs).abs();
        self.push(k, id, detail.into(), lhs, rhs, slack);
    }

    fn push(&mut self, k: usize, id: ConstraintId, detail: String, lhs: f64, rhs: f64, slack: f64) {
        let pass = slack >= -self.tol;
        self.rows.push(ConstraintRow { k, id, detail, lhs, rhs, slack, pass });
    }
}

fn expected(row: &[f64], dist: &[f64]) -> f64 {
    row.iter().zip(dist).map(|(u, p)| u * p).sum()
}

/// Checks every equilibrium condition at each clean record `k ≤ t`.
pub fn verify_equilibrium(
    game: &StageGame,
    chain: &BestReplyChain,
    disc: &Discounting,
    pi: f64,
    profile: &EquilibriumProfile,
    path: &BeliefPath,
    tol: f64,
) -> Result<ConstraintReport> {
    let t = profile.t;
    let shapes = [
        ("beta", profile.beta.len(), t + 1),
        ("values", profile.values.len(), t + 1),
        ("regimes", profile.regimes.len(), t + 1),
        ("p_star", path.p_star.len(), t),
        ("mu_star", path.mu_star.len(), t),
        ("x", path.x.len(), t),
        ("erase", path.erase.len(), t),
        ("reputation", path.reputation.len(), t + 1),
    ];
    for (name, got, want) in shapes {
        if got != want {
            return Err(Error::ShapeMismatch(format!("{name} has length {got}, expected {want}")));
        }
    }
    for b in &profile.beta {
        if b.segment >= chain.n_pure()
            || !(0.0..1.0).contains(&b.weight)
            || (b.weight > 0.0 && b.segment + 1 >= chain.n_pure())
        {
            return Err(Error::ShapeMismatch(format!("chain point {b:?} outside the chain")));
        }
    }

    let delta = disc.delta;
    let db = disc.delta_bar;
    let c = game.erase_cost();
    let (n1, n2) = (game.n1(), game.n2());
    let star = game.a1_star();
    let u1: Vec<Vec<f64>> = (0..n1).map(|i| (0..n2).map(|j| game.u1(i, j)).collect()).collect();
    let u2: Vec<Vec<f64>> = (0..n1).map(|i| (0..n2).map(|j| game.u2(i, j)).collect()).collect();
    let tail_erase = match profile.regimes[t] {
        Regime::Keep => 0.0,
        _ => 1.0,
    };

    let mut out = Rows { tol, rows: Vec::new() };
    let mut inflow = 1.0 - db;
    for k in 0..=t {
        let dist = chain.distribution(&profile.beta[k], n2);
        let v = profile.values[k];
        let v_next = profile.values[(k + 1).min(t)];
        let (p, e) = if k < t { (path.p_star[k], path.erase[k]) } else { (0.0, tail_erase) };

        // Player 1: every (action, erase) pair at h_*^k.
        let mut options: Vec<(String, f64)> = Vec::new();
        for (a, row) in u1.iter().enumerate().take(n1) {
            let stage = expected(row, &dist);
            let keep_cont = if a == star { v_next } else { 0.0 };
            let label = &game.a1_labels()[a];
            options.push((format!("{label} keep"), (1.0 - delta) * stage + delta * keep_cont));
            options.push((format!("{label} erase"), (1.0 - delta) * (stage - c) + delta * v));
        }
        let best = options.iter().map(|o| o.1).fold(f64::NEG_INFINITY, f64::max);
        out.eq(k, ConstraintId::P1Optimality, "value equals best deviation", v, best);
        for (name, val) in &options {
            out.geq(k, ConstraintId::P1Optimality, format!("no gain from {name}"), v, *val);
        }
        let low = &game.a1_labels()[0];
        let star_label = &game.a1_labels()[star];
        if p > tol {
            out.eq(k, ConstraintId::P1Optimality, format!("{star_label} keep optimal"), v, options[2 * star].1);
        }
        if p < 1.0 - tol {
            if e > tol {
                out.eq(k, ConstraintId::P1Optimality, format!("{low} erase optimal"), v, options[1].1);
            }
            if e < 1.0 - tol {
                out.eq(k, ConstraintId::P1Optimality, format!("{low} keep optimal"), v, options[0].1);
            }
        }

        // Player 2: everything in the support of β_k is a best reply.
        let x = if k < t { path.x[k] } else { path.reputation[t] };
        let payoff2: Vec<f64> = (0..n2).map(|j| x * u2[star][j] + (1.0 - x) * u2[0][j]).collect();
        let best2 = payoff2.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (j, &w) in dist.iter().enumerate() {
            if w > 0.0 {
                let label = format!("{} best reply at x={x:.9}", game.a2_labels()[j]);
                out.geq(k, ConstraintId::P2BestReply, label, payoff2[j], best2);
            }
        }

        let honest = pi * (1.0 - db) * db.powi(k as i32);
        if k < t {
            let mu = path.mu_star[k];
            let high = honest + (1.0 - pi) * mu * p;
            let lowm = (1.0 - pi) * mu * (1.0 - p);
            let x_bayes = if high + lowm > 0.0 { high / (high + lowm) } else { 1.0 };
            out.eq(k, ConstraintId::Bayes, "posterior on the commitment action", x, x_bayes);
            out.eq(k, ConstraintId::Bayes, "stationary mass", mu * (1.0 - db * e * (1.0 - p)), inflow);
            let rep = if pi > 0.0 { honest / (honest + (1.0 - pi) * mu) } else { 0.0 };
            out.eq(k, ConstraintId::Bayes, "reputation", path.reputation[k], rep);
            out.geq(k, ConstraintId::Mass, "mu*p <= 1 - delta_bar", 1.0 - db, mu * p);
            if k + 1 == t {
                out.eq(k, ConstraintId::Boundary, "p = 0 at t-1", p, 0.0);
            } else {
                out.push(k, ConstraintId::Boundary, "0 < p < 1".into(), p, 0.0, p.min(1.0 - p) - 2.0 * tol);
            }
            inflow = db * mu * p;
        } else {
            let mass_t = inflow / (1.0 - db * tail_erase);
            let rep = if pi > 0.0 { honest / (honest + (1.0 - pi) * mass_t) } else { 0.0 };
            out.eq(k, ConstraintId::Boundary, "reputation at t", path.reputation[k], rep);
        }
    }
    out.rows.sort_by_key(|r| (r.k, r.id));
    Ok(ConstraintReport { tol, rows: out.rows })
}

/// Player 2's chain re-derived by scanning beliefs and bisecting on payoff
/// differences.
struct OracleChain {
    actions: Vec<usize>,
    thresholds: Vec<f64>,
}

fn best_reply_scan(game: &StageGame, x: f64) -> usize {
    let star = game.a1_star();
    (0..game.n2())
        .map(|j| (j, x * game.u2(star, j) + (1.0 - x) * game.u2(0, j)))
        .fold((0, f64::NEG_INFINITY), |acc, (j, v)| if v > acc.1 { (j, v) } else { acc })
        .0
}

impl OracleChain {
    fn new(game: &StageGame) -> Self {
        let star = game.a1_star();
        let mut actions = vec![best_reply_scan(game, 0.0)];
        let mut thresholds = Vec::new();
        let n = 4096;
        let mut prev_x = 0.0;
        for s in 1..=n {
            let x = s as f64 / n as f64;
            let br = best_reply_scan(game, x);
            let cur = *actions.last().unwrap();
            if br != cur {
                let diff = |y: f64| {
                    y * (game.u2(star, br) - game.u2(star, cur)) + (1.0 - y) * (game.u2(0, br) - game.u2(0, cur))
                };
                let (mut lo, mut hi) = (prev_x, x);
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if diff(mid) < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                thresholds.push(0.5 * (lo + hi));
                actions.push(br);
            }
            prev_x = x;
        }
        Self { actions, thresholds }
    }

    fn top(&self) -> f64 {
        (self.actions.len() - 1) as f64
    }

    fn split(&self, pos: f64) -> (usize, f64) {
        let pos = pos.clamp(0.0, self.top());
        let seg = (pos.floor() as usize).min(self.actions.len() - 1);
        (seg, pos - seg as f64)
    }

    fn payoff(&self, game: &StageGame, a1: usize, pos: f64) -> f64 {
        let (seg, w) = self.split(pos);
        let lo = game.u1(a1, self.actions[seg]);
        if w == 0.0 {
            lo
        } else {
            (1.0 - w) * lo + w * game.u1(a1, self.actions[seg + 1])
        }
    }

    /// Beliefs at which the chain point at `pos` is a best reply.
    fn beliefs(&self, pos: f64) -> (f64, f64) {
        let (seg, w) = self.split(pos);
        if w > 0.0 {
            let t = self.thresholds[seg];
            return (t, t);
        }
        let lo = if seg == 0 { 0.0 } else { self.thresholds[seg - 1] };
        (lo, self.thresholds.get(seg).copied().unwrap_or(1.0))
    }
}

/// One grid point of the brute-force search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OraclePoint {
    pub index: usize,
    pub position: f64,
    pub t: usize,
    pub payoff: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub first: usize,
    pub last: usize,
    pub positions: (f64, f64),
    pub center: f64,
    pub payoff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub grid_resolution: usize,
    /// Position spacing of the grid.
    pub cell: f64,
    pub consistent: Vec<OraclePoint>,
    pub clusters: Vec<Cluster>,
}

struct Brute<'a> {
    game: &'a StageGame,
    chain: OracleChain,
    delta: f64,
    delta_bar: f64,
    l: f64,
}

/// Free quantities for one record length: belief range and erase range.
#[derive(Clone, Copy)]
struct Window {
    x: (f64, f64),
    e: (f64, f64),
}

impl Brute<'_> {
    fn value(&self, pos: f64) -> f64 {
        let low = self.chain.payoff(self.game, 0, pos);
        (low - self.game.erase_cost()).max((1.0 - self.delta) * low)
    }

    /// β path from `pos` by direct bisection on the value function.
    fn path(&self, pos: f64) -> Vec<f64> {
        let top = self.chain.top();
        let v_top = self.value(top);
        let mut out = vec![pos];
        let mut v = self.value(pos);
        while out.len() < 100_000 {
            let cur = *out.last().unwrap();
            let need = (v - (1.0 - self.delta) * self.chain.payoff(self.game, self.game.a1_star(), cur)) / self.delta;
            if need > v_top + 1e-9 {
                break;
            }
            let (mut lo, mut hi) = (0.0, top);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if self.value(mid) < need {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push(if need >= v_top { top } else { hi });
            v = need;
        }
        out.push(top);
        out
    }

    fn regime_erase(&self, pos: f64) -> f64 {
        let d = self.delta * self.chain.payoff(self.game, 0, pos) - self.game.erase_cost();
        if d > 0.0 {
            1.0
        } else {
            0.0
        }
    }

    /// Solves Bayes' rule for `p_k` by bisection given the inflow. When no
    /// `p ≥ 0` works the (negative) Bayes gap at `p = 0` is returned instead.
    fn play_prob(&self, inflow: f64, x: f64, e: f64, k: usize) -> (f64, f64) {
        let db = self.delta_bar;
        let target = self.l * (1.0 - db) * db.powi(k as i32);
        let mass = |p: f64| inflow / (1.0 - db * e * (1.0 - p));
        let g = |p: f64| mass(p) * (x - p) - target * (1.0 - x);
        if g(0.0) <= 0.0 {
            return (g(0.0), mass(0.0));
        }
        let (mut lo, mut hi) = (0.0, x);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let p = 0.5 * (lo + hi);
        (p, mass(p))
    }

    fn residual(&self, windows: &[Window], theta: f64) -> f64 {
        let t = windows.len();
        let mut inflow = 1.0 - self.delta_bar;
        for (k, w) in windows.iter().enumerate() {
            let x = w.x.0 + theta * (w.x.1 - w.x.0);
            let e = w.e.0 + theta * (w.e.1 - w.e.0);
            let (p, mu) = self.play_prob(inflow, x, e, k);
            if k + 1 == t {
                return p;
            }
            if p <= 0.0 {
                return -((t - 1 - k) as f64);
            }
            inflow = self.delta_bar * mu * p;
        }
        f64::NAN
    }

    fn evaluate(&self, index: usize, pos: f64, cell: f64) -> OraclePoint {
        let top = self.chain.top();
        let (lo_path, mid_path, hi_path) =
            (self.path((pos - cell).max(0.0)), self.path(pos), self.path((pos + cell).min(top)));
        let t = mid_path.len() - 1;
        let at = |p: &Vec<f64>, k: usize| if k < p.len() { p[k] } else { top };
        let windows: Vec<Window> = (0..t)
            .map(|k| {
                let (a, b) = (at(&lo_path, k).min(at(&hi_path, k)), at(&lo_path, k).max(at(&hi_path, k)));
                let x = (self.chain.beliefs(a).0, self.chain.beliefs(b).1.min(1.0 - 1e-12));
                let (ea, eb) = (self.regime_erase(a), self.regime_erase(b));
                let e = if ea != eb { (0.0, 1.0) } else { (ea, ea) };
                Window { x, e }
            })
            .collect();
        let free = windows.iter().any(|w| w.x.1 > w.x.0 || w.e.1 > w.e.0);
        let r0 = self.residual(&windows, 0.0);
        let mut residual = r0;
        if free && r0 < 0.0 {
            let r1 = self.residual(&windows, 1.0);
            residual = r1;
            if r1 > 0.0 {
                let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    let r = self.residual(&windows, mid);
                    residual = r;
                    if r < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if r == 0.0 {
                        break;
                    }
                }
            }
        }
        OraclePoint { index, position: pos, t, payoff: self.value(pos), residual }
    }

    /// With no honest type, candidates are constant actions with the low
    /// action always played.
    fn evaluate_minmax(&self, index: usize, pos: f64, cell: f64) -> OraclePoint {
        let a = (pos - cell).max(0.0);
        let admissible = self.chain.beliefs(a).0 <= 0.0;
        let high = self.chain.payoff(self.game, self.game.a1_star(), pos);
        let residual = if admissible && high <= self.value(pos) { 0.0 } else { 1.0 };
        OraclePoint { index, position: pos, t: 0, payoff: self.value(pos), residual }
    }
}

/// Grid search over `β_0` with `grid_resolution` points per chain segment.
/// Each point may move beliefs and erase probabilities within what the
/// neighbouring grid cells allow.
pub fn brute_force_profiles(game: &StageGame, disc: &Discounting, pi: f64, grid_resolution: usize) -> OracleResult {
    let chain = OracleChain::new(game);
    let segments = chain.actions.len() - 1;
    let n = grid_resolution * segments;
    let cell = 1.0 / grid_resolution as f64;
    let brute = Brute { game, chain, delta: disc.delta, delta_bar: disc.delta_bar, l: pi / (1.0 - pi) };
    let threshold = 10.0 * VERIFY_TOL;
    let consistent: Vec<OraclePoint> = (0..=n)
        .into_par_iter()
        .map(|i| {
            let pos = i as f64 * cell;
            if pi == 0.0 {
                brute.evaluate_minmax(i, pos, cell)
            } else {
                brute.evaluate(i, pos, cell)
            }
        })
        .filter(|p| p.residual.abs() < threshold)
        .collect();

    let mut clusters: Vec<Cluster> = Vec::new();
    for p in &consistent {
        match clusters.last_mut() {
            Some(c) if c.last + 1 == p.index => {
                c.last = p.index;
                c.positions.1 = p.position;
            }
            _ => clusters.push(Cluster {
                first: p.index,
                last: p.index,
                positions: (p.position, p.position),
                center: 0.0,
                payoff: 0.0,
            }),
        }
    }
    for c in &mut clusters {
        c.center = 0.5 * (c.positions.0 + c.positions.1);
        c.payoff = brute.value(c.center);
    }
    OracleResult { grid_resolution, cell, consistent, clusters }
}

impl OracleResult {
    /// Whether a cluster lies within one grid cell of `beta0`.
    pub fn cluster_contains(&self, cluster: &Cluster, beta0: &ChainPoint) -> bool {
        let pos = beta0.position();
        pos >= cluster.positions.0 - self.cell - 1e-12 && pos <= cluster.positions.1 + self.cell + 1e-12
    }
}
