//! Stage game, assumption checks and player 2's best-reply chain.
//!
//! Action sets are ordered with index 0 the lowest action. Player 1's lowest
//! action is `a̲₁`, player 2's best reply to it is `a̲₂`, and player 2's best
//! reply to the commitment action `a₁*` is `a₂*`.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for payoff equalities and indifference tests.
pub const TOL: f64 = 1e-9;

/// Game definition as it appears in JSON configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GameSpec {
    ProductChoice { product_choice: ProductChoice },
    Matrix(MatrixGame),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductChoice {
    pub b: f64,
    pub x: f64,
    pub c: f64,
}

/// Explicit matrices. Labels are listed lowest action first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixGame {
    pub a1: Vec<String>,
    pub a2: Vec<String>,
    pub u1: Vec<Vec<f64>>,
    pub u2: Vec<Vec<f64>>,
    pub a1_star: String,
    pub c: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StageGame {
    a1_labels: Vec<String>,
    a2_labels: Vec<String>,
    u1: Vec<Vec<f64>>,
    u2: Vec<Vec<f64>>,
    a1_star: usize,
    erase_cost: f64,
    shift: f64,
}

fn check_matrix(name: &str, m: &[Vec<f64>], rows: usize, cols: usize) -> Result<()> {
    if m.len() != rows || m.iter().any(|r| r.len() != cols) {
        return Err(Error::InvalidGame(format!("{name} must be {rows}x{cols}")));
    }
    if m.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidGame(format!("{name} has non-finite entries")));
    }
    Ok(())
}

fn argmax_set(values: impl Iterator<Item = f64> + Clone) -> Vec<usize> {
    let best = values.clone().fold(f64::NEG_INFINITY, f64::max);
    values.enumerate().filter(|(_, v)| *v >= best - TOL).map(|(j, _)| j).collect()
}

impl StageGame {
    /// Builds a game and applies the normalization `u1(a̲₁, a̲₂) = 0` by
    /// subtracting a constant from `u1`.
    pub fn new(
        a1_labels: Vec<String>,
        a2_labels: Vec<String>,
        mut u1: Vec<Vec<f64>>,
        u2: Vec<Vec<f64>>,
        a1_star: usize,
        erase_cost: f64,
    ) -> Result<Self> {
        let (n1, n2) = (a1_labels.len(), a2_labels.len());
        if n1 < 2 || n2 < 2 {
            return Err(Error::InvalidGame("need at least 2 actions per player".into()));
        }
        check_matrix("u1", &u1, n1, n2)?;
        check_matrix("u2", &u2, n1, n2)?;
        if a1_star >= n1 {
            return Err(Error::InvalidGame(format!("a1_star index {a1_star} out of range")));
        }
        if !erase_cost.is_finite() || erase_cost < 0.0 {
            return Err(Error::InvalidGame(format!("erase cost {erase_cost} must be >= 0")));
        }
        let low2 = argmax_set(u2[0].iter().copied())[0];
        let shift = u1[0][low2];
        for row in &mut u1 {
            for v in row.iter_mut() {
                *v -= shift;
            }
        }
        Ok(Self { a1_labels, a2_labels, u1, u2, a1_star, erase_cost, shift })
    }

    /// The product-choice game with actions `L < H` and `N < T`.
    pub fn product_choice(b: f64, x: f64, c: f64) -> Result<Self> {
        Self::new(
            vec!["L".into(), "H".into()],
            vec!["N".into(), "T".into()],
            vec![vec![0.0, 1.0 + b], vec![-b, 1.0]],
            vec![vec![0.0, -x], vec![x, 1.0]],
            1,
            c,
        )
    }

    pub fn from_spec(spec: &GameSpec) -> Result<Self> {
        match spec {
            GameSpec::ProductChoice { product_choice: p } => Self::product_choice(p.b, p.x, p.c),
            GameSpec::Matrix(m) => {
                let star =
                    m.a1.iter()
                        .position(|l| *l == m.a1_star)
                        .ok_or_else(|| Error::InvalidGame(format!("unknown a1_star {}", m.a1_star)))?;
                Self::new(m.a1.clone(), m.a2.clone(), m.u1.clone(), m.u2.clone(), star, m.c)
            }
        }
    }

    /// Matrix form with the normalized `u1`.
    pub fn to_spec(&self) -> MatrixGame {
        MatrixGame {
            a1: self.a1_labels.clone(),
            a2: self.a2_labels.clone(),
            u1: self.u1.clone(),
            u2: self.u2.clone(),
            a1_star: self.a1_labels[self.a1_star].clone(),
            c: self.erase_cost,
        }
    }

    pub fn with_erase_cost(&self, c: f64) -> Result<Self> {
        if !c.is_finite() || c < 0.0 {
            return Err(Error::InvalidGame(format!("erase cost {c} must be >= 0")));
        }
        Ok(Self { erase_cost: c, ..self.clone() })
    }

    pub fn n1(&self) -> usize {
        self.a1_labels.len()
    }
    pub fn n2(&self) -> usize {
        self.a2_labels.len()
    }
    pub fn u1(&self, a1: usize, a2: usize) -> f64 {
        self.u1[a1][a2]
    }
    pub fn u2(&self, a1: usize, a2: usize) -> f64 {
        self.u2[a1][a2]
    }
    pub fn a1_star(&self) -> usize {
        self.a1_star
    }
    pub fn erase_cost(&self) -> f64 {
        self.erase_cost
    }
    pub fn a1_labels(&self) -> &[String] {
        &self.a1_labels
    }
    pub fn a2_labels(&self) -> &[String] {
        &self.a2_labels
    }
    /// Constant subtracted from the supplied `u1`.
    pub fn normalization_shift(&self) -> f64 {
        self.shift
    }

    /// Player 2's best replies to `λ·a1_hi + (1−λ)·a1_lo`, as a sorted set.
    pub fn best_replies_to_mix(&self, a1_hi: usize, a1_lo: usize, lambda: f64) -> Vec<usize> {
        let (hi, lo) = (&self.u2[a1_hi], &self.u2[a1_lo]);
        argmax_set((0..self.n2()).map(move |j| lambda * hi[j] + (1.0 - lambda) * lo[j]))
    }

    /// Best replies when player 2 assigns probability `x` to `a₁*` and the
    /// rest to `a̲₁`.
    pub fn u2_posterior_best_reply(&self, x: f64) -> Vec<usize> {
        self.best_replies_to_mix(self.a1_star, 0, x)
    }

    /// `a̲₂`: the (first) best reply to `a̲₁`.
    pub fn lowest_a2(&self) -> usize {
        self.best_replies_to_mix(0, 0, 1.0)[0]
    }

    /// `a₂*`: the (last) best reply to `a₁*`.
    pub fn commitment_a2(&self) -> usize {
        *self.best_replies_to_mix(self.a1_star, self.a1_star, 1.0).last().unwrap()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    P1BestReplyNotUnique,
    P2BestReplyNotUnique,
    KnifeEdgeBestReply,
    U1NotDecreasingInA1,
    U1NotIncreasingInA2,
    U2NotSupermodular,
    CommitmentIsLowest,
    NotValuable,
}

impl ViolationKind {
    pub fn message(self) -> &'static str {
        match self {
            Self::P1BestReplyNotUnique => "player 1 best reply not unique",
            Self::P2BestReplyNotUnique => "player 2 best reply not unique",
            Self::KnifeEdgeBestReply => "player 2 action best-replies at a single mixture only",
            Self::U1NotDecreasingInA1 => "u1 not strictly decreasing in a1",
            Self::U1NotIncreasingInA2 => "u1 not strictly increasing in a2",
            Self::U2NotSupermodular => "u2 lacks strictly increasing differences",
            Self::CommitmentIsLowest => "commitment action is the lowest action",
            Self::NotValuable => "commitment payoff not above the minmax payoff",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.kind.message(), self.detail)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// Knife-edge findings for pairs other than `(a₁*, a̲₁)`.
    pub warnings: Vec<String>,
    pub normalization_shift: f64,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            writeln!(f, "game valid (u1 shifted by {})", -self.normalization_shift)?;
        }
        for v in &self.violations {
            writeln!(f, "violation: {v}")?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}

/// Interval of `λ` for which `j` best-replies to `λ·a_hi + (1−λ)·a_lo`.
fn best_reply_interval(game: &StageGame, hi: usize, lo: usize, j: usize) -> Option<(f64, f64)> {
    let (mut a, mut b) = (0.0_f64, 1.0_f64);
    let e = |k: usize| game.u2[lo][k];
    let d = |k: usize| game.u2[hi][k] - game.u2[lo][k];
    for k in (0..game.n2()).filter(|&k| k != j) {
        let s = d(j) - d(k);
        let r = e(k) - e(j);
        if s.abs() < 1e-15 {
            if r > TOL {
                return None;
            }
        } else if s > 0.0 {
            a = a.max(r / s);
        } else {
            b = b.min(r / s);
        }
    }
    (a <= b + 1e-12).then_some((a, b))
}

pub fn validate_assumptions(game: &StageGame) -> ValidationReport {
    let mut report = ValidationReport { normalization_shift: game.shift, ..Default::default() };
    let (n1, n2) = (game.n1(), game.n2());
    let mut push = |kind, detail: String| report.violations.push(Violation { kind, detail });

    for j in 0..n2 {
        let br = argmax_set((0..n1).map(|i| game.u1[i][j]));
        if br.len() > 1 {
            push(ViolationKind::P1BestReplyNotUnique, format!("against {}", game.a2_labels[j]));
        }
    }
    for i in 0..n1 {
        if game.best_replies_to_mix(i, i, 1.0).len() > 1 {
            push(ViolationKind::P2BestReplyNotUnique, format!("against {}", game.a1_labels[i]));
        }
    }
    for j in 0..n2 {
        for i in 0..n1 - 1 {
            if game.u1[i][j] - game.u1[i + 1][j] <= TOL {
                push(
                    ViolationKind::U1NotDecreasingInA1,
                    format!("{} vs {} at {}", game.a1_labels[i], game.a1_labels[i + 1], game.a2_labels[j]),
                );
            }
        }
    }
    for i in 0..n1 {
        for j in 0..n2 - 1 {
            if game.u1[i][j + 1] - game.u1[i][j] <= TOL {
                push(
                    ViolationKind::U1NotIncreasingInA2,
                    format!("{} vs {} at {}", game.a2_labels[j], game.a2_labels[j + 1], game.a1_labels[i]),
                );
            }
        }
    }
    for i in 0..n1 - 1 {
        for j in 0..n2 - 1 {
            let dd = game.u2[i + 1][j + 1] - game.u2[i + 1][j] - game.u2[i][j + 1] + game.u2[i][j];
            if dd <= TOL {
                push(ViolationKind::U2NotSupermodular, format!("rows {},{} cols {},{}", i, i + 1, j, j + 1));
            }
        }
    }
    if game.a1_star == 0 {
        push(ViolationKind::CommitmentIsLowest, game.a1_labels[0].clone());
    }
    let star2 = game.commitment_a2();
    if game.u1[game.a1_star][star2] <= TOL {
        push(ViolationKind::NotValuable, format!("u1(a1*, a2*) = {}", game.u1[game.a1_star][star2]));
    }

    for hi in 0..n1 {
        for lo in 0..hi {
            for j in 0..n2 {
                let Some((a, b)) = best_reply_interval(game, hi, lo, j) else { continue };
                if b - a > TOL {
                    continue;
                }
                let detail = format!(
                    "{} best-replies only at weight {a:.6} on {} against {}",
                    game.a2_labels[j], game.a1_labels[hi], game.a1_labels[lo]
                );
                if hi == game.a1_star && lo == 0 {
                    push(ViolationKind::KnifeEdgeBestReply, detail);
                } else {
                    report.warnings.push(detail);
                }
            }
        }
    }
    report
}

/// A point of the best-reply chain: weight on `pure_actions[segment + 1]`
/// mixed with `pure_actions[segment]`. Pure points carry weight 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainPoint {
    pub segment: usize,
    pub weight: f64,
}

impl ChainPoint {
    pub fn pure(index: usize) -> Self {
        Self { segment: index, weight: 0.0 }
    }

    /// Canonical point at `position ∈ [0, n_pure − 1]` (clamped).
    pub fn from_position(position: f64, n_pure: usize) -> Self {
        let top = (n_pure - 1) as f64;
        let p = position.clamp(0.0, top);
        if p >= top {
            return Self::pure(n_pure - 1);
        }
        let segment = p.floor() as usize;
        Self { segment, weight: p - segment as f64 }
    }

    pub fn position(&self) -> f64 {
        self.segment as f64 + self.weight
    }

    pub fn is_pure(&self) -> bool {
        self.weight == 0.0
    }

    /// Chain order, which coincides with first-order stochastic dominance.
    pub fn chain_cmp(&self, other: &Self) -> Ordering {
        self.position().total_cmp(&other.position())
    }
}

impl PartialOrd for ChainPoint {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.chain_cmp(other))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestReplyChain {
    pub pure_actions: Vec<usize>,
    /// `thresholds[j]` makes player 2 indifferent between `pure_actions[j]`
    /// and `pure_actions[j + 1]`.
    pub thresholds: Vec<f64>,
}

pub fn build_best_reply_chain(game: &StageGame) -> Result<BestReplyChain> {
    let (hi, lo) = (game.a1_star, 0);
    let e: Vec<f64> = game.u2[lo].clone();
    let d: Vec<f64> = (0..game.n2()).map(|j| game.u2[hi][j] - game.u2[lo][j]).collect();
    let value = |j: usize, lam: f64| e[j] + lam * d[j];

    let start = game.best_replies_to_mix(hi, lo, 0.0);
    if start.len() != 1 {
        return Err(Error::AssumptionsViolated("best reply to the lowest action not unique".into()));
    }
    let mut cur = start[0];
    let mut lam = 0.0;
    let mut chain = BestReplyChain { pure_actions: vec![cur], thresholds: vec![] };
    loop {
        let mut next: Option<(f64, usize)> = None;
        for j in (0..game.n2()).filter(|&j| d[j] > d[cur] + 1e-15) {
            let x = (e[cur] - e[j]) / (d[j] - d[cur]);
            if x >= lam && next.is_none_or(|(best, _)| x < best) {
                next = Some((x, j));
            }
        }
        let Some((x, j)) = next.filter(|(x, _)| *x < 1.0 + TOL) else { break };
        if x > 1.0 - TOL {
            return Err(Error::AssumptionsViolated("best reply to the commitment action not unique".into()));
        }
        let tied: Vec<usize> =
            (0..game.n2()).filter(|&k| k != cur && (value(k, x) - value(cur, x)).abs() <= TOL).collect();
        if tied.len() > 1 || j < cur || x <= lam {
            let mut actions = vec![cur];
            actions.extend(tied);
            return Err(Error::NonAdjacentIndifference { lambda: x, actions });
        }
        chain.thresholds.push(x);
        chain.pure_actions.push(j);
        cur = j;
        lam = x;
    }
    Ok(chain)
}

impl BestReplyChain {
    pub fn n_pure(&self) -> usize {
        self.pure_actions.len()
    }

    pub fn top_position(&self) -> f64 {
        (self.n_pure() - 1) as f64
    }

    pub fn lowest(&self) -> ChainPoint {
        ChainPoint::pure(0)
    }

    pub fn top(&self) -> ChainPoint {
        ChainPoint::pure(self.n_pure() - 1)
    }

    pub fn point(&self, position: f64) -> ChainPoint {
        ChainPoint::from_position(position, self.n_pure())
    }

    /// Support of `β` as `(a2 index, probability)` pairs.
    pub fn support(&self, beta: &ChainPoint) -> Vec<(usize, f64)> {
        let lo = self.pure_actions[beta.segment];
        if beta.is_pure() {
            vec![(lo, 1.0)]
        } else {
            vec![(lo, 1.0 - beta.weight), (self.pure_actions[beta.segment + 1], beta.weight)]
        }
    }

    /// Full mixed action over `A₂`.
    pub fn distribution(&self, beta: &ChainPoint, n2: usize) -> Vec<f64> {
        let mut out = vec![0.0; n2];
        for (j, p) in self.support(beta) {
            out[j] += p;
        }
        out
    }

    /// Beliefs on `a₁*` at which `β` is a best reply.
    pub fn belief_interval(&self, beta: &ChainPoint) -> (f64, f64) {
        if beta.is_pure() {
            let j = beta.segment;
            let lo = if j == 0 { 0.0 } else { self.thresholds[j - 1] };
            let hi = self.thresholds.get(j).copied().unwrap_or(1.0);
            (lo, hi)
        } else {
            let t = self.thresholds[beta.segment];
            (t, t)
        }
    }

    /// Lowest belief at which `a₂*` is a best reply.
    pub fn pi_star(&self) -> f64 {
        self.thresholds.last().copied().unwrap_or(0.0)
    }
}

/// Expected `u1(a1, β)`.
pub fn u1_on_chain(game: &StageGame, chain: &BestReplyChain, a1: usize, beta: &ChainPoint) -> f64 {
    chain.support(beta).iter().map(|&(j, p)| p * game.u1(a1, j)).sum()
}

/// The chain point where `u1(a1, ·)` equals `v`, if `v` lies in the range
/// spanned by the chain (within tolerance).
pub fn chain_point_with_u1(game: &StageGame, chain: &BestReplyChain, a1: usize, v: f64) -> Option<ChainPoint> {
    let vals: Vec<f64> = chain.pure_actions.iter().map(|&j| game.u1(a1, j)).collect();
    let n = vals.len();
    if v < vals[0] - TOL || v > vals[n - 1] + TOL {
        return None;
    }
    if v >= vals[n - 1] {
        return Some(chain.top());
    }
    if v <= vals[0] {
        return Some(chain.lowest());
    }
    let seg = (0..n - 1).find(|&k| v < vals[k + 1]).unwrap_or(n - 2);
    let w = (v - vals[seg]) / (vals[seg + 1] - vals[seg]);
    Some(if w <= 0.0 { ChainPoint::pure(seg) } else { ChainPoint { segment: seg, weight: w } })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostBound {
    pub c_bar: f64,
    /// Lowest player-1 action whose best reply is not `a̲₂`.
    pub witness_a1: usize,
}

pub fn erasure_cost_bound(game: &StageGame) -> Result<CostBound> {
    let low2 = game.lowest_a2();
    let witness =
        (0..game.n1()).find(|&i| !game.best_replies_to_mix(i, i, 1.0).contains(&low2)).ok_or(Error::NoSuchAction)?;
    let c_bar = (0..game.n2()).map(|j| game.u1(0, j) - game.u1(witness, j)).fold(f64::INFINITY, f64::min);
    Ok(CostBound { c_bar, witness_a1: witness })
}

/// `Δ = min over pure chain points of u1(a̲₁,β) − u1(a₁*,β) − c`.
pub fn incentive_gap(game: &StageGame, chain: &BestReplyChain) -> Result<f64> {
    let gap = chain
        .pure_actions
        .iter()
        .map(|&j| game.u1(0, j) - game.u1(game.a1_star, j) - game.erase_cost)
        .fold(f64::INFINITY, f64::min);
    if gap <= TOL {
        return Err(Error::NonPositiveGap { gap });
    }
    Ok(gap)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pc(b: f64, x: f64, c: f64) -> StageGame {
        StageGame::product_choice(b, x, c).unwrap()
    }

    #[test]
    fn product_choice_is_valid() {
        let r = validate_assumptions(&pc(1.0, 0.5, 0.2));
        assert!(r.is_valid(), "{r}");
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn equal_u1_column_is_flagged() {
        let g = StageGame::new(
            vec!["L".into(), "H".into()],
            vec!["N".into(), "T".into()],
            vec![vec![0.0, 1.0], vec![-1.0, 1.0]],
            vec![vec![0.0, -0.5], vec![0.5, 1.0]],
            1,
            0.2,
        )
        .unwrap();
        let r = validate_assumptions(&g);
        assert!(r.has(ViolationKind::U1NotDecreasingInA1));
        assert!(r.to_string().contains("u1 not strictly decreasing in a1"));
    }

    #[test]
    fn duplicated_u2_column_is_flagged() {
        let labels = |p: &str| (0..3).map(|i| format!("{p}{i}")).collect::<Vec<_>>();
        let u1 = vec![vec![0.0, 1.0, 2.0], vec![-1.0, 0.5, 1.5], vec![-2.0, 0.0, 1.0]];
        let u2 = vec![vec![1.0, 1.0, 0.0], vec![0.0, 0.0, 0.5], vec![-1.0, -1.0, 2.0]];
        let g = StageGame::new(labels("a"), labels("b"), u1, u2, 2, 0.1).unwrap();
        assert!(validate_assumptions(&g).has(ViolationKind::P2BestReplyNotUnique));
    }

    #[test]
    fn normalization_shift_recorded() {
        let g = StageGame::new(
            vec!["L".into(), "H".into()],
            vec!["N".into(), "T".into()],
            vec![vec![3.0, 5.0], vec![2.0, 4.0]],
            vec![vec![0.0, -0.5], vec![0.5, 1.0]],
            1,
            0.2,
        )
        .unwrap();
        assert_eq!(g.u1(0, 0), 0.0);
        assert_eq!(g.normalization_shift(), 3.0);
        assert_eq!(validate_assumptions(&g).normalization_shift, 3.0);
    }

    #[test]
    fn product_choice_chain() {
        let g = pc(1.0, 0.5, 0.2);
        let chain = build_best_reply_chain(&g).unwrap();
        assert_eq!(chain.pure_actions, vec![0, 1]);
        assert_eq!(chain.thresholds.len(), 1);
        assert!((chain.thresholds[0] - 0.5).abs() < 1e-15);
        let chain = build_best_reply_chain(&pc(1.0, 0.25, 0.2)).unwrap();
        assert!((chain.thresholds[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn dominated_middle_column_excluded() {
        let g = StageGame::new(
            vec!["L".into(), "H".into()],
            vec!["N".into(), "M".into(), "T".into()],
            vec![vec![0.0, 1.0, 2.0], vec![-1.0, 0.0, 1.0]],
            vec![vec![0.0, -1.0, -0.5], vec![0.5, 0.0, 1.0]],
            1,
            0.2,
        )
        .unwrap();
        let chain = build_best_reply_chain(&g).unwrap();
        assert_eq!(chain.pure_actions, vec![0, 2]);
        let mut seen_middle = false;
        for s in 0..=10_000 {
            let lam = s as f64 / 10_000.0;
            let vals: Vec<f64> = (0..3).map(|j| lam * g.u2(1, j) + (1.0 - lam) * g.u2(0, j)).collect();
            seen_middle |= vals[1] >= vals[0].max(vals[2]);
        }
        assert!(!seen_middle);
    }

    #[test]
    fn cost_bound_equals_b() {
        assert_eq!(erasure_cost_bound(&pc(1.0, 0.5, 0.2)).unwrap().c_bar, 1.0);
        assert!((erasure_cost_bound(&pc(0.3, 0.5, 0.1)).unwrap().c_bar - 0.3).abs() < 1e-15);
    }

    #[test]
    fn gap_is_b_minus_c() {
        let g = pc(1.0, 0.5, 0.2);
        let chain = build_best_reply_chain(&g).unwrap();
        assert!((incentive_gap(&g, &chain).unwrap() - 0.8).abs() < 1e-12);
        let g = pc(1.0, 0.5, 0.99);
        assert!((incentive_gap(&g, &chain).unwrap() - 0.01).abs() < 1e-12);
        let g = pc(1.0, 0.5, 1.0);
        assert!(matches!(incentive_gap(&g, &chain), Err(Error::NonPositiveGap { .. })));
    }

    #[test]
    fn chain_payoffs_and_best_replies() {
        let g = pc(1.0, 0.5, 0.2);
        let chain = build_best_reply_chain(&g).unwrap();
        let q = ChainPoint { segment: 0, weight: 0.5 };
        assert_eq!(u1_on_chain(&g, &chain, 0, &q), 1.0);
        assert_eq!(g.u2_posterior_best_reply(0.7), vec![1]);
        assert_eq!(g.u2_posterior_best_reply(0.5), vec![0, 1]);
        let back = chain_point_with_u1(&g, &chain, 0, 1.0).unwrap();
        assert!((back.weight - 0.5).abs() < 1e-15);
        assert!(chain_point_with_u1(&g, &chain, 0, 2.5).is_none());
    }

    #[test]
    fn game_spec_round_trip() {
        let spec: GameSpec = serde_json::from_str(r#"{"product_choice": {"b": 1, "x": 0.5, "c": 0.2}}"#).unwrap();
        let g = StageGame::from_spec(&spec).unwrap();
        assert_eq!(g, pc(1.0, 0.5, 0.2));
        let again = StageGame::from_spec(&GameSpec::Matrix(g.to_spec())).unwrap();
        assert_eq!(again, g);
    }
}
