//! Agent-based population of long-run players matched with consumers, playing
//! a solved profile. Each slot owns a ChaCha8 stream, so results depend on the
//! seed only and not on the number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::belief::{record_distribution, RecordDistribution};
use crate::error::{Error, Result};
use crate::game::{build_best_reply_chain, StageGame};
use crate::solver::{Regime, Solution};

/// Agents per work unit. Fixed so that the reduction order never changes.
const CHUNK: usize = 8192;
/// Cohorts feed the value estimate if the chance that one of their members
/// outlives the run is below this, or if they entered in the first half of a
/// run too short for that.
const CENSORING_LIMIT: f64 = 1e-6;
const PARAM_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentType {
    Honest,
    Opportunistic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordState {
    /// Clean record of this many commitment actions.
    Clean(u32),
    /// Periods elapsed since an unerased low action.
    Separated(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub kind: AgentType,
    pub record: RecordState,
    pub age: u32,
    /// Period in which the current occupant entered.
    pub entered: u32,
    pub disc_payoff_acc: f64,
    pub weight: f64,
    pub erase_cost_paid: f64,
}

impl Agent {
    fn entrant(kind: AgentType, period: u32) -> Self {
        Self {
            kind,
            record: RecordState::Clean(0),
            age: 0,
            entered: period,
            disc_payoff_acc: 0.0,
            weight: 1.0,
            erase_cost_paid: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_agents: usize,
    pub n_periods: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub pi: f64,
    pub delta_hat: f64,
    pub delta_bar: f64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_agents == 0 {
            return Err(Error::Config("n_agents must be at least 1".into()));
        }
        if self.burn_in >= self.n_periods {
            return Err(Error::Config("burn_in must be below n_periods".into()));
        }
        if !(0.0..1.0).contains(&self.pi) {
            return Err(Error::InvalidPrior(self.pi));
        }
        Ok(())
    }
}

/// Action tables derived once from the profile.
#[derive(Clone, Debug)]
struct Play {
    t: usize,
    /// Cumulative consumer distribution at `h_*^k`, `k ≤ t`.
    consumer: Vec<Vec<(usize, f64)>>,
    p: Vec<f64>,
    erase: Vec<f64>,
    lowest_a2: usize,
    a1_star: usize,
    u1: Vec<Vec<f64>>,
    c: f64,
    n2: usize,
    pi: f64,
    delta_hat: f64,
    delta_bar: f64,
    /// Length of the folded record histograms.
    len: usize,
    value_cutoff: u32,
}

impl Play {
    fn new(game: &StageGame, solution: &Solution, config: &SimConfig) -> Result<Self> {
        let prof = &solution.profile;
        let path = &solution.path;
        let chain = build_best_reply_chain(game)?;
        let t = prof.t;
        if path.p_star.len() < t || path.erase.len() < t {
            return Err(Error::ShapeMismatch(format!("path shorter than t={t}")));
        }
        let consumer = (0..=t)
            .map(|k| {
                let mut acc = 0.0;
                let mut cum: Vec<(usize, f64)> = chain
                    .support(&prof.beta_at(k))
                    .into_iter()
                    .map(|(a, q)| {
                        acc += q;
                        (a, acc)
                    })
                    .collect();
                cum.last_mut().expect("nonempty support").1 = 1.0;
                cum
            })
            .collect();
        let mut erase: Vec<f64> = path.erase[..t].to_vec();
        erase.push(prof.tail_erase_prob());
        let mut p: Vec<f64> = path.p_star[..t].to_vec();
        p.push(0.0);
        let len = (1e-10_f64.ln() / config.delta_bar.ln()).ceil() as usize + 1;
        let horizon = (CENSORING_LIMIT.ln() / config.delta_bar.ln()).ceil() as usize;
        let value_cutoff = config.n_periods.saturating_sub(horizon).max(config.n_periods / 2) as u32;
        Ok(Self {
            t,
            consumer,
            p,
            erase,
            lowest_a2: game.lowest_a2(),
            a1_star: game.a1_star(),
            u1: (0..game.n1()).map(|i| (0..game.n2()).map(|j| game.u1(i, j)).collect()).collect(),
            c: game.erase_cost(),
            n2: game.n2(),
            pi: config.pi,
            delta_hat: config.delta_hat,
            delta_bar: config.delta_bar,
            len: len.max(2),
            value_cutoff,
        })
    }
}

/// Per-period counts from one chunk of agents.
#[derive(Clone, Debug)]
struct Tally {
    honest: Vec<u64>,
    opp_chain: Vec<u64>,
    opp_separated: Vec<u64>,
    /// `(t + 2) × n2`: clean records `0..=t`, then separated.
    consumer: Vec<u64>,
    lifetimes: u64,
    value_sum: f64,
    value_sq: f64,
    honest_erase_cost: f64,
    invariant_breaks: u64,
}

impl Tally {
    fn new(play: &Play) -> Self {
        Self {
            honest: vec![0; play.len],
            opp_chain: vec![0; play.t + 1],
            opp_separated: vec![0; play.len],
            consumer: vec![0; (play.t + 2) * play.n2],
            lifetimes: 0,
            value_sum: 0.0,
            value_sq: 0.0,
            honest_erase_cost: 0.0,
            invariant_breaks: 0,
        }
    }

    fn merge(mut self, other: &Tally) -> Self {
        for (a, b) in [
            (&mut self.honest, &other.honest),
            (&mut self.opp_chain, &other.opp_chain),
            (&mut self.opp_separated, &other.opp_separated),
            (&mut self.consumer, &other.consumer),
        ] {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        self.lifetimes += other.lifetimes;
        self.value_sum += other.value_sum;
        self.value_sq += other.value_sq;
        self.honest_erase_cost += other.honest_erase_cost;
        self.invariant_breaks += other.invariant_breaks;
        self
    }
}

/// The population and its random streams.
pub struct Population {
    pub agents: Vec<Agent>,
    rngs: Vec<ChaCha8Rng>,
    play: Play,
    period: u32,
    exit_enabled: bool,
}

fn draw_type(rng: &mut ChaCha8Rng, pi: f64) -> AgentType {
    if rng.random::<f64>() < pi {
        AgentType::Honest
    } else {
        AgentType::Opportunistic
    }
}

impl Population {
    /// Fresh population of entrants. Fails with `ProfileMismatch` if the
    /// profile was solved for different parameters.
    pub fn new(config: &SimConfig, game: &StageGame, solution: &Solution) -> Result<Self> {
        config.validate()?;
        let prof = &solution.profile;
        for (name, a, b) in [
            ("pi", config.pi, prof.pi),
            ("delta_hat", config.delta_hat, prof.delta_hat),
            ("delta_bar", config.delta_bar, prof.delta_bar),
        ] {
            if (a - b).abs() > PARAM_TOL {
                return Err(Error::ProfileMismatch(format!("{name}: config {a}, profile {b}")));
            }
        }
        let play = Play::new(game, solution, config)?;
        let mut rngs: Vec<ChaCha8Rng> = (0..config.n_agents)
            .map(|slot| {
                let mut r = ChaCha8Rng::seed_from_u64(config.seed);
                r.set_stream(slot as u64);
                r
            })
            .collect();
        let agents = rngs.iter_mut().map(|r| Agent::entrant(draw_type(r, config.pi), 0)).collect();
        Ok(Self { agents, rngs, play, period: 0, exit_enabled: true })
    }

    /// Population whose agents are given explicitly.
    pub fn with_agents(config: &SimConfig, game: &StageGame, solution: &Solution, agents: Vec<Agent>) -> Result<Self> {
        let cfg = SimConfig { n_agents: agents.len(), ..config.clone() };
        let mut pop = Self::new(&cfg, game, solution)?;
        pop.agents = agents;
        Ok(pop)
    }

    /// Turns exit and replacement off, for tracing single lives.
    pub fn set_exit(&mut self, enabled: bool) {
        self.exit_enabled = enabled;
    }

    pub fn period(&self) -> u32 {
        self.period
    }

    /// Advances every agent by one period.
    pub fn step(&mut self) {
        self.step_tally(false);
    }

    fn step_tally(&mut self, census: bool) -> Tally {
        let play = &self.play;
        let period = self.period;
        let exit = self.exit_enabled;
        let tallies: Vec<Tally> = self
            .agents
            .par_chunks_mut(CHUNK)
            .zip(self.rngs.par_chunks_mut(CHUNK))
            .map(|(agents, rngs)| {
                let mut tally = Tally::new(play);
                for (agent, rng) in agents.iter_mut().zip(rngs) {
                    advance(agent, rng, play, period, exit, census, &mut tally);
                }
                tally
            })
            .collect();
        self.period += 1;
        let first = Tally::new(&self.play);
        tallies.iter().fold(first, |acc, t| acc.merge(t))
    }
}

fn advance(
    agent: &mut Agent,
    rng: &mut ChaCha8Rng,
    play: &Play,
    period: u32,
    exit: bool,
    census: bool,
    tally: &mut Tally,
) {
    let u: f64 = rng.random();
    let (a2, row) = match agent.record {
        RecordState::Clean(k) => {
            let k = (k as usize).min(play.t);
            let a2 = play.consumer[k].iter().find(|(_, cum)| u < *cum).map_or(play.lowest_a2, |(a, _)| *a);
            (a2, k)
        }
        RecordState::Separated(_) => (play.lowest_a2, play.t + 1),
    };
    if census {
        tally.consumer[row * play.n2 + a2] += 1;
    }

    let mut cost = 0.0;
    let a1 = match (agent.kind, agent.record) {
        (AgentType::Honest, RecordState::Clean(k)) => {
            agent.record = RecordState::Clean(k + 1);
            play.a1_star
        }
        (AgentType::Opportunistic, RecordState::Clean(k)) => {
            let idx = (k as usize).min(play.t);
            if rng.random::<f64>() < play.p[idx] {
                agent.record = RecordState::Clean(k + 1);
                play.a1_star
            } else {
                if rng.random::<f64>() < play.erase[idx] {
                    cost = play.c;
                } else {
                    agent.record = RecordState::Separated(0);
                }
                0
            }
        }
        (_, RecordState::Separated(j)) => {
            agent.record = RecordState::Separated(j + 1);
            0
        }
    };
    agent.disc_payoff_acc += agent.weight * (play.u1[a1][a2] - cost);
    agent.erase_cost_paid += cost;
    agent.weight *= play.delta_hat;
    agent.age += 1;
    if agent.kind == AgentType::Honest {
        tally.honest_erase_cost += cost;
        if matches!(agent.record, RecordState::Separated(_)) {
            tally.invariant_breaks += 1;
        }
    }
    if let RecordState::Clean(k) = agent.record {
        if k > agent.age {
            tally.invariant_breaks += 1;
        }
    }

    if exit && rng.random::<f64>() >= play.delta_bar {
        if agent.kind == AgentType::Opportunistic && agent.entered < play.value_cutoff {
            let v = (1.0 - play.delta_hat * play.delta_bar) * agent.disc_payoff_acc;
            tally.lifetimes += 1;
            tally.value_sum += v;
            tally.value_sq += v * v;
        }
        *agent = Agent::entrant(draw_type(rng, play.pi), period + 1);
    }

    if census {
        let fold = |j: u32| (j as usize).min(play.len - 1);
        match (agent.kind, agent.record) {
            (AgentType::Honest, RecordState::Clean(k)) => tally.honest[fold(k)] += 1,
            (AgentType::Opportunistic, RecordState::Clean(k)) => tally.opp_chain[(k as usize).min(play.t)] += 1,
            (AgentType::Opportunistic, RecordState::Separated(j)) => tally.opp_separated[fold(j)] += 1,
            (AgentType::Honest, RecordState::Separated(_)) => {}
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimMetadata {
    pub seed: u64,
    pub n_agents: usize,
    pub n_periods: usize,
    pub burn_in: usize,
    pub rng: String,
    /// `(k, erase probability)` at each record length where the opportunistic
    /// type is indifferent about erasing.
    pub indifferent_erase: Vec<(usize, f64)>,
    /// Entry periods before this feed the value estimate.
    pub value_cohort_cutoff: u32,
    /// Chance that a member of the last counted cohort outlives the run.
    pub censoring_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimStats {
    /// Time-averaged census over post burn-in periods; clean records fold
    /// at `t` and separated records at the histogram length.
    pub empirical: RecordDistribution,
    pub analytic: RecordDistribution,
    pub tv_opportunistic: f64,
    pub tv_honest: f64,
    pub v0_estimate: f64,
    pub v0_std_error: f64,
    pub v0_analytic: f64,
    pub completed_lifetimes: u64,
    /// Consumer action frequencies on clean records `0..=t` (longer records
    /// folded into `t`).
    pub consumer_frequencies: Vec<Vec<f64>>,
    /// Consumer action frequencies after separation.
    pub separated_frequencies: Vec<f64>,
    /// Expected frequencies at `h_*^k`, from the profile.
    pub consumer_expected: Vec<Vec<f64>>,
    pub honest_erase_cost: f64,
    pub invariant_breaks: u64,
    pub metadata: SimMetadata,
}

fn normalize(counts: &[u64], total: f64) -> Vec<f64> {
    counts.iter().map(|&c| if total > 0.0 { c as f64 / total } else { 0.0 }).collect()
}

fn tv(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().max(b.len());
    0.5 * (0..n).map(|i| (a.get(i).unwrap_or(&0.0) - b.get(i).unwrap_or(&0.0)).abs()).sum::<f64>()
}

fn scaled(v: &[f64], s: f64) -> Vec<f64> {
    v.iter().map(|x| x / s).collect()
}

/// Runs the simulation and compares against the analytic record distribution
/// and ex-ante payoff.
pub fn run(config: &SimConfig, game: &StageGame, solution: &Solution) -> Result<SimStats> {
    let mut pop = Population::new(config, game, solution)?;
    let play = pop.play.clone();
    let mut total = Tally::new(&play);
    for period in 0..config.n_periods {
        let tally = pop.step_tally(period >= config.burn_in);
        total = total.merge(&tally);
    }

    let analytic_raw = record_distribution(&solution.profile, &solution.path, config.pi, config.delta_bar);
    let opp_total = analytic_raw.opportunistic_total();
    let hon_total = analytic_raw.honest_total();
    let analytic = RecordDistribution {
        honest: if hon_total > 0.0 { scaled(&analytic_raw.honest, hon_total) } else { analytic_raw.honest.clone() },
        opportunistic_chain: scaled(&analytic_raw.opportunistic_chain, opp_total),
        opportunistic_separated: scaled(&analytic_raw.opportunistic_separated, opp_total),
    };

    let n_opp = (total.opp_chain.iter().sum::<u64>() + total.opp_separated.iter().sum::<u64>()) as f64;
    let n_hon = total.honest.iter().sum::<u64>() as f64;
    let empirical = RecordDistribution {
        honest: normalize(&total.honest, n_hon),
        opportunistic_chain: normalize(&total.opp_chain, n_opp),
        opportunistic_separated: normalize(&total.opp_separated, n_opp),
    };
    let join = |d: &RecordDistribution| {
        let mut v = d.opportunistic_chain.clone();
        v.extend(&d.opportunistic_separated);
        v
    };
    let tv_opportunistic = tv(&join(&empirical), &join(&analytic));
    let tv_honest = if n_hon > 0.0 { tv(&empirical.honest, &analytic.honest) } else { 0.0 };

    let n = total.lifetimes as f64;
    let v0_estimate = if n > 0.0 { total.value_sum / n } else { f64::NAN };
    let var =
        if n > 1.0 { (total.value_sq / n - v0_estimate * v0_estimate).max(0.0) * n / (n - 1.0) } else { f64::NAN };

    let chain = build_best_reply_chain(game)?;
    let n2 = play.n2;
    let consumer_frequencies = (0..=play.t)
        .map(|k| {
            let row = &total.consumer[k * n2..(k + 1) * n2];
            normalize(row, row.iter().sum::<u64>() as f64)
        })
        .collect();
    let sep = &total.consumer[(play.t + 1) * n2..];
    let separated_frequencies = normalize(sep, sep.iter().sum::<u64>() as f64);
    let consumer_expected = (0..=play.t).map(|k| chain.distribution(&solution.profile.beta_at(k), n2)).collect();

    let prof = &solution.profile;
    let indifferent_erase =
        (0..=prof.t).filter(|&k| prof.regimes[k] == Regime::Indifferent).map(|k| (k, play.erase[k])).collect();
    let last_counted = play.value_cutoff.saturating_sub(1) as i32;
    let censoring_bound = config.delta_bar.powi(config.n_periods as i32 - last_counted);

    Ok(SimStats {
        empirical,
        analytic,
        tv_opportunistic,
        tv_honest,
        v0_estimate,
        v0_std_error: (var / n).sqrt(),
        v0_analytic: prof.payoff,
        completed_lifetimes: total.lifetimes,
        consumer_frequencies,
        separated_frequencies,
        consumer_expected,
        honest_erase_cost: total.honest_erase_cost,
        invariant_breaks: total.invariant_breaks,
        metadata: SimMetadata {
            seed: config.seed,
            n_agents: config.n_agents,
            n_periods: config.n_periods,
            burn_in: config.burn_in,
            rng: "ChaCha8, one stream per agent slot".into(),
            indifferent_erase,
            value_cohort_cutoff: play.value_cutoff,
            censoring_bound,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{solve, Discounting};

    fn setup(pi: f64) -> (StageGame, Solution, SimConfig) {
        let g = StageGame::product_choice(1.0, 0.5, 0.2).unwrap();
        let disc = Discounting::new(0.9, 0.99).unwrap();
        let sol = solve(&g, &disc, pi).unwrap();
        let cfg =
            SimConfig { n_agents: 2000, n_periods: 300, burn_in: 100, seed: 7, pi, delta_hat: 0.9, delta_bar: 0.99 };
        (g, sol, cfg)
    }

    #[test]
    fn mismatch_rejected() {
        let (g, sol, mut cfg) = setup(0.6);
        cfg.pi = 0.5;
        assert!(matches!(run(&cfg, &g, &sol), Err(Error::ProfileMismatch(_))));
    }

    #[test]
    fn honest_agent_record_tracks_age() {
        let (g, sol, cfg) = setup(0.6);
        let mut pop = Population::with_agents(&cfg, &g, &sol, vec![Agent::entrant(AgentType::Honest, 0)]).unwrap();
        pop.set_exit(false);
        for _ in 0..500 {
            pop.step();
            let a = pop.agents[0];
            assert_eq!(a.record, RecordState::Clean(a.age));
            assert_eq!(a.erase_cost_paid, 0.0);
        }
    }

    #[test]
    fn same_seed_same_stats() {
        let (g, sol, cfg) = setup(0.6);
        let a = run(&cfg, &g, &sol).unwrap();
        let b = run(&cfg, &g, &sol).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn no_honest_type_means_lowest_consumer_action() {
        let (g, sol, cfg) = setup(0.0);
        let stats = run(&cfg, &g, &sol).unwrap();
        let low = g.lowest_a2();
        for row in &stats.consumer_frequencies {
            if row.iter().sum::<f64>() > 0.0 {
                assert_eq!(row[low], 1.0);
            }
        }
    }
}
