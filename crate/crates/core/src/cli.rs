//! Command-line front end. Exit codes: 0 success, 2 no equilibrium found,
//! 3 invalid input or failed verification, 4 I/O.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::disclosure::{
    audit_constraints, boundary_best_replies, disclosure_cap, no_disclosure_bounds, unconditional_distribution,
    DisclosurePolicy,
};
use crate::error::{Error, Result};
use crate::game::{build_best_reply_chain, validate_assumptions, GameSpec, StageGame};
use crate::oracle::{verify_equilibrium, VERIFY_TOL};
use crate::report::{csv_with_header, fmt_num, write_atomic, EquilibriumReport};
use crate::sim::{run as run_sim, SimConfig};
use crate::solver::{erasure_payoff_bound, prepare, regime_diagnostics, solve, Discounting, Solution};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NO_EQUILIBRIUM: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Payoffs within this of `(1−δ)c/δ` count as at the bound in sweeps.
const AT_BOUND_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    DeltaBar,
    DeltaHat,
    Pi,
    C,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::DeltaBar => "delta_bar",
            Axis::DeltaHat => "delta_hat",
            Axis::Pi => "pi",
            Axis::C => "c",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub axis: Axis,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

impl SweepAxis {
    pub fn grid(&self) -> Vec<f64> {
        let n = self.steps;
        (0..n).map(|i| self.from + (self.to - self.from) * i as f64 / (n - 1) as f64).collect()
    }

    fn check(&self) -> Result<()> {
        if self.steps < 2 {
            return Err(Error::Config(format!("sweep needs at least 2 steps, got {}", self.steps)));
        }
        Ok(())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    /// `AXIS=FROM:TO:STEPS`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("sweep must look like AXIS=FROM:TO:STEPS, got {s:?}"));
        let (axis, range) = s.split_once('=').ok_or_else(bad)?;
        let axis = match axis.trim() {
            "delta_bar" => Axis::DeltaBar,
            "delta_hat" => Axis::DeltaHat,
            "pi" => Axis::Pi,
            "c" => Axis::C,
            other => return Err(Error::Config(format!("unknown sweep axis {other:?}"))),
        };
        let parts: Vec<&str> = range.split(':').collect();
        let [from, to, steps] = parts[..] else { return Err(bad()) };
        let sweep = SweepAxis {
            axis,
            from: from.trim().parse().map_err(|_| bad())?,
            to: to.trim().parse().map_err(|_| bad())?,
            steps: steps.trim().parse().map_err(|_| bad())?,
        };
        sweep.check()?;
        Ok(sweep)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub n_agents: usize,
    pub n_periods: usize,
    pub burn_in: usize,
}

/// Contents of the `--config` JSON file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub game: Option<GameSpec>,
    /// Game JSON file, relative to the config file.
    #[serde(default)]
    pub game_file: Option<PathBuf>,
    pub delta_hat: f64,
    pub delta_bar: f64,
    pub pi: f64,
    /// Overrides the game's erase cost.
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default)]
    pub sweep: Option<SweepAxis>,
    #[serde(default)]
    pub sim: Option<SimSection>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Disclosure policy file, relative to the config file.
    #[serde(default)]
    pub policy: Option<PathBuf>,
    /// Belief player 2 needs before leaving the lowest action; defaults to the
    /// top chain threshold.
    #[serde(default)]
    pub x_required: Option<f64>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        if let Some(s) = &cfg.sweep {
            s.check()?;
        }
        Ok(cfg)
    }

    /// Loads the game from whichever single source the config names.
    pub fn load_game(&self, base: &Path) -> Result<StageGame> {
        let spec = match (&self.game, &self.game_file) {
            (Some(g), None) => g.clone(),
            (None, Some(f)) => {
                let text = read(&base.join(f))?;
                serde_json::from_str(&text)?
            }
            _ => return Err(Error::Config("exactly one of game and game_file is required".into())),
        };
        let game = StageGame::from_spec(&spec)?;
        match self.c {
            Some(c) => game.with_erase_cost(c),
            None => Ok(game),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "record-erasure", version, about = "Reputation games with costly record erasure")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Run configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides the config's out_dir.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve for the equilibrium and write equilibrium.json and equilibrium.csv.
    Solve(Common),
    /// Solve along one parameter axis and write sweep.csv.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// AXIS=FROM:TO:STEPS with AXIS one of delta_bar, delta_hat, pi, c.
        #[arg(long)]
        sweep: Option<String>,
    },
    /// Simulate a population playing the solved profile.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate a disclosure policy and audit the solved path against it.
    Disclose {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        policy: Option<PathBuf>,
    },
    /// Check every equilibrium condition on a saved equilibrium report.
    Verify {
        report: PathBuf,
        #[arg(long, default_value_t = VERIFY_TOL)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) => EXIT_IO,
        Error::NoEquilibriumFound(_)
        | Error::NoTermination { .. }
        | Error::NonMonotone { .. }
        | Error::NoInteriorSolution { .. }
        | Error::NegativeMass { .. }
        | Error::DegenerateHistory => EXIT_NO_EQUILIBRIUM,
        _ => EXIT_VALIDATION,
    }
}

/// Parses `args` (program name first), runs the command and returns the exit
/// code. Messages go to standard output and standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

struct Loaded {
    cfg: RunConfig,
    game: StageGame,
    out: PathBuf,
    base: PathBuf,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn load(common: &Common) -> Result<Loaded> {
    let text = read(&common.config)?;
    let cfg = RunConfig::from_json(&text)?;
    let base = common.config.parent().map(Path::to_path_buf).unwrap_or_default();
    let game = cfg.load_game(&base)?;
    let out = common.out.clone().or_else(|| cfg.out_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    Ok(Loaded { cfg, game, out, base })
}

/// Prints the validation report and fails if the game breaks an assumption.
fn require_valid(game: &StageGame) -> Result<()> {
    let report = validate_assumptions(game);
    if !report.is_valid() {
        eprint!("{report}");
        return Err(Error::AssumptionsViolated(format!("{} violation(s)", report.violations.len())));
    }
    Ok(())
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Solve(common) => cmd_solve(&common),
        Command::Sweep { common, sweep } => cmd_sweep(&common, sweep.as_deref()),
        Command::Simulate { common, seed } => cmd_simulate(&common, seed),
        Command::Disclose { common, policy } => cmd_disclose(&common, policy),
        Command::Verify { report, tol, out } => cmd_verify(&report, tol, out),
    }
}

fn solve_loaded(l: &Loaded) -> Result<(Discounting, Solution)> {
    require_valid(&l.game)?;
    let disc = Discounting::new(l.cfg.delta_hat, l.cfg.delta_bar)?;
    let sol = solve(&l.game, &disc, l.cfg.pi)?;
    Ok((disc, sol))
}

pub fn cmd_solve(common: &Common) -> Result<i32> {
    let l = load(common)?;
    let (disc, sol) = solve_loaded(&l)?;
    let diag = if l.cfg.pi > 0.0 {
        let chain = prepare(&l.game)?;
        Some(regime_diagnostics(&l.game, &chain, &disc, l.cfg.pi)?)
    } else {
        None
    };
    let report = EquilibriumReport::new(&l.game, &sol, diag)?;
    write_atomic(&l.out.join("equilibrium.json"), report.to_json()?.as_bytes())?;
    write_atomic(&l.out.join("equilibrium.csv"), &report.to_csv()?)?;
    println!(
        "payoff={} t={} t0={} branch={:?} -> {}",
        fmt_num(report.payoff),
        report.t,
        report.t0,
        report.branch,
        l.out.display()
    );
    Ok(EXIT_OK)
}

/// `t_lower` is the closed-form lower bound at `β†` and is blank when `β†`
/// does not exist; `p0_star` is from the solved path.
pub const SWEEP_HEADER: [&str; 12] = [
    "value",
    "payoff",
    "payoff_bound",
    "at_bound",
    "t",
    "t0",
    "p0_star",
    "t_upper",
    "t_lower",
    "bounds_cross",
    "forced_to_bound",
    "error",
];

/// One sweep row; failures are reported in the `error` column.
pub fn sweep_row(game: &StageGame, cfg: &RunConfig, axis: Axis, value: f64) -> Vec<String> {
    let attempt = || -> Result<Vec<String>> {
        let (mut dh, mut db, mut pi) = (cfg.delta_hat, cfg.delta_bar, cfg.pi);
        let mut g = game.clone();
        match axis {
            Axis::DeltaBar => db = value,
            Axis::DeltaHat => dh = value,
            Axis::Pi => pi = value,
            Axis::C => g = game.with_erase_cost(value)?,
        }
        let disc = Discounting::new(dh, db)?;
        let chain = prepare(&g)?;
        let sol = solve(&g, &disc, pi)?;
        let bound = erasure_payoff_bound(&g, disc.delta);
        let p0 = sol.path.p_star.first().copied().unwrap_or(0.0);
        let (t_upper, t_lower, cross, c2) = if pi > 0.0 {
            let d = regime_diagnostics(&g, &chain, &disc, pi)?;
            (d.t_upper, d.t_lower, d.bounds_cross, d.forced_to_bound)
        } else {
            (crate::solver::t_upper_bound(&g, &chain, disc.delta)?, None, false, false)
        };
        let p = &sol.profile;
        Ok(vec![
            fmt_num(value),
            fmt_num(p.payoff),
            fmt_num(bound),
            ((p.payoff - bound).abs() <= AT_BOUND_TOL).to_string(),
            p.t.to_string(),
            p.t0.to_string(),
            fmt_num(p0),
            fmt_num(t_upper),
            t_lower.map(fmt_num).unwrap_or_default(),
            cross.to_string(),
            c2.to_string(),
            String::new(),
        ])
    };
    attempt().unwrap_or_else(|e| {
        let mut row = vec![fmt_num(value)];
        row.extend(std::iter::repeat_n(String::new(), SWEEP_HEADER.len() - 2));
        row.push(e.to_string());
        row
    })
}

pub fn cmd_sweep(common: &Common, sweep: Option<&str>) -> Result<i32> {
    let l = load(common)?;
    require_valid(&l.game)?;
    let axis = match sweep {
        Some(s) => s.parse()?,
        None => l.cfg.sweep.clone().ok_or_else(|| Error::Config("no sweep axis given".into()))?,
    };
    let grid = axis.grid();
    let rows: Vec<Vec<String>> = grid.par_iter().map(|&v| sweep_row(&l.game, &l.cfg, axis.axis, v)).collect();
    let mut header = SWEEP_HEADER;
    header[0] = axis.axis.name();
    write_atomic(&l.out.join("sweep.csv"), &csv_with_header("sweep", &header, &rows)?)?;
    let failed = rows.iter().filter(|r| !r[SWEEP_HEADER.len() - 1].is_empty()).count();
    println!("{} rows ({} failed) -> {}", rows.len(), failed, l.out.join("sweep.csv").display());
    Ok(EXIT_OK)
}

pub fn cmd_simulate(common: &Common, seed: Option<u64>) -> Result<i32> {
    let l = load(common)?;
    let (_, sol) = solve_loaded(&l)?;
    let sim = l.cfg.sim.clone().ok_or_else(|| Error::Config("config has no sim section".into()))?;
    let config = SimConfig {
        n_agents: sim.n_agents,
        n_periods: sim.n_periods,
        burn_in: sim.burn_in,
        seed: seed.or(l.cfg.seed).unwrap_or(0),
        pi: l.cfg.pi,
        delta_hat: l.cfg.delta_hat,
        delta_bar: l.cfg.delta_bar,
    };
    let stats = run_sim(&config, &l.game, &sol)?;
    write_atomic(&l.out.join("sim_stats.json"), (serde_json::to_string_pretty(&stats)? + "\n").as_bytes())?;

    let mut records = vec![];
    let groups = [
        ("honest", "clean", &stats.empirical.honest, &stats.analytic.honest),
        ("opportunistic", "clean", &stats.empirical.opportunistic_chain, &stats.analytic.opportunistic_chain),
        (
            "opportunistic",
            "separated",
            &stats.empirical.opportunistic_separated,
            &stats.analytic.opportunistic_separated,
        ),
    ];
    for (kind, state, emp, ana) in groups {
        for (i, (e, a)) in emp.iter().zip(ana.iter()).enumerate() {
            records.push(vec![kind.into(), state.into(), i.to_string(), fmt_num(*e), fmt_num(*a)]);
        }
    }
    let header = ["type", "state", "length", "empirical", "analytic"];
    write_atomic(&l.out.join("sim_records.csv"), &csv_with_header("sim_records", &header, &records)?)?;

    let labels = l.game.a2_labels();
    let mut consumer = vec![];
    for (k, (emp, exp)) in stats.consumer_frequencies.iter().zip(&stats.consumer_expected).enumerate() {
        for (a, label) in labels.iter().enumerate() {
            consumer.push(vec![k.to_string(), label.clone(), fmt_num(emp[a]), fmt_num(exp[a])]);
        }
    }
    for (a, label) in labels.iter().enumerate() {
        let expected = if a == l.game.lowest_a2() { 1.0 } else { 0.0 };
        consumer.push(vec![
            "separated".into(),
            label.clone(),
            fmt_num(stats.separated_frequencies[a]),
            fmt_num(expected),
        ]);
    }
    let header = ["record", "action", "empirical", "expected"];
    write_atomic(&l.out.join("sim_consumer.csv"), &csv_with_header("sim_consumer", &header, &consumer)?)?;
    println!(
        "tv_opportunistic={} tv_honest={} v0_estimate={} v0_analytic={} -> {}",
        fmt_num(stats.tv_opportunistic),
        fmt_num(stats.tv_honest),
        fmt_num(stats.v0_estimate),
        fmt_num(stats.v0_analytic),
        l.out.display()
    );
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct DisclosureOutput {
    schema_version: u32,
    pi: f64,
    delta: f64,
    boundary_best_replies: (String, String),
    no_disclosure_bounds: (f64, f64),
    disclosure_cap: f64,
    q_tilde: Vec<f64>,
    truncation_mass: f64,
    x_required: f64,
    sum_mu_p: Option<f64>,
    mass_budget: Option<f64>,
    audit_pass: Option<bool>,
    audit_note: Option<String>,
}

pub fn cmd_disclose(common: &Common, policy: Option<PathBuf>) -> Result<i32> {
    let l = load(common)?;
    require_valid(&l.game)?;
    let policy_path = policy.or_else(|| l.cfg.policy.as_ref().map(|p| l.base.join(p)));
    let policy_path = policy_path.ok_or_else(|| Error::Config("no disclosure policy given".into()))?;
    let policy = DisclosurePolicy::from_json(&read(&policy_path)?)?;
    let disc = Discounting::new(l.cfg.delta_hat, l.cfg.delta_bar)?;
    let pi = l.cfg.pi;
    let q = unconditional_distribution(&policy, disc.delta_bar)?;
    let bounds = no_disclosure_bounds(&l.game, pi, disc.delta);
    let cap = disclosure_cap(&l.game, pi, disc.delta);
    let (lo, hi) = boundary_best_replies(&l.game, pi);
    let chain = build_best_reply_chain(&l.game)?;
    let x_required = l.cfg.x_required.unwrap_or_else(|| chain.pi_star());

    let mut out = DisclosureOutput {
        schema_version: crate::report::SCHEMA_VERSION,
        pi,
        delta: disc.delta,
        boundary_best_replies: (l.game.a2_labels()[lo].clone(), l.game.a2_labels()[hi].clone()),
        no_disclosure_bounds: bounds,
        disclosure_cap: cap,
        q_tilde: q.q_tilde.iter().map(|&v| crate::report::round12(v)).collect(),
        truncation_mass: q.truncation_mass,
        x_required,
        sum_mu_p: None,
        mass_budget: None,
        audit_pass: None,
        audit_note: None,
    };
    match solve(&l.game, &disc, pi) {
        Ok(sol) => {
            let audit = audit_constraints(&sol.path.p_star, &sol.path.mu_star, &q, pi, x_required, disc.delta_bar)?;
            let mut buf = format!("# schema_version={} audit\n", crate::report::SCHEMA_VERSION).into_bytes();
            audit.write_csv(&mut buf)?;
            write_atomic(&l.out.join("audit.csv"), &buf)?;
            out.sum_mu_p = Some(audit.sum_mu_p);
            out.mass_budget = Some(audit.mass_budget);
            out.audit_pass = Some(audit.all_pass());
        }
        Err(e) => out.audit_note = Some(format!("no solved path to audit: {e}")),
    }
    write_atomic(&l.out.join("disclosure.json"), (serde_json::to_string_pretty(&out)? + "\n").as_bytes())?;
    println!("bounds: lower={} upper={} cap={}", fmt_num(bounds.0), fmt_num(bounds.1), fmt_num(cap));
    Ok(EXIT_OK)
}

pub fn cmd_verify(report: &Path, tol: f64, out: Option<PathBuf>) -> Result<i32> {
    let rep = EquilibriumReport::from_json(&read(report)?)?;
    let (game, disc, sol) = rep.to_solution()?;
    let chain = build_best_reply_chain(&game)?;
    let result = verify_equilibrium(&game, &chain, &disc, rep.params.pi, &sol.profile, &sol.path, tol)?;
    let rows: Vec<Vec<String>> = result
        .rows
        .iter()
        .map(|r| {
            vec![
                r.k.to_string(),
                r.id.as_str().into(),
                r.detail.clone(),
                fmt_num(r.lhs),
                fmt_num(r.rhs),
                fmt_num(r.slack),
                r.pass.to_string(),
            ]
        })
        .collect();
    let out = out.unwrap_or_else(|| report.parent().map(Path::to_path_buf).unwrap_or_default());
    let header = ["k", "id", "detail", "lhs", "rhs", "slack", "pass"];
    write_atomic(&out.join("verification.csv"), &csv_with_header("verification", &header, &rows)?)?;
    let failed = result.failures().count();
    println!("{} rows, {} failed", result.rows.len(), failed);
    for f in result.failures() {
        eprintln!("fail k={} {} {}: slack {}", f.k, f.id.as_str(), f.detail, fmt_num(f.slack));
    }
    Ok(if failed == 0 { EXIT_OK } else { EXIT_VALIDATION })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_axis_parse() {
        let s: SweepAxis = "delta_bar=0.9:0.9999:5".parse().unwrap();
        assert_eq!(s.axis, Axis::DeltaBar);
        assert_eq!(s.grid().len(), 5);
        assert!((s.grid()[4] - 0.9999).abs() < 1e-15);
        assert!("pi=0:1:1".parse::<SweepAxis>().is_err());
        assert!("gamma=0:1:3".parse::<SweepAxis>().is_err());
        assert!("pi=0:1".parse::<SweepAxis>().is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::NoEquilibriumFound("x".into())), 2);
        assert_eq!(exit_code(&Error::InvalidPrior(2.0)), 3);
        assert_eq!(exit_code(&Error::Io(std::io::Error::other("x"))), 4);
    }

    #[test]
    fn config_needs_one_game_source() {
        let cfg = RunConfig::from_json(r#"{"delta_hat": 0.9, "delta_bar": 0.99, "pi": 0.5}"#).unwrap();
        assert!(matches!(cfg.load_game(Path::new(".")), Err(Error::Config(_))));
        let cfg = RunConfig::from_json(
            r#"{"game": {"product_choice": {"b": 1, "x": 0.5, "c": 0.2}}, "delta_hat": 0.9, "delta_bar": 0.99, "pi": 0.5, "c": 0.1}"#,
        )
        .unwrap();
        assert_eq!(cfg.load_game(Path::new(".")).unwrap().erase_cost(), 0.1);
        assert!(RunConfig::from_json(r#"{"delta_hat": 0.9, "delta_bar": 0.99, "pi": 0.5, "bogus": 1}"#).is_err());
    }
}
