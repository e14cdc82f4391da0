//! Report files: equilibrium JSON and CSV, atomic writes, and reading a report
//! back for verification.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::belief::BeliefPath;
use crate::error::{Error, Result};
use crate::game::{ChainPoint, GameSpec, MatrixGame, StageGame};
use crate::solver::{
    erasure_payoff_bound, Discounting, EquilibriumProfile, MultiplicityEntry, Regime, RegimeDiagnostics, Solution,
    SolveBranch,
};

pub const SCHEMA_VERSION: u32 = 1;

/// Rounds to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// Shortest text for `x` after rounding to 12 significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{}", round12(x))
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// CSV text with a leading `# schema_version=N <kind>` line.
pub fn csv_with_header(kind: &str, header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut out = format!("# schema_version={SCHEMA_VERSION} {kind}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
    }
    Ok(out)
}

/// Strips `#` lines and parses the rest as CSV with headers.
pub fn read_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let header = r.headers()?.iter().map(String::from).collect();
    let mut rows = vec![];
    for rec in r.records() {
        rows.push(rec?.iter().map(String::from).collect());
    }
    Ok((header, rows))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub delta_hat: f64,
    pub delta_bar: f64,
    pub delta: f64,
    pub pi: f64,
    pub c: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionProb {
    pub action: String,
    pub prob: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub k: usize,
    pub beta_segment: usize,
    pub beta_weight: f64,
    pub beta: Vec<ActionProb>,
    pub value: f64,
    pub regime: Regime,
    /// Absent at `k = t`.
    pub p_star: Option<f64>,
    pub mu_star: Option<f64>,
    pub x: Option<f64>,
    pub erase: Option<f64>,
    pub reputation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub schema_version: u32,
    pub game: MatrixGame,
    pub params: Params,
    pub payoff: f64,
    /// `(1−δ)c/δ`.
    pub payoff_bound: f64,
    pub t: usize,
    pub t0: i64,
    pub branch: SolveBranch,
    pub rows: Vec<ReportRow>,
    pub multiplicity: Vec<MultiplicityEntry>,
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<RegimeDiagnostics>,
}

fn round_matrix(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    m.iter().map(|r| r.iter().map(|&v| round12(v)).collect()).collect()
}

impl EquilibriumReport {
    pub fn new(game: &StageGame, solution: &Solution, diagnostics: Option<RegimeDiagnostics>) -> Result<Self> {
        let prof = &solution.profile;
        let path = &solution.path;
        let chain = crate::game::build_best_reply_chain(game)?;
        let labels = game.a2_labels();
        let opt = |v: &[f64], k: usize| v.get(k).map(|&x| round12(x));
        let rows = (0..=prof.t)
            .map(|k| {
                let b = prof.beta[k];
                ReportRow {
                    k,
                    beta_segment: b.segment,
                    beta_weight: round12(b.weight),
                    beta: chain
                        .support(&b)
                        .into_iter()
                        .map(|(a, q)| ActionProb { action: labels[a].clone(), prob: round12(q) })
                        .collect(),
                    value: round12(prof.values[k]),
                    regime: prof.regimes[k],
                    p_star: opt(&path.p_star, k),
                    mu_star: opt(&path.mu_star, k),
                    x: opt(&path.x, k),
                    erase: opt(&path.erase, k),
                    reputation: round12(path.reputation[k]),
                }
            })
            .collect();
        let mut spec = game.to_spec();
        spec.u1 = round_matrix(&spec.u1);
        spec.u2 = round_matrix(&spec.u2);
        spec.c = round12(spec.c);
        let multiplicity = prof
            .multiplicity
            .iter()
            .map(|m| MultiplicityEntry {
                x_interval: (round12(m.x_interval.0), round12(m.x_interval.1)),
                x_chosen: round12(m.x_chosen),
                ..m.clone()
            })
            .collect();
        Ok(Self {
            schema_version: SCHEMA_VERSION,
            game: spec,
            params: Params {
                delta_hat: prof.delta_hat,
                delta_bar: prof.delta_bar,
                delta: round12(prof.delta()),
                pi: prof.pi,
                c: round12(game.erase_cost()),
            },
            payoff: round12(prof.payoff),
            payoff_bound: round12(erasure_payoff_bound(game, prof.delta())),
            t: prof.t,
            t0: prof.t0,
            branch: prof.branch,
            rows,
            multiplicity,
            notes: prof.notes.clone(),
            diagnostics,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(text)?;
        if r.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!("unsupported schema_version {}", r.schema_version)));
        }
        Ok(r)
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let labels = &self.game.a2;
        let mut header: Vec<String> =
            ["k", "beta_position", "value", "regime", "p_star", "mu_star", "x", "erase", "reputation"]
                .iter()
                .map(|s| s.to_string())
                .collect();
        header.extend(labels.iter().map(|l| format!("beta_{l}")));
        let opt = |v: Option<f64>| v.map(fmt_num).unwrap_or_default();
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                let regime = serde_json::to_value(r.regime).ok().and_then(|v| v.as_str().map(String::from));
                let mut row = vec![
                    r.k.to_string(),
                    fmt_num(r.beta_segment as f64 + r.beta_weight),
                    fmt_num(r.value),
                    regime.unwrap_or_default(),
                    opt(r.p_star),
                    opt(r.mu_star),
                    opt(r.x),
                    opt(r.erase),
                    fmt_num(r.reputation),
                ];
                row.extend(
                    labels.iter().map(|l| fmt_num(r.beta.iter().filter(|a| &a.action == l).map(|a| a.prob).sum())),
                );
                row
            })
            .collect();
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        csv_with_header("equilibrium", &header, &rows)
    }

    /// Rebuilds the game, discounting and solution the report describes.
    pub fn to_solution(&self) -> Result<(StageGame, Discounting, Solution)> {
        let game = StageGame::from_spec(&GameSpec::Matrix(self.game.clone()))?;
        let disc = Discounting::new(self.params.delta_hat, self.params.delta_bar)?;
        let t = self.t;
        if self.rows.len() != t + 1 {
            return Err(Error::ShapeMismatch(format!("{} rows for t={t}", self.rows.len())));
        }
        let take = |f: fn(&ReportRow) -> Option<f64>| -> Result<Vec<f64>> {
            self.rows[..t]
                .iter()
                .map(|r| f(r).ok_or_else(|| Error::ShapeMismatch(format!("row {} lacks path data", r.k))))
                .collect()
        };
        let profile = EquilibriumProfile {
            delta_hat: self.params.delta_hat,
            delta_bar: self.params.delta_bar,
            pi: self.params.pi,
            t,
            t0: self.t0,
            beta: self.rows.iter().map(|r| ChainPoint { segment: r.beta_segment, weight: r.beta_weight }).collect(),
            values: self.rows.iter().map(|r| r.value).collect(),
            regimes: self.rows.iter().map(|r| r.regime).collect(),
            payoff: self.payoff,
            branch: self.branch,
            multiplicity: self.multiplicity.clone(),
            notes: self.notes.clone(),
        };
        let path = BeliefPath {
            p_star: take(|r| r.p_star)?,
            mu_star: take(|r| r.mu_star)?,
            x: take(|r| r.x)?,
            erase: take(|r| r.erase)?,
            reputation: self.rows.iter().map(|r| r.reputation).collect(),
            l: crate::belief::likelihood_ratio(self.params.pi),
        };
        Ok((game, disc, Solution { profile, path }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{verify_equilibrium, VERIFY_TOL};
    use crate::solver::solve;

    #[test]
    fn rounding() {
        assert_eq!(fmt_num(0.1 + 0.2), "0.3");
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(-2.5e-20), "-0.000000000000000000025");
    }

    #[test]
    fn report_round_trip_verifies() {
        let g = StageGame::product_choice(1.0, 0.5, 0.2).unwrap();
        let disc = Discounting::new(0.9, 0.99).unwrap();
        let sol = solve(&g, &disc, 0.6).unwrap();
        let rep = EquilibriumReport::new(&g, &sol, None).unwrap();
        let back = EquilibriumReport::from_json(&rep.to_json().unwrap()).unwrap();
        assert_eq!(back, rep);
        let (g2, d2, s2) = back.to_solution().unwrap();
        let chain = crate::game::build_best_reply_chain(&g2).unwrap();
        let v = verify_equilibrium(&g2, &chain, &d2, 0.6, &s2.profile, &s2.path, VERIFY_TOL).unwrap();
        assert!(v.all_pass(), "{:?}", v.failures().collect::<Vec<_>>());
        let csv = String::from_utf8(rep.to_csv().unwrap()).unwrap();
        assert!(csv.starts_with("# schema_version=1 equilibrium\n"));
        let (header, rows) = read_csv(&csv).unwrap();
        assert_eq!(header[0], "k");
        assert_eq!(rows.len(), sol.profile.t + 1);
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub").join("a.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
    }
}
