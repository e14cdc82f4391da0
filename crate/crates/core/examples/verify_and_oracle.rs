// Verifies a solved profile row by row, then cross-checks it against the
// brute-force oracle.

use record_erasure::game::{build_best_reply_chain, StageGame};
use record_erasure::oracle::{brute_force_profiles, verify_equilibrium, VERIFY_TOL};
use record_erasure::solver::{solve, Discounting};

pub fn run_example() -> Result<usize, Box<dyn std::error::Error>> {
    let game = StageGame::product_choice(1.0, 0.5, 0.2)?;
    let disc = Discounting::new(0.9, 0.99)?;
    let chain = build_best_reply_chain(&game)?;
    let mut sol = solve(&game, &disc, 0.6)?;

    let report = verify_equilibrium(&game, &chain, &disc, 0.6, &sol.profile, &sol.path, VERIFY_TOL)?;
    println!("{} rows checked, {} failed", report.rows.len(), report.failures().count());

    sol.profile.values[3] += 1e-4;
    let broken = verify_equilibrium(&game, &chain, &disc, 0.6, &sol.profile, &sol.path, VERIFY_TOL)?;
    for f in broken.failures().take(3) {
        println!("  after tampering: k={} {} {} slack {:.3e}", f.k, f.id.as_str(), f.detail, f.slack);
    }

    let oracle = brute_force_profiles(&game, &disc, 0.6, 200);
    for c in &oracle.clusters {
        println!("oracle cluster at position {:.4}, payoff {:.6}", c.center, c.payoff);
    }
    Ok(oracle.clusters.len())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
