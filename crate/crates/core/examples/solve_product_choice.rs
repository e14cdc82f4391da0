// Solves the product-choice game and prints the clean-record path.

use record_erasure::game::StageGame;
use record_erasure::solver::{erasure_payoff_bound, solve, Discounting};

pub fn run_example() -> Result<f64, Box<dyn std::error::Error>> {
    let game = StageGame::product_choice(1.0, 0.5, 0.2)?;
    let disc = Discounting::new(0.9, 0.99)?;
    let sol = solve(&game, &disc, 0.6)?;
    let p = &sol.profile;

    println!("delta = {:.4}, bound (1-delta)c/delta = {:.10}", disc.delta, erasure_payoff_bound(&game, disc.delta));
    println!("payoff = {:.10}, t = {}, t0 = {}, branch = {:?}", p.payoff, p.t, p.t0, p.branch);
    println!("{:>3} {:>10} {:>12} {:>10} {:>10}", "k", "beta", "value", "p*", "reputation");
    for k in 0..=p.t {
        let pk = sol.path.p_star.get(k).map(|v| format!("{v:.6}")).unwrap_or_default();
        println!(
            "{k:>3} {:>10.6} {:>12.8} {:>10} {:>10.6}",
            p.beta[k].position(),
            p.values[k],
            pk,
            sol.path.reputation[k]
        );
    }
    Ok(p.payoff)
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
