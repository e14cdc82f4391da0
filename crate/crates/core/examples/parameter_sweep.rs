// Sweeps the exit-adjusted discount factor and reports where the payoff
// settles at the bound.

use record_erasure::game::StageGame;
use record_erasure::solver::{erasure_payoff_bound, prepare, regime_diagnostics, solve, Discounting};

pub fn run_example() -> Result<usize, Box<dyn std::error::Error>> {
    let game = StageGame::product_choice(1.0, 0.5, 0.2)?;
    let chain = prepare(&game)?;
    let (delta_hat, pi) = (0.9, 0.6);
    let mut at_bound = 0;
    println!("{:>8} {:>12} {:>12} {:>4} {:>6}", "d_bar", "payoff", "bound", "t", "cross");
    for i in 0..10 {
        let delta_bar = 0.9 + 0.0999 * i as f64 / 9.0;
        let disc = Discounting::new(delta_hat, delta_bar)?;
        let sol = solve(&game, &disc, pi)?;
        let diag = regime_diagnostics(&game, &chain, &disc, pi)?;
        let bound = erasure_payoff_bound(&game, disc.delta);
        if (sol.profile.payoff - bound).abs() < 1e-9 {
            at_bound += 1;
        }
        println!(
            "{delta_bar:>8.5} {:>12.8} {bound:>12.8} {:>4} {:>6}",
            sol.profile.payoff, sol.profile.t, diag.bounds_cross
        );
    }
    Ok(at_bound)
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
