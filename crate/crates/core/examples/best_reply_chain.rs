// Builds the best-reply chain of a 3×3 game and checks the assumptions.

use record_erasure::game::{
    build_best_reply_chain, erasure_cost_bound, incentive_gap, u1_on_chain, validate_assumptions, StageGame,
};

pub fn run_example() -> Result<usize, Box<dyn std::error::Error>> {
    let labels = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let game = StageGame::new(
        labels(&["shirk", "mid", "work"]),
        labels(&["refuse", "try", "buy"]),
        vec![vec![0.0, 1.5, 3.0], vec![-0.4, 1.1, 2.6], vec![-1.0, 0.6, 2.2]],
        vec![vec![1.0, 0.2, -1.0], vec![0.5, 0.7, 0.3], vec![0.0, 0.8, 1.2]],
        2,
        0.3,
    )?;
    let report = validate_assumptions(&game);
    print!("{report}");
    if !report.is_valid() {
        return Err("assumptions fail".into());
    }

    let chain = build_best_reply_chain(&game)?;
    println!("chain has {} pure actions; pi* = {:.6}", chain.n_pure(), chain.pi_star());
    for i in 0..chain.n_pure() {
        let b = chain.point(i as f64);
        let (lo, hi) = chain.belief_interval(&b);
        let (a, _) = chain.support(&b)[0];
        println!(
            "  {:<7} beliefs [{lo:.4}, {hi:.4}]  u1(work) = {:.3}",
            game.a2_labels()[a],
            u1_on_chain(&game, &chain, game.a1_star(), &b)
        );
    }
    let bound = erasure_cost_bound(&game)?;
    println!(
        "c_bar = {:.4} (witness {}), gap = {:.4}",
        bound.c_bar,
        game.a1_labels()[bound.witness_a1],
        incentive_gap(&game, &chain)?
    );
    Ok(chain.n_pure())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
