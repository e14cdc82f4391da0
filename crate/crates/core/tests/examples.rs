macro_rules! example {
    ($name:ident, $file:literal) => {
        #[allow(dead_code)]
        mod $name {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", $file));
        }
    };
}

example!(solve_product_choice, "solve_product_choice.rs");
example!(best_reply_chain, "best_reply_chain.rs");
example!(belief_recursion, "belief_recursion.rs");
example!(disclosure_bounds, "disclosure_bounds.rs");
example!(population_simulation, "population_simulation.rs");
example!(verify_and_oracle, "verify_and_oracle.rs");
example!(parameter_sweep, "parameter_sweep.rs");

#[test]
fn solve_example_reaches_the_bound() {
    let payoff = solve_product_choice::run_example().unwrap();
    let delta = 0.9 * 0.99;
    assert!((payoff - (1.0 - delta) * 0.2 / delta).abs() < 1e-9);
}

#[test]
fn chain_example_has_three_actions() {
    assert_eq!(best_reply_chain::run_example().unwrap(), 3);
}

#[test]
fn belief_example_round_trips() {
    assert!(belief_recursion::run_example().unwrap() < 1e-9);
}

#[test]
fn disclosure_example_bounds() {
    let (lo, hi) = disclosure_bounds::run_example().unwrap();
    assert_eq!(lo, 0.0);
    assert!((hi - 0.0244668911336).abs() < 1e-12);
}

#[test]
fn simulation_example_matches_analytic() {
    assert!(population_simulation::run_example().unwrap() < 0.01);
}

#[test]
fn oracle_example_finds_one_cluster() {
    assert_eq!(verify_and_oracle::run_example().unwrap(), 1);
}

#[test]
fn sweep_example_ends_at_the_bound() {
    assert!(parameter_sweep::run_example().unwrap() >= 2);
}
