// Payoff bounds without disclosure, and an audit of the solved path under
// a policy that reveals half the record.

use record_erasure::disclosure::{
    audit_constraints, disclosure_cap, no_disclosure_bounds, required_max_length, unconditional_distribution,
    DisclosurePolicy,
};
use record_erasure::game::{build_best_reply_chain, StageGame};
use record_erasure::solver::{solve, Discounting};

pub fn run_example() -> Result<(f64, f64), Box<dyn std::error::Error>> {
    let game = StageGame::product_choice(1.0, 0.5, 0.2)?;
    let disc = Discounting::new(0.9, 0.99)?;
    for pi in [0.3, 0.6] {
        let (lo, hi) = no_disclosure_bounds(&game, pi, disc.delta);
        println!("pi={pi}: lower {lo:.10} upper {hi:.10} cap {:.10}", disclosure_cap(&game, pi, disc.delta));
    }

    let m = required_max_length(disc.delta_bar);
    let half = DisclosurePolicy::from_fn(m, |n| n.div_ceil(2));
    let q = unconditional_distribution(&half, disc.delta_bar)?;
    println!("M = {m}, truncation mass {:.2e}, q~(0..4) = {:?}", q.truncation_mass, &q.q_tilde[..4]);

    let sol = solve(&game, &disc, 0.6)?;
    let x_required = build_best_reply_chain(&game)?.pi_star();
    let audit = audit_constraints(&sol.path.p_star, &sol.path.mu_star, &q, 0.6, x_required, disc.delta_bar)?;
    println!(
        "audit: sum mu*p = {:.6} vs budget {:.6}, {} of {} rows pass",
        audit.sum_mu_p,
        audit.mass_budget,
        audit.rows.iter().filter(|r| r.mass_bound_ok && r.ic_ok).count(),
        audit.rows.len()
    );
    Ok(no_disclosure_bounds(&game, 0.3, disc.delta))
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
