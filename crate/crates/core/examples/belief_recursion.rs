// Runs the forward belief recursion for a fixed belief threshold and checks
// each posterior.

use record_erasure::belief::{forward_belief_recursion, likelihood_ratio, p0_closed_form, posterior_x};

pub fn run_example() -> Result<f64, Box<dyn std::error::Error>> {
    let (pi, delta_bar, x) = (0.6, 0.99, 0.5);
    let l = likelihood_ratio(pi);
    let p0 = p0_closed_form(x, l, delta_bar)?;
    let run = forward_belief_recursion(&vec![x; 200], l, delta_bar)?;
    println!("l = {l:.4}, closed-form p0 = {p0:.8}, recursion p0 = {:.8}", run.p_star[0]);
    println!("play stops after {} steps", run.p_star.len());

    let mut worst: f64 = 0.0;
    for (k, (&p, &mu)) in run.p_star.iter().zip(&run.mu_star).enumerate() {
        if p > 0.0 {
            worst = worst.max((posterior_x(pi, delta_bar, k, mu, p)? - x).abs());
        }
        if k % 10 == 0 {
            println!("  k={k:>3} p*={p:.6} mu*={mu:.6} mu*p*={:.2e}", mu * p);
        }
    }
    println!("largest posterior error = {worst:.2e}");
    Ok(worst)
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
