use record_erasure::game::{build_best_reply_chain, StageGame};
use record_erasure::oracle::{brute_force_profiles, verify_equilibrium, ConstraintId, VERIFY_TOL};
use record_erasure::solver::{beta_dagger, solve, solve_in_range, Discounting};

fn pc() -> StageGame {
    StageGame::product_choice(1.0, 0.5, 0.2).unwrap()
}

/// 2×2 game with three equilibria when `δ̄` is small and `π < π*`.
fn three_equilibria() -> (StageGame, Discounting, f64) {
    let g = StageGame::new(
        vec!["a0".into(), "a1".into()],
        vec!["b0".into(), "b1".into()],
        vec![vec![0.0, 1.4631870505977622], vec![-0.6070325369575023, 1.0084703574742833]],
        vec![vec![0.23143659186798882, -0.48568978957424846], vec![0.23143659186798882, 0.9316012105365965]],
        1,
        0.28063842862386446,
    )
    .unwrap();
    let disc = Discounting::new(0.7311071691144679, 0.5494017737896562).unwrap();
    (g, disc, 0.2609028404280274)
}

#[test]
fn solved_profile_passes_every_row() {
    let g = pc();
    let disc = Discounting::new(0.9, 0.99).unwrap();
    let sol = solve(&g, &disc, 0.6).unwrap();
    let chain = build_best_reply_chain(&g).unwrap();
    let r = verify_equilibrium(&g, &chain, &disc, 0.6, &sol.profile, &sol.path, VERIFY_TOL).unwrap();
    assert!(r.all_pass());
    for id in [
        ConstraintId::P1Optimality,
        ConstraintId::P2BestReply,
        ConstraintId::Bayes,
        ConstraintId::Boundary,
        ConstraintId::Mass,
    ] {
        assert!(r.rows.iter().any(|row| row.id == id), "no {id:?} rows");
    }
    let keys: Vec<(usize, ConstraintId)> = r.rows.iter().map(|row| (row.k, row.id)).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
}

#[test]
fn raised_continuation_value_breaks_the_step_identity() {
    let g = pc();
    let disc = Discounting::new(0.9, 0.99).unwrap();
    let mut sol = solve(&g, &disc, 0.6).unwrap();
    sol.profile.values[1] += 0.01;
    let chain = build_best_reply_chain(&g).unwrap();
    let r = verify_equilibrium(&g, &chain, &disc, 0.6, &sol.profile, &sol.path, VERIFY_TOL).unwrap();
    let worst = r
        .failures()
        .filter(|row| row.k == 0 && row.id == ConstraintId::P1Optimality)
        .map(|row| row.slack)
        .fold(f64::INFINITY, f64::min);
    assert!((worst + 0.891 * 0.01).abs() < 1e-9, "slack {worst}");
}

#[test]
fn minmax_profile_passes() {
    let g = pc();
    let disc = Discounting::new(0.9, 0.99).unwrap();
    let sol = solve(&g, &disc, 0.0).unwrap();
    let chain = build_best_reply_chain(&g).unwrap();
    let r = verify_equilibrium(&g, &chain, &disc, 0.0, &sol.profile, &sol.path, VERIFY_TOL).unwrap();
    assert!(r.all_pass());
    assert_eq!(chain.support(&sol.profile.beta[0]), vec![(0, 1.0)]);
}

#[test]
fn wrong_shapes_rejected() {
    let g = pc();
    let disc = Discounting::new(0.9, 0.99).unwrap();
    let mut sol = solve(&g, &disc, 0.6).unwrap();
    sol.path.x.pop();
    let chain = build_best_reply_chain(&g).unwrap();
    assert!(verify_equilibrium(&g, &chain, &disc, 0.6, &sol.profile, &sol.path, VERIFY_TOL).is_err());
}

#[test]
fn oracle_single_cluster_at_dagger() {
    let g = pc();
    let disc = Discounting::new(0.9, 0.99).unwrap();
    let o = brute_force_profiles(&g, &disc, 0.6, 200);
    assert_eq!(o.clusters.len(), 1);
    let chain = build_best_reply_chain(&g).unwrap();
    let dagger = beta_dagger(&g, &chain, disc.delta).unwrap();
    assert!(o.cluster_contains(&o.clusters[0], &dagger));
    assert!((o.clusters[0].center - dagger.position()).abs() <= o.cell);
}

#[test]
fn oracle_without_honest_type_stays_at_bottom() {
    let g = pc();
    let disc = Discounting::new(0.9, 0.99).unwrap();
    let o = brute_force_profiles(&g, &disc, 0.0, 100);
    assert_eq!(o.clusters.len(), 1);
    assert_eq!(o.clusters[0].positions.0, 0.0);
    assert!(o.clusters[0].positions.1 <= o.cell + 1e-12);
}

#[test]
fn oracle_reports_multiple_clusters() {
    let (g, disc, pi) = three_equilibria();
    let o = brute_force_profiles(&g, &disc, pi, 60);
    assert_eq!(o.clusters.len(), 3, "{:?}", o.clusters);
    let chain = build_best_reply_chain(&g).unwrap();
    let mut payoffs = vec![];
    for cl in &o.clusters {
        let sol = solve_in_range(&g, &disc, pi, cl.positions.0 - o.cell, cl.positions.1 + o.cell).unwrap();
        assert!(o.cluster_contains(cl, &sol.profile.beta[0]));
        let r = verify_equilibrium(&g, &chain, &disc, pi, &sol.profile, &sol.path, VERIFY_TOL).unwrap();
        assert!(r.all_pass(), "{:?}", r.failures().collect::<Vec<_>>());
        payoffs.push(sol.profile.payoff);
    }
    let expected = [0.0, 0.1103, 0.4180];
    for (p, e) in payoffs.iter().zip(expected) {
        assert!((p - e).abs() < 1e-3, "{payoffs:?}");
    }
    let default = solve(&g, &disc, pi).unwrap();
    assert!(default.profile.multiplicity.len() + default.profile.notes.len() > 0);
}
