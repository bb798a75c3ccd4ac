//! Pricing solvers against exhaustive maximum-weight search.

mod common;

use cachesched::conflict::build_conflict_graph;
use cachesched::pricing::{
    max_weight_exact, max_weight_sequential_fixing, reduced_cost, solve_pricing_exact,
    solve_pricing_sequential_fixing, TieBreak,
};
use common::{brute_independent, brute_max_weight, small_scenario};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random duals, about a third of them zero.
fn random_lambda(rng: &mut ChaCha8Rng, caps: &[f64]) -> Vec<f64> {
    caps.iter()
        .map(|&c| if rng.gen_bool(0.35) { 0.0 } else { rng.gen_range(0.0..1.5) / c })
        .collect()
}

#[test]
fn exact_pricing_matches_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for case in 0..60 {
        let sc = small_scenario(1000 + case, 15, None);
        let g = build_conflict_graph(&sc);
        let caps: Vec<f64> = g.tuples.iter().map(|t| t.capacity).collect();
        let lambda = random_lambda(&mut rng, &caps);
        let w: Vec<f64> = lambda.iter().zip(&caps).map(|(l, c)| l * c).collect();
        let r = solve_pricing_exact(&g, &lambda).unwrap();
        let best = brute_max_weight(&sc, &g.tuples, &w);
        assert_eq!(r.beta, best, "case {case}: exact {} brute {best}", r.beta);
        assert!(brute_independent(&sc, &g.tuples, r.column.members()));
        assert_eq!(r.omega, 1.0 - r.beta);
    }
}

#[test]
fn exact_pricing_on_integer_weights_with_ties() {
    // many co-optimal columns; result must still be optimal and deterministic
    let mut rng = ChaCha8Rng::seed_from_u64(0x7e);
    for case in 0..30 {
        let sc = small_scenario(2000 + case, 15, None);
        let g = build_conflict_graph(&sc);
        let w: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(0..3) as f64).collect();
        let a = max_weight_exact(&g, &w, TieBreak::Smallest);
        let b = max_weight_exact(&g, &w, TieBreak::Smallest);
        assert_eq!(a.beta, brute_max_weight(&sc, &g.tuples, &w), "case {case}");
        assert_eq!(a.column, b.column);
        let other = max_weight_exact(&g, &w, TieBreak::Largest);
        assert_eq!(other.beta, a.beta);
        assert!(a.column.cmp_incidence(&other.column) != std::cmp::Ordering::Greater);
    }
}

#[test]
fn sequential_fixing_is_feasible_and_never_better() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5f);
    let mut ratios = Vec::new();
    for case in 0..50 {
        let sc = small_scenario(3000 + case, 15, None);
        let g = build_conflict_graph(&sc);
        let caps: Vec<f64> = g.tuples.iter().map(|t| t.capacity).collect();
        let lambda = random_lambda(&mut rng, &caps);
        let exact = solve_pricing_exact(&g, &lambda).unwrap();
        let sf = solve_pricing_sequential_fixing(&g, &lambda).unwrap();
        assert!(g.is_independent(&sf.column).unwrap(), "case {case}");
        assert!(sf.beta <= exact.beta + 1e-12, "case {case}: sf {} exact {}", sf.beta, exact.beta);
        if exact.beta > 0.0 {
            ratios.push(sf.beta / exact.beta);
        }
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    println!("sequential fixing / exact mean ratio {mean:.4} over {} instances", ratios.len());
    assert!(mean > 0.5);
}

#[test]
fn reduced_cost_matches_dot_product() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x10);
    let sc = small_scenario(77, 15, None);
    let g = build_conflict_graph(&sc);
    for _ in 0..20 {
        let caps: Vec<f64> = g.tuples.iter().map(|t| t.capacity).collect();
        let lambda = random_lambda(&mut rng, &caps);
        let col = solve_pricing_exact(&g, &lambda).unwrap().column;
        let mut dot = 0.0;
        for (t, tup) in g.tuples.iter().enumerate() {
            if col.contains(t) {
                dot += lambda[t] * tup.capacity;
            }
        }
        assert!((reduced_cost(&g, &lambda, &col) - (1.0 - dot)).abs() <= 1e-12);
    }
}

#[test]
fn relaxation_is_integral_without_conflicts() {
    let sc = cachesched::fixtures::two_far_links::<f64>(1e6);
    let g = build_conflict_graph(&sc);
    let w = vec![0.3, 0.9];
    let sf = max_weight_sequential_fixing(&g, &w, TieBreak::Smallest).unwrap();
    let ex = max_weight_exact(&g, &w, TieBreak::Smallest);
    assert_eq!(sf.column, ex.column);
    assert_eq!(sf.beta, ex.beta);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn beta_is_nonnegative_and_column_independent(seed in 0u64..5000, dual_seed in any::<u64>()) {
        let sc = small_scenario(seed, 15, None);
        let g = build_conflict_graph(&sc);
        let mut rng = ChaCha8Rng::seed_from_u64(dual_seed);
        let caps: Vec<f64> = g.tuples.iter().map(|t| t.capacity).collect();
        let lambda = random_lambda(&mut rng, &caps);
        for r in [solve_pricing_exact(&g, &lambda).unwrap(), solve_pricing_sequential_fixing(&g, &lambda).unwrap()] {
            prop_assert!(r.beta >= 0.0);
            prop_assert!(g.is_independent(&r.column).unwrap());
            prop_assert_eq!(r.omega < 0.0, r.beta > 1.0);
        }
    }
}
