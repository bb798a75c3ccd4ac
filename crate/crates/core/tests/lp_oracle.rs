//! Random LPs checked against brute-force vertex enumeration.

mod common;

use cachesched::lp::{solve_lp, LpStatus, Relation, Sense};
use common::{random_bounded_lp, random_lp_sized, vertex_enumeration_optimum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn random_lps_match_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1b);
    for case in 0..50 {
        let lp = random_bounded_lp(&mut rng, case);
        let sol = solve_lp(&lp).expect("solver error");
        assert_eq!(sol.status, LpStatus::Optimal, "case {case}");
        let expected = vertex_enumeration_optimum(&lp).expect("oracle found no vertex");
        assert!(
            (sol.objective - expected).abs() <= 1e-6 * (1.0 + expected.abs()),
            "case {case}: simplex {} vs oracle {expected}",
            sol.objective
        );
    }
}

#[test]
fn strong_duality_and_complementary_slackness() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x2c);
    for case in 0..50 {
        let lp = random_bounded_lp(&mut rng, case);
        let sol = solve_lp(&lp).unwrap();
        let dual_obj: f64 = lp.rows.iter().zip(&sol.duals).map(|(r, y)| r.rhs * y).sum();
        assert!(
            (sol.objective - dual_obj).abs() <= 1e-6 * (1.0 + sol.objective.abs()),
            "case {case}: primal {} dual {dual_obj}",
            sol.objective
        );
        for (i, row) in lp.rows.iter().enumerate() {
            let slack = row.rhs - lp.row_activity(i, &sol.primal);
            assert!((sol.duals[i] * slack).abs() <= 1e-6, "case {case} row {i}");
            // shadow-price sign: min ⇒ ≥ rows nonneg, ≤ rows nonpos; max flips
            let y = match lp.sense {
                Sense::Minimize => sol.duals[i],
                Sense::Maximize => -sol.duals[i],
            };
            match row.relation {
                Relation::Ge => assert!(y >= -1e-9, "case {case} row {i} dual {y}"),
                Relation::Le => assert!(y <= 1e-9, "case {case} row {i} dual {y}"),
                Relation::Eq => {}
            }
        }
    }
}

/// Primal feasibility, dual feasibility and a zero gap prove optimality
/// without enumerating vertices, which keeps 15 × 15 instances cheap.
#[test]
fn full_size_lps_carry_optimality_certificates() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x3d);
    for case in 0..50 {
        let lp = random_lp_sized(&mut rng, case, 15, 14);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal, "case {case}");
        assert!(sol.primal.iter().all(|&x| x >= -1e-7));
        for (i, row) in lp.rows.iter().enumerate() {
            let act = lp.row_activity(i, &sol.primal);
            let ok = match row.relation {
                Relation::Le => act <= row.rhs + 1e-7,
                Relation::Ge => act >= row.rhs - 1e-7,
                Relation::Eq => (act - row.rhs).abs() <= 1e-7,
            };
            assert!(ok, "case {case} row {i} infeasible");
        }
        let flip = if lp.sense == Sense::Minimize { 1.0 } else { -1.0 };
        let mut reduced: Vec<f64> = lp.objective.clone();
        for (row, y) in lp.rows.iter().zip(&sol.duals) {
            let y = flip * y;
            match row.relation {
                Relation::Ge => assert!(y >= -1e-9, "case {case}"),
                Relation::Le => assert!(y <= 1e-9, "case {case}"),
                Relation::Eq => {}
            }
            for &(j, a) in &row.coeffs {
                reduced[j] -= flip * y * a;
            }
        }
        for (j, r) in reduced.iter().enumerate() {
            assert!(flip * r >= -1e-7, "case {case} column {j} reduced cost {r}");
        }
        let dual_obj: f64 = lp.rows.iter().zip(&sol.duals).map(|(r, y)| r.rhs * y).sum();
        assert!((sol.objective - dual_obj).abs() <= 1e-6 * (1.0 + sol.objective.abs()), "case {case}");
    }
}

#[test]
fn infeasible_random_systems_are_reported() {
    // x0 + x1 <= 1 and x0 + x1 >= 2 plus noise rows
    let lp = cachesched::lp::LpProblem::from_dense(
        Sense::Minimize,
        &[1.0, 1.0, 0.0],
        &[
            (vec![1.0, 1.0, 0.0], Relation::Le, 1.0),
            (vec![1.0, 1.0, 1.0], Relation::Le, 5.0),
            (vec![1.0, 1.0, 0.0], Relation::Ge, 2.0),
        ],
    );
    assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);
}
