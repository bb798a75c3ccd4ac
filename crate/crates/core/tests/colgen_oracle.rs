//! Column generation against the complete-pool oracle.

use cachesched::colgen::{resolve_fixed_cache, run_column_generation, CgOptions, Verdict};
use cachesched::master::{Objective, RmpMode};
use cachesched::oracle::solve_full_lp;
use cachesched::pricing::PricerKind;
use cachesched::sweep::{avg_user_rate, random_tiny_scenario};

fn exact(epsilon: f64) -> CgOptions {
    CgOptions {
        epsilon,
        pricer: PricerKind::Exact,
        rerun_borderline: false,
        ..CgOptions::default()
    }
}

#[test]
fn every_iteration_brackets_the_optimum() {
    for seed in 0..30 {
        let sc = random_tiny_scenario(seed);
        let star = solve_full_lp(&sc, &RmpMode::min_schedule()).unwrap().delta;
        let tol = 1e-6 * star.max(1.0);
        for eps in [0.0, 0.03, 0.2] {
            let r = run_column_generation(&sc, &exact(eps)).unwrap();
            for it in &r.trace {
                assert!(it.delta_l <= star + tol, "seed {seed} eps {eps}: dl {} > {star}", it.delta_l);
                assert!(star <= it.delta_u + tol, "seed {seed} eps {eps}: du {} < {star}", it.delta_u);
            }
            for w in r.trace.windows(2) {
                assert!(w[1].delta_u <= w[0].delta_u + tol);
                assert!(w[1].delta_l >= w[0].delta_l - tol);
            }
            assert!(r.delta_u <= (1.0 + eps) * star + tol);
            if eps == 0.0 {
                assert!((r.delta_u - star).abs() <= tol, "seed {seed}: {} vs {star}", r.delta_u);
            }
        }
    }
}

#[test]
fn heuristic_pricing_stays_an_upper_bound() {
    for seed in 0..30 {
        let sc = random_tiny_scenario(seed);
        let star = solve_full_lp(&sc, &RmpMode::min_schedule()).unwrap().delta;
        let opts = CgOptions {
            pricer: PricerKind::SequentialFixing,
            ..exact(0.03)
        };
        let r = run_column_generation(&sc, &opts).unwrap();
        assert!(r.delta_u >= star * (1.0 - 1e-9));
        assert!(r.delta_l <= r.delta_u + 1e-9);
    }
}

#[test]
fn fixed_cache_at_the_free_optimum_reproduces_it() {
    for seed in 0..15 {
        let sc = random_tiny_scenario(seed);
        let free = run_column_generation(&sc, &exact(0.0)).unwrap();
        let fixed = resolve_fixed_cache(&sc, &free.solution.x, &exact(0.0)).unwrap();
        let tol = 1e-6 * free.delta_u.max(1.0);
        assert!((fixed.delta_u - free.delta_u).abs() <= tol, "seed {seed}");
        assert!(fixed.solution.x.is_empty());
        let zeros = vec![vec![0.0; sc.n_files()]; sc.transmitters.len()];
        let mbs_only = resolve_fixed_cache(&sc, &zeros, &exact(0.0)).unwrap();
        assert!(mbs_only.delta_u >= free.delta_u - tol);
    }
}

#[test]
fn supported_demand_and_max_throughput() {
    let mut checked = 0;
    for seed in 0..20 {
        let mut sc = random_tiny_scenario(seed);
        // shrink demand so that it fits in one slot
        let star = solve_full_lp(&sc, &RmpMode::min_schedule()).unwrap().delta;
        if star <= 0.0 {
            continue;
        }
        for row in sc.requests.rates.iter_mut() {
            for a in row.iter_mut() {
                *a *= 0.5 / star;
            }
        }
        let opts = CgOptions {
            objective: Objective::MaxThroughput,
            ..exact(0.0)
        };
        let r = run_column_generation(&sc, &opts).unwrap();
        assert_eq!(r.verdict, Verdict::Supported);
        assert!((r.delta_u - 0.5).abs() < 1e-6, "seed {seed}: {}", r.delta_u);
        let t = r.throughput.expect("throughput phase runs when demand fits");
        let best = solve_full_lp(&sc, &RmpMode::max_throughput()).unwrap().delta;
        let tol = 1e-6 * best;
        assert!(t.lower <= best + tol && best <= t.upper + tol, "seed {seed}: {t:?} vs {best}");
        assert!((t.lower - best).abs() <= tol, "seed {seed}: {} vs {best}", t.lower);
        checked += 1;
    }
    assert!(checked >= 10);
}

#[test]
fn rate_is_invariant_to_demand_scaling() {
    for seed in 0..10 {
        let sc = random_tiny_scenario(seed);
        let mut doubled = sc.clone();
        for row in doubled.requests.rates.iter_mut() {
            for a in row.iter_mut() {
                *a *= 2.0;
            }
        }
        let a = run_column_generation(&sc, &exact(0.0)).unwrap();
        let b = run_column_generation(&doubled, &exact(0.0)).unwrap();
        assert!((b.delta_u - 2.0 * a.delta_u).abs() <= 1e-6 * b.delta_u.max(1.0));
        let ra = avg_user_rate(&sc, a.delta_u).unwrap();
        let rb = avg_user_rate(&doubled, b.delta_u).unwrap();
        assert!((ra - rb).abs() <= 1e-6 * ra.max(1e-12));
    }
}
