//! Independent oracles shared by the integration tests. Nothing here calls
//! into the solver paths it is used to check.
#![allow(dead_code, clippy::needless_range_loop)]

use cachesched::lp::{LpProblem, Relation, Sense};
use rand::Rng;

/// Feasible, bounded LP with at most 7 variables and 8 rows.
///
/// Feasibility comes from building every row around a random nonnegative
/// point; boundedness from nonnegative costs (min) or a budget row (max).
pub fn random_bounded_lp<R: Rng>(rng: &mut R, case: usize) -> LpProblem<f64> {
    random_lp_sized(rng, case, 7, 7)
}

/// As [`random_bounded_lp`] with up to `max_vars` columns and `max_rows + 1` rows.
pub fn random_lp_sized<R: Rng>(rng: &mut R, case: usize, max_vars: usize, max_rows: usize) -> LpProblem<f64> {
    let n = rng.gen_range(2..=max_vars);
    let m = rng.gen_range(1..=max_rows);
    let integer = case.is_multiple_of(2);
    let x0: Vec<f64> = (0..n)
        .map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..3.0) })
        .collect();
    let coeff = |rng: &mut R| -> f64 {
        if integer {
            rng.gen_range(-3i32..=3) as f64
        } else {
            rng.gen_range(-3.0..3.0)
        }
    };
    let maximize = case.is_multiple_of(3);
    let mut rows = Vec::new();
    let mut eqs = 0;
    for _ in 0..m {
        let a: Vec<f64> = (0..n).map(|_| coeff(rng)).collect();
        let act: f64 = a.iter().zip(&x0).map(|(a, x)| a * x).sum();
        let pick = rng.gen_range(0..10);
        let (rel, rhs) = if pick < 5 {
            (Relation::Le, act + if integer { rng.gen_range(0..3) as f64 } else { rng.gen_range(0.0..2.0) })
        } else if pick < 9 || eqs >= 2 {
            (Relation::Ge, act - if integer { rng.gen_range(0..3) as f64 } else { rng.gen_range(0.0..2.0) })
        } else {
            eqs += 1;
            (Relation::Eq, act)
        };
        rows.push((a, rel, rhs));
    }
    let c: Vec<f64> = if maximize {
        let budget = x0.iter().sum::<f64>() + rng.gen_range(1.0..10.0);
        rows.push((vec![1.0; n], Relation::Le, budget));
        (0..n).map(|_| coeff(rng)).collect()
    } else {
        (0..n)
            .map(|_| if integer { rng.gen_range(0..=4) as f64 } else { rng.gen_range(0.0..4.0) })
            .collect()
    };
    let sense = if maximize { Sense::Maximize } else { Sense::Minimize };
    LpProblem::from_dense(sense, &c, &rows)
}

/// Best objective over all basic feasible solutions of `lp` with `x ≥ 0`.
pub fn vertex_enumeration_optimum(lp: &LpProblem<f64>) -> Option<f64> {
    let n = lp.num_vars();
    // candidate tight constraints: each row, then each x_j = 0
    let mut hyper: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut is_eq = Vec::new();
    for row in &lp.rows {
        let mut a = vec![0.0; n];
        for &(j, v) in &row.coeffs {
            a[j] += v;
        }
        hyper.push((a, row.rhs));
        is_eq.push(row.relation == Relation::Eq);
    }
    for j in 0..n {
        let mut a = vec![0.0; n];
        a[j] = 1.0;
        hyper.push((a, 0.0));
        is_eq.push(false);
    }
    let mut best: Option<f64> = None;
    let mut pick = Vec::with_capacity(n);
    combos(hyper.len(), n, 0, &mut pick, &mut |idx| {
        if is_eq.iter().enumerate().any(|(i, &e)| e && !idx.contains(&i)) {
            return;
        }
        let a: Vec<Vec<f64>> = idx.iter().map(|&i| hyper[i].0.clone()).collect();
        let b: Vec<f64> = idx.iter().map(|&i| hyper[i].1).collect();
        let Some(x) = gauss_solve(a, b) else { return };
        if !feasible(lp, &x) {
            return;
        }
        let obj: f64 = lp.objective.iter().zip(&x).map(|(c, x)| c * x).sum();
        best = Some(match (best, lp.sense) {
            (None, _) => obj,
            (Some(b), Sense::Minimize) => b.min(obj),
            (Some(b), Sense::Maximize) => b.max(obj),
        });
    });
    best
}

fn feasible(lp: &LpProblem<f64>, x: &[f64]) -> bool {
    let tol = 1e-8;
    if x.iter().any(|&v| v < -tol) {
        return false;
    }
    lp.rows.iter().enumerate().all(|(i, row)| {
        let act = lp.row_activity(i, x);
        match row.relation {
            Relation::Le => act <= row.rhs + tol,
            Relation::Ge => act >= row.rhs - tol,
            Relation::Eq => (act - row.rhs).abs() <= tol,
        }
    })
}

fn combos(total: usize, k: usize, start: usize, pick: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
    if pick.len() == k {
        f(pick);
        return;
    }
    for i in start..total {
        if total - i < k - pick.len() {
            break;
        }
        pick.push(i);
        combos(total, k, i + 1, pick, f);
        pick.pop();
    }
}

fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-10 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

use cachesched::model::{CommTuple, Scenario, ScenarioConfig, generate_scenario};

/// Independence recomputed from positions and radio constants: same-channel
/// pairs may not share an endpoint or put a receiver inside the other
/// transmitter's interference range; antenna budgets bound endpoint use.
pub fn brute_independent(sc: &Scenario<f64>, tuples: &[CommTuple<f64>], members: &[usize]) -> bool {
    let ir = |t: &CommTuple<f64>| {
        let p = sc.transmitters[t.tx].power_on(t.channel).unwrap();
        (sc.radio.gain * p / sc.radio.interference_threshold[t.channel]).powf(1.0 / sc.radio.path_loss)
    };
    let dist = |tx: usize, rx: usize| {
        let a = &sc.transmitters[tx].position;
        let b = &sc.users[rx].position;
        ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt()
    };
    for (i, &u) in members.iter().enumerate() {
        for &v in &members[i + 1..] {
            let (a, b) = (&tuples[u], &tuples[v]);
            if a.channel != b.channel {
                continue;
            }
            if a.tx == b.tx || a.rx == b.rx || dist(a.tx, b.rx) <= ir(a) || dist(b.tx, a.rx) <= ir(b) {
                return false;
            }
        }
    }
    let mut tx = vec![0u32; sc.transmitters.len()];
    let mut rx = vec![0u32; sc.users.len()];
    for &u in members {
        tx[tuples[u].tx] += 1;
        rx[tuples[u].rx] += 1;
    }
    tx.iter().zip(&sc.transmitters).all(|(&c, n)| c <= n.antennas)
        && rx.iter().zip(&sc.users).all(|(&c, n)| c <= n.antennas)
}

/// Members of subset `mask`, ascending.
pub fn mask_members(mask: u32, n: usize) -> Vec<usize> {
    (0..n).filter(|&i| mask >> i & 1 == 1).collect()
}

/// Maximum over all 2^n subsets of the weight sum (ascending index order).
pub fn brute_max_weight(sc: &Scenario<f64>, tuples: &[CommTuple<f64>], w: &[f64]) -> f64 {
    let n = tuples.len();
    let mut best = 0.0f64;
    for mask in 0u32..(1 << n) {
        let m = mask_members(mask, n);
        if brute_independent(sc, tuples, &m) {
            let s = m.iter().fold(0.0, |acc, &i| acc + w[i]);
            best = best.max(s);
        }
    }
    best
}

/// Seeded small scenario whose tuple count is at most `max_tuples`.
pub fn small_scenario(seed: u64, max_tuples: usize, antennas: Option<u32>) -> Scenario<f64> {
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
    loop {
        let n_sec = rng.gen_range(1..=2);
        let cfg = ScenarioConfig {
            n_sbs: rng.gen_range(1..=3),
            n_users: rng.gen_range(1..=4),
            n_files: rng.gen_range(1..=3),
            n_secondary_channels: n_sec,
            channels_per_sbs: rng.gen_range(1..=n_sec),
            channels_per_user: rng.gen_range(1..=n_sec),
            antennas_mbs: antennas.unwrap_or_else(|| rng.gen_range(1..=2)),
            antennas_sbs: antennas.unwrap_or_else(|| rng.gen_range(1..=2)),
            antennas_user: antennas.unwrap_or_else(|| rng.gen_range(1..=2)),
            tx_range_m: rng.gen_range(50.0..130.0),
            ..ScenarioConfig::tiny()
        };
        let sc = generate_scenario::<f64>(&cfg, rng.gen()).unwrap();
        let q = cachesched::model::enumerate_tuples(&sc).len();
        if q >= 2 && q <= max_tuples {
            return sc;
        }
    }
}
