//! Comparison system: popularity-greedy whole-file caching and a schedule in
//! which at most one link is active at any time.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::conflict::build_conflict_graph;
use crate::master::{singleton_pool, CacheMatrix, CacheMode, Diagnosis, MasterError, Objective, Rmp, RmpMode};
use crate::model::{enumerate_tuples, Scenario};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BaselineResult<S> {
    /// 0/1 per transmitter and file (MBS rows are ones).
    pub x: CacheMatrix<S>,
    /// Serving transmitter per demanded `(user, file)`.
    pub routing: BTreeMap<(usize, usize), usize>,
    pub schedule_length: S,
    /// Demanded bits per user, all of which the schedule delivers.
    pub served_bits: Vec<S>,
}

/// For each SBS: users it can reach on some channel.
fn coverage<S: Scalar>(scenario: &Scenario<S>) -> Vec<Vec<usize>> {
    let mut cov = vec![Vec::new(); scenario.transmitters.len()];
    for t in enumerate_tuples(scenario) {
        if cov[t.tx].last() != Some(&t.rx) {
            cov[t.tx].push(t.rx);
        }
    }
    cov
}

/// Greedy whole-file caching by descending local request rate
/// (`Σ_k α_kj` over covered users), ties by file id.
pub fn femtocache_assign<S: Scalar>(scenario: &Scenario<S>) -> CacheMatrix<S> {
    let nf = scenario.n_files();
    let mut x = vec![vec![S::zero(); nf]; scenario.transmitters.len()];
    if let Some(m) = scenario.mbs() {
        x[m] = vec![S::one(); nf];
    }
    let cov = coverage(scenario);
    for n in scenario.sbs_indices() {
        let score: Vec<S> = (0..nf)
            .map(|j| cov[n].iter().fold(S::zero(), |acc, &k| acc + scenario.requests.rate(k, j)))
            .collect();
        let mut order: Vec<usize> = (0..nf).collect();
        order.sort_by(|&a, &b| score[b].partial_cmp(&score[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
        let mut left = scenario.transmitters[n].cache_bits.unwrap_or_else(S::zero);
        for j in order {
            let size = scenario.catalog.sizes_bits[j];
            if size <= left {
                x[n][j] = S::one();
                left -= size;
            }
        }
    }
    x
}

/// Nearest covering SBS that holds the file, else the MBS.
pub fn baseline_routing<S: Scalar>(
    scenario: &Scenario<S>,
    x: &CacheMatrix<S>,
) -> Result<BTreeMap<(usize, usize), usize>, MasterError> {
    let cov = coverage(scenario);
    let mut routes = BTreeMap::new();
    for (k, j) in scenario.requests.demanded() {
        let mut best: Option<(S, usize)> = None;
        for n in scenario.sbs_indices() {
            if x[n][j] >= S::one() && cov[n].contains(&k) {
                let d = scenario.distance(n, k);
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, n));
                }
            }
        }
        let server = match (best, scenario.mbs()) {
            (Some((_, n)), _) => n,
            (None, Some(m)) if cov[m].contains(&k) => m,
            _ => {
                let reachable = cov.iter().any(|c| c.contains(&k));
                return Err(MasterError::Infeasible(if reachable {
                    Diagnosis::Capacity { user: k, file: j }
                } else {
                    Diagnosis::Coverage { user: k, file: j }
                }));
            }
        };
        routes.insert((k, j), server);
    }
    Ok(routes)
}

/// Schedule length with fixed caching and routing over singleton columns only.
pub fn baseline_schedule<S: Scalar>(scenario: &Scenario<S>, x: &CacheMatrix<S>) -> Result<BaselineResult<S>, MasterError> {
    let routing = baseline_routing(scenario, x)?;
    let served_bits = (0..scenario.users.len())
        .map(|k| {
            (0..scenario.n_files()).fold(S::zero(), |acc, j| {
                acc + scenario.requests.rate(k, j) * scenario.catalog.sizes_bits[j]
            })
        })
        .collect();
    let graph = build_conflict_graph(scenario);
    if graph.is_empty() {
        return Ok(BaselineResult {
            x: x.clone(),
            routing,
            schedule_length: S::zero(),
            served_bits,
        });
    }
    let mode = RmpMode {
        objective: Objective::MinSchedule,
        cache: CacheMode::Fixed(x.clone()),
        routing: Some(routing.clone()),
    };
    let sol = Rmp::new(scenario, &graph, &singleton_pool(&graph), mode)?.solve()?;
    Ok(BaselineResult {
        x: x.clone(),
        routing,
        schedule_length: sol.objective.max(S::zero()),
        served_bits,
    })
}
