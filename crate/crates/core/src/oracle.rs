//! Ground truth for tiny instances: the master over every maximal
//! independent set, solved once.

use thiserror::Error;

use crate::conflict::{
    build_conflict_graph, enumerate_all_independent_sets, enumerate_independent_sets, ConflictError, IndependentSet,
    DEFAULT_ENUMERATION_GUARD,
};
use crate::master::{solve_rmp, MasterError, RmpMode, RmpSolution};
use crate::model::Scenario;
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error(transparent)]
    Enumeration(#[from] ConflictError),
    #[error(transparent)]
    Master(#[from] MasterError),
    #[error("scenario has no communication tuples")]
    NoTuples,
}

#[derive(Debug, Clone)]
pub struct OracleSolution<S> {
    pub delta: S,
    pub pool: Vec<IndependentSet>,
    pub solution: RmpSolution<S>,
}

/// Optimum over all maximal independent sets.
pub fn solve_full_lp<S: Scalar>(scenario: &Scenario<S>, mode: &RmpMode<S>) -> Result<OracleSolution<S>, OracleError> {
    solve_full_lp_guarded(scenario, mode, DEFAULT_ENUMERATION_GUARD)
}

pub fn solve_full_lp_guarded<S: Scalar>(
    scenario: &Scenario<S>,
    mode: &RmpMode<S>,
    guard: usize,
) -> Result<OracleSolution<S>, OracleError> {
    let graph = build_conflict_graph(scenario);
    if graph.is_empty() {
        return Err(OracleError::NoTuples);
    }
    let pool = enumerate_independent_sets(&graph, guard)?;
    let solution = solve_rmp(scenario, &graph, &pool, mode)?;
    Ok(OracleSolution {
        delta: solution.objective,
        pool,
        solution,
    })
}

/// Same optimum, but over every nonempty independent set.
pub fn solve_full_lp_all_sets<S: Scalar>(
    scenario: &Scenario<S>,
    mode: &RmpMode<S>,
    guard: usize,
) -> Result<OracleSolution<S>, OracleError> {
    let graph = build_conflict_graph(scenario);
    if graph.is_empty() {
        return Err(OracleError::NoTuples);
    }
    let pool: Vec<_> = enumerate_all_independent_sets(&graph, guard)?
        .into_iter()
        .filter(|s| !s.is_empty())
        .collect();
    let solution = solve_rmp(scenario, &graph, &pool, mode)?;
    Ok(OracleSolution {
        delta: solution.objective,
        pool,
        solution,
    })
}
