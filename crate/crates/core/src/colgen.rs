//! The ε-bounded column-generation loop.

use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conflict::{build_conflict_graph, ConflictGraph, IndependentSet};
use crate::master::{CacheMatrix, MasterError, Objective, Rmp, RmpMode, RmpSolution};
use crate::model::Scenario;
use crate::pricing::{PricerKind, PricingError, TieBreak};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Supported,
    Unsupported,
    Borderline,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Supported => "supported",
            Verdict::Unsupported => "unsupported",
            Verdict::Borderline => "borderline",
        })
    }
}

#[derive(Debug, Error)]
pub enum CgError {
    #[error("scenario has no communication tuples; no user can be reached")]
    NoTuples,
    #[error(transparent)]
    Master(#[from] MasterError),
    #[error(transparent)]
    Pricing(#[from] PricingError),
    #[error("no convergence after {iterations} iterations (delta_u {delta_u}, delta_l {delta_l})")]
    NonConverged {
        iterations: usize,
        delta_u: f64,
        delta_l: f64,
    },
    #[error("invalid option: {0}")]
    Options(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CgOptions {
    pub epsilon: f64,
    pub pricer: PricerKind,
    pub objective: Objective,
    /// Defaults to ten times the tuple count.
    pub max_iterations: Option<usize>,
    /// Re-run with ε = 0 when the verdict is borderline.
    pub rerun_borderline: bool,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self {
            epsilon: 0.03,
            pricer: PricerKind::Exact,
            objective: Objective::MinSchedule,
            max_iterations: None,
            rerun_borderline: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub delta_u: f64,
    pub delta_l: f64,
    pub beta_star: f64,
    pub pool_size: usize,
    pub ms: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ThroughputBounds<S> {
    /// Bits per slot achieved by the final master solution.
    pub lower: S,
    pub upper: S,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CgResult<S> {
    pub delta_u: S,
    pub delta_l: S,
    pub verdict: Verdict,
    /// Final master solution over `pool`.
    pub solution: RmpSolution<S>,
    pub pool: Vec<IndependentSet>,
    pub trace: Vec<IterationRecord>,
    /// Set when the loop stopped because pricing kept returning pool columns.
    pub stalled: bool,
    /// Set when a borderline verdict triggered the ε = 0 continuation.
    pub reran_exact: bool,
    /// Only in max-throughput mode, when the demand fits.
    pub throughput: Option<ThroughputBounds<S>>,
}

impl<S> CgResult<S> {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }
}

/// One singleton column per tuple.
pub fn initial_pool<S: Scalar>(graph: &ConflictGraph<S>) -> Result<Vec<IndependentSet>, CgError> {
    if graph.is_empty() {
        return Err(CgError::NoTuples);
    }
    Ok(crate::master::singleton_pool(graph))
}

/// `max(δ^u + ω*, 0)`.
pub fn lower_bound<S: Scalar>(delta_u: S, omega: S) -> S {
    lower_bound_with_phi(delta_u, omega, S::one())
}

/// `max(δ^u + Φ·ω*, 0)` for any `Φ ≥ Σ f` at the optimum.
pub fn lower_bound_with_phi<S: Scalar>(delta_u: S, omega: S, phi: S) -> S {
    (delta_u + phi * omega).max(S::zero())
}

pub fn verdict<S: Scalar>(delta_u: S, delta_l: S, epsilon: S) -> Verdict {
    if delta_u <= S::one() {
        Verdict::Supported
    } else if delta_u > S::one() + epsilon || delta_l > S::one() {
        Verdict::Unsupported
    } else {
        Verdict::Borderline
    }
}

/// Writes `iteration,delta_u,delta_l,beta_star,pool_size,ms`.
pub fn write_trace_csv<W: Write>(trace: &[IterationRecord], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "delta_u", "delta_l", "beta_star", "pool_size", "ms"])?;
    for r in trace {
        w.write_record([
            r.iteration.to_string(),
            r.delta_u.to_string(),
            r.delta_l.to_string(),
            r.beta_star.to_string(),
            r.pool_size.to_string(),
            format!("{:.3}", r.ms),
        ])?;
    }
    w.flush()?;
    Ok(())
}

struct LoopState<S> {
    delta_u: S,
    delta_l: S,
    solution: Option<RmpSolution<S>>,
    trace: Vec<IterationRecord>,
    stalled: bool,
    cap: usize,
}

fn beta_tol<S: Scalar>() -> S {
    S::of(1e-9).max(S::opt_tol())
}

/// Iterates master and pricing until the ratio guard or `β* ≤ 1` holds.
fn schedule_loop<S: Scalar>(
    rmp: &mut Rmp<'_, S>,
    graph: &ConflictGraph<S>,
    pricer: PricerKind,
    epsilon: S,
    state: &mut LoopState<S>,
) -> Result<(), CgError> {
    let target = S::one() / (S::one() + epsilon);
    loop {
        if state.trace.len() >= state.cap {
            return Err(CgError::NonConverged {
                iterations: state.trace.len(),
                delta_u: state.delta_u.to_f64_lossy(),
                delta_l: state.delta_l.to_f64_lossy(),
            });
        }
        let start = Instant::now();
        let sol = rmp.solve()?;
        let du = sol.objective.max(S::zero());
        let mut priced = pricer.price(graph, &sol.lambda, TieBreak::Smallest)?;
        let phi = S::one().max(du);
        let dl = lower_bound_with_phi(du, priced.omega, phi);
        state.delta_u = du;
        // heuristic pricing can overstate β*, so keep δ^l ≤ δ^u
        state.delta_l = state.delta_l.max(dl).min(du);
        state.trace.push(IterationRecord {
            iteration: state.trace.len() + 1,
            delta_u: du.to_f64_lossy(),
            delta_l: state.delta_l.to_f64_lossy(),
            beta_star: priced.beta.to_f64_lossy(),
            pool_size: rmp.pool().len(),
            ms: start.elapsed().as_secs_f64() * 1e3,
        });
        state.solution = Some(sol);
        let ratio = if du <= S::zero() { S::one() } else { state.delta_l / du };
        if !(ratio < target && priced.beta > S::one() + beta_tol::<S>()) {
            return Ok(());
        }
        if rmp.contains(&priced.column) {
            let lambda = &state.solution.as_ref().expect("solution stored").lambda;
            priced = pricer.price(graph, lambda, TieBreak::Largest)?;
            if priced.beta <= S::one() + beta_tol::<S>() || rmp.contains(&priced.column) {
                state.stalled = true;
                return Ok(());
            }
        }
        rmp.push_column(priced.column)?;
    }
}

/// Max-throughput continuation: columns improve while `β* > μ`.
fn throughput_loop<S: Scalar>(
    rmp: &mut Rmp<'_, S>,
    graph: &ConflictGraph<S>,
    pricer: PricerKind,
    epsilon: S,
    state: &mut LoopState<S>,
) -> Result<ThroughputBounds<S>, CgError> {
    let target = S::one() / (S::one() + epsilon);
    let mut upper = S::infinity();
    loop {
        if state.trace.len() >= state.cap {
            return Err(CgError::NonConverged {
                iterations: state.trace.len(),
                delta_u: state.delta_u.to_f64_lossy(),
                delta_l: state.delta_l.to_f64_lossy(),
            });
        }
        let start = Instant::now();
        let sol = rmp.solve()?;
        let priced = pricer.price(graph, &sol.lambda, TieBreak::Smallest)?;
        let gap = (priced.beta - sol.mu).max(S::zero());
        let lower = sol.objective;
        upper = upper.min(lower + gap * rmp.data_unit()).max(lower);
        state.trace.push(IterationRecord {
            iteration: state.trace.len() + 1,
            delta_u: sol.schedule_length.to_f64_lossy(),
            delta_l: state.delta_l.to_f64_lossy(),
            beta_star: priced.beta.to_f64_lossy(),
            pool_size: rmp.pool().len(),
            ms: start.elapsed().as_secs_f64() * 1e3,
        });
        state.solution = Some(sol);
        let ratio = if upper <= S::zero() { S::one() } else { lower / upper };
        let improving = priced.beta > sol_mu_threshold(state, beta_tol::<S>());
        if !(ratio < target && improving) || rmp.contains(&priced.column) {
            state.stalled = improving && rmp.contains(&priced.column);
            return Ok(ThroughputBounds { lower, upper });
        }
        rmp.push_column(priced.column)?;
    }
}

fn sol_mu_threshold<S: Scalar>(state: &LoopState<S>, tol: S) -> S {
    let mu = state.solution.as_ref().map_or_else(S::zero, |s| s.mu);
    mu + tol * (S::one() + mu)
}

fn run_with_mode<S: Scalar>(
    scenario: &Scenario<S>,
    graph: &ConflictGraph<S>,
    mode: RmpMode<S>,
    options: &CgOptions,
) -> Result<CgResult<S>, CgError> {
    if !(options.epsilon >= 0.0 && options.epsilon.is_finite()) {
        return Err(CgError::Options(format!("epsilon must be finite and >= 0, got {}", options.epsilon)));
    }
    let pool = initial_pool(graph)?;
    let epsilon = S::of(options.epsilon);
    let mut state = LoopState {
        delta_u: S::infinity(),
        delta_l: S::zero(),
        solution: None,
        trace: Vec::new(),
        stalled: false,
        cap: options.max_iterations.unwrap_or(10 * graph.len()).max(1),
    };
    let schedule_mode = RmpMode {
        objective: Objective::MinSchedule,
        ..mode.clone()
    };
    let mut rmp = Rmp::new(scenario, graph, &pool, schedule_mode)?;
    schedule_loop(&mut rmp, graph, options.pricer, epsilon, &mut state)?;
    let mut v = verdict(state.delta_u, state.delta_l, epsilon);
    let mut reran_exact = false;
    if v == Verdict::Borderline && options.rerun_borderline && epsilon > S::zero() {
        reran_exact = true;
        schedule_loop(&mut rmp, graph, options.pricer, S::zero(), &mut state)?;
        v = verdict(state.delta_u, state.delta_l, S::zero());
    }

    let mut throughput = None;
    let mut final_pool = rmp.pool().to_vec();
    if mode.objective == Objective::MaxThroughput && v == Verdict::Supported {
        let max_mode = RmpMode {
            objective: Objective::MaxThroughput,
            ..mode
        };
        let mut max_rmp = Rmp::new(scenario, graph, rmp.pool(), max_mode)?;
        throughput = Some(throughput_loop(&mut max_rmp, graph, options.pricer, epsilon, &mut state)?);
        final_pool = max_rmp.pool().to_vec();
    }

    Ok(CgResult {
        delta_u: state.delta_u,
        delta_l: state.delta_l,
        verdict: v,
        solution: state.solution.expect("at least one master solve"),
        pool: final_pool,
        trace: state.trace,
        stalled: state.stalled,
        reran_exact,
        throughput,
    })
}

/// Column generation with free caching.
pub fn run_column_generation<S: Scalar>(scenario: &Scenario<S>, options: &CgOptions) -> Result<CgResult<S>, CgError> {
    let graph = build_conflict_graph(scenario);
    run_column_generation_on(scenario, &graph, options)
}

pub fn run_column_generation_on<S: Scalar>(
    scenario: &Scenario<S>,
    graph: &ConflictGraph<S>,
    options: &CgOptions,
) -> Result<CgResult<S>, CgError> {
    let mode = RmpMode {
        objective: options.objective,
        ..RmpMode::min_schedule()
    };
    run_with_mode(scenario, graph, mode, options)
}

/// Column generation with the cache contents held fixed.
pub fn resolve_fixed_cache<S: Scalar>(
    scenario: &Scenario<S>,
    x_fixed: &CacheMatrix<S>,
    options: &CgOptions,
) -> Result<CgResult<S>, CgError> {
    let graph = build_conflict_graph(scenario);
    let mode = RmpMode {
        objective: options.objective,
        ..RmpMode::fixed_cache(x_fixed.clone())
    };
    run_with_mode(scenario, &graph, mode, options)
}
