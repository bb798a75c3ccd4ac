//! Restricted master problem over a pool of independent sets.
//!
//! Variables are laid out as `[X | Y | Z | f]`. Internally data quantities
//! are measured in units of the largest tuple capacity and file sizes in
//! units of the largest file so the simplex sees coefficients near 1; all
//! reported values are converted back to bits and bits/slot.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conflict::{ConflictGraph, IndependentSet};
use crate::lp::{solve_lp_with, Basis, LpProblem, LpStatus, Relation, Sense, SimplexOptions, SolverError};
use crate::model::Scenario;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    MinSchedule,
    MaxThroughput,
}

impl std::str::FromStr for Objective {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "min_schedule" => Ok(Objective::MinSchedule),
            "max_throughput" => Ok(Objective::MaxThroughput),
            other => Err(format!("unknown objective `{other}`")),
        }
    }
}

/// `X[n][j]` indexed by transmitter; rows of the MBS are ignored.
pub type CacheMatrix<S> = Vec<Vec<S>>;

#[derive(Debug, Clone, PartialEq)]
pub enum CacheMode<S> {
    Free,
    Fixed(CacheMatrix<S>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RmpMode<S> {
    pub objective: Objective,
    pub cache: CacheMode<S>,
    /// When set, request `(k, j)` may only be served by the given transmitter.
    pub routing: Option<BTreeMap<(usize, usize), usize>>,
}

impl<S> RmpMode<S> {
    pub fn min_schedule() -> Self {
        Self {
            objective: Objective::MinSchedule,
            cache: CacheMode::Free,
            routing: None,
        }
    }

    pub fn max_throughput() -> Self {
        Self {
            objective: Objective::MaxThroughput,
            ..Self::min_schedule()
        }
    }

    pub fn fixed_cache(x: CacheMatrix<S>) -> Self {
        Self {
            cache: CacheMode::Fixed(x),
            ..Self::min_schedule()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Diagnosis {
    /// No transmitter has a usable link to the user.
    Coverage { user: usize, file: usize },
    /// The user is reachable, but not enough of the file can be cached
    /// at the transmitters that reach it.
    Capacity { user: usize, file: usize },
    /// Caching constraints are jointly unsatisfiable.
    CacheBudget,
    /// The demand does not fit in one slot with the current columns.
    ScheduleTooLong,
}

impl std::fmt::Display for Diagnosis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Diagnosis::Coverage { user, file } => write!(f, "user {user} (file {file}) is not covered by any transmitter"),
            Diagnosis::Capacity { user, file } => {
                write!(f, "file {file} for user {user} cannot be cached at any reachable transmitter")
            }
            Diagnosis::CacheBudget => write!(f, "cache capacities cannot hold the demanded files"),
            Diagnosis::ScheduleTooLong => write!(f, "demand does not fit in a unit schedule"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MasterError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("master problem infeasible: {0}")]
    Infeasible(Diagnosis),
    #[error("master problem unbounded")]
    Unbounded,
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct YIndex {
    pub user: usize,
    pub file: usize,
    pub tx: usize,
}

/// Variable and row positions of an assembled master problem.
#[derive(Debug, Clone, Default)]
pub struct RmpLayout {
    /// `(sbs, file)` per X variable, starting at column 0.
    pub x: Vec<(usize, usize)>,
    pub y_start: usize,
    pub y: Vec<YIndex>,
    /// One Z variable per tuple, in tuple order.
    pub z_start: usize,
    pub f_start: usize,
    pub cache_rows: Vec<usize>,
    pub demand_rows: Vec<(usize, usize)>,
    /// Row index of the first tuple-capacity row; one row per tuple.
    pub link_row_start: usize,
    pub schedule_row: Option<usize>,
}

impl RmpLayout {
    pub fn num_fixed_vars(&self) -> usize {
        self.f_start
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct YValue<S> {
    pub user: usize,
    pub file: usize,
    pub tx: usize,
    pub value: S,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RmpSolution<S> {
    /// Schedule length (MinSchedule) or total throughput in bits/slot
    /// (MaxThroughput).
    pub objective: S,
    /// `Σ f`.
    pub schedule_length: S,
    /// Per transmitter and file; MBS rows are all ones. Empty in fixed-cache mode.
    pub x: CacheMatrix<S>,
    pub y: Vec<YValue<S>>,
    /// Per tuple, bits/slot.
    pub z: Vec<S>,
    /// Per pool column.
    pub f: Vec<S>,
    /// Per tuple, nonnegative, in 1/(bits/slot) of the objective.
    pub lambda: Vec<S>,
    /// Price of the `Σ f ≤ 1` row in objective units (0 without that row).
    pub mu: S,
    pub lp_iterations: usize,
    #[serde(skip)]
    pub basis: Option<Basis>,
}

impl<S: Scalar> RmpSolution<S> {
    /// Tuple weights `λ·ĉ` used by the pricing problem.
    pub fn weights(&self, graph: &ConflictGraph<S>) -> Vec<S> {
        self.lambda.iter().zip(&graph.tuples).map(|(&l, t)| l * t.capacity).collect()
    }
}

/// A master problem that can grow by one column at a time and re-solve from
/// the previous basis.
#[derive(Debug, Clone)]
pub struct Rmp<'a, S> {
    scenario: &'a Scenario<S>,
    graph: &'a ConflictGraph<S>,
    mode: RmpMode<S>,
    layout: RmpLayout,
    lp: LpProblem<S>,
    pool: Vec<IndependentSet>,
    basis: Option<Basis>,
    data_unit: S,
    size_unit: S,
}

fn check_mode<S: Scalar>(scenario: &Scenario<S>, mode: &RmpMode<S>) -> Result<(), MasterError> {
    let nt = scenario.transmitters.len();
    let nf = scenario.n_files();
    if let CacheMode::Fixed(x) = &mode.cache {
        if x.len() != nt || x.iter().any(|r| r.len() != nf) {
            return Err(MasterError::Argument(format!("fixed cache matrix must be {nt}x{nf}")));
        }
        let tol = S::of(1e-9);
        for n in scenario.sbs_indices() {
            if x[n].iter().any(|&v| v < -tol || v > S::one() + tol) {
                return Err(MasterError::Argument(format!("fixed cache row {n} outside [0, 1]")));
            }
            let used: S = x[n].iter().zip(&scenario.catalog.sizes_bits).map(|(&v, &s)| v * s).sum();
            let cap = scenario.transmitters[n].cache_bits.unwrap_or_else(S::zero);
            if used > cap * (S::one() + tol) + tol {
                return Err(MasterError::Argument(format!("fixed cache of SBS {n} exceeds its capacity")));
            }
        }
    }
    if let Some(routes) = &mode.routing {
        if routes.values().any(|&n| n >= nt) {
            return Err(MasterError::Argument("routing names an unknown transmitter".into()));
        }
    }
    Ok(())
}

impl<'a, S: Scalar> Rmp<'a, S> {
    pub fn new(
        scenario: &'a Scenario<S>,
        graph: &'a ConflictGraph<S>,
        pool: &[IndependentSet],
        mode: RmpMode<S>,
    ) -> Result<Self, MasterError> {
        if pool.is_empty() {
            return Err(MasterError::Argument("column pool is empty".into()));
        }
        check_mode(scenario, &mode)?;
        let data_unit = graph
            .tuples
            .iter()
            .map(|t| t.capacity)
            .fold(S::zero(), S::max)
            .max(S::min_positive_value());
        let size_unit = scenario
            .catalog
            .sizes_bits
            .iter()
            .copied()
            .fold(S::zero(), S::max)
            .max(S::min_positive_value());
        let mut rmp = Self {
            scenario,
            graph,
            mode,
            layout: RmpLayout::default(),
            lp: LpProblem::new(Sense::Minimize),
            pool: Vec::new(),
            basis: None,
            data_unit,
            size_unit,
        };
        rmp.assemble()?;
        for column in pool {
            rmp.push_column(column.clone())?;
        }
        Ok(rmp)
    }

    fn assemble(&mut self) -> Result<(), MasterError> {
        let sc = self.scenario;
        let graph = self.graph;
        let nf = sc.n_files();
        let max_mode = self.mode.objective == Objective::MaxThroughput;
        let mut lp = LpProblem::new(if max_mode { Sense::Maximize } else { Sense::Minimize });
        let mut layout = RmpLayout::default();

        // which transmitters have at least one tuple to each user
        let mut reach: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (t, tup) in graph.tuples.iter().enumerate() {
            reach.entry((tup.tx, tup.rx)).or_default().push(t);
        }

        let free = matches!(self.mode.cache, CacheMode::Free);
        let mut x_var = BTreeMap::new();
        if free {
            for n in sc.sbs_indices() {
                for j in 0..nf {
                    let v = lp.add_var(format!("x_{n}_{j}"), S::zero(), S::zero(), S::one());
                    x_var.insert((n, j), v);
                    layout.x.push((n, j));
                }
            }
        }

        layout.y_start = lp.num_vars();
        let demanded = sc.requests.demanded();
        for &(k, j) in &demanded {
            let mut any_tuple = false;
            let mut added = false;
            for n in 0..sc.transmitters.len() {
                if !reach.contains_key(&(n, k)) {
                    continue;
                }
                any_tuple = true;
                if let Some(routes) = &self.mode.routing {
                    if routes.get(&(k, j)) != Some(&n) {
                        continue;
                    }
                }
                let upper = if sc.is_mbs(n) {
                    S::one()
                } else {
                    match &self.mode.cache {
                        CacheMode::Free => {
                            if sc.transmitters[n].cache_bits.unwrap_or_else(S::zero) <= S::zero() {
                                continue;
                            }
                            S::one()
                        }
                        CacheMode::Fixed(x) => x[n][j].min(S::one()),
                    }
                };
                if upper <= S::zero() {
                    continue;
                }
                lp.add_var(format!("y_{k}_{j}_{n}"), S::zero(), S::zero(), upper);
                layout.y.push(YIndex { user: k, file: j, tx: n });
                added = true;
            }
            if !added {
                let diag = if any_tuple {
                    Diagnosis::Capacity { user: k, file: j }
                } else {
                    Diagnosis::Coverage { user: k, file: j }
                };
                return Err(MasterError::Infeasible(diag));
            }
        }

        layout.z_start = lp.num_vars();
        let z_cost = if max_mode { S::one() } else { S::zero() };
        for (t, tup) in graph.tuples.iter().enumerate() {
            lp.add_var(format!("z_{}_{}_{}_{t}", tup.tx, tup.rx, tup.channel), z_cost, S::zero(), S::infinity());
        }
        layout.f_start = lp.num_vars();

        // cache capacity
        if free {
            for n in sc.sbs_indices() {
                let coeffs = (0..nf)
                    .map(|j| (x_var[&(n, j)], sc.catalog.sizes_bits[j] / self.size_unit))
                    .collect();
                let cap = sc.transmitters[n].cache_bits.unwrap_or_else(S::zero) / self.size_unit;
                layout.cache_rows.push(lp.add_row(format!("cache_{n}"), coeffs, Relation::Le, cap));
            }
        }

        // demand coverage
        let mut y_of_req: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        let mut y_of_link: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (i, yi) in layout.y.iter().enumerate() {
            y_of_req.entry((yi.user, yi.file)).or_default().push(layout.y_start + i);
            y_of_link.entry((yi.tx, yi.user)).or_default().push(i);
        }
        for &(k, j) in &demanded {
            let coeffs = y_of_req[&(k, j)].iter().map(|&v| (v, S::one())).collect();
            lp.add_row(format!("demand_{k}_{j}"), coeffs, Relation::Ge, S::one());
            layout.demand_rows.push((k, j));
        }

        // Y ≤ X
        if free {
            for (i, yi) in layout.y.iter().enumerate() {
                if sc.is_mbs(yi.tx) {
                    continue;
                }
                let x = x_var[&(yi.tx, yi.file)];
                lp.add_row(
                    format!("cached_{}_{}_{}", yi.user, yi.file, yi.tx),
                    vec![(layout.y_start + i, S::one()), (x, -S::one())],
                    Relation::Le,
                    S::zero(),
                );
            }
        }

        // data routed over a link is carried by its channels
        for (&(n, k), ys) in &y_of_link {
            let mut coeffs: Vec<(usize, S)> = ys
                .iter()
                .map(|&i| {
                    let j = layout.y[i].file;
                    let bits = sc.requests.rate(k, j) * sc.catalog.sizes_bits[j];
                    (layout.y_start + i, bits / self.data_unit)
                })
                .collect();
            for &t in &reach[&(n, k)] {
                coeffs.push((layout.z_start + t, -S::one()));
            }
            lp.add_row(format!("flow_{n}_{k}"), coeffs, Relation::Le, S::zero());
        }

        // tuple capacity, columns are attached by push_column
        layout.link_row_start = lp.num_rows();
        for (t, tup) in graph.tuples.iter().enumerate() {
            lp.add_row(
                format!("link_{}_{}_{}", tup.tx, tup.rx, tup.channel),
                vec![(layout.z_start + t, S::one())],
                Relation::Le,
                S::zero(),
            );
        }

        if max_mode {
            layout.schedule_row = Some(lp.add_row("schedule", Vec::new(), Relation::Le, S::one()));
        }

        self.lp = lp;
        self.layout = layout;
        Ok(())
    }

    pub fn layout(&self) -> &RmpLayout {
        &self.layout
    }

    pub fn problem(&self) -> &LpProblem<S> {
        &self.lp
    }

    pub fn pool(&self) -> &[IndependentSet] {
        &self.pool
    }

    pub fn mode(&self) -> &RmpMode<S> {
        &self.mode
    }

    /// Bits/slot represented by one internal data unit.
    pub fn data_unit(&self) -> S {
        self.data_unit
    }

    pub fn contains(&self, column: &IndependentSet) -> bool {
        self.pool.iter().any(|c| c == column)
    }

    /// Appends a column (new `f` variable). The previous basis stays valid.
    pub fn push_column(&mut self, column: IndependentSet) -> Result<usize, MasterError> {
        match self.graph.is_independent(&column) {
            Ok(true) => {}
            Ok(false) => return Err(MasterError::Argument("pool column is not independent".into())),
            Err(e) => return Err(MasterError::Argument(e.to_string())),
        }
        let cost = match self.mode.objective {
            Objective::MinSchedule => S::one(),
            Objective::MaxThroughput => S::zero(),
        };
        let i = self.pool.len();
        let v = self.lp.add_var(format!("f_{i}"), cost, S::zero(), S::infinity());
        for &t in column.members() {
            let cap = self.graph.tuples[t].capacity / self.data_unit;
            self.lp.rows[self.layout.link_row_start + t].coeffs.push((v, -cap));
        }
        if let Some(r) = self.layout.schedule_row {
            self.lp.rows[r].coeffs.push((v, S::one()));
        }
        self.pool.push(column);
        Ok(i)
    }

    pub fn solve(&mut self) -> Result<RmpSolution<S>, MasterError> {
        let options = SimplexOptions::default();
        let sol = solve_lp_with(&self.lp, self.basis.as_ref(), &options)?;
        match sol.status {
            LpStatus::Optimal => {}
            LpStatus::Unbounded => return Err(MasterError::Unbounded),
            LpStatus::Infeasible => {
                let diag = match self.mode.objective {
                    Objective::MaxThroughput => Diagnosis::ScheduleTooLong,
                    Objective::MinSchedule => Diagnosis::CacheBudget,
                };
                return Err(MasterError::Infeasible(diag));
            }
        }
        self.basis = sol.basis.clone();
        Ok(self.extract(sol))
    }

    fn extract(&self, sol: crate::lp::LpSolution<S>) -> RmpSolution<S> {
        let sc = self.scenario;
        let l = &self.layout;
        let nf = sc.n_files();
        let x = match self.mode.cache {
            CacheMode::Free => {
                let mut x = vec![vec![S::zero(); nf]; sc.transmitters.len()];
                if let Some(m) = sc.mbs() {
                    x[m] = vec![S::one(); nf];
                }
                for (i, &(n, j)) in l.x.iter().enumerate() {
                    x[n][j] = sol.primal[i];
                }
                x
            }
            CacheMode::Fixed(_) => Vec::new(),
        };
        let y = l
            .y
            .iter()
            .enumerate()
            .map(|(i, yi)| YValue {
                user: yi.user,
                file: yi.file,
                tx: yi.tx,
                value: sol.primal[l.y_start + i],
            })
            .collect();
        let q = self.graph.len();
        let z = (0..q).map(|t| sol.primal[l.z_start + t] * self.data_unit).collect();
        let f: Vec<S> = sol.primal[l.f_start..].to_vec();
        // shadow prices of ≤ rows are ≤ 0 when minimizing and ≥ 0 when maximizing
        let sign = match self.mode.objective {
            Objective::MinSchedule => -S::one(),
            Objective::MaxThroughput => S::one(),
        };
        let lambda = (0..q)
            .map(|t| (sign * sol.duals[l.link_row_start + t]).max(S::zero()) / self.data_unit)
            .collect();
        let mu = l.schedule_row.map_or_else(S::zero, |r| sol.duals[r].max(S::zero()));
        let objective = match self.mode.objective {
            Objective::MinSchedule => sol.objective,
            Objective::MaxThroughput => sol.objective * self.data_unit,
        };
        RmpSolution {
            objective,
            schedule_length: f.iter().copied().sum(),
            x,
            y,
            z,
            f,
            lambda,
            mu,
            lp_iterations: sol.iterations,
            basis: sol.basis,
        }
    }
}

pub fn build_rmp<S: Scalar>(
    scenario: &Scenario<S>,
    graph: &ConflictGraph<S>,
    pool: &[IndependentSet],
    mode: &RmpMode<S>,
) -> Result<LpProblem<S>, MasterError> {
    Ok(Rmp::new(scenario, graph, pool, mode.clone())?.lp)
}

pub fn solve_rmp<S: Scalar>(
    scenario: &Scenario<S>,
    graph: &ConflictGraph<S>,
    pool: &[IndependentSet],
    mode: &RmpMode<S>,
) -> Result<RmpSolution<S>, MasterError> {
    Rmp::new(scenario, graph, pool, mode.clone())?.solve()
}

/// One singleton column per tuple.
pub fn singleton_pool<S>(graph: &ConflictGraph<S>) -> Vec<IndependentSet> {
    let q = graph.tuples.len();
    (0..q).map(|t| IndependentSet::singleton(t, q)).collect()
}
