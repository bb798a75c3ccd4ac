//! Pricing: maximum-weight independent set under weights `λ·ĉ`.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conflict::{lex_cmp_members, ConflictGraph, IndependentSet};
use crate::lp::{solve_lp, LpProblem, LpStatus, Relation, Sense, SolverError};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PricingResult<S> {
    pub column: IndependentSet,
    pub beta: S,
    pub omega: S,
}

impl<S: Scalar> PricingResult<S> {
    fn new(column: IndependentSet, weights: &[S]) -> Self {
        let beta = column_weight(weights, column.members());
        Self {
            column,
            beta,
            omega: S::one() - beta,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PricingError {
    #[error("dual vector has length {got}, expected {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("dual price for tuple {0} is negative or not finite")]
    BadDual(usize),
    #[error("relaxation failed: {0}")]
    Solver(#[from] SolverError),
}

/// Which co-optimal column to prefer, by incidence-vector order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TieBreak {
    #[default]
    Smallest,
    Largest,
}

impl TieBreak {
    fn prefers(self, candidate: &[usize], incumbent: &[usize]) -> bool {
        let ord = lex_cmp_members(candidate, incumbent);
        match self {
            TieBreak::Smallest => ord == Ordering::Less,
            TieBreak::Largest => ord == Ordering::Greater,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            TieBreak::Smallest => TieBreak::Largest,
            TieBreak::Largest => TieBreak::Smallest,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PricerKind {
    #[default]
    Exact,
    SequentialFixing,
}

impl PricerKind {
    pub fn price<S: Scalar>(
        self,
        graph: &ConflictGraph<S>,
        lambda: &[S],
        tie: TieBreak,
    ) -> Result<PricingResult<S>, PricingError> {
        let w = tuple_weights(graph, lambda)?;
        match self {
            PricerKind::Exact => Ok(max_weight_exact(graph, &w, tie)),
            PricerKind::SequentialFixing => max_weight_sequential_fixing(graph, &w, tie),
        }
    }
}

impl std::str::FromStr for PricerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(PricerKind::Exact),
            "sequential_fixing" | "sf" => Ok(PricerKind::SequentialFixing),
            other => Err(format!("unknown pricer `{other}`")),
        }
    }
}

/// `w_t = λ_t · ĉ_t`.
pub fn tuple_weights<S: Scalar>(graph: &ConflictGraph<S>, lambda: &[S]) -> Result<Vec<S>, PricingError> {
    if lambda.len() != graph.len() {
        return Err(PricingError::LengthMismatch {
            got: lambda.len(),
            expected: graph.len(),
        });
    }
    lambda
        .iter()
        .zip(&graph.tuples)
        .enumerate()
        .map(|(t, (&l, tup))| {
            if !l.is_finite() || l < S::zero() {
                Err(PricingError::BadDual(t))
            } else {
                Ok(l * tup.capacity)
            }
        })
        .collect()
}

/// Sum of member weights in ascending index order.
pub fn column_weight<S: Scalar>(weights: &[S], members: &[usize]) -> S {
    members.iter().fold(S::zero(), |acc, &t| acc + weights[t])
}

/// `ω = 1 − Σ_{t ∈ column} λ_t ĉ_t`.
pub fn reduced_cost<S: Scalar>(graph: &ConflictGraph<S>, lambda: &[S], column: &IndependentSet) -> S {
    S::one()
        - column
            .members()
            .iter()
            .fold(S::zero(), |acc, &t| acc + lambda[t] * graph.tuples[t].capacity)
}

pub fn solve_pricing_exact<S: Scalar>(
    graph: &ConflictGraph<S>,
    lambda: &[S],
) -> Result<PricingResult<S>, PricingError> {
    PricerKind::Exact.price(graph, lambda, TieBreak::Smallest)
}

pub fn solve_pricing_sequential_fixing<S: Scalar>(
    graph: &ConflictGraph<S>,
    lambda: &[S],
) -> Result<PricingResult<S>, PricingError> {
    PricerKind::SequentialFixing.price(graph, lambda, TieBreak::Smallest)
}

/// Incremental independent-set state: blocked vertices plus antenna use.
struct Partial<'g, S> {
    graph: &'g ConflictGraph<S>,
    members: Vec<usize>,
    blocked: Vec<u64>,
    tx_used: Vec<u32>,
    rx_used: Vec<u32>,
}

impl<'g, S: Scalar> Partial<'g, S> {
    fn new(graph: &'g ConflictGraph<S>) -> Self {
        Self {
            graph,
            members: Vec::new(),
            blocked: vec![0; graph.len().div_ceil(64)],
            tx_used: vec![0; graph.n_transmitters()],
            rx_used: vec![0; graph.n_receivers()],
        }
    }

    fn fits(&self, v: usize) -> bool {
        let t = &self.graph.tuples[v];
        self.blocked[v / 64] >> (v % 64) & 1 == 0
            && self.tx_used[t.tx] < self.graph.tx_antennas(t.tx)
            && self.rx_used[t.rx] < self.graph.rx_antennas(t.rx)
            && !self.members.contains(&v)
    }

    /// Pushes `v`; returns the blocked words to restore on pop.
    fn push(&mut self, v: usize) -> Vec<u64> {
        let saved = self.blocked.clone();
        for (b, a) in self.blocked.iter_mut().zip(self.graph.adjacency_words(v)) {
            *b |= a;
        }
        let t = &self.graph.tuples[v];
        self.tx_used[t.tx] += 1;
        self.rx_used[t.rx] += 1;
        self.members.push(v);
        saved
    }

    fn pop(&mut self, saved: Vec<u64>) {
        let v = self.members.pop().expect("pop on empty partial set");
        let t = &self.graph.tuples[v];
        self.tx_used[t.tx] -= 1;
        self.rx_used[t.rx] -= 1;
        self.blocked = saved;
    }
}

struct Search<'g, S> {
    weights: &'g [S],
    order: Vec<usize>,
    tie: TieBreak,
    best: Vec<usize>,
    best_weight: S,
    sorted_buf: Vec<usize>,
}

impl<S: Scalar> Search<'_, S> {
    fn consider(&mut self, members: &[usize]) {
        self.sorted_buf.clear();
        self.sorted_buf.extend_from_slice(members);
        self.sorted_buf.sort_unstable();
        let w = column_weight(self.weights, &self.sorted_buf);
        let better = w > self.best_weight || (w == self.best_weight && self.tie.prefers(&self.sorted_buf, &self.best));
        if better {
            self.best_weight = w;
            self.best.clone_from(&self.sorted_buf);
        }
    }

    fn slack(&self) -> S {
        S::of(1e-12) * (S::one() + self.best_weight.abs())
    }

    fn dfs(&mut self, state: &mut Partial<'_, S>, pos: usize, current: S) {
        // optimistic completion: every remaining candidate that still fits
        let mut bound = current;
        for &v in &self.order[pos..] {
            if state.fits(v) {
                bound += self.weights[v];
            }
        }
        if bound + self.slack() < self.best_weight {
            return;
        }
        let Some(offset) = self.order[pos..].iter().position(|&v| state.fits(v)) else {
            return;
        };
        let i = pos + offset;
        let v = self.order[i];
        let saved = state.push(v);
        let members = state.members.clone();
        self.consider(&members);
        self.dfs(state, i + 1, current + self.weights[v]);
        state.pop(saved);
        self.dfs(state, i + 1, current);
    }
}

/// Exact maximum-weight independent set by depth-first branch and bound.
///
/// Only positive-weight tuples are branched on. Ties in total weight are
/// broken by incidence-vector order.
pub fn max_weight_exact<S: Scalar>(graph: &ConflictGraph<S>, weights: &[S], tie: TieBreak) -> PricingResult<S> {
    assert_eq!(weights.len(), graph.len());
    let mut order: Vec<usize> = (0..graph.len()).filter(|&t| weights[t] > S::zero()).collect();
    order.sort_by(|&a, &b| weights[b].partial_cmp(&weights[a]).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
    let mut search = Search {
        weights,
        order,
        tie,
        best: Vec::new(),
        best_weight: S::zero(),
        sorted_buf: Vec::new(),
    };
    let mut state = Partial::new(graph);
    search.dfs(&mut state, 0, S::zero());
    let column = IndependentSet::from_members(search.best, graph.len()).expect("members in range");
    PricingResult::new(column, weights)
}

/// Rounds the LP relaxation one variable per round.
///
/// Each round solves the relaxation over the positive-weight tuples that can
/// still join the column, then fixes the largest variable to 1. Stops early
/// once the relaxation is integral.
pub fn max_weight_sequential_fixing<S: Scalar>(
    graph: &ConflictGraph<S>,
    weights: &[S],
    tie: TieBreak,
) -> Result<PricingResult<S>, PricingError> {
    assert_eq!(weights.len(), graph.len());
    let mut chosen = Partial::new(graph);
    let candidates: Vec<usize> = (0..graph.len()).filter(|&t| weights[t] > S::zero()).collect();
    let tol = S::of(1e-6);
    for _ in 0..candidates.len() {
        let free: Vec<usize> = candidates.iter().copied().filter(|&t| chosen.fits(t)).collect();
        if free.is_empty() {
            break;
        }
        if free.len() == 1 {
            chosen.push(free[0]);
            break;
        }
        let values = relaxation(graph, weights, &free, &chosen)?;
        if values.iter().all(|&v| v <= tol || v >= S::one() - tol) {
            let ones: Vec<usize> = free.iter().zip(&values).filter(|(_, &v)| v >= S::one() - tol).map(|(&t, _)| t).collect();
            let mut trial = chosen.members.clone();
            trial.extend_from_slice(&ones);
            if graph.members_independent(&trial) {
                for t in ones {
                    chosen.push(t);
                }
                continue;
            }
        }
        let mut pick = 0;
        for i in 1..free.len() {
            let better = match values[i].partial_cmp(&values[pick]).unwrap_or(Ordering::Equal) {
                Ordering::Greater => true,
                Ordering::Less => false,
                Ordering::Equal => match weights[free[i]].partial_cmp(&weights[free[pick]]).unwrap_or(Ordering::Equal) {
                    Ordering::Greater => true,
                    Ordering::Less => false,
                    Ordering::Equal => tie == TieBreak::Largest,
                },
            };
            if better {
                pick = i;
            }
        }
        if values[pick] <= tol {
            break;
        }
        chosen.push(free[pick]);
    }
    let column = IndependentSet::from_members(chosen.members, graph.len()).expect("members in range");
    debug_assert!(graph.members_independent(column.members()));
    Ok(PricingResult::new(column, weights))
}

/// LP relaxation of the independent-set polytope restricted to `free`.
fn relaxation<S: Scalar>(
    graph: &ConflictGraph<S>,
    weights: &[S],
    free: &[usize],
    chosen: &Partial<'_, S>,
) -> Result<Vec<S>, PricingError> {
    use std::collections::BTreeMap;

    let mut lp = LpProblem::new(Sense::Maximize);
    for &t in free {
        lp.add_var(format!("t{t}"), weights[t], S::zero(), S::one());
    }
    let mut by_tx_ch: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    let mut by_rx_ch: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    let mut by_tx: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut by_rx: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &t) in free.iter().enumerate() {
        let tup = &graph.tuples[t];
        by_tx_ch.entry((tup.tx, tup.channel)).or_default().push(i);
        by_rx_ch.entry((tup.rx, tup.channel)).or_default().push(i);
        by_tx.entry(tup.tx).or_default().push(i);
        by_rx.entry(tup.rx).or_default().push(i);
    }
    let ones = |ix: &[usize]| ix.iter().map(|&i| (i, S::one())).collect::<Vec<_>>();
    // one link per transmitter and per receiver on each channel
    for group in by_tx_ch.values().chain(by_rx_ch.values()) {
        if group.len() > 1 {
            lp.add_row("clique", ones(group), Relation::Le, S::one());
        }
    }
    // antenna budgets, net of what is already chosen
    for (&n, group) in &by_tx {
        let left = graph.tx_antennas(n) - chosen.tx_used[n];
        if group.len() > left as usize {
            lp.add_row("tx_antennas", ones(group), Relation::Le, S::of(f64::from(left)));
        }
    }
    for (&k, group) in &by_rx {
        let left = graph.rx_antennas(k) - chosen.rx_used[k];
        if group.len() > left as usize {
            lp.add_row("rx_antennas", ones(group), Relation::Le, S::of(f64::from(left)));
        }
    }
    // remaining interference edges
    for (a, &u) in free.iter().enumerate() {
        for (b, &v) in free.iter().enumerate().skip(a + 1) {
            let (tu, tv) = (&graph.tuples[u], &graph.tuples[v]);
            if tu.tx != tv.tx && tu.rx != tv.rx && graph.adjacent(u, v) {
                lp.add_row("edge", vec![(a, S::one()), (b, S::one())], Relation::Le, S::one());
            }
        }
    }
    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(PricingError::Solver(SolverError::Inaccurate(format!(
            "pricing relaxation reported {:?}",
            sol.status
        ))));
    }
    Ok(sol.primal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conflict::build_conflict_graph;
    use crate::fixtures::{conflict_example, two_far_links};

    #[test]
    fn zero_duals_price_to_empty_column() {
        let g = build_conflict_graph(&conflict_example::<f64>());
        let lambda = vec![0.0; g.len()];
        for kind in [PricerKind::Exact, PricerKind::SequentialFixing] {
            let r = kind.price(&g, &lambda, TieBreak::Smallest).unwrap();
            assert!(r.column.is_empty());
            assert_eq!(r.beta, 0.0);
            assert_eq!(r.omega, 1.0);
        }
    }

    #[test]
    fn single_positive_weight_is_selected() {
        let g = build_conflict_graph(&conflict_example::<f64>());
        let mut lambda = vec![0.0; g.len()];
        lambda[3] = 5.0 / g.tuples[3].capacity;
        let r = solve_pricing_exact(&g, &lambda).unwrap();
        assert_eq!(r.column.members(), &[3]);
        assert!((r.beta - 5.0).abs() < 1e-12);
    }

    #[test]
    fn reduced_cost_of_unit_singleton_is_zero() {
        let g = build_conflict_graph(&conflict_example::<f64>());
        let mut lambda = vec![0.0; g.len()];
        lambda[1] = 1.0 / g.tuples[1].capacity;
        let col = IndependentSet::singleton(1, g.len());
        assert!(reduced_cost(&g, &lambda, &col).abs() < 1e-12);
    }

    #[test]
    fn example_picks_the_heaviest_cross_channel_set() {
        let g = build_conflict_graph(&conflict_example::<f64>());
        let w = vec![1.0, 1.0, 1.0, 1.0, 1.0];
        let r = max_weight_exact(&g, &w, TieBreak::Smallest);
        assert_eq!(r.column.members(), &[0, 2, 4]);
        let sf = max_weight_sequential_fixing(&g, &w, TieBreak::Smallest).unwrap();
        assert!(sf.beta <= r.beta);
        assert!(g.is_independent(&sf.column).unwrap());
    }

    #[test]
    fn tie_break_orders_incidence_vectors() {
        let g = build_conflict_graph(&conflict_example::<f64>());
        // 1 and 3 conflict; equal weight, nothing else positive
        let w = vec![0.0, 2.0, 0.0, 2.0, 0.0];
        let small = max_weight_exact(&g, &w, TieBreak::Smallest);
        let large = max_weight_exact(&g, &w, TieBreak::Largest);
        assert_eq!(small.column.members(), &[3]);
        assert_eq!(large.column.members(), &[1]);
    }

    #[test]
    fn conflict_free_instance_takes_every_positive_tuple() {
        let g = build_conflict_graph(&two_far_links::<f64>(1e6));
        let w = vec![0.7, 0.4];
        let exact = max_weight_exact(&g, &w, TieBreak::Smallest);
        let sf = max_weight_sequential_fixing(&g, &w, TieBreak::Smallest).unwrap();
        assert_eq!(exact.column.members(), &[0, 1]);
        assert_eq!(sf.column.members(), &[0, 1]);
    }

    #[test]
    fn negative_duals_are_rejected() {
        let g = build_conflict_graph(&two_far_links::<f64>(1e6));
        assert_eq!(
            solve_pricing_exact(&g, &[0.0, -1.0]).unwrap_err(),
            PricingError::BadDual(1)
        );
    }
}
