//! Conflict graph over communication tuples and the independence predicate.

use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{enumerate_tuples, CommTuple, Scenario};
use crate::scalar::Scalar;

/// Default cap on tuple count for exhaustive enumeration.
pub const DEFAULT_ENUMERATION_GUARD: usize = 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConflictError {
    #[error("incidence vector has length {got}, expected {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("set is not independent")]
    NotIndependent,
    #[error("refusing to enumerate independent sets over {tuples} tuples (guard {guard})")]
    GuardExceeded { tuples: usize, guard: usize },
    #[error("tuple index {0} out of range")]
    OutOfRange(usize),
}

/// A set of tuple indices, kept sorted. Equivalent to a 0/1 incidence vector
/// of length `len`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IndependentSet {
    members: Vec<usize>,
    len: usize,
}

impl IndependentSet {
    pub fn empty(len: usize) -> Self {
        Self { members: Vec::new(), len }
    }

    pub fn singleton(index: usize, len: usize) -> Self {
        assert!(index < len);
        Self { members: vec![index], len }
    }

    pub fn from_members(mut members: Vec<usize>, len: usize) -> Result<Self, ConflictError> {
        members.sort_unstable();
        members.dedup();
        if let Some(&last) = members.last() {
            if last >= len {
                return Err(ConflictError::OutOfRange(last));
            }
        }
        Ok(Self { members, len })
    }

    pub fn from_incidence(bits: &[u8]) -> Self {
        Self {
            members: bits.iter().enumerate().filter(|(_, &b)| b != 0).map(|(i, _)| i).collect(),
            len: bits.len(),
        }
    }

    pub fn incidence(&self) -> Vec<u8> {
        let mut v = vec![0u8; self.len];
        for &i in &self.members {
            v[i] = 1;
        }
        v
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members.binary_search(&i).is_ok()
    }

    /// Length of the incidence vector (total tuple count).
    pub fn universe(&self) -> usize {
        self.len
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Lexicographic order of the incidence vectors.
    pub fn cmp_incidence(&self, other: &Self) -> Ordering {
        lex_cmp_members(&self.members, &other.members)
    }
}

/// Compares two sorted member lists by their 0/1 incidence vectors.
pub(crate) fn lex_cmp_members(a: &[usize], b: &[usize]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.cmp(y) {
            Ordering::Equal => continue,
            // `a` holds the smaller index, so a 1 where `b` has a 0
            Ordering::Less => return Ordering::Greater,
            Ordering::Greater => return Ordering::Less,
        }
    }
    a.len().cmp(&b.len())
}

/// Whether two distinct tuples can be active at the same time.
///
/// Tuples on different channels never conflict. On the same channel they
/// conflict when they share a transmitter or a receiver, or when either
/// receiver lies within (closed ball) the other transmitter's interference
/// range.
pub fn conflicts<S: Scalar>(a: &CommTuple<S>, b: &CommTuple<S>, scenario: &Scenario<S>) -> bool {
    if a.channel != b.channel {
        return false;
    }
    if a.tx == b.tx || a.rx == b.rx {
        return true;
    }
    let c = a.channel;
    let hits = |t: &CommTuple<S>, victim: &CommTuple<S>| match scenario.interference_range(t.tx, c) {
        Some(ir) => scenario.distance(t.tx, victim.rx) <= ir,
        None => false,
    };
    hits(a, b) || hits(b, a)
}

#[derive(Debug, Clone)]
pub struct ConflictGraph<S> {
    pub tuples: Vec<CommTuple<S>>,
    neighbors: Vec<Vec<usize>>,
    bits: Vec<Vec<u64>>,
    tx_antennas: Vec<u32>,
    rx_antennas: Vec<u32>,
}

fn words(n: usize) -> usize {
    n.div_ceil(64)
}

impl<S: Scalar> ConflictGraph<S> {
    /// Graph over an explicit tuple list (tuples must come from `scenario`).
    ///
    /// Besides protocol-model conflicts, two tuples are joined when they share
    /// a single-antenna transmitter or receiver, so that for one-antenna
    /// nodes independence is exactly edge-freeness.
    pub fn from_tuples(scenario: &Scenario<S>, tuples: Vec<CommTuple<S>>) -> Self {
        let q = tuples.len();
        let w = words(q);
        let mut neighbors = vec![Vec::new(); q];
        let mut bits = vec![vec![0u64; w]; q];
        let single_tx = |n: usize| scenario.transmitters[n].antennas == 1;
        let single_rx = |k: usize| scenario.users[k].antennas == 1;
        for u in 0..q {
            for v in u + 1..q {
                let (a, b) = (&tuples[u], &tuples[v]);
                let antenna_clash = (a.tx == b.tx && single_tx(a.tx)) || (a.rx == b.rx && single_rx(a.rx));
                if antenna_clash || conflicts(a, b, scenario) {
                    neighbors[u].push(v);
                    neighbors[v].push(u);
                    bits[u][v / 64] |= 1 << (v % 64);
                    bits[v][u / 64] |= 1 << (u % 64);
                }
            }
        }
        Self {
            tuples,
            neighbors,
            bits,
            tx_antennas: scenario.transmitters.iter().map(|n| n.antennas).collect(),
            rx_antennas: scenario.users.iter().map(|n| n.antennas).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    pub fn adjacent(&self, u: usize, v: usize) -> bool {
        self.bits[u][v / 64] >> (v % 64) & 1 == 1
    }

    pub fn adjacency_words(&self, v: usize) -> &[u64] {
        &self.bits[v]
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (u, ns) in self.neighbors.iter().enumerate() {
            out.extend(ns.iter().filter(|&&v| v > u).map(|&v| (u, v)));
        }
        out
    }

    pub fn tx_antennas(&self, tx: usize) -> u32 {
        self.tx_antennas[tx]
    }

    pub fn rx_antennas(&self, rx: usize) -> u32 {
        self.rx_antennas[rx]
    }

    pub fn n_transmitters(&self) -> usize {
        self.tx_antennas.len()
    }

    pub fn n_receivers(&self) -> usize {
        self.rx_antennas.len()
    }

    fn check_len(&self, set: &IndependentSet) -> Result<(), ConflictError> {
        if set.len != self.len() {
            return Err(ConflictError::LengthMismatch {
                got: set.len,
                expected: self.len(),
            });
        }
        Ok(())
    }

    /// Pairwise conflict-freedom plus per-node antenna budgets.
    pub fn is_independent(&self, set: &IndependentSet) -> Result<bool, ConflictError> {
        self.check_len(set)?;
        Ok(self.members_independent(&set.members))
    }

    pub(crate) fn members_independent(&self, members: &[usize]) -> bool {
        let mut tx_used = vec![0u32; self.tx_antennas.len()];
        let mut rx_used = vec![0u32; self.rx_antennas.len()];
        for (i, &u) in members.iter().enumerate() {
            if members[i + 1..].iter().any(|&v| self.adjacent(u, v)) {
                return false;
            }
            let t = &self.tuples[u];
            tx_used[t.tx] += 1;
            rx_used[t.rx] += 1;
            if tx_used[t.tx] > self.tx_antennas[t.tx] || rx_used[t.rx] > self.rx_antennas[t.rx] {
                return false;
            }
        }
        true
    }

    /// Whether `candidate` can join the independent set `members`.
    pub(crate) fn can_extend(&self, members: &[usize], candidate: usize) -> bool {
        if members.contains(&candidate) {
            return false;
        }
        let t = &self.tuples[candidate];
        let mut tx_used = 0;
        let mut rx_used = 0;
        for &u in members {
            if self.adjacent(u, candidate) {
                return false;
            }
            let s = &self.tuples[u];
            tx_used += u32::from(s.tx == t.tx);
            rx_used += u32::from(s.rx == t.rx);
        }
        tx_used < self.tx_antennas[t.tx] && rx_used < self.rx_antennas[t.rx]
    }

    /// True iff no single tuple can be added while staying independent.
    pub fn is_maximal(&self, set: &IndependentSet) -> Result<bool, ConflictError> {
        if !self.is_independent(set)? {
            return Err(ConflictError::NotIndependent);
        }
        Ok((0..self.len()).all(|v| !self.can_extend(&set.members, v)))
    }

    /// Edge list dump: header line, one `u v` line per edge, then the tuple table.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# vertices {} edges {}", self.len(), self.edge_count());
        for (u, v) in self.edges() {
            let _ = writeln!(out, "{u} {v}");
        }
        let _ = writeln!(out, "# vertex tx rx channel capacity_bits_per_slot");
        for (i, t) in self.tuples.iter().enumerate() {
            let _ = writeln!(out, "# {i} {} {} {} {}", t.tx, t.rx, t.channel, t.capacity);
        }
        out
    }
}

pub fn build_conflict_graph<S: Scalar>(scenario: &Scenario<S>) -> ConflictGraph<S> {
    ConflictGraph::from_tuples(scenario, enumerate_tuples(scenario))
}

fn guard_check<S>(graph: &ConflictGraph<S>, guard: usize) -> Result<(), ConflictError> {
    if graph.tuples.len() > guard {
        return Err(ConflictError::GuardExceeded {
            tuples: graph.tuples.len(),
            guard,
        });
    }
    Ok(())
}

/// Every independent set (including the empty one), by include/exclude search.
pub fn enumerate_all_independent_sets<S: Scalar>(
    graph: &ConflictGraph<S>,
    guard: usize,
) -> Result<Vec<IndependentSet>, ConflictError> {
    guard_check(graph, guard)?;
    let q = graph.len();
    let mut out = Vec::new();
    let mut current = Vec::new();
    fn rec<S: Scalar>(g: &ConflictGraph<S>, i: usize, cur: &mut Vec<usize>, out: &mut Vec<IndependentSet>) {
        if i == g.len() {
            out.push(IndependentSet {
                members: cur.clone(),
                len: g.len(),
            });
            return;
        }
        if g.can_extend(cur, i) {
            cur.push(i);
            rec(g, i + 1, cur, out);
            cur.pop();
        }
        rec(g, i + 1, cur, out);
    }
    rec(graph, 0, &mut current, &mut out);
    debug_assert!(out.iter().all(|s| s.len == q));
    Ok(out)
}

/// All maximal independent sets, deduplicated, each verified independent.
pub fn enumerate_independent_sets<S: Scalar>(
    graph: &ConflictGraph<S>,
    guard: usize,
) -> Result<Vec<IndependentSet>, ConflictError> {
    let all = enumerate_all_independent_sets(graph, guard)?;
    let mut out: Vec<IndependentSet> = all
        .into_iter()
        .filter(|s| (0..graph.len()).all(|v| !graph.can_extend(&s.members, v)))
        .collect();
    out.sort_by(|a, b| a.cmp_incidence(b));
    out.dedup();
    for s in &out {
        if !graph.members_independent(&s.members) {
            return Err(ConflictError::NotIndependent);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::conflict_example;

    #[test]
    fn example_has_the_five_expected_tuples() {
        let g = build_conflict_graph(&conflict_example::<f64>());
        let shape: Vec<_> = g.tuples.iter().map(|t| (t.tx, t.rx, t.channel)).collect();
        assert_eq!(shape, vec![(0, 0, 1), (0, 1, 1), (0, 1, 2), (1, 1, 1), (1, 2, 1)]);
        assert!(g.adjacent(0, 3));
        assert!(g.adjacent(3, 0));
    }

    #[test]
    fn example_independent_sets() {
        let g = build_conflict_graph(&conflict_example::<f64>());
        let i1 = IndependentSet::from_incidence(&[1, 0, 0, 0, 1]);
        let i2 = IndependentSet::from_incidence(&[1, 0, 1, 0, 1]);
        assert!(g.is_independent(&i1).unwrap());
        assert!(!g.is_maximal(&i1).unwrap());
        assert!(g.is_independent(&i2).unwrap());
        assert!(g.is_maximal(&i2).unwrap());
        let maximal = enumerate_independent_sets(&g, DEFAULT_ENUMERATION_GUARD).unwrap();
        assert!(maximal.contains(&i2));
    }

    #[test]
    fn same_transmitter_same_channel_conflicts() {
        let sc = conflict_example::<f64>();
        let g = build_conflict_graph(&sc);
        assert!(conflicts(&g.tuples[0], &g.tuples[1], &sc));
        // different channel, shared transmitter: no pairwise conflict
        assert!(!conflicts(&g.tuples[0], &g.tuples[2], &sc));
    }

    #[test]
    fn empty_and_mismatched_sets() {
        let g = build_conflict_graph(&conflict_example::<f64>());
        assert!(g.is_independent(&IndependentSet::empty(5)).unwrap());
        assert!(!g.is_maximal(&IndependentSet::empty(5)).unwrap());
        assert!(matches!(
            g.is_independent(&IndependentSet::empty(4)),
            Err(ConflictError::LengthMismatch { .. })
        ));
        let bad = IndependentSet::from_incidence(&[1, 1, 0, 0, 0]);
        assert_eq!(g.is_maximal(&bad), Err(ConflictError::NotIndependent));
    }

    #[test]
    fn antenna_budget_limits_cross_channel_sets() {
        let mut sc = conflict_example::<f64>();
        sc.transmitters[0].antennas = 1;
        let g = build_conflict_graph(&sc);
        let i2 = IndependentSet::from_incidence(&[1, 0, 1, 0, 1]);
        assert!(!g.is_independent(&i2).unwrap());
    }

    #[test]
    fn guard_refuses_large_graphs() {
        let g = build_conflict_graph(&conflict_example::<f64>());
        assert!(matches!(
            enumerate_independent_sets(&g, 4),
            Err(ConflictError::GuardExceeded { tuples: 5, guard: 4 })
        ));
    }

    #[test]
    fn lexicographic_incidence_order() {
        let a = IndependentSet::from_incidence(&[0, 1, 0]);
        let b = IndependentSet::from_incidence(&[1, 0, 0]);
        let c = IndependentSet::from_incidence(&[0, 1, 1]);
        assert_eq!(a.cmp_incidence(&b), Ordering::Less);
        assert_eq!(a.cmp_incidence(&c), Ordering::Less);
        assert_eq!(c.cmp_incidence(&b), Ordering::Less);
    }

    #[test]
    fn edge_list_dump() {
        let g = build_conflict_graph(&conflict_example::<f64>());
        let text = g.to_edge_list();
        assert!(text.starts_with("# vertices 5 edges 7"));
        assert!(text.contains("\n0 3\n"));
    }
}
