//! Dense bounded-variable revised simplex.
//!
//! Rows are stored sparsely and turned into equalities with one logical
//! (slack) variable per row: `a·x + s = b`, where `s ≥ 0` for `≤` rows,
//! `s ≤ 0` for `≥` rows and `s = 0` for equalities. The basis inverse is
//! kept explicitly (column-major) and refactorized periodically.
//!
//! Dual convention: every reported dual is the shadow price `∂z/∂b_i` of
//! the optimal objective in the problem's own sense. For a minimization
//! this makes `≥` rows carry nonnegative prices and `≤` rows nonpositive
//! ones; for a maximization the signs flip.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Row<S> {
    pub name: String,
    pub coeffs: Vec<(usize, S)>,
    pub relation: Relation,
    pub rhs: S,
}

#[derive(Debug, Clone)]
pub struct LpProblem<S> {
    pub sense: Sense,
    pub objective: Vec<S>,
    /// `(lower, upper)`; either side may be infinite.
    pub bounds: Vec<(S, S)>,
    pub var_names: Vec<String>,
    pub rows: Vec<Row<S>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// One basic variable, identified independently of column layout changes
/// that only append structural variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisVar {
    Column(usize),
    Slack(usize),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Basis {
    pub basic: Vec<BasisVar>,
    /// Nonbasic structural columns resting at their upper bound.
    pub at_upper: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct LpSolution<S> {
    pub status: LpStatus,
    pub objective: S,
    pub primal: Vec<S>,
    /// One shadow price per row.
    pub duals: Vec<S>,
    /// `c_j − yᵀA_j` per structural column, in the problem's sense.
    pub reduced_costs: Vec<S>,
    pub iterations: usize,
    pub basis: Option<Basis>,
}

impl<S: Scalar> LpSolution<S> {
    fn without_point(status: LpStatus, iterations: usize) -> Self {
        Self {
            status,
            objective: S::nan(),
            primal: Vec::new(),
            duals: Vec::new(),
            reduced_costs: Vec::new(),
            iterations,
            basis: None,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("malformed problem: {0}")]
    Malformed(String),
    #[error("basis matrix is numerically singular")]
    Singular,
    #[error("simplex iteration limit ({0}) reached")]
    IterationLimit(usize),
    #[error("numerical breakdown: {0}")]
    Inaccurate(String),
}

impl<S: Scalar> LpProblem<S> {
    pub fn new(sense: Sense) -> Self {
        Self {
            sense,
            objective: Vec::new(),
            bounds: Vec::new(),
            var_names: Vec::new(),
            rows: Vec::new(),
        }
    }

    /// Dense convenience constructor; all variables get bounds `[0, ∞)`.
    pub fn from_dense(
        sense: Sense,
        objective: &[S],
        rows: &[(Vec<S>, Relation, S)],
    ) -> Self {
        let mut lp = Self::new(sense);
        for (j, &c) in objective.iter().enumerate() {
            lp.add_var(format!("x{j}"), c, S::zero(), S::infinity());
        }
        for (i, (coeffs, rel, rhs)) in rows.iter().enumerate() {
            let sparse = coeffs
                .iter()
                .enumerate()
                .filter(|(_, v)| !v.is_zero())
                .map(|(j, &v)| (j, v))
                .collect();
            lp.add_row(format!("r{i}"), sparse, *rel, *rhs);
        }
        lp
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_var(&mut self, name: impl Into<String>, cost: S, lower: S, upper: S) -> usize {
        self.objective.push(cost);
        self.bounds.push((lower, upper));
        self.var_names.push(name.into());
        self.objective.len() - 1
    }

    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        coeffs: Vec<(usize, S)>,
        relation: Relation,
        rhs: S,
    ) -> usize {
        self.rows.push(Row {
            name: name.into(),
            coeffs,
            relation,
            rhs,
        });
        self.rows.len() - 1
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let n = self.num_vars();
        if self.bounds.len() != n || self.var_names.len() != n {
            return Err(SolverError::Malformed(
                "bounds/names length differs from variable count".into(),
            ));
        }
        for (j, c) in self.objective.iter().enumerate() {
            if !c.is_finite() {
                return Err(SolverError::Malformed(format!("objective coefficient {j} not finite")));
            }
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if lo.is_nan() || hi.is_nan() || lo > hi || lo == S::infinity() || hi == S::neg_infinity()
            {
                return Err(SolverError::Malformed(format!("bad bounds on variable {j}")));
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(SolverError::Malformed(format!("row {i} rhs not finite")));
            }
            for &(j, v) in &row.coeffs {
                if j >= n {
                    return Err(SolverError::Malformed(format!(
                        "row {i} references variable {j} but only {n} exist"
                    )));
                }
                if !v.is_finite() {
                    return Err(SolverError::Malformed(format!("row {i} has a non-finite coefficient")));
                }
            }
        }
        Ok(())
    }

    /// Row activity `a_i·x`.
    pub fn row_activity(&self, i: usize, x: &[S]) -> S {
        self.rows[i].coeffs.iter().map(|&(j, v)| v * x[j]).sum()
    }

    /// CPLEX-LP style text dump for cross-checking with external solvers.
    pub fn to_lp_string(&self) -> String {
        let mut out = String::new();
        let name = |j: usize| sanitize(&self.var_names[j], 'x', j);
        let _ = writeln!(
            out,
            "{}",
            match self.sense {
                Sense::Minimize => "Minimize",
                Sense::Maximize => "Maximize",
            }
        );
        let _ = write!(out, " obj:");
        let mut any = false;
        for (j, &c) in self.objective.iter().enumerate() {
            if !c.is_zero() {
                write_term(&mut out, c, &name(j));
                any = true;
            }
        }
        if !any {
            let _ = write!(out, " 0 {}", name(0));
        }
        let _ = writeln!(out, "\nSubject To");
        for (i, row) in self.rows.iter().enumerate() {
            let _ = write!(out, " {}:", sanitize(&row.name, 'r', i));
            if row.coeffs.is_empty() {
                let _ = write!(out, " 0 {}", name(0));
            }
            for &(j, v) in &row.coeffs {
                write_term(&mut out, v, &name(j));
            }
            let rel = match row.relation {
                Relation::Le => "<=",
                Relation::Ge => ">=",
                Relation::Eq => "=",
            };
            let _ = writeln!(out, " {rel} {}", row.rhs);
        }
        let _ = writeln!(out, "Bounds");
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            let lo_s = if lo == S::neg_infinity() { "-inf".to_string() } else { lo.to_string() };
            let hi_s = if hi == S::infinity() { "+inf".to_string() } else { hi.to_string() };
            let _ = writeln!(out, " {lo_s} <= {} <= {hi_s}", name(j));
        }
        let _ = writeln!(out, "End");
        out
    }
}

fn sanitize(raw: &str, prefix: char, idx: usize) -> String {
    if raw.is_empty() {
        return format!("{prefix}{idx}");
    }
    raw.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect()
}

fn write_term<S: Scalar>(out: &mut String, v: S, name: &str) {
    if v < S::zero() {
        let _ = write!(out, " - {} {name}", -v);
    } else {
        let _ = write!(out, " + {v} {name}");
    }
}

#[derive(Debug, Clone)]
pub struct SimplexOptions {
    /// Hard cap on pivots; `None` scales with problem size.
    pub max_iterations: Option<usize>,
    /// Pivots between basis refactorizations.
    pub refactor_every: usize,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub bland_after: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_iterations: None,
            refactor_every: 60,
            bland_after: 25,
        }
    }
}

pub fn solve_lp<S: Scalar>(problem: &LpProblem<S>) -> Result<LpSolution<S>, SolverError> {
    solve_lp_with(problem, None, &SimplexOptions::default())
}

/// Solve starting from `warm` when it is a valid primal-feasible basis for
/// `problem`; otherwise falls back to a cold two-phase start.
pub fn solve_lp_with<S: Scalar>(
    problem: &LpProblem<S>,
    warm: Option<&Basis>,
    options: &SimplexOptions,
) -> Result<LpSolution<S>, SolverError> {
    problem.validate()?;
    let mut simplex = Simplex::new(problem, options);
    let warm_ok = match warm {
        Some(basis) => simplex.try_warm_start(basis)?,
        None => false,
    };
    if !warm_ok {
        simplex.cold_start()?;
        if simplex.n_art > 0 {
            simplex.set_phase_one_costs();
            match simplex.iterate()? {
                Outcome::Optimal => {}
                Outcome::Unbounded => {
                    return Err(SolverError::Inaccurate("phase one reported unbounded".into()))
                }
            }
            let infeasibility: S = (0..simplex.n_art)
                .map(|k| simplex.x[simplex.n + simplex.m + k])
                .sum();
            if infeasibility > simplex.infeasibility_tol() {
                return Ok(LpSolution::without_point(LpStatus::Infeasible, simplex.iterations));
            }
            simplex.retire_artificials()?;
        }
    }
    simplex.set_phase_two_costs();
    match simplex.iterate()? {
        Outcome::Optimal => simplex.extract(),
        Outcome::Unbounded => Ok(LpSolution::without_point(LpStatus::Unbounded, simplex.iterations)),
    }
}

enum Outcome {
    Optimal,
    Unbounded,
}

struct Simplex<'a, S> {
    problem: &'a LpProblem<S>,
    options: SimplexOptions,
    m: usize,
    n: usize,
    n_art: usize,
    /// Structural columns in sparse form.
    cols: Vec<Vec<(usize, S)>>,
    /// Artificial columns: `(row, sign)`.
    art: Vec<(usize, S)>,
    lower: Vec<S>,
    upper: Vec<S>,
    cost: Vec<S>,
    rhs: Vec<S>,
    x: Vec<S>,
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    /// `B⁻¹` column-major: entry `(i, j)` at `j * m + i`.
    binv: Vec<S>,
    since_refactor: usize,
    iterations: usize,
    max_iterations: usize,
    degenerate_streak: usize,
}

impl<'a, S: Scalar> Simplex<'a, S> {
    fn new(problem: &'a LpProblem<S>, options: &SimplexOptions) -> Self {
        let m = problem.num_rows();
        let n = problem.num_vars();
        let mut cols = vec![Vec::new(); n];
        for (i, row) in problem.rows.iter().enumerate() {
            for &(j, v) in &row.coeffs {
                if !v.is_zero() {
                    cols[j].push((i, v));
                }
            }
        }
        // merge duplicate entries within a row
        for col in cols.iter_mut() {
            col.sort_by_key(|e| e.0);
            col.dedup_by(|b, a| {
                if a.0 == b.0 {
                    a.1 += b.1;
                    true
                } else {
                    false
                }
            });
        }
        let mut lower = Vec::with_capacity(n + m);
        let mut upper = Vec::with_capacity(n + m);
        for &(lo, hi) in &problem.bounds {
            lower.push(lo);
            upper.push(hi);
        }
        for row in &problem.rows {
            let (lo, hi) = match row.relation {
                Relation::Le => (S::zero(), S::infinity()),
                Relation::Ge => (S::neg_infinity(), S::zero()),
                Relation::Eq => (S::zero(), S::zero()),
            };
            lower.push(lo);
            upper.push(hi);
        }
        let max_iterations = options
            .max_iterations
            .unwrap_or(1000 + 50 * (n + m));
        Self {
            problem,
            options: options.clone(),
            m,
            n,
            n_art: 0,
            cols,
            art: Vec::new(),
            cost: vec![S::zero(); n + m],
            rhs: problem.rows.iter().map(|r| r.rhs).collect(),
            x: vec![S::zero(); n + m],
            basis: Vec::new(),
            in_basis: vec![false; n + m],
            binv: Vec::new(),
            lower,
            upper,
            since_refactor: 0,
            iterations: 0,
            max_iterations,
            degenerate_streak: 0,
        }
    }

    fn total(&self) -> usize {
        self.n + self.m + self.n_art
    }

    fn rhs_scale(&self) -> S {
        self.rhs.iter().fold(S::one(), |acc, v| acc.max(v.abs()))
    }

    fn infeasibility_tol(&self) -> S {
        S::feas_tol() * S::of(10.0) * self.rhs_scale()
    }

    fn for_col(&self, j: usize, mut f: impl FnMut(usize, S)) {
        if j < self.n {
            for &(i, v) in &self.cols[j] {
                f(i, v);
            }
        } else if j < self.n + self.m {
            f(j - self.n, S::one());
        } else {
            let (i, s) = self.art[j - self.n - self.m];
            f(i, s);
        }
    }

    fn nonbasic_start_value(&self, j: usize) -> S {
        let (lo, hi) = (self.lower[j], self.upper[j]);
        if lo.is_finite() {
            lo
        } else if hi.is_finite() {
            hi
        } else {
            S::zero()
        }
    }

    /// Residual `b − Σ_{nonbasic} a_j x_j`.
    fn nonbasic_residual(&self) -> Vec<S> {
        let mut r = self.rhs.clone();
        for j in 0..self.total() {
            if self.in_basis[j] || self.x[j].is_zero() {
                continue;
            }
            let xj = self.x[j];
            self.for_col(j, |i, v| r[i] -= v * xj);
        }
        r
    }

    fn try_warm_start(&mut self, warm: &Basis) -> Result<bool, SolverError> {
        if warm.basic.len() != self.m {
            return Ok(false);
        }
        let mut basis = Vec::with_capacity(self.m);
        let mut seen = vec![false; self.n + self.m];
        for bv in &warm.basic {
            let j = match *bv {
                BasisVar::Column(j) if j < self.n => j,
                BasisVar::Slack(i) if i < self.m => self.n + i,
                _ => return Ok(false),
            };
            if seen[j] {
                return Ok(false);
            }
            seen[j] = true;
            basis.push(j);
        }
        for j in 0..self.n + self.m {
            self.x[j] = self.nonbasic_start_value(j);
        }
        for &j in &warm.at_upper {
            if j < self.n && self.upper[j].is_finite() {
                self.x[j] = self.upper[j];
            }
        }
        self.in_basis = seen;
        self.basis = basis;
        if self.refactor().is_err() {
            return Ok(false);
        }
        let tol = self.infeasibility_tol();
        for &j in &self.basis {
            if self.x[j] < self.lower[j] - tol || self.x[j] > self.upper[j] + tol {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn cold_start(&mut self) -> Result<(), SolverError> {
        let (n, m) = (self.n, self.m);
        self.x = vec![S::zero(); n + m];
        self.in_basis = vec![false; n + m];
        self.art.clear();
        self.n_art = 0;
        self.lower.truncate(n + m);
        self.upper.truncate(n + m);
        self.cost.truncate(n + m);
        for j in 0..n {
            self.x[j] = self.nonbasic_start_value(j);
        }
        let resid = self.nonbasic_residual();
        let tol = S::feas_tol();
        let mut basis = Vec::with_capacity(m);
        for (i, &r) in resid.iter().enumerate() {
            let s = n + i;
            if r >= self.lower[s] - tol && r <= self.upper[s] + tol {
                self.x[s] = r;
                basis.push(s);
                self.in_basis[s] = true;
            } else {
                let bound = if r < self.lower[s] { self.lower[s] } else { self.upper[s] };
                self.x[s] = bound;
                let gap = r - bound;
                let sign = if gap > S::zero() { S::one() } else { -S::one() };
                self.art.push((i, sign));
                self.lower.push(S::zero());
                self.upper.push(S::infinity());
                self.cost.push(S::zero());
                self.x.push(gap.abs());
                self.in_basis.push(true);
                basis.push(n + m + self.n_art);
                self.n_art += 1;
            }
        }
        self.basis = basis;
        // slack/artificial basis: B is diagonal with ±1 entries
        self.binv = vec![S::zero(); m * m];
        for (pos, &j) in self.basis.iter().enumerate() {
            let d = if j >= n + m { self.art[j - n - m].1 } else { S::one() };
            self.binv[pos * m + pos] = S::one() / d;
        }
        self.since_refactor = 0;
        Ok(())
    }

    fn set_phase_one_costs(&mut self) {
        for c in self.cost.iter_mut() {
            *c = S::zero();
        }
        for k in 0..self.n_art {
            self.cost[self.n + self.m + k] = S::one();
        }
    }

    fn set_phase_two_costs(&mut self) {
        let flip = self.problem.sense == Sense::Maximize;
        for c in self.cost.iter_mut() {
            *c = S::zero();
        }
        for j in 0..self.n {
            let c = self.problem.objective[j];
            self.cost[j] = if flip { -c } else { c };
        }
    }

    /// Pivot basic artificials out where possible and pin all artificials to 0.
    fn retire_artificials(&mut self) -> Result<(), SolverError> {
        let (n, m) = (self.n, self.m);
        for r in 0..m {
            let j_art = self.basis[r];
            if j_art < n + m {
                continue;
            }
            let rho: Vec<S> = (0..m).map(|c| self.binv[c * m + r]).collect();
            let mut best: Option<(usize, S)> = None;
            for j in 0..n + m {
                if self.in_basis[j] {
                    continue;
                }
                let mut v = S::zero();
                self.for_col(j, |i, a| v += rho[i] * a);
                if v.abs() > S::pivot_tol() * S::of(100.0)
                    && best.is_none_or(|(_, b)| v.abs() > b.abs())
                {
                    best = Some((j, v));
                }
            }
            if let Some((q, _)) = best {
                let alpha = self.ftran(q);
                self.x[j_art] = S::zero();
                self.pivot(r, q, &alpha);
            }
        }
        for k in 0..self.n_art {
            let j = n + m + k;
            self.lower[j] = S::zero();
            self.upper[j] = S::zero();
            if !self.in_basis[j] {
                self.x[j] = S::zero();
            }
        }
        self.refactor()
    }

    fn ftran(&self, q: usize) -> Vec<S> {
        let m = self.m;
        let mut alpha = vec![S::zero(); m];
        self.for_col(q, |r, a| {
            let col = &self.binv[r * m..(r + 1) * m];
            for (ai, &b) in alpha.iter_mut().zip(col) {
                *ai += a * b;
            }
        });
        alpha
    }

    fn duals(&self) -> Vec<S> {
        let m = self.m;
        let cb: Vec<S> = self.basis.iter().map(|&j| self.cost[j]).collect();
        (0..m)
            .map(|c| {
                self.binv[c * m..(c + 1) * m]
                    .iter()
                    .zip(&cb)
                    .map(|(&b, &cbi)| b * cbi)
                    .sum()
            })
            .collect()
    }

    fn reduced_cost(&self, j: usize, y: &[S]) -> S {
        let mut d = self.cost[j];
        self.for_col(j, |i, a| d -= y[i] * a);
        d
    }

    fn pivot(&mut self, r: usize, q: usize, alpha: &[S]) {
        let m = self.m;
        let pr = alpha[r];
        for c in 0..m {
            let col = &mut self.binv[c * m..(c + 1) * m];
            let piv = col[r] / pr;
            if piv.is_zero() {
                continue;
            }
            for (i, v) in col.iter_mut().enumerate() {
                if i == r {
                    *v = piv;
                } else {
                    *v -= alpha[i] * piv;
                }
            }
        }
        let leaving = self.basis[r];
        self.in_basis[leaving] = false;
        self.in_basis[q] = true;
        self.basis[r] = q;
        self.since_refactor += 1;
    }

    /// Rebuild `B⁻¹` by Gauss-Jordan elimination and recompute basic values.
    fn refactor(&mut self) -> Result<(), SolverError> {
        let m = self.m;
        self.since_refactor = 0;
        if m == 0 {
            self.binv.clear();
            return Ok(());
        }
        // augmented [B | I], row-major, width 2m
        let w = 2 * m;
        let mut a = vec![S::zero(); m * w];
        for (pos, &j) in self.basis.iter().enumerate() {
            self.for_col(j, |i, v| a[i * w + pos] = v);
        }
        for i in 0..m {
            a[i * w + m + i] = S::one();
        }
        for c in 0..m {
            let mut piv_row = c;
            let mut piv_val = a[c * w + c].abs();
            for r in c + 1..m {
                let v = a[r * w + c].abs();
                if v > piv_val {
                    piv_val = v;
                    piv_row = r;
                }
            }
            if piv_val <= S::pivot_tol() {
                return Err(SolverError::Singular);
            }
            if piv_row != c {
                for k in 0..w {
                    a.swap(c * w + k, piv_row * w + k);
                }
            }
            let p = a[c * w + c];
            for k in 0..w {
                a[c * w + k] /= p;
            }
            for r in 0..m {
                if r == c {
                    continue;
                }
                let f = a[r * w + c];
                if f.is_zero() {
                    continue;
                }
                for k in c..w {
                    let delta = f * a[c * w + k];
                    a[r * w + k] -= delta;
                }
            }
        }
        self.binv = vec![S::zero(); m * m];
        for i in 0..m {
            for j in 0..m {
                self.binv[j * m + i] = a[i * w + m + j];
            }
        }
        let resid = self.nonbasic_residual();
        for pos in 0..m {
            let mut v = S::zero();
            for (c, &rc) in resid.iter().enumerate() {
                v += self.binv[c * m + pos] * rc;
            }
            let j = self.basis[pos];
            self.x[j] = v;
        }
        Ok(())
    }

    fn iterate(&mut self) -> Result<Outcome, SolverError> {
        let cost_scale = self.cost.iter().fold(S::one(), |acc, c| acc.max(c.abs()));
        let dj_tol = S::opt_tol() * cost_scale;
        let tie_eps = S::epsilon() * S::of(1e3);
        loop {
            if self.iterations >= self.max_iterations {
                return Err(SolverError::IterationLimit(self.max_iterations));
            }
            if self.since_refactor >= self.options.refactor_every {
                self.refactor()?;
            }
            let y = self.duals();
            let bland = self.degenerate_streak >= self.options.bland_after;

            let mut entering: Option<(usize, S, S)> = None; // (col, dir, |d|)
            for j in 0..self.total() {
                if self.in_basis[j] || self.lower[j] == self.upper[j] {
                    continue;
                }
                let d = self.reduced_cost(j, &y);
                let at_lower = self.lower[j].is_finite() && self.x[j] <= self.lower[j];
                let at_upper = self.upper[j].is_finite() && self.x[j] >= self.upper[j];
                let dir = if d < -dj_tol && !at_upper {
                    S::one()
                } else if d > dj_tol && !at_lower {
                    -S::one()
                } else {
                    continue;
                };
                if bland {
                    entering = Some((j, dir, d.abs()));
                    break;
                }
                if entering.is_none_or(|(_, _, best)| d.abs() > best) {
                    entering = Some((j, dir, d.abs()));
                }
            }
            let Some((q, dir, _)) = entering else {
                return Ok(Outcome::Optimal);
            };

            let alpha = self.ftran(q);
            let span = self.upper[q] - self.lower[q];
            let mut theta = if span.is_finite() { span } else { S::infinity() };
            let mut leave: Option<(usize, S)> = None; // (pos, bound value)
            let mut leave_alpha = S::zero();
            for (pos, &a) in alpha.iter().enumerate() {
                let rate = a * dir;
                if rate.abs() <= S::pivot_tol() {
                    continue;
                }
                let j = self.basis[pos];
                let (limit, bound) = if rate > S::zero() {
                    if !self.lower[j].is_finite() {
                        continue;
                    }
                    ((self.x[j] - self.lower[j]) / rate, self.lower[j])
                } else {
                    if !self.upper[j].is_finite() {
                        continue;
                    }
                    ((self.upper[j] - self.x[j]) / -rate, self.upper[j])
                };
                let limit = limit.max(S::zero());
                let slack = tie_eps * theta.min(limit).abs().max(S::one());
                let take = if limit < theta - slack {
                    true
                } else if limit <= theta + slack {
                    match leave {
                        None => false,
                        Some((cur, _)) => {
                            if bland {
                                j < self.basis[cur]
                            } else {
                                a.abs() > leave_alpha.abs()
                            }
                        }
                    }
                } else {
                    false
                };
                if take {
                    theta = limit;
                    leave = Some((pos, bound));
                    leave_alpha = a;
                }
            }
            if theta == S::infinity() {
                return Ok(Outcome::Unbounded);
            }

            self.iterations += 1;
            if theta <= S::feas_tol() {
                self.degenerate_streak += 1;
            } else {
                self.degenerate_streak = 0;
            }
            let step = dir * theta;
            self.x[q] += step;
            for (pos, &a) in alpha.iter().enumerate() {
                if !a.is_zero() {
                    let j = self.basis[pos];
                    self.x[j] -= a * step;
                }
            }
            match leave {
                None => {
                    // bound flip
                    self.x[q] = if dir > S::zero() { self.upper[q] } else { self.lower[q] };
                }
                Some((pos, bound)) => {
                    let j = self.basis[pos];
                    self.x[j] = bound;
                    self.pivot(pos, q, &alpha);
                }
            }
        }
    }

    fn extract(&mut self) -> Result<LpSolution<S>, SolverError> {
        self.refactor()?;
        let problem = self.problem;
        let n = self.n;
        let mut primal: Vec<S> = self.x[..n].to_vec();
        // snap tiny bound violations
        for (j, v) in primal.iter_mut().enumerate() {
            let (lo, hi) = problem.bounds[j];
            let tol = S::feas_tol() * S::of(100.0) * (S::one() + v.abs());
            if *v < lo {
                if lo - *v > tol {
                    return Err(SolverError::Inaccurate(format!("variable {j} below its lower bound")));
                }
                *v = lo;
            } else if *v > hi {
                if *v - hi > tol {
                    return Err(SolverError::Inaccurate(format!("variable {j} above its upper bound")));
                }
                *v = hi;
            }
        }
        for (i, row) in problem.rows.iter().enumerate() {
            let act = problem.row_activity(i, &primal);
            let scale = row
                .coeffs
                .iter()
                .fold(S::one() + row.rhs.abs(), |acc, &(j, a)| acc.max((a * primal[j]).abs()));
            let tol = S::feas_tol() * S::of(100.0) * scale;
            let bad = match row.relation {
                Relation::Le => act - row.rhs > tol,
                Relation::Ge => row.rhs - act > tol,
                Relation::Eq => (act - row.rhs).abs() > tol,
            };
            if bad {
                return Err(SolverError::Inaccurate(format!(
                    "row {i} ({}) violated after solve",
                    row.name
                )));
            }
        }
        let y = self.duals();
        let flip = problem.sense == Sense::Maximize;
        let sgn = if flip { -S::one() } else { S::one() };
        let duals: Vec<S> = y.iter().map(|&v| v * sgn).collect();
        let reduced_costs: Vec<S> = (0..n).map(|j| self.reduced_cost(j, &y) * sgn).collect();
        let objective: S = problem
            .objective
            .iter()
            .zip(&primal)
            .map(|(&c, &x)| c * x)
            .sum();

        let mut basic = Vec::with_capacity(self.m);
        let mut has_art = false;
        for &j in &self.basis {
            if j < n {
                basic.push(BasisVar::Column(j));
            } else if j < n + self.m {
                basic.push(BasisVar::Slack(j - n));
            } else {
                has_art = true;
            }
        }
        let at_upper = (0..n)
            .filter(|&j| !self.in_basis[j] && self.upper[j].is_finite() && self.x[j] >= self.upper[j] && self.lower[j] < self.upper[j])
            .collect();
        Ok(LpSolution {
            status: LpStatus::Optimal,
            objective,
            primal,
            duals,
            reduced_costs,
            iterations: self.iterations,
            basis: if has_art { None } else { Some(Basis { basic, at_upper }) },
        })
    }
}
