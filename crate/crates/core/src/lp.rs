//! Dense bounded-variable primal simplex.
//!
//! Every constraint row gets a logical column (`a·x + s = b`, with
//! `s ∈ [0, ∞)` for `≤`, `(-∞, 0]` for `≥` and `[0, 0]` for `=`), so the
//! initial basis is all logicals. Rows whose logical cannot absorb the
//! starting residual receive an artificial column and phase one minimizes
//! the artificial sum.
//!
//! Pivoting is deterministic: Dantzig's largest-reduced-cost rule, falling
//! back to Bland's lowest-index rule after a run of degenerate pivots and
//! returning to Dantzig once progress resumes. The ratio test breaks ties
//! by the largest pivot magnitude (Dantzig phase) or the lowest basic column
//! index (Bland phase).

use serde::{Deserialize, Serialize};

use crate::error::LpError;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable<T> {
    pub name: String,
    /// `None` is −∞.
    pub lower: Option<T>,
    /// `None` is +∞.
    pub upper: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint<T> {
    pub name: String,
    pub coefficients: Vec<T>,
    pub relation: Relation,
    pub rhs: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram<T> {
    pub sense: Sense,
    pub objective: Vec<T>,
    pub variables: Vec<Variable<T>>,
    pub constraints: Vec<Constraint<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution<T> {
    pub status: LpStatus,
    pub values: Vec<T>,
    pub objective_value: T,
    pub iterations: usize,
    /// For infeasible programs: constraint rows still violated when phase one stopped.
    pub infeasible_rows: Vec<usize>,
}

impl<T: Scalar> LinearProgram<T> {
    pub fn new(sense: Sense) -> Self {
        Self {
            sense,
            objective: Vec::new(),
            variables: Vec::new(),
            constraints: Vec::new(),
        }
    }

    pub fn variable_count(&self) -> usize {
        self.variables.len()
    }

    /// Adds a variable with zero objective coefficient. Existing constraint
    /// rows are padded with a zero.
    pub fn add_variable(
        &mut self,
        name: impl Into<String>,
        lower: Option<T>,
        upper: Option<T>,
    ) -> usize {
        self.variables.push(Variable {
            name: name.into(),
            lower,
            upper,
        });
        self.objective.push(T::zero());
        for c in &mut self.constraints {
            c.coefficients.push(T::zero());
        }
        self.variables.len() - 1
    }

    pub fn set_objective(&mut self, var: usize, coefficient: T) {
        self.objective[var] = coefficient;
    }

    /// Adds a constraint given as `(variable, coefficient)` terms; repeated
    /// variables accumulate.
    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: impl IntoIterator<Item = (usize, T)>,
        relation: Relation,
        rhs: T,
    ) -> usize {
        let mut coefficients = vec![T::zero(); self.variables.len()];
        for (j, a) in terms {
            coefficients[j] = coefficients[j].clone() + a;
        }
        self.constraints.push(Constraint {
            name: name.into(),
            coefficients,
            relation,
            rhs,
        });
        self.constraints.len() - 1
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.variables.len();
        if self.objective.len() != n {
            return Err(LpError::Malformed(format!(
                "objective has {} coefficients for {n} variables",
                self.objective.len()
            )));
        }
        for c in &self.constraints {
            if c.coefficients.len() != n {
                return Err(LpError::Malformed(format!(
                    "constraint {} has {} coefficients for {n} variables",
                    c.name,
                    c.coefficients.len()
                )));
            }
        }
        for v in &self.variables {
            if let (Some(l), Some(u)) = (&v.lower, &v.upper) {
                if l > u {
                    return Err(LpError::Malformed(format!(
                        "variable {} has lower bound above upper bound",
                        v.name
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn evaluate_objective(&self, values: &[T]) -> T {
        crate::linalg::dot(&self.objective, values)
    }

    /// Largest violation of any bound or constraint at `values`.
    pub fn max_violation(&self, values: &[T]) -> T {
        let mut worst = T::zero();
        for (v, x) in self.variables.iter().zip(values) {
            if let Some(l) = &v.lower {
                worst = T::max_of(worst, l.clone() - x.clone());
            }
            if let Some(u) = &v.upper {
                worst = T::max_of(worst, x.clone() - u.clone());
            }
        }
        for c in &self.constraints {
            let lhs = crate::linalg::dot(&c.coefficients, values);
            let gap = lhs - c.rhs.clone();
            let violation = match c.relation {
                Relation::Le => gap,
                Relation::Ge => -gap,
                Relation::Eq => gap.abs(),
            };
            worst = T::max_of(worst, violation);
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Rule {
    Dantzig,
    Bland,
}

const DEGENERATE_RUN: usize = 60;

struct Tableau<T> {
    m: usize,
    /// Structural + logical columns; artificials follow when present.
    width: usize,
    n_struct: usize,
    /// Original rows [A | I | artificial], kept to refresh basic values.
    original: Vec<Vec<(usize, T)>>,
    rhs: Vec<T>,
    rows: Vec<Vec<T>>,
    reduced: Vec<T>,
    head: Vec<usize>,
    basic_row: Vec<Option<usize>>,
    lower: Vec<Option<T>>,
    upper: Vec<Option<T>>,
    value: Vec<T>,
    banned: Vec<bool>,
    iterations: usize,
    limit: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
}

impl<T: Scalar> Tableau<T> {
    fn build(lp: &LinearProgram<T>) -> Self {
        let n = lp.variables.len();
        let m = lp.constraints.len();
        let mut lower: Vec<Option<T>> = lp.variables.iter().map(|v| v.lower.clone()).collect();
        let mut upper: Vec<Option<T>> = lp.variables.iter().map(|v| v.upper.clone()).collect();
        let mut value: Vec<T> = lp
            .variables
            .iter()
            .map(|v| match (&v.lower, &v.upper) {
                (Some(l), _) => l.clone(),
                (None, Some(u)) => u.clone(),
                (None, None) => T::zero(),
            })
            .collect();
        for c in &lp.constraints {
            let (l, u) = match c.relation {
                Relation::Le => (Some(T::zero()), None),
                Relation::Ge => (None, Some(T::zero())),
                Relation::Eq => (Some(T::zero()), Some(T::zero())),
            };
            lower.push(l);
            upper.push(u);
            value.push(T::zero());
        }

        let mut original = Vec::with_capacity(m);
        let mut head = Vec::with_capacity(m);
        let mut artificial_rows = Vec::new();
        let mut row_sign = Vec::with_capacity(m);
        for (i, c) in lp.constraints.iter().enumerate() {
            let mut sparse: Vec<(usize, T)> = c
                .coefficients
                .iter()
                .enumerate()
                .filter(|(_, a)| !a.is_zero())
                .map(|(j, a)| (j, a.clone()))
                .collect();
            sparse.push((n + i, T::one()));
            let activity = sparse
                .iter()
                .filter(|(j, _)| *j < n)
                .fold(T::zero(), |acc, (j, a)| acc + a.clone() * value[*j].clone());
            let residual = c.rhs.clone() - activity;
            let fits = lower[n + i].as_ref().is_none_or(|l| residual >= *l)
                && upper[n + i].as_ref().is_none_or(|u| residual <= *u);
            if fits {
                value[n + i] = residual;
                head.push(n + i);
                row_sign.push(T::one());
            } else {
                let sign = if residual > T::zero() {
                    T::one()
                } else {
                    -T::one()
                };
                artificial_rows.push((i, sign.clone(), residual.abs()));
                row_sign.push(sign);
                head.push(usize::MAX);
            }
            original.push(sparse);
        }

        let width = n + m + artificial_rows.len();
        for (a, (i, sign, magnitude)) in artificial_rows.iter().enumerate() {
            let col = n + m + a;
            original[*i].push((col, sign.clone()));
            lower.push(Some(T::zero()));
            upper.push(None);
            value.push(magnitude.clone());
            head[*i] = col;
        }

        let mut rows = vec![vec![T::zero(); width]; m];
        for (i, sparse) in original.iter().enumerate() {
            for (j, a) in sparse {
                rows[i][*j] = row_sign[i].clone() * a.clone();
            }
        }
        let mut basic_row = vec![None; width];
        for (i, &h) in head.iter().enumerate() {
            basic_row[h] = Some(i);
        }
        let rhs = lp.constraints.iter().map(|c| c.rhs.clone()).collect();
        Self {
            m,
            width,
            n_struct: n,
            original,
            rhs,
            rows,
            reduced: vec![T::zero(); width],
            head,
            basic_row,
            lower,
            upper,
            value,
            banned: vec![false; width],
            iterations: 0,
            limit: 50_000 + 50 * (n + m),
        }
    }

    fn artificial_start(&self) -> usize {
        self.n_struct + self.m
    }

    fn set_costs(&mut self, costs: &[T]) {
        for j in 0..self.width {
            let mut d = costs.get(j).cloned().unwrap_or_else(T::zero);
            for i in 0..self.m {
                let a = &self.rows[i][j];
                if !a.is_zero() {
                    let cb = costs.get(self.head[i]).cloned().unwrap_or_else(T::zero);
                    d = d - cb * a.clone();
                }
            }
            self.reduced[j] = d;
        }
        for &h in &self.head {
            if h < self.width {
                self.reduced[h] = T::zero();
            }
        }
    }

    fn can_increase(&self, j: usize) -> bool {
        self.upper[j].as_ref().is_none_or(|u| self.value[j] < *u)
    }

    fn can_decrease(&self, j: usize) -> bool {
        self.lower[j].as_ref().is_none_or(|l| self.value[j] > *l)
    }

    /// Entering column and direction (+1 increase, −1 decrease).
    fn price(&self, rule: Rule) -> Option<(usize, bool)> {
        let tol = T::feasibility_tolerance();
        let mut best: Option<(usize, bool, T)> = None;
        for j in 0..self.width {
            if self.basic_row[j].is_some() || self.banned[j] {
                continue;
            }
            let d = &self.reduced[j];
            let candidate = if *d < -tol.clone() && self.can_increase(j) {
                Some(true)
            } else if *d > tol && self.can_decrease(j) {
                Some(false)
            } else {
                None
            };
            let Some(up) = candidate else { continue };
            match rule {
                Rule::Bland => return Some((j, up)),
                Rule::Dantzig => {
                    let score = d.abs();
                    if best.as_ref().is_none_or(|(_, _, s)| score > *s) {
                        best = Some((j, up, score));
                    }
                }
            }
        }
        best.map(|(j, up, _)| (j, up))
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let alpha = self.rows[r][q].clone();
        for v in self.rows[r].iter_mut() {
            if !v.is_zero() {
                *v = v.clone() / alpha.clone();
            }
        }
        let nz: Vec<usize> = (0..self.width)
            .filter(|&j| !self.rows[r][j].is_zero())
            .collect();
        let pivot_row = std::mem::take(&mut self.rows[r]);
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let factor = row[q].clone();
            if factor.is_zero() {
                continue;
            }
            for &j in &nz {
                row[j] = row[j].clone() - factor.clone() * pivot_row[j].clone();
            }
            row[q] = T::zero();
        }
        let factor = self.reduced[q].clone();
        if !factor.is_zero() {
            for &j in &nz {
                self.reduced[j] = self.reduced[j].clone() - factor.clone() * pivot_row[j].clone();
            }
            self.reduced[q] = T::zero();
        }
        self.rows[r] = pivot_row;
        let leaving = self.head[r];
        self.basic_row[leaving] = None;
        self.basic_row[q] = Some(r);
        self.head[r] = q;
    }

    fn run(&mut self) -> Result<Outcome, LpError> {
        let mut rule = Rule::Dantzig;
        let mut degenerate = 0usize;
        let tol = T::feasibility_tolerance();
        let ptol = T::pivot_tolerance();
        loop {
            let Some((q, up)) = self.price(rule) else {
                return Ok(Outcome::Optimal);
            };
            self.iterations += 1;
            if self.iterations > self.limit {
                return Err(LpError::IterationLimit(self.limit));
            }

            // Step length limited by the entering variable's own range.
            let mut step: Option<T> = match (&self.lower[q], &self.upper[q]) {
                (Some(l), Some(u)) => Some(u.clone() - l.clone()),
                _ => None,
            };
            let mut leave: Option<(usize, T, bool)> = None;
            for i in 0..self.m {
                let alpha = &self.rows[i][q];
                if alpha.abs() <= ptol {
                    continue;
                }
                let b = self.head[i];
                // Rate of change of x_b per unit step of the entering variable.
                let rate = if up { -alpha.clone() } else { alpha.clone() };
                let (room, to_upper) = if rate < T::zero() {
                    match &self.lower[b] {
                        Some(l) => (self.value[b].clone() - l.clone(), false),
                        None => continue,
                    }
                } else {
                    match &self.upper[b] {
                        Some(u) => (u.clone() - self.value[b].clone(), true),
                        None => continue,
                    }
                };
                let ratio = T::max_of(room, T::zero()) / rate.abs();
                let better = match (&step, &leave) {
                    (None, _) => true,
                    (Some(s), None) => ratio < *s,
                    (Some(s), Some((r_prev, _, _))) => {
                        if ratio < s.clone() - tol.clone() {
                            true
                        } else if ratio <= s.clone() + tol.clone() {
                            match rule {
                                Rule::Dantzig => alpha.abs() > self.rows[*r_prev][q].abs(),
                                Rule::Bland => b < self.head[*r_prev],
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    step = Some(match &step {
                        Some(s) if ratio > *s => s.clone(),
                        _ => ratio.clone(),
                    });
                    leave = Some((i, ratio, to_upper));
                }
            }

            let Some(step_len) = step else {
                return Ok(Outcome::Unbounded);
            };
            let step_len = match &leave {
                Some((_, ratio, _)) => ratio.clone(),
                None => step_len,
            };
            let signed = if up {
                step_len.clone()
            } else {
                -step_len.clone()
            };
            if !step_len.is_zero() {
                for i in 0..self.m {
                    let alpha = &self.rows[i][q];
                    if !alpha.is_zero() {
                        let b = self.head[i];
                        self.value[b] = self.value[b].clone() - alpha.clone() * signed.clone();
                    }
                }
                self.value[q] = self.value[q].clone() + signed;
            }

            if step_len <= tol {
                degenerate += 1;
                if degenerate >= DEGENERATE_RUN {
                    rule = Rule::Bland;
                }
            } else {
                degenerate = 0;
                rule = Rule::Dantzig;
            }

            match leave {
                None => {
                    // Bound flip: the entering variable crosses its whole range.
                    self.value[q] = if up {
                        self.upper[q].clone().expect("finite range")
                    } else {
                        self.lower[q].clone().expect("finite range")
                    };
                }
                Some((r, _, to_upper)) => {
                    let b = self.head[r];
                    self.value[b] = if to_upper {
                        self.upper[b].clone().expect("bounded above")
                    } else {
                        self.lower[b].clone().expect("bounded below")
                    };
                    self.pivot(r, q);
                }
            }
        }
    }

    /// Recomputes basic values from the nonbasic ones through B⁻¹, which
    /// sits in the logical columns of the tableau.
    fn refresh_basic_values(&mut self) {
        let mut residual = self.rhs.clone();
        for (i, sparse) in self.original.iter().enumerate() {
            for (j, a) in sparse {
                if self.basic_row[*j].is_none() {
                    residual[i] = residual[i].clone() - a.clone() * self.value[*j].clone();
                }
            }
        }
        let n = self.n_struct;
        for r in 0..self.m {
            let mut v = T::zero();
            for (i, res) in residual.iter().enumerate() {
                let binv = &self.rows[r][n + i];
                if !binv.is_zero() {
                    v = v + binv.clone() * res.clone();
                }
            }
            let h = self.head[r];
            self.value[h] = v;
        }
    }

    /// Removes artificial columns after a successful phase one.
    fn drop_artificials(&mut self) -> Result<(), LpError> {
        let start = self.artificial_start();
        if self.width == start {
            return Ok(());
        }
        let ptol = T::pivot_tolerance();
        for r in 0..self.m {
            if self.head[r] < start {
                continue;
            }
            let replacement =
                (0..start).find(|&j| self.basic_row[j].is_none() && self.rows[r][j].abs() > ptol);
            if let Some(q) = replacement {
                self.pivot(r, q);
            }
            // Otherwise the row is redundant and the artificial stays basic at zero.
        }
        for j in start..self.width {
            self.banned[j] = true;
            self.lower[j] = Some(T::zero());
            self.upper[j] = Some(T::zero());
        }
        let still_basic = (start..self.width).any(|j| self.basic_row[j].is_some());
        if !still_basic {
            for row in &mut self.rows {
                row.truncate(start);
            }
            self.reduced.truncate(start);
            for sparse in &mut self.original {
                sparse.retain(|(j, _)| *j < start);
            }
            self.width = start;
        }
        Ok(())
    }
}

/// Solves a linear program.
pub fn solve_lp<T: Scalar>(lp: &LinearProgram<T>) -> Result<LpSolution<T>, LpError> {
    lp.validate()?;
    let n = lp.variables.len();
    let mut t = Tableau::build(lp);
    let art_start = t.artificial_start();

    if t.width > art_start {
        let costs: Vec<T> = (0..t.width)
            .map(|j| if j >= art_start { T::one() } else { T::zero() })
            .collect();
        t.set_costs(&costs);
        match t.run()? {
            Outcome::Optimal => {}
            Outcome::Unbounded => {
                return Err(LpError::Breakdown("phase one reported unbounded".into()));
            }
        }
        t.refresh_basic_values();
        let infeasibility = (art_start..t.width).fold(T::zero(), |acc, j| acc + t.value[j].clone());
        let scale = lp
            .constraints
            .iter()
            .fold(T::one(), |acc, c| T::max_of(acc, c.rhs.abs()));
        if infeasibility > T::feasibility_tolerance() * scale {
            let infeasible_rows = (0..t.m)
                .filter(|&r| {
                    t.head[r] >= art_start && t.value[t.head[r]] > T::feasibility_tolerance()
                })
                .collect();
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                values: t.value[..n].to_vec(),
                objective_value: T::zero(),
                iterations: t.iterations,
                infeasible_rows,
            });
        }
        t.drop_artificials()?;
    }

    let sign = match lp.sense {
        Sense::Minimize => T::one(),
        Sense::Maximize => -T::one(),
    };
    let costs: Vec<T> = lp
        .objective
        .iter()
        .map(|c| sign.clone() * c.clone())
        .collect();
    t.set_costs(&costs);
    let outcome = t.run()?;
    t.refresh_basic_values();
    let values = t.value[..n].to_vec();
    let status = match outcome {
        Outcome::Optimal => LpStatus::Optimal,
        Outcome::Unbounded => LpStatus::Unbounded,
    };
    Ok(LpSolution {
        status,
        objective_value: lp.evaluate_objective(&values),
        values,
        iterations: t.iterations,
        infeasible_rows: Vec::new(),
    })
}
