//! Dense two-phase primal simplex.
//!
//! Sized for the tiny programs produced by the MIP layer: a full tableau,
//! Bland's pivoting rule and no presolve. Generic over [`Scalar`], so it runs
//! exactly on rationals. Equality rows are split into a `≤` and a `≥` row, and
//! finite upper bounds become explicit rows after shifting every variable to a
//! zero lower bound.

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint<T> {
    pub coeffs: Vec<T>,
    pub relation: Relation,
    pub rhs: T,
}

/// Variable bounds `lo ≤ x ≤ hi`; `hi = None` means unbounded above.
#[derive(Debug, Clone, PartialEq)]
pub struct Bound<T> {
    pub lo: T,
    pub hi: Option<T>,
}

impl<T: Scalar> Bound<T> {
    pub fn non_negative() -> Self {
        Self { lo: T::zero(), hi: None }
    }

    pub fn between(lo: T, hi: T) -> Self {
        Self { lo, hi: Some(hi) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem<T> {
    pub sense: Sense,
    pub objective: Vec<T>,
    pub constraints: Vec<Constraint<T>>,
    pub bounds: Vec<Bound<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution<T> {
    pub status: LpStatus,
    /// Empty unless `status` is `Optimal`.
    pub values: Vec<T>,
    pub objective_value: T,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("{what}: expected {expected} entries, found {found}")]
    DimensionMismatch {
        what: String,
        expected: usize,
        found: usize,
    },
    #[error("variable {0}: lower bound exceeds upper bound")]
    InvalidBounds(usize),
    #[error("simplex exceeded {0} pivots")]
    IterationLimit(usize),
}

impl<T: Scalar> LpProblem<T> {
    /// Problem over `n` non-negative variables with a zero objective.
    pub fn new(sense: Sense, n: usize) -> Self {
        Self {
            sense,
            objective: vec![T::zero(); n],
            constraints: Vec::new(),
            bounds: vec![Bound::non_negative(); n],
        }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_constraint(&mut self, coeffs: Vec<T>, relation: Relation, rhs: T) {
        self.constraints.push(Constraint { coeffs, relation, rhs });
    }

    /// Adds a constraint given as `(index, coefficient)` pairs.
    pub fn add_sparse(&mut self, terms: &[(usize, T)], relation: Relation, rhs: T) {
        let mut coeffs = vec![T::zero(); self.n_vars()];
        for (j, c) in terms {
            coeffs[*j] = coeffs[*j].clone() + c.clone();
        }
        self.add_constraint(coeffs, relation, rhs);
    }

    fn check(&self) -> Result<(), LpError> {
        let n = self.n_vars();
        if self.bounds.len() != n {
            return Err(LpError::DimensionMismatch {
                what: "bounds".into(),
                expected: n,
                found: self.bounds.len(),
            });
        }
        for (k, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(LpError::DimensionMismatch {
                    what: format!("constraint {k}"),
                    expected: n,
                    found: c.coeffs.len(),
                });
            }
        }
        for (j, b) in self.bounds.iter().enumerate() {
            if let Some(hi) = &b.hi {
                if b.lo > *hi {
                    return Err(LpError::InvalidBounds(j));
                }
            }
        }
        Ok(())
    }

    /// Objective value of `x` in the problem's own sense.
    pub fn evaluate(&self, x: &[T]) -> T {
        dot(&self.objective, x)
    }

    /// Largest violation of any constraint or bound by `x`.
    pub fn max_violation(&self, x: &[T]) -> T {
        let mut worst = T::zero();
        for c in &self.constraints {
            let lhs = dot(&c.coeffs, x);
            let v = match c.relation {
                Relation::Le => lhs - c.rhs.clone(),
                Relation::Ge => c.rhs.clone() - lhs,
                Relation::Eq => (lhs - c.rhs.clone()).abs(),
            };
            worst = worst.max_of(&v);
        }
        for (xj, b) in x.iter().zip(&self.bounds) {
            worst = worst.max_of(&(b.lo.clone() - xj.clone()));
            if let Some(hi) = &b.hi {
                worst = worst.max_of(&(xj.clone() - hi.clone()));
            }
        }
        worst
    }
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

struct Tableau<T> {
    /// Each row holds the column coefficients followed by the right-hand side.
    rows: Vec<Vec<T>>,
    /// Reduced costs followed by minus the objective value.
    cost: Vec<T>,
    basis: Vec<usize>,
    eps: T,
    snap: T,
    pivots: usize,
    max_pivots: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
}

impl<T: Scalar> Tableau<T> {
    fn width(&self) -> usize {
        self.cost.len() - 1
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width();
        let p = self.rows[r][c].clone();
        for k in 0..=w {
            let v = self.rows[r][k].clone() / p.clone();
            self.rows[r][k] = v;
        }
        self.rows[r][c] = T::one();
        let pivot_row = self.rows[r].clone();
        let snap = self.snap.clone();
        let eliminate = |row: &mut Vec<T>| {
            let f = row[c].clone();
            if f.is_zero() {
                return;
            }
            for k in 0..=w {
                if pivot_row[k].is_zero() {
                    continue;
                }
                let v = row[k].clone() - f.clone() * pivot_row[k].clone();
                row[k] = if v.abs() <= snap { T::zero() } else { v };
            }
            row[c] = T::zero();
        };
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                eliminate(row);
            }
        }
        eliminate(&mut self.cost);
        self.basis[r] = c;
    }

    /// Sets the cost row to `c` and prices out the current basis.
    fn set_costs(&mut self, c: &[T]) {
        let w = self.width();
        let mut cost = c.to_vec();
        cost.push(T::zero());
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost[b].clone();
            if cb.is_zero() {
                continue;
            }
            for k in 0..=w {
                cost[k] = cost[k].clone() - cb.clone() * self.rows[i][k].clone();
            }
        }
        self.cost = cost;
    }

    /// Minimizes the current cost row with Bland's rule over columns allowed
    /// by `eligible`.
    fn optimize(&mut self, eligible: impl Fn(usize) -> bool) -> Result<Outcome, LpError> {
        let w = self.width();
        loop {
            let entering = (0..w).find(|&j| eligible(j) && self.cost[j] < -self.eps.clone());
            let Some(c) = entering else {
                return Ok(Outcome::Optimal);
            };
            let mut best: Option<(usize, T)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[c] <= self.eps {
                    continue;
                }
                let ratio = row[w].clone() / row[c].clone();
                let better = match &best {
                    None => true,
                    Some((bi, br)) => {
                        ratio < br.clone() - self.eps.clone()
                            || (ratio <= br.clone() + self.eps.clone() && self.basis[i] < self.basis[*bi])
                    }
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            let Some((r, _)) = best else {
                return Ok(Outcome::Unbounded);
            };
            self.pivots += 1;
            if self.pivots > self.max_pivots {
                return Err(LpError::IterationLimit(self.max_pivots));
            }
            self.pivot(r, c);
        }
    }
}

/// Solves `p` with the two-phase simplex method.
pub fn solve_lp<T: Scalar>(p: &LpProblem<T>) -> Result<LpSolution<T>, LpError> {
    p.check()?;
    let n = p.n_vars();

    // Rows over shifted variables x' = x − lo, as (coeffs, is_le, rhs).
    let mut rows: Vec<(Vec<T>, bool, T)> = Vec::new();
    let shift = |coeffs: &[T], rhs: &T| -> T {
        let mut r = rhs.clone();
        for (a, b) in coeffs.iter().zip(&p.bounds) {
            r = r - a.clone() * b.lo.clone();
        }
        r
    };
    for c in &p.constraints {
        let rhs = shift(&c.coeffs, &c.rhs);
        match c.relation {
            Relation::Le => rows.push((c.coeffs.clone(), true, rhs)),
            Relation::Ge => rows.push((c.coeffs.clone(), false, rhs)),
            Relation::Eq => {
                rows.push((c.coeffs.clone(), true, rhs.clone()));
                rows.push((c.coeffs.clone(), false, rhs));
            }
        }
    }
    for (j, b) in p.bounds.iter().enumerate() {
        if let Some(hi) = &b.hi {
            let mut coeffs = vec![T::zero(); n];
            coeffs[j] = T::one();
            rows.push((coeffs, true, hi.clone() - b.lo.clone()));
        }
    }
    // Normalize to non-negative right-hand sides.
    for (coeffs, le, rhs) in rows.iter_mut() {
        if *rhs < T::zero() {
            for a in coeffs.iter_mut() {
                *a = -a.clone();
            }
            *rhs = -rhs.clone();
            *le = !*le;
        }
    }

    let m = rows.len();
    let n_slack = m;
    let n_art = rows.iter().filter(|r| !r.1).count();
    let width = n + n_slack + n_art;
    let mut table = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut art = n + n_slack;
    for (i, (coeffs, le, rhs)) in rows.into_iter().enumerate() {
        let mut row = coeffs;
        row.resize(width + 1, T::zero());
        if le {
            row[n + i] = T::one();
            basis.push(n + i);
        } else {
            row[n + i] = -T::one();
            row[art] = T::one();
            basis.push(art);
            art += 1;
        }
        row[width] = rhs;
        table.push(row);
    }

    let eps = T::tolerance();
    let mut tab = Tableau {
        rows: table,
        cost: vec![T::zero(); width + 1],
        basis,
        snap: eps.clone() * T::from_f64_lossy(1e-3),
        eps,
        pivots: 0,
        max_pivots: 50_000.max(50 * (width + m)),
    };
    let first_art = n + n_slack;

    if n_art > 0 {
        let mut c1 = vec![T::zero(); width];
        for c in c1.iter_mut().skip(first_art) {
            *c = T::one();
        }
        tab.set_costs(&c1);
        tab.optimize(|_| true)?;
        let infeasibility = -tab.cost[width].clone();
        let feas_tol = T::tolerance() * T::from_f64_lossy(1e2);
        if infeasibility > feas_tol {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                values: Vec::new(),
                objective_value: T::zero(),
            });
        }
        // Drive remaining artificials out of the basis where possible.
        for r in 0..m {
            if tab.basis[r] < first_art {
                continue;
            }
            let col = (0..first_art).find(|&j| tab.rows[r][j].abs() > tab.eps);
            if let Some(c) = col {
                tab.pivot(r, c);
            }
        }
    }

    let mut c2 = vec![T::zero(); width];
    for (j, c) in p.objective.iter().enumerate() {
        c2[j] = match p.sense {
            Sense::Minimize => c.clone(),
            Sense::Maximize => -c.clone(),
        };
    }
    tab.set_costs(&c2);
    if let Outcome::Unbounded = tab.optimize(|j| j < first_art)? {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            values: Vec::new(),
            objective_value: T::zero(),
        });
    }

    let mut values: Vec<T> = p.bounds.iter().map(|b| b.lo.clone()).collect();
    for (r, &b) in tab.basis.iter().enumerate() {
        if b < n {
            values[b] = values[b].clone() + tab.rows[r][width].clone();
        }
    }
    let objective_value = p.evaluate(&values);
    Ok(LpSolution { status: LpStatus::Optimal, values, objective_value })
}
