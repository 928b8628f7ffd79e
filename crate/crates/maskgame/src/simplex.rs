//! Exact two-phase simplex over rationals.
//!
//! Dense tableau, Bland's rule for both entering and leaving choices, so
//! the method terminates on degenerate systems without perturbation. Only
//! equality-constrained problems with non-negative variables are needed
//! here (`min c.x  s.t.  A x = b, x >= 0`).

use num_traits::{One, Signed, Zero};

use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum LpResult {
    Infeasible,
    Unbounded,
    Optimal { objective: Rational, solution: Vec<Rational> },
}

struct Tableau {
    rows: Vec<Vec<Rational>>, // m x (n + 1), last column is the rhs
    cost: Vec<Rational>,      // reduced costs, last cell is -objective
    basis: Vec<usize>,
    n: usize,
}

impl Tableau {
    fn rhs(&self, r: usize) -> &Rational {
        &self.rows[r][self.n]
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let piv = self.rows[r][j].clone();
        debug_assert!(!piv.is_zero());
        for cell in self.rows[r].iter_mut() {
            *cell /= piv.clone();
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[j].is_zero() {
                continue;
            }
            let factor = row[j].clone();
            for (cell, p) in row.iter_mut().zip(&pivot_row) {
                *cell -= factor.clone() * p.clone();
            }
        }
        if !self.cost[j].is_zero() {
            let factor = self.cost[j].clone();
            for (cell, p) in self.cost.iter_mut().zip(&pivot_row) {
                *cell -= factor.clone() * p.clone();
            }
        }
        self.basis[r] = j;
    }

    /// Runs the simplex loop with Bland's rule.
    fn run(&mut self) -> Result<(), ()> {
        loop {
            let entering = (0..self.n).find(|&j| self.cost[j].is_negative());
            let Some(j) = entering else {
                return Ok(());
            };
            let mut leaving: Option<(usize, Rational)> = None;
            for r in 0..self.rows.len() {
                if !self.rows[r][j].is_positive() {
                    continue;
                }
                let ratio = self.rhs(r).clone() / self.rows[r][j].clone();
                let better = match &leaving {
                    None => true,
                    Some((lr, lratio)) => {
                        ratio < *lratio || (ratio == *lratio && self.basis[r] < self.basis[*lr])
                    }
                };
                if better {
                    leaving = Some((r, ratio));
                }
            }
            match leaving {
                Some((r, _)) => self.pivot(r, j),
                None => return Err(()), // unbounded
            }
        }
    }

    fn solution(&self, vars: usize) -> Vec<Rational> {
        let mut x = vec![Rational::zero(); vars];
        for (r, &b) in self.basis.iter().enumerate() {
            if b < vars {
                x[b] = self.rhs(r).clone();
            }
        }
        x
    }

    fn objective(&self) -> Rational {
        -self.cost[self.n].clone()
    }
}

/// Phase 1: returns a tableau holding a basic feasible solution of
/// `A x = b, x >= 0`, or `None` if the system is infeasible. Redundant
/// rows are dropped.
fn phase_one(a: &[Vec<Rational>], b: &[Rational]) -> Option<Tableau> {
    let m = a.len();
    let n = a.first().map(|r| r.len()).unwrap_or(0);
    let total = n + m;

    let mut rows = Vec::with_capacity(m);
    for (i, arow) in a.iter().enumerate() {
        assert_eq!(arow.len(), n, "ragged constraint matrix");
        let flip = b[i].is_negative();
        let mut row = Vec::with_capacity(total + 1);
        for cell in arow {
            row.push(if flip { -cell.clone() } else { cell.clone() });
        }
        for k in 0..m {
            row.push(if k == i { Rational::one() } else { Rational::zero() });
        }
        row.push(if flip { -b[i].clone() } else { b[i].clone() });
        rows.push(row);
    }

    // Reduced costs for min(sum of artificials) with the artificial basis;
    // the last cell holds -objective, and the objective starts at sum(b).
    let mut cost = vec![Rational::zero(); total + 1];
    for j in 0..n {
        let mut s = Rational::zero();
        for row in &rows {
            s += row[j].clone();
        }
        cost[j] = -s;
    }
    let mut rhs_sum = Rational::zero();
    for row in &rows {
        rhs_sum += row[total].clone();
    }
    cost[total] = -rhs_sum;

    let mut t = Tableau {
        rows,
        cost,
        basis: (n..total).collect(),
        n: total,
    };
    t.run().expect("phase-1 objective is bounded below by 0");
    if !t.objective().is_zero() {
        return None;
    }

    // Drive remaining artificials out of the basis; drop redundant rows.
    let mut r = 0;
    while r < t.rows.len() {
        if t.basis[r] >= n {
            let col = (0..n).find(|&j| !t.rows[r][j].is_zero());
            match col {
                Some(j) => t.pivot(r, j),
                None => {
                    debug_assert!(t.rhs(r).is_zero(), "redundant row with nonzero rhs");
                    t.rows.remove(r);
                    t.basis.remove(r);
                    continue;
                }
            }
        }
        r += 1;
    }

    // Truncate the artificial columns.
    for row in &mut t.rows {
        row[n] = row[total].clone();
        row.truncate(n + 1);
    }
    t.cost.truncate(n + 1);
    t.n = n;
    Some(t)
}

/// A basic feasible solution of `A x = b, x >= 0`, if one exists.
pub(crate) fn feasible_point(a: &[Vec<Rational>], b: &[Rational]) -> Option<Vec<Rational>> {
    let n = a.first().map(|r| r.len()).unwrap_or(0);
    phase_one(a, b).map(|t| t.solution(n))
}

/// Minimizes `c.x` over `A x = b, x >= 0`.
pub(crate) fn minimize(a: &[Vec<Rational>], b: &[Rational], c: &[Rational]) -> LpResult {
    let n = a.first().map(|r| r.len()).unwrap_or(0);
    assert_eq!(c.len(), n);
    let Some(mut t) = phase_one(a, b) else {
        return LpResult::Infeasible;
    };

    // Reduced costs for c with respect to the phase-1 basis.
    let mut cost = vec![Rational::zero(); n + 1];
    for j in 0..=n {
        let mut z = Rational::zero();
        for (r, &bv) in t.basis.iter().enumerate() {
            if !c[bv].is_zero() {
                z += c[bv].clone() * t.rows[r][j].clone();
            }
        }
        let cj = if j < n { c[j].clone() } else { Rational::zero() };
        cost[j] = cj - z;
    }
    t.cost = cost;

    match t.run() {
        Ok(()) => LpResult::Optimal { objective: t.objective(), solution: t.solution(n) },
        Err(()) => LpResult::Unbounded,
    }
}

/// Maximizes `c.x` over `A x = b, x >= 0`.
pub(crate) fn maximize(a: &[Vec<Rational>], b: &[Rational], c: &[Rational]) -> LpResult {
    let neg: Vec<Rational> = c.iter().map(|v| -v.clone()).collect();
    match minimize(a, b, &neg) {
        LpResult::Optimal { objective, solution } => {
            LpResult::Optimal { objective: -objective, solution }
        }
        other => other,
    }
}
