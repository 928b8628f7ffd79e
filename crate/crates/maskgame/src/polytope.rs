//! Coupling polytopes of distribution pairs.
//!
//! A coupling of `(mu, mu2)` is a joint distribution over state pairs
//! whose marginals are `mu` and `mu2`; the set of all couplings is a
//! two-way transportation polytope. [`CouplingSystem`] represents that
//! polytope as a linear system, optionally with cells forced to zero, and
//! decides feasibility and linear optimization exactly.
//!
//! [`enumerate_vertices`] lists the polytope's vertices explicitly. It
//! exists for the brute-force oracle and for property tests; analysis
//! code paths go through the LP so each step stays polynomial.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};

use crate::error::PolytopeError;
use crate::model::{Dist, Prob, StateId};
use crate::rational::Rational;
use crate::simplex::{self, LpResult};

/// Default cap on `|Supp(mu)| * |Supp(mu2)|` for vertex enumeration.
pub const DEFAULT_VERTEX_CAP: usize = 25;

/// The linear system whose non-negative solutions are exactly the
/// couplings of `(mu, mu2)` vanishing on the forbidden cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CouplingSystem {
    /// Ordered support of the first distribution.
    pub rows: Vec<StateId>,
    /// Ordered support of the second distribution.
    pub cols: Vec<StateId>,
    /// Required row sums (the weights of the first distribution).
    pub row_targets: Vec<Prob>,
    /// Required column sums (the weights of the second distribution).
    pub col_targets: Vec<Prob>,
    /// Cells constrained to zero, as (row index, column index) pairs.
    pub forbidden: BTreeSet<(usize, usize)>,
}

/// A joint distribution over state pairs; only positive weights are kept.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Coupling {
    weights: BTreeMap<(StateId, StateId), Prob>,
}

impl Coupling {
    pub fn new(weights: BTreeMap<(StateId, StateId), Prob>) -> Coupling {
        let weights = weights.into_iter().filter(|(_, p)| !p.is_zero()).collect();
        Coupling { weights }
    }

    pub fn get(&self, pair: &(StateId, StateId)) -> Option<&Prob> {
        self.weights.get(pair)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(StateId, StateId), &Prob)> {
        self.weights.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &(StateId, StateId)> {
        self.weights.keys()
    }

    pub fn support_size(&self) -> usize {
        self.weights.len()
    }

    /// True iff every positive-weight pair lies in `relation`.
    pub fn respects(&self, relation: &BTreeSet<(StateId, StateId)>) -> bool {
        self.weights.keys().all(|pair| relation.contains(pair))
    }

    /// Sum over columns for each first-component state.
    pub fn row_marginal(&self) -> BTreeMap<StateId, Rational> {
        let mut m: BTreeMap<StateId, Rational> = BTreeMap::new();
        for ((s, _), p) in &self.weights {
            *m.entry(s.clone()).or_insert_with(Rational::zero) += p.ratio().clone();
        }
        m
    }

    /// Sum over rows for each second-component state.
    pub fn col_marginal(&self) -> BTreeMap<StateId, Rational> {
        let mut m: BTreeMap<StateId, Rational> = BTreeMap::new();
        for ((_, t), p) in &self.weights {
            *m.entry(t.clone()).or_insert_with(Rational::zero) += p.ratio().clone();
        }
        m
    }

    /// True iff the marginals are exactly `mu` and `mu2`.
    pub fn is_coupling_of(&self, mu: &Dist, mu2: &Dist) -> bool {
        let rows = self.row_marginal();
        let cols = self.col_marginal();
        mu.support_size() == rows.len()
            && mu2.support_size() == cols.len()
            && mu.iter().all(|(s, p)| rows.get(s) == Some(p.ratio()))
            && mu2.iter().all(|(t, p)| cols.get(t) == Some(p.ratio()))
    }
}

/// Builds the system for couplings of `(mu, mu2)` that put weight zero on
/// every pair in `forbidden`. Pairs outside the support product carry no
/// variable and are ignored.
pub fn build_system(
    mu: &Dist,
    mu2: &Dist,
    forbidden: &BTreeSet<(StateId, StateId)>,
) -> CouplingSystem {
    let rows: Vec<StateId> = mu.support().cloned().collect();
    let cols: Vec<StateId> = mu2.support().cloned().collect();
    let row_targets: Vec<Prob> = mu.iter().map(|(_, p)| p.clone()).collect();
    let col_targets: Vec<Prob> = mu2.iter().map(|(_, p)| p.clone()).collect();
    let mut fb = BTreeSet::new();
    for (i, s) in rows.iter().enumerate() {
        for (j, t) in cols.iter().enumerate() {
            if forbidden.contains(&(s.clone(), t.clone())) {
                fb.insert((i, j));
            }
        }
    }
    CouplingSystem { rows, cols, row_targets, col_targets, forbidden: fb }
}

impl CouplingSystem {
    fn dims(&self) -> (usize, usize) {
        (self.rows.len(), self.cols.len())
    }

    /// The allowed cells in row-major order.
    fn cells(&self) -> Vec<(usize, usize)> {
        let (m, n) = self.dims();
        let mut cells = Vec::new();
        for i in 0..m {
            for j in 0..n {
                if !self.forbidden.contains(&(i, j)) {
                    cells.push((i, j));
                }
            }
        }
        cells
    }

    /// Equality constraints of the transportation system over the allowed
    /// cells: one row-sum equation per row, one column-sum equation per
    /// column.
    fn constraints(&self, cells: &[(usize, usize)]) -> (Vec<Vec<Rational>>, Vec<Rational>) {
        let (m, n) = self.dims();
        let mut a = vec![vec![Rational::zero(); cells.len()]; m + n];
        for (k, &(i, j)) in cells.iter().enumerate() {
            a[i][k] = Rational::one();
            a[m + j][k] = Rational::one();
        }
        let mut b = Vec::with_capacity(m + n);
        b.extend(self.row_targets.iter().map(|p| p.ratio().clone()));
        b.extend(self.col_targets.iter().map(|p| p.ratio().clone()));
        (a, b)
    }

    fn coupling_from_solution(&self, cells: &[(usize, usize)], x: &[Rational]) -> Coupling {
        let mut weights = BTreeMap::new();
        for (k, &(i, j)) in cells.iter().enumerate() {
            if !x[k].is_zero() {
                let pair = (self.rows[i].clone(), self.cols[j].clone());
                weights.insert(pair, Prob::new(x[k].clone()).expect("solution weight in [0,1]"));
            }
        }
        Coupling::new(weights)
    }

    /// Decides, exactly, whether the system admits a non-negative
    /// solution.
    pub fn feasible(&self) -> bool {
        self.witness().is_some()
    }

    /// A coupling solving the system, if one exists.
    pub fn witness(&self) -> Option<Coupling> {
        let cells = self.cells();
        let (a, b) = self.constraints(&cells);
        simplex::feasible_point(&a, &b).map(|x| self.coupling_from_solution(&cells, &x))
    }

    /// Maximizes a linear objective over the polytope; the witness is a
    /// basic feasible solution, hence a polytope vertex.
    pub fn maximize<F>(&self, objective: F) -> Result<(Rational, Coupling), PolytopeError>
    where
        F: Fn(&StateId, &StateId) -> Rational,
    {
        let cells = self.cells();
        let (a, b) = self.constraints(&cells);
        let c: Vec<Rational> = cells
            .iter()
            .map(|&(i, j)| objective(&self.rows[i], &self.cols[j]))
            .collect();
        match simplex::maximize(&a, &b, &c) {
            LpResult::Optimal { objective: opt, solution } => {
                Ok((opt, self.coupling_from_solution(&cells, &solution)))
            }
            LpResult::Infeasible => Err(PolytopeError::Infeasible),
            LpResult::Unbounded => unreachable!("transportation polytopes are bounded"),
        }
    }
}

/// Enumerates the vertices of the coupling polytope of `(mu, mu2)`.
///
/// Vertices are the basic feasible solutions; their supports are
/// cycle-free subgraphs of the complete bipartite graph on the supports.
/// The enumeration walks all spanning trees, solves each triangular
/// system, keeps the non-negative ones and deduplicates degenerate
/// repeats by exact weight-map equality.
pub fn enumerate_vertices(
    mu: &Dist,
    mu2: &Dist,
    cap: usize,
) -> Result<Vec<Coupling>, PolytopeError> {
    let m = mu.support_size();
    let n = mu2.support_size();
    if m * n > cap {
        return Err(PolytopeError::CapExceeded { cells: m * n, cap });
    }
    let rows: Vec<&StateId> = mu.support().collect();
    let cols: Vec<&StateId> = mu2.support().collect();
    let row_targets: Vec<Rational> = mu.iter().map(|(_, p)| p.ratio().clone()).collect();
    let col_targets: Vec<Rational> = mu2.iter().map(|(_, p)| p.ratio().clone()).collect();

    let all_cells: Vec<(usize, usize)> =
        (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let basis_size = m + n - 1;

    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let mut chosen: Vec<(usize, usize)> = Vec::with_capacity(basis_size);
    enumerate_subsets(&all_cells, basis_size, 0, &mut chosen, &mut |tree| {
        if !is_spanning_tree(tree, m, n) {
            return;
        }
        if let Some(x) = solve_tree(tree, m, n, &row_targets, &col_targets) {
            let mut weights = BTreeMap::new();
            for (&(i, j), v) in tree.iter().zip(&x) {
                if !v.is_zero() {
                    let pair = (rows[i].clone(), cols[j].clone());
                    weights.insert(pair, Prob::new(v.clone()).expect("tree weight in [0,1]"));
                }
            }
            let w = Coupling::new(weights);
            if seen.insert(w.clone()) {
                out.push(w);
            }
        }
    });
    Ok(out)
}

fn enumerate_subsets(
    cells: &[(usize, usize)],
    want: usize,
    from: usize,
    chosen: &mut Vec<(usize, usize)>,
    visit: &mut impl FnMut(&[(usize, usize)]),
) {
    if chosen.len() == want {
        visit(chosen);
        return;
    }
    let missing = want - chosen.len();
    for k in from..cells.len() {
        if cells.len() - k < missing {
            break;
        }
        chosen.push(cells[k]);
        enumerate_subsets(cells, want, k + 1, chosen, visit);
        chosen.pop();
    }
}

/// Checks that `edges` forms a spanning tree of the complete bipartite
/// graph with `m` row nodes and `n` column nodes.
fn is_spanning_tree(edges: &[(usize, usize)], m: usize, n: usize) -> bool {
    // |edges| == m + n - 1 by construction; acyclic and connected is then
    // equivalent to acyclic and touching every node.
    let mut parent: Vec<usize> = (0..m + n).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(i, j) in edges {
        let a = find(&mut parent, i);
        let b = find(&mut parent, m + j);
        if a == b {
            return false; // cycle
        }
        parent[a] = b;
    }
    true
}

/// Solves the transportation system restricted to a spanning tree by
/// peeling leaves; returns `None` if any value goes negative.
fn solve_tree(
    edges: &[(usize, usize)],
    m: usize,
    n: usize,
    row_targets: &[Rational],
    col_targets: &[Rational],
) -> Option<Vec<Rational>> {
    let nodes = m + n;
    let mut degree = vec![0usize; nodes];
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    for (e, &(i, j)) in edges.iter().enumerate() {
        degree[i] += 1;
        degree[m + j] += 1;
        incident[i].push(e);
        incident[m + j].push(e);
    }
    let mut remaining: Vec<Rational> = row_targets
        .iter()
        .chain(col_targets.iter())
        .cloned()
        .collect();
    let mut solved = vec![false; edges.len()];
    let mut x = vec![Rational::zero(); edges.len()];
    let mut stack: Vec<usize> = (0..nodes).filter(|&v| degree[v] == 1).collect();

    while let Some(v) = stack.pop() {
        if degree[v] != 1 {
            continue;
        }
        let e = *incident[v].iter().find(|&&e| !solved[e])?;
        let (i, j) = edges[e];
        let value = remaining[v].clone();
        if value < Rational::zero() {
            return None;
        }
        x[e] = value.clone();
        solved[e] = true;
        for node in [i, m + j] {
            remaining[node] -= value.clone();
            degree[node] -= 1;
            if degree[node] == 1 {
                stack.push(node);
            }
        }
    }
    if !solved.iter().all(|&s| s) {
        return None;
    }
    // Residual targets must be zero on a spanning tree.
    debug_assert!(remaining.iter().all(|r| r.is_zero()));
    if x.iter().any(|v| v < &Rational::zero()) {
        None
    } else {
        Some(x)
    }
}
