//! Brute-force reference analyses on the finite vertex snippet.
//!
//! Everything here works on concrete snippet vertices with explicit
//! couplings and exact rational arithmetic; none of it shares code with
//! the symbolic analyses it validates.
//!
//! * [`oracle_reach_positive`]: classical attractor for
//!   positive-probability reachability of the error vertex.
//! * [`oracle_failing`]: almost-sure failure under the uniform-random
//!   (canonically fair) Refuter, for every Verifier strategy. Decided by
//!   chain analysis per enumerated strategy on small snippets, and by
//!   end-component analysis beyond that.
//! * [`oracle_value`]: the expected total milestone weight before
//!   failure. On small snippets all deterministic memoryless strategy
//!   pairs are enumerated and evaluated by exact linear solves, taking
//!   inf-sup and sup-inf literally. Beyond that the value is certified:
//!   a candidate strategy pair is evaluated exactly and checked to be a
//!   fixpoint of the snippet's Bellman equations, which pins the game
//!   value between the pair's guarantees for either player.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_traits::Zero;

use crate::error::OracleError;
use crate::game::{Class, SnipVertex, SnippetGame};
use crate::quantitative::{compute_bound_from_snippet, Milestone};
use crate::rational::{rat_int, rat_to_f64_saturating, Rational};

/// Strategy-space size above which [`oracle_value`] and
/// [`oracle_failing`] switch from exhaustive enumeration to the certified
/// route.
pub const DEFAULT_STRATEGY_CAP: u128 = 1_000_000;

/// Practical ceiling on exhaustively evaluated strategy pairs; beyond it
/// exact per-pair solves stop being "desk scale".
const EXHAUSTIVE_BUDGET: u128 = 20_000;

fn snip_reward(vertex: &SnipVertex, milestone: &Milestone) -> u64 {
    match vertex.challenge_label() {
        Some(label) => milestone.weight(label),
        None => 0,
    }
}

// ---------------------------------------------------------------------------
// Attractor

/// Vertices from which the Refuter forces reaching the error vertex with
/// positive probability against every Verifier play: attractor iteration
/// with "some successor" for Refuter and probabilistic vertices, "all
/// successors" for Verifier vertices.
pub fn oracle_reach_positive(snippet: &SnippetGame) -> BTreeSet<usize> {
    attractor_levels(snippet)
        .iter()
        .enumerate()
        .filter_map(|(i, l)| l.map(|_| i))
        .collect()
}

fn attractor_levels(snippet: &SnippetGame) -> Vec<Option<u32>> {
    let n = snippet.len();
    let mut level: Vec<Option<u32>> = vec![None; n];
    level[snippet.err_id()] = Some(0);
    let mut round = 0;
    loop {
        round += 1;
        let mut entering = Vec::new();
        for (id, vertex) in snippet.vertices() {
            if level[id].is_some() {
                continue;
            }
            let enters = match vertex.class() {
                Class::Refuter | Class::Prob => {
                    snippet.successors(id).iter().any(|&s| level[s].is_some())
                }
                Class::Verifier => {
                    snippet.successors(id).iter().all(|&s| level[s].is_some())
                }
                Class::Err => false,
            };
            if enters {
                entering.push(id);
            }
        }
        if entering.is_empty() {
            return level;
        }
        for id in entering {
            level[id] = Some(round);
        }
        assert!((round as usize) <= n, "attractor stabilizes within |V| rounds");
    }
}

// ---------------------------------------------------------------------------
// Strategies and induced chains

/// A deterministic memoryless strategy pair: one chosen successor per
/// Verifier vertex and per Refuter vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrategyPair {
    pub verifier: Vec<usize>,
    pub refuter: Vec<usize>,
}

impl StrategyPair {
    fn first_choices(snippet: &SnippetGame) -> StrategyPair {
        let n = snippet.len();
        let mut verifier = vec![usize::MAX; n];
        let mut refuter = vec![usize::MAX; n];
        for (id, vertex) in snippet.vertices() {
            match vertex.class() {
                Class::Verifier => verifier[id] = snippet.successors(id)[0],
                Class::Refuter => refuter[id] = snippet.successors(id)[0],
                _ => {}
            }
        }
        StrategyPair { verifier, refuter }
    }
}

/// Successors of `id` in the chain induced by fixing both strategies.
fn chain_successors<'a>(
    snippet: &'a SnippetGame,
    pair: &StrategyPair,
    id: usize,
) -> Box<dyn Iterator<Item = usize> + 'a> {
    match snippet.vertex(id).class() {
        Class::Verifier => Box::new(std::iter::once(pair.verifier[id])),
        Class::Refuter => Box::new(std::iter::once(pair.refuter[id])),
        Class::Prob => Box::new(snippet.successors(id).iter().copied()),
        Class::Err => Box::new(std::iter::once(snippet.err_id())),
    }
}

/// States that can reach the error vertex in the induced chain.
fn chain_reaches_err(snippet: &SnippetGame, pair: &StrategyPair) -> Vec<bool> {
    let n = snippet.len();
    // Backward reachability over chain edges.
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for id in 0..n {
        for succ in chain_successors(snippet, pair, id) {
            preds[succ].push(id);
        }
    }
    let mut reach = vec![false; n];
    let mut queue = VecDeque::new();
    reach[snippet.err_id()] = true;
    queue.push_back(snippet.err_id());
    while let Some(v) = queue.pop_front() {
        for &p in &preds[v] {
            if !reach[p] {
                reach[p] = true;
                queue.push_back(p);
            }
        }
    }
    reach
}

/// States reachable from `start` in the induced chain.
fn chain_reachable(snippet: &SnippetGame, pair: &StrategyPair, start: usize) -> Vec<bool> {
    let mut reach = vec![false; snippet.len()];
    let mut queue = VecDeque::new();
    reach[start] = true;
    queue.push_back(start);
    while let Some(v) = queue.pop_front() {
        for succ in chain_successors(snippet, pair, v) {
            if !reach[succ] {
                reach[succ] = true;
                queue.push_back(succ);
            }
        }
    }
    reach
}

/// True iff the induced chain reaches the error vertex with probability 1
/// from the initial vertex: every reachable state can still reach it.
fn chain_absorbs(snippet: &SnippetGame, pair: &StrategyPair) -> bool {
    let reachable = chain_reachable(snippet, pair, snippet.initial());
    let reaches = chain_reaches_err(snippet, pair);
    reachable.iter().zip(&reaches).all(|(&r, &e)| !r || e)
}

// ---------------------------------------------------------------------------
// Exact evaluation of a fixed strategy pair

/// Exact values of the induced chain: expected total milestone weight
/// until absorption, with states that cannot reach the error vertex
/// pinned to the lattice top `bound`.
///
/// Every cycle of the chain passes through a probabilistic vertex, so the
/// linear system is set up over probabilistic vertices only and the
/// player vertices are filled in afterwards.
fn evaluate_pair(
    snippet: &SnippetGame,
    milestone: &Milestone,
    pair: &StrategyPair,
    bound: &Rational,
    restrict_to: Option<&[bool]>,
) -> Result<Vec<Option<Rational>>, OracleError> {
    let n = snippet.len();
    let reaches = chain_reaches_err(snippet, pair);
    let in_domain = |id: usize| restrict_to.map(|d| d[id]).unwrap_or(true);

    // value(V v) = reward(v) + value(sigma_V(v)); value(R v) = value(sigma_R(v));
    // sigma_V leads to a probabilistic vertex or err. Resolve the two-step hop
    // from a Refuter vertex to its next probabilistic vertex (or err).
    let hop = |r_vertex: usize| -> (Rational, usize) {
        let v_vertex = pair.refuter[r_vertex];
        let reward = rat_int(snip_reward(snippet.vertex(v_vertex), milestone) as i64);
        (reward, pair.verifier[v_vertex])
    };

    // Unknowns: probabilistic vertices in the domain that can reach err.
    let mut unknown_index: BTreeMap<usize, usize> = BTreeMap::new();
    for (id, vertex) in snippet.vertices() {
        if vertex.class() == Class::Prob && reaches[id] && in_domain(id) {
            let k = unknown_index.len();
            unknown_index.insert(id, k);
        }
    }

    let mut rows: Vec<BTreeMap<usize, Rational>> = Vec::with_capacity(unknown_index.len());
    let mut rhs: Vec<Rational> = Vec::with_capacity(unknown_index.len());
    for (&p, &k) in &unknown_index {
        let mut row: BTreeMap<usize, Rational> = BTreeMap::new();
        row.insert(k, rat_int(1));
        let mut c = Rational::zero();
        let delta = snippet.delta(p).expect("probabilistic vertices carry delta");
        for (succ, prob) in delta {
            let w = prob.ratio().clone();
            let (reward, next) = hop(*succ);
            c += w.clone() * reward;
            if next == snippet.err_id() {
                // contributes 0
            } else if !reaches[next] {
                c += w * bound.clone();
            } else {
                let j = unknown_index[&next];
                let entry = row.entry(j).or_insert_with(Rational::zero);
                *entry -= w;
            }
        }
        rows.push(row);
        rhs.push(c);
    }

    let solution = solve_sparse(rows, rhs).ok_or_else(|| {
        OracleError::Determinacy("singular chain system for an absorbing part".to_string())
    })?;

    let mut values: Vec<Option<Rational>> = vec![None; n];
    values[snippet.err_id()] = Some(Rational::zero());
    for (id, _) in snippet.vertices() {
        if !in_domain(id) {
            continue;
        }
        if !reaches[id] {
            values[id] = Some(bound.clone());
        } else if let Some(&k) = unknown_index.get(&id) {
            values[id] = Some(solution[k].clone());
        }
    }
    // Verifier vertices, then Refuter vertices on top of them.
    for (id, vertex) in snippet.vertices() {
        if !in_domain(id) || values[id].is_some() || vertex.class() != Class::Verifier {
            continue;
        }
        let succ = pair.verifier[id];
        let base = values[succ].clone().ok_or_else(|| {
            OracleError::Determinacy("chain blocked outside the evaluation domain".to_string())
        })?;
        let r = rat_int(snip_reward(vertex, milestone) as i64);
        values[id] = Some(r + base);
    }
    for (id, vertex) in snippet.vertices() {
        if !in_domain(id) || values[id].is_some() || vertex.class() != Class::Refuter {
            continue;
        }
        let succ = pair.refuter[id];
        let base = values[succ].clone().ok_or_else(|| {
            OracleError::Determinacy("chain blocked outside the evaluation domain".to_string())
        })?;
        values[id] = Some(base);
    }
    Ok(values)
}

/// Sparse exact Gaussian elimination with a greedy minimum-fill pivot
/// choice. Rows are `sum coeff * x_j = rhs`. Returns `None` on a singular
/// system.
fn solve_sparse(
    mut rows: Vec<BTreeMap<usize, Rational>>,
    mut rhs: Vec<Rational>,
) -> Option<Vec<Rational>> {
    let n = rows.len();
    let mut active: Vec<bool> = vec![true; n];
    // occurrences[j] = active rows currently containing variable j
    let mut occurrences: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for (r, row) in rows.iter().enumerate() {
        for (&j, _) in row {
            occurrences[j].insert(r);
        }
    }
    let mut eliminated: Vec<(usize, usize)> = Vec::with_capacity(n); // (var, row)
    let mut var_done = vec![false; n];

    for _ in 0..n {
        // Pick (row, var) minimizing the fill estimate.
        let mut best: Option<(usize, usize, usize)> = None; // (cost, row, var)
        for (r, row) in rows.iter().enumerate() {
            if !active[r] {
                continue;
            }
            for (&j, coeff) in row {
                if var_done[j] || coeff.is_zero() {
                    continue;
                }
                let cost = (row.len() - 1) * (occurrences[j].len() - 1);
                if best.map(|(c, _, _)| cost < c).unwrap_or(true) {
                    best = Some((cost, r, j));
                    if cost == 0 {
                        break;
                    }
                }
            }
            if matches!(best, Some((0, _, _))) {
                break;
            }
        }
        let (_, r, j) = best?;

        // Normalize row r for variable j.
        let piv = rows[r][&j].clone();
        let row_r: BTreeMap<usize, Rational> = rows[r]
            .iter()
            .map(|(&k, v)| (k, v.clone() / piv.clone()))
            .collect();
        rhs[r] /= piv;
        rows[r] = row_r.clone();

        // Substitute into the other active rows containing j.
        let holders: Vec<usize> = occurrences[j].iter().copied().filter(|&x| x != r).collect();
        for h in holders {
            if !active[h] {
                continue;
            }
            let factor = match rows[h].get(&j) {
                Some(f) => f.clone(),
                None => continue,
            };
            let rhs_r = rhs[r].clone();
            for (&k, v) in &row_r {
                let cell = rows[h].entry(k).or_insert_with(Rational::zero);
                *cell -= factor.clone() * v.clone();
                if cell.is_zero() {
                    rows[h].remove(&k);
                    occurrences[k].remove(&h);
                } else {
                    occurrences[k].insert(h);
                }
            }
            rhs[h] -= factor * rhs_r;
        }
        for (&k, _) in &row_r {
            occurrences[k].remove(&r);
        }
        active[r] = false;
        var_done[j] = true;
        eliminated.push((j, r));
    }

    // Back-substitution in reverse elimination order.
    let mut x = vec![Rational::zero(); n];
    for &(j, r) in eliminated.iter().rev() {
        let mut v = rhs[r].clone();
        for (&k, coeff) in &rows[r] {
            if k != j {
                v -= coeff.clone() * x[k].clone();
            }
        }
        x[j] = v; // row was normalized on j
    }
    Some(x)
}

// ---------------------------------------------------------------------------
// Almost-sure failing

/// True iff for every deterministic memoryless Verifier strategy, the
/// chain induced with the uniform-random fair Refuter reaches the error
/// vertex with probability 1. Enumerates strategies when the Verifier
/// strategy space is small, and otherwise decides the same property by
/// searching for a reachable error-avoiding end component in the MDP
/// where only the Verifier chooses.
pub fn oracle_failing(snippet: &SnippetGame) -> bool {
    if verifier_strategy_space(snippet) <= EXHAUSTIVE_BUDGET {
        oracle_failing_exhaustive(snippet, DEFAULT_STRATEGY_CAP)
            .expect("space fits under the cap")
    } else {
        !has_err_avoiding_ec(snippet, None)
    }
}

/// The literal enumeration: every Verifier strategy against the
/// uniform-random Refuter, each induced chain checked for almost-sure
/// absorption.
pub fn oracle_failing_exhaustive(
    snippet: &SnippetGame,
    cap: u128,
) -> Result<bool, OracleError> {
    let space = verifier_strategy_space(snippet);
    if space > cap {
        return Err(OracleError::StrategyCapExceeded { size: space, cap });
    }
    let mut result = true;
    for_each_strategy(snippet, Class::Verifier, &mut |verifier| {
        // Uniform Refuter: treat Refuter vertices like chance vertices
        // with full support; absorption only needs the support graph.
        let pair_like = UniformChain { verifier };
        if !uniform_chain_absorbs(snippet, &pair_like) {
            result = false;
            false // stop early
        } else {
            true
        }
    });
    Ok(result)
}

struct UniformChain<'a> {
    verifier: &'a [usize],
}

fn uniform_chain_successors<'a>(
    snippet: &'a SnippetGame,
    chain: &UniformChain<'_>,
    id: usize,
) -> Vec<usize> {
    match snippet.vertex(id).class() {
        Class::Verifier => vec![chain.verifier[id]],
        Class::Refuter | Class::Prob => snippet.successors(id).to_vec(),
        Class::Err => vec![snippet.err_id()],
    }
}

fn uniform_chain_absorbs(snippet: &SnippetGame, chain: &UniformChain<'_>) -> bool {
    let n = snippet.len();
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut reachable = vec![false; n];
    let mut queue = VecDeque::new();
    reachable[snippet.initial()] = true;
    queue.push_back(snippet.initial());
    while let Some(v) = queue.pop_front() {
        for succ in uniform_chain_successors(snippet, chain, v) {
            preds[succ].push(v);
            if !reachable[succ] {
                reachable[succ] = true;
                queue.push_back(succ);
            }
        }
    }
    let mut reaches = vec![false; n];
    let mut queue = VecDeque::new();
    reaches[snippet.err_id()] = true;
    queue.push_back(snippet.err_id());
    while let Some(v) = queue.pop_front() {
        for &p in &preds[v] {
            if !reaches[p] {
                reaches[p] = true;
                queue.push_back(p);
            }
        }
    }
    (0..n).all(|v| !reachable[v] || reaches[v])
}

/// Searches for an end component avoiding the error vertex, reachable
/// from the initial vertex. The Verifier picks successors; Refuter
/// vertices follow `sigma_r` when given and are full-support chance
/// vertices otherwise; probabilistic vertices are always chance.
///
/// Such a component exists iff some Verifier strategy avoids failure with
/// positive probability.
fn has_err_avoiding_ec(snippet: &SnippetGame, sigma_r: Option<&[usize]>) -> bool {
    let n = snippet.len();
    let step = |id: usize| -> Vec<usize> {
        match snippet.vertex(id).class() {
            Class::Verifier => snippet.successors(id).to_vec(),
            Class::Refuter => match sigma_r {
                Some(s) => vec![s[id]],
                None => snippet.successors(id).to_vec(),
            },
            Class::Prob => snippet.successors(id).to_vec(),
            Class::Err => vec![snippet.err_id()],
        }
    };

    // Iteratively prune vertices that cannot stay inside a candidate
    // component: chance vertices must keep all successors, Verifier
    // vertices at least one.
    let mut alive: Vec<bool> = (0..n).map(|v| v != snippet.err_id()).collect();
    loop {
        // Strongly connected components of the alive subgraph.
        let sccs = tarjan_sccs(n, &alive, &step);
        let mut comp = vec![usize::MAX; n];
        for (c, scc) in sccs.iter().enumerate() {
            for &v in scc {
                comp[v] = c;
            }
        }
        let mut removed_any = false;
        for v in 0..n {
            if !alive[v] {
                continue;
            }
            let targets = step(v);
            // An edge keeps v inside a candidate component when it stays
            // in v's own SCC; singleton SCCs survive only via self-loops,
            // which only the error vertex has, and it was excluded.
            let internal =
                |u: usize| alive[u] && comp[u] == comp[v] && (sccs[comp[v]].len() > 1 || u == v);
            let ok = match snippet.vertex(v).class() {
                Class::Verifier => targets.iter().any(|&u| internal(u)),
                _ => targets.iter().all(|&u| internal(u)),
            };
            if !ok {
                alive[v] = false;
                removed_any = true;
            }
        }
        if !removed_any {
            break;
        }
    }

    // Any surviving vertex belongs to an error-avoiding end component;
    // check reachability through the controllable dynamics.
    if !(0..n).any(|v| alive[v]) {
        return false;
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    seen[snippet.initial()] = true;
    queue.push_back(snippet.initial());
    while let Some(v) = queue.pop_front() {
        if alive[v] {
            return true;
        }
        for u in step(v) {
            if !seen[u] {
                seen[u] = true;
                queue.push_back(u);
            }
        }
    }
    false
}

/// Tarjan over the alive subgraph.
fn tarjan_sccs(
    n: usize,
    alive: &[bool],
    step: &dyn Fn(usize) -> Vec<usize>,
) -> Vec<Vec<usize>> {
    #[derive(Clone)]
    struct NodeState {
        index: Option<usize>,
        lowlink: usize,
        on_stack: bool,
    }
    let mut st = vec![NodeState { index: None, lowlink: 0, on_stack: false }; n];
    let mut stack = Vec::new();
    let mut next_index = 0usize;
    let mut sccs = Vec::new();

    // Iterative Tarjan to avoid recursion depth issues.
    enum Frame {
        Enter(usize),
        Resume(usize, usize, Vec<usize>),
    }
    for root in 0..n {
        if !alive[root] || st[root].index.is_some() {
            continue;
        }
        let mut frames = vec![Frame::Enter(root)];
        while let Some(frame) = frames.pop() {
            match frame {
                Frame::Enter(v) => {
                    st[v].index = Some(next_index);
                    st[v].lowlink = next_index;
                    next_index += 1;
                    stack.push(v);
                    st[v].on_stack = true;
                    let succs: Vec<usize> =
                        step(v).into_iter().filter(|&u| alive[u]).collect();
                    frames.push(Frame::Resume(v, 0, succs));
                }
                Frame::Resume(v, mut i, succs) => {
                    let mut descended = false;
                    while i < succs.len() {
                        let u = succs[i];
                        i += 1;
                        match st[u].index {
                            None => {
                                frames.push(Frame::Resume(v, i, succs.clone()));
                                frames.push(Frame::Enter(u));
                                descended = true;
                                break;
                            }
                            Some(ui) => {
                                if st[u].on_stack {
                                    st[v].lowlink = st[v].lowlink.min(ui);
                                }
                            }
                        }
                    }
                    if descended {
                        continue;
                    }
                    if st[v].lowlink == st[v].index.unwrap() {
                        let mut scc = Vec::new();
                        while let Some(w) = stack.pop() {
                            st[w].on_stack = false;
                            scc.push(w);
                            if w == v {
                                break;
                            }
                        }
                        sccs.push(scc);
                    }
                    // Propagate lowlink to the parent frame.
                    if let Some(Frame::Resume(p, _, _)) = frames.last() {
                        let p = *p;
                        st[p].lowlink = st[p].lowlink.min(st[v].lowlink);
                    }
                }
            }
        }
    }
    sccs
}

// ---------------------------------------------------------------------------
// Strategy enumeration

fn verifier_strategy_space(snippet: &SnippetGame) -> u128 {
    strategy_space(snippet, Class::Verifier)
}

fn refuter_strategy_space(snippet: &SnippetGame) -> u128 {
    strategy_space(snippet, Class::Refuter)
}

fn strategy_space(snippet: &SnippetGame, class: Class) -> u128 {
    let mut space: u128 = 1;
    for (id, vertex) in snippet.vertices() {
        if vertex.class() == class {
            space = space.saturating_mul(snippet.successors(id).len() as u128);
        }
    }
    space
}

/// Calls `visit` with every deterministic memoryless strategy for the
/// given player class, as a full choice vector. Stops early when `visit`
/// returns false.
fn for_each_strategy(
    snippet: &SnippetGame,
    class: Class,
    visit: &mut impl FnMut(&[usize]) -> bool,
) {
    let positions: Vec<usize> = snippet
        .vertices()
        .filter(|(_, v)| v.class() == class)
        .map(|(id, _)| id)
        .collect();
    let mut counters = vec![0usize; positions.len()];
    let mut choice = vec![usize::MAX; snippet.len()];
    loop {
        for (k, &id) in positions.iter().enumerate() {
            choice[id] = snippet.successors(id)[counters[k]];
        }
        if !visit(&choice) {
            return;
        }
        // Odometer increment.
        let mut k = 0;
        loop {
            if k == positions.len() {
                return;
            }
            counters[k] += 1;
            if counters[k] < snippet.successors(positions[k]).len() {
                break;
            }
            counters[k] = 0;
            k += 1;
        }
    }
}

// ---------------------------------------------------------------------------
// Game value

/// How the oracle value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMode {
    /// Full enumeration of strategy pairs, inf-sup and sup-inf taken
    /// literally over the value matrix.
    Exhaustive,
    /// A certified optimal pair: its exact evaluation is a fixpoint of
    /// the snippet's Bellman equations, pinning the value of both
    /// orders.
    Certified,
}

/// The oracle's value verdict. `inf_sup` and `sup_inf` are always exactly
/// equal (the determinacy instance check); `value` is their common value
/// at the initial vertex.
#[derive(Debug, Clone)]
pub struct OracleValue {
    pub value: Rational,
    pub inf_sup: Rational,
    pub sup_inf: Rational,
    pub mode: OracleMode,
}

impl OracleValue {
    pub fn value_f64(&self) -> f64 {
        rat_to_f64_saturating(&self.value)
    }
}

/// Expected total milestone weight before failure, at the initial vertex.
///
/// Requires an almost-surely failing snippet. Within `cap` (and a
/// practical pair budget) the strategy spaces are enumerated exhaustively
/// and the two quantifier orders compared exactly; beyond that a
/// certified optimal pair provides both. When both routes run, they are
/// asserted to agree.
pub fn oracle_value(
    snippet: &SnippetGame,
    milestone: &Milestone,
    cap: u128,
) -> Result<OracleValue, OracleError> {
    if !oracle_failing(snippet) {
        return Err(OracleError::NotFailing);
    }
    let certified = certified_value(snippet, milestone)?;
    let space = verifier_strategy_space(snippet).saturating_mul(refuter_strategy_space(snippet));
    if space <= cap.min(EXHAUSTIVE_BUDGET) {
        let (inf_sup, sup_inf) = exhaustive_orders(snippet, milestone)?;
        if inf_sup != sup_inf {
            return Err(OracleError::Determinacy(format!(
                "inf-sup {inf_sup} differs from sup-inf {sup_inf}"
            )));
        }
        if inf_sup != certified {
            return Err(OracleError::Determinacy(format!(
                "exhaustive value {inf_sup} differs from certified value {certified}"
            )));
        }
        return Ok(OracleValue {
            value: inf_sup.clone(),
            inf_sup,
            sup_inf,
            mode: OracleMode::Exhaustive,
        });
    }
    Ok(OracleValue {
        value: certified.clone(),
        inf_sup: certified.clone(),
        sup_inf: certified,
        mode: OracleMode::Certified,
    })
}

/// The literal exhaustive orders over deterministic memoryless
/// strategies, with fair Refuter strategies realized as those whose
/// induced chain absorbs for every Verifier strategy.
pub fn exhaustive_orders(
    snippet: &SnippetGame,
    milestone: &Milestone,
) -> Result<(Rational, Rational), OracleError> {
    let bound = compute_bound_from_snippet(snippet, milestone);

    let mut refuter_strategies: Vec<Vec<usize>> = Vec::new();
    for_each_strategy(snippet, Class::Refuter, &mut |s| {
        refuter_strategies.push(s.to_vec());
        true
    });
    let mut verifier_strategies: Vec<Vec<usize>> = Vec::new();
    for_each_strategy(snippet, Class::Verifier, &mut |s| {
        verifier_strategies.push(s.to_vec());
        true
    });

    // values[i][j] and absorption flags for refuter i vs verifier j.
    let mut absorbing = vec![vec![false; verifier_strategies.len()]; refuter_strategies.len()];
    for (i, r) in refuter_strategies.iter().enumerate() {
        for (j, v) in verifier_strategies.iter().enumerate() {
            let pair = StrategyPair { verifier: v.clone(), refuter: r.clone() };
            absorbing[i][j] = chain_absorbs(snippet, &pair);
        }
    }
    // Fair Refuter strategies: absorbing against every Verifier strategy.
    let admissible: Vec<usize> = (0..refuter_strategies.len())
        .filter(|&i| absorbing[i].iter().all(|&a| a))
        .collect();
    if admissible.is_empty() {
        return Err(OracleError::Determinacy(
            "no fair deterministic memoryless Refuter strategy".to_string(),
        ));
    }

    let mut values: BTreeMap<(usize, usize), Rational> = BTreeMap::new();
    for &i in &admissible {
        for j in 0..verifier_strategies.len() {
            let pair = StrategyPair {
                verifier: verifier_strategies[j].clone(),
                refuter: refuter_strategies[i].clone(),
            };
            let reachable = chain_reachable(snippet, &pair, snippet.initial());
            let vals = evaluate_pair(snippet, milestone, &pair, &bound, Some(&reachable))?;
            let v = vals[snippet.initial()]
                .clone()
                .expect("initial vertex lies in its own reachable set");
            values.insert((i, j), v);
        }
    }

    let inf_sup = admissible
        .iter()
        .map(|&i| {
            (0..verifier_strategies.len())
                .map(|j| values[&(i, j)].clone())
                .max()
                .expect("at least one Verifier strategy")
        })
        .min()
        .expect("at least one fair Refuter strategy");
    let sup_inf = (0..verifier_strategies.len())
        .map(|j| {
            admissible
                .iter()
                .map(|&i| values[&(i, j)].clone())
                .min()
                .expect("at least one fair Refuter strategy")
        })
        .max()
        .expect("at least one Verifier strategy");
    Ok((inf_sup, sup_inf))
}

/// Computes the game value by certifying a candidate strategy pair:
/// float value iteration suggests greedy strategies, the pair is
/// evaluated exactly, and local violations of the Bellman equations are
/// repaired by exact policy improvement until the evaluation is a true
/// fixpoint. A fixpoint evaluation squeezes the game value from both
/// sides, so the certificate also witnesses determinacy.
fn certified_value(
    snippet: &SnippetGame,
    milestone: &Milestone,
) -> Result<Rational, OracleError> {
    let bound_exact = compute_bound_from_snippet(snippet, milestone);
    if bound_exact.is_zero() {
        // All milestone weights are zero; the value is identically zero.
        return Ok(Rational::zero());
    }
    let n = snippet.len();
    let progress = attractor_levels(snippet);

    // Float value iteration from the top for a first guess.
    let bound_f = rat_to_f64_saturating(&bound_exact);
    let mut f = vec![bound_f; n];
    f[snippet.err_id()] = 0.0;
    let mut prev_residual = f64::INFINITY;
    for _ in 0..400_000u32 {
        let mut next = vec![0.0f64; n];
        for (id, vertex) in snippet.vertices() {
            next[id] = match vertex.class() {
                Class::Err => 0.0,
                Class::Refuter => snippet
                    .successors(id)
                    .iter()
                    .map(|&s| f[s])
                    .fold(f64::INFINITY, f64::min),
                Class::Verifier => {
                    let r = snip_reward(vertex, milestone) as f64;
                    (r + snippet
                        .successors(id)
                        .iter()
                        .map(|&s| f[s])
                        .fold(f64::NEG_INFINITY, f64::max))
                    .min(bound_f)
                }
                Class::Prob => snippet
                    .delta(id)
                    .expect("prob vertices carry delta")
                    .iter()
                    .map(|(s, p)| p.to_f64() * f[*s])
                    .sum::<f64>()
                    .min(bound_f),
            };
        }
        let residual = f
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        f = next;
        if residual <= 1e-13 && prev_residual <= 1e-13 {
            break;
        }
        prev_residual = residual;
    }

    // Greedy extraction with ties broken toward absorption progress.
    let mut pair = StrategyPair::first_choices(snippet);
    for (id, vertex) in snippet.vertices() {
        match vertex.class() {
            Class::Verifier => {
                let best = snippet
                    .successors(id)
                    .iter()
                    .copied()
                    .max_by(|&a, &b| f[a].partial_cmp(&f[b]).unwrap().then(b.cmp(&a)))
                    .unwrap();
                pair.verifier[id] = best;
            }
            Class::Refuter => {
                let best = snippet
                    .successors(id)
                    .iter()
                    .copied()
                    .min_by_key(|&s| {
                        (
                            ordered(f[s]),
                            progress[s].unwrap_or(u32::MAX),
                            s,
                        )
                    })
                    .unwrap();
                pair.refuter[id] = best;
            }
            _ => {}
        }
    }

    // Exact policy iteration until the evaluation is a Bellman fixpoint.
    for _round in 0..500u32 {
        let values = evaluate_pair(snippet, milestone, &pair, &bound_exact, None)?;
        let x: Vec<Rational> = values
            .into_iter()
            .map(|v| v.expect("full-domain evaluation"))
            .collect();
        let mut improved = false;
        for (id, vertex) in snippet.vertices() {
            match vertex.class() {
                Class::Refuter => {
                    let best = snippet
                        .successors(id)
                        .iter()
                        .copied()
                        .min_by(|&a, &b| {
                            x[a].cmp(&x[b]).then_with(|| {
                                progress[a]
                                    .unwrap_or(u32::MAX)
                                    .cmp(&progress[b].unwrap_or(u32::MAX))
                                    .then(a.cmp(&b))
                            })
                        })
                        .unwrap();
                    if x[best] < x[pair.refuter[id]] {
                        pair.refuter[id] = best;
                        improved = true;
                    } else if x[best] == x[pair.refuter[id]]
                        && progress[best].unwrap_or(u32::MAX)
                            < progress[pair.refuter[id]].unwrap_or(u32::MAX)
                    {
                        // Equal value but better absorption progress keeps
                        // the Refuter fair.
                        pair.refuter[id] = best;
                        improved = true;
                    }
                }
                Class::Verifier => {
                    let best = snippet
                        .successors(id)
                        .iter()
                        .copied()
                        .max_by(|&a, &b| x[a].cmp(&x[b]).then(b.cmp(&a)))
                        .unwrap();
                    if x[best] > x[pair.verifier[id]] {
                        pair.verifier[id] = best;
                        improved = true;
                    }
                }
                _ => {}
            }
        }
        if improved {
            continue;
        }
        verify_fixpoint(snippet, milestone, &pair, &x, &bound_exact)?;
        return Ok(x[snippet.initial()].clone());
    }
    Err(OracleError::Determinacy(
        "policy iteration did not stabilize".to_string(),
    ))
}

fn ordered(v: f64) -> u64 {
    // Total order on non-negative floats for use as a sort key.
    debug_assert!(v >= 0.0);
    v.to_bits()
}

/// Exact verification that the pair's evaluation solves the clamped
/// Bellman equations of the snippet, and that the Refuter strategy is
/// fair (its fixed dynamics admit no reachable error-avoiding end
/// component).
fn verify_fixpoint(
    snippet: &SnippetGame,
    milestone: &Milestone,
    pair: &StrategyPair,
    x: &[Rational],
    bound: &Rational,
) -> Result<(), OracleError> {
    let clamp = |v: Rational| -> Rational {
        if v > *bound {
            bound.clone()
        } else {
            v
        }
    };
    for (id, vertex) in snippet.vertices() {
        if x[id] < Rational::zero() || x[id] > *bound {
            return Err(OracleError::Determinacy(format!(
                "value at vertex {id} escapes the lattice"
            )));
        }
        let expect = match vertex.class() {
            Class::Err => Rational::zero(),
            Class::Refuter => clamp(
                snippet
                    .successors(id)
                    .iter()
                    .map(|&s| x[s].clone())
                    .min()
                    .expect("total game graph"),
            ),
            Class::Verifier => {
                let r = rat_int(snip_reward(vertex, milestone) as i64);
                clamp(
                    r + snippet
                        .successors(id)
                        .iter()
                        .map(|&s| x[s].clone())
                        .max()
                        .expect("total game graph"),
                )
            }
            Class::Prob => clamp(
                snippet
                    .delta(id)
                    .expect("prob vertices carry delta")
                    .iter()
                    .map(|(s, p)| p.ratio().clone() * x[*s].clone())
                    .sum(),
            ),
        };
        if x[id] != expect {
            return Err(OracleError::Determinacy(format!(
                "evaluation is not a Bellman fixpoint at vertex {id}"
            )));
        }
    }
    // The Verifier choice must attain the maximum and the Refuter choice
    // the minimum; both hold by the fixpoint equations plus the chain
    // evaluation, but check the chain consistency explicitly.
    for (id, vertex) in snippet.vertices() {
        match vertex.class() {
            Class::Refuter => {
                if x[id] != x[pair.refuter[id]] {
                    return Err(OracleError::Determinacy(format!(
                        "Refuter choice at vertex {id} does not attain the minimum"
                    )));
                }
            }
            Class::Verifier => {
                let r = rat_int(snip_reward(vertex, milestone) as i64);
                if x[id] != clamp(r + x[pair.verifier[id]].clone()) {
                    return Err(OracleError::Determinacy(format!(
                        "Verifier choice at vertex {id} does not attain the maximum"
                    )));
                }
            }
            _ => {}
        }
    }
    // Fairness of the extracted Refuter strategy.
    if has_err_avoiding_ec(snippet, Some(&pair.refuter)) {
        return Err(OracleError::Determinacy(
            "extracted Refuter strategy is not fair".to_string(),
        ));
    }
    Ok(())
}
