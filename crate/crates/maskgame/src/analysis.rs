//! Boolean analyses on the symbolic game.
//!
//! Masking is decided through the least fixpoint `U` of vertices from
//! which the Refuter can force reaching the error vertex with positive
//! probability; the implementation masks its faults iff the initial
//! vertex stays out of `U`. Almost-sure failing under a fair Refuter is
//! decided through the predecessor operators [`pre_exists`] and
//! [`pre_forall`].
//!
//! Probabilistic vertices are handled symbolically: a coupling avoiding a
//! set of successor pairs exists iff the coupling system with those pairs
//! forced to zero is feasible, so infeasibility means every coupling hits
//! the set with positive probability.

use std::collections::BTreeSet;

use crate::error::ModelError;
use crate::game::{build_symbolic, Class, SymVertex, SymbolicGame};
use crate::model::{validate_pair, Pts, StateId};
use crate::polytope::build_system;

/// A set of game vertices remembering the fixpoint stage at which each
/// vertex entered. Membership is monotone: once in, never out.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexSet {
    level: Vec<Option<u32>>,
    members: usize,
}

impl VertexSet {
    pub fn empty(len: usize) -> VertexSet {
        VertexSet { level: vec![None; len], members: 0 }
    }

    pub fn contains(&self, id: usize) -> bool {
        self.level[id].is_some()
    }

    /// The stage at which `id` entered, if it did.
    pub fn level(&self, id: usize) -> Option<u32> {
        self.level[id]
    }

    pub fn insert(&mut self, id: usize, level: u32) {
        if self.level[id].is_none() {
            self.level[id] = Some(level);
            self.members += 1;
        }
    }

    pub fn len(&self) -> usize {
        self.members
    }

    pub fn is_empty(&self) -> bool {
        self.members == 0
    }

    pub fn capacity(&self) -> usize {
        self.level.len()
    }

    pub fn iter_members(&self) -> impl Iterator<Item = usize> + '_ {
        self.level.iter().enumerate().filter_map(|(i, l)| l.map(|_| i))
    }

    /// Vertices not in the set.
    pub fn complement_of(&self, len: usize) -> BTreeSet<usize> {
        assert_eq!(len, self.level.len());
        (0..len).filter(|&i| !self.contains(i)).collect()
    }
}

/// The forbidden state pairs induced by the vertices of `ids`: the state
/// pairs of the Refuter vertices among them.
fn refuter_pairs(game: &SymbolicGame, ids: impl Iterator<Item = usize>) -> BTreeSet<(StateId, StateId)> {
    let mut pairs = BTreeSet::new();
    for id in ids {
        if let SymVertex::Refuter { s, t } = game.vertex(id) {
            pairs.insert((s.clone(), t.clone()));
        }
    }
    pairs
}

/// True iff every coupling of the probabilistic vertex `id` puts positive
/// weight on some successor in `c`: the system with the `c`-pairs forced
/// to zero is infeasible.
fn prob_vertex_forced_into(game: &SymbolicGame, id: usize, c: &VertexSet) -> bool {
    let SymVertex::Prob { mu, mu2, .. } = game.vertex(id) else {
        unreachable!("caller checks the class")
    };
    let hit = game.successors(id).iter().copied().filter(|&u| c.contains(u));
    let forbidden = refuter_pairs(game, hit);
    if forbidden.is_empty() {
        return false; // the plain coupling polytope is never empty
    }
    !build_system(mu, mu2, &forbidden).feasible()
}

/// Computes the least fixpoint `U` of vertices from which the Refuter
/// forces reaching the error vertex with positive probability.
///
/// Stage 0 is the error vertex alone. At each later stage a Refuter
/// vertex enters when some successor has entered, a Verifier vertex when
/// all successors have, and a probabilistic vertex when no coupling
/// avoids the entered successors. Levels record the entry stage.
pub fn compute_u_set(game: &SymbolicGame) -> VertexSet {
    let n = game.len();
    let mut u = VertexSet::empty(n);
    u.insert(game.err_id(), 0);

    // Probabilistic vertices are re-examined only when their entered
    // successor count grew; feasibility is monotone in the forbidden set.
    let mut prob_checked_at = vec![0usize; n];

    let mut round: u32 = 0;
    loop {
        round += 1;
        let mut entering: Vec<usize> = Vec::new();
        for (id, vertex) in game.vertices() {
            if u.contains(id) {
                continue;
            }
            let enters = match vertex.class() {
                Class::Refuter => game.successors(id).iter().any(|&s| u.contains(s)),
                Class::Verifier => game.successors(id).iter().all(|&s| u.contains(s)),
                Class::Prob => {
                    let in_u =
                        game.successors(id).iter().filter(|&&s| u.contains(s)).count();
                    if in_u == prob_checked_at[id] {
                        false
                    } else {
                        prob_checked_at[id] = in_u;
                        prob_vertex_forced_into(game, id, &u)
                    }
                }
                Class::Err => false,
            };
            if enters {
                entering.push(id);
            }
        }
        if entering.is_empty() {
            break;
        }
        for id in entering {
            u.insert(id, round);
        }
        assert!(
            (round as usize) <= n,
            "fixpoint must stabilize within one round per vertex"
        );
    }
    u
}

/// Decides probabilistic masking: `implementation` masks its faults with
/// respect to `nominal` iff the initial game vertex avoids the `U` set.
pub fn decide_masking(nominal: &Pts, implementation: &Pts) -> Result<bool, ModelError> {
    let pair = validate_pair(nominal, implementation)?;
    let game = build_symbolic(&pair);
    let u = compute_u_set(&game);
    Ok(!u.contains(game.initial()))
}

/// One application of the existential predecessor operator: vertices with
/// some successor in `c`, using edges for every vertex class.
pub fn pre_exists(game: &SymbolicGame, c: &VertexSet) -> VertexSet {
    let mut out = VertexSet::empty(game.len());
    for (id, _) in game.vertices() {
        if game.successors(id).iter().any(|&s| c.contains(s)) {
            out.insert(id, 0);
        }
    }
    out
}

/// One application of the universal predecessor operator under Refuter
/// fairness: Verifier vertices whose successors all lie in `c`, Refuter
/// vertices with some successor in `c` (fairness eventually takes every
/// enabled edge), and probabilistic vertices where no coupling avoids
/// `c`.
pub fn pre_forall(game: &SymbolicGame, c: &VertexSet) -> VertexSet {
    let mut out = VertexSet::empty(game.len());
    for (id, vertex) in game.vertices() {
        let holds = match vertex.class() {
            Class::Verifier => game.successors(id).iter().all(|&s| c.contains(s)),
            Class::Refuter | Class::Err => {
                game.successors(id).iter().any(|&s| c.contains(s))
            }
            Class::Prob => prob_vertex_forced_into(game, id, c),
        };
        if holds {
            out.insert(id, 0);
        }
    }
    out
}

enum PreKind {
    Exists,
    Forall,
}

/// Least fixpoint of `c ∪ pre(·)` starting from `c`; levels record the
/// closure stage at which each vertex entered.
fn pre_star(game: &SymbolicGame, seed: &VertexSet, kind: PreKind) -> VertexSet {
    let n = game.len();
    let mut acc = VertexSet::empty(n);
    for id in seed.iter_members() {
        acc.insert(id, 0);
    }
    let mut prob_checked_at = vec![usize::MAX; n];
    let mut round: u32 = 0;
    loop {
        round += 1;
        let mut entering = Vec::new();
        for (id, vertex) in game.vertices() {
            if acc.contains(id) {
                continue;
            }
            let enters = match kind {
                PreKind::Exists => game.successors(id).iter().any(|&s| acc.contains(s)),
                PreKind::Forall => match vertex.class() {
                    Class::Verifier => {
                        game.successors(id).iter().all(|&s| acc.contains(s))
                    }
                    Class::Refuter | Class::Err => {
                        game.successors(id).iter().any(|&s| acc.contains(s))
                    }
                    Class::Prob => {
                        let in_c =
                            game.successors(id).iter().filter(|&&s| acc.contains(s)).count();
                        if in_c == prob_checked_at[id] {
                            false
                        } else {
                            prob_checked_at[id] = in_c;
                            prob_vertex_forced_into(game, id, &acc)
                        }
                    }
                },
            };
            if enters {
                entering.push(id);
            }
        }
        if entering.is_empty() {
            break;
        }
        for id in entering {
            acc.insert(id, round);
        }
        assert!(
            (round as usize) <= n,
            "fixpoint must stabilize within one round per vertex"
        );
    }
    acc
}

/// Reflexive-transitive closure of [`pre_exists`] over `seed`.
pub fn pre_exists_star(game: &SymbolicGame, seed: &VertexSet) -> VertexSet {
    pre_star(game, seed, PreKind::Exists)
}

/// Reflexive-transitive closure of [`pre_forall`] over `seed`.
pub fn pre_forall_star(game: &SymbolicGame, seed: &VertexSet) -> VertexSet {
    pre_star(game, seed, PreKind::Forall)
}

/// Decides whether the vertex snippet of the game is almost-surely
/// failing under a fair Refuter: from the initial vertex, no Verifier
/// strategy keeps the error vertex avoidable once the Refuter plays
/// fair.
///
/// The verdict is computed on the symbolic graph: the inner fixpoint
/// collects vertices from which failure is forced under fairness, the
/// outer fixpoint collects vertices from which the Verifier can still
/// reach the unforced region.
pub fn check_failing(game: &SymbolicGame) -> bool {
    let mut err_seed = VertexSet::empty(game.len());
    err_seed.insert(game.err_id(), 0);
    let forced = pre_forall_star(game, &err_seed);

    let mut unforced = VertexSet::empty(game.len());
    for id in 0..game.len() {
        if !forced.contains(id) {
            unforced.insert(id, 0);
        }
    }
    let escapable = pre_exists_star(game, &unforced);
    !escapable.contains(game.initial())
}

/// A path witnessing a refutation: from the initial vertex (which must be
/// in `u`) down the entry levels to the error vertex.
pub fn refutation_trace(game: &SymbolicGame, u: &VertexSet) -> Option<Vec<usize>> {
    if !u.contains(game.initial()) {
        return None;
    }
    let mut path = vec![game.initial()];
    let mut current = game.initial();
    while current != game.err_id() {
        // Entering at level l requires a successor that entered earlier;
        // following minimal levels terminates at the error vertex.
        let next = game
            .successors(current)
            .iter()
            .copied()
            .filter(|&s| u.contains(s))
            .min_by_key(|&s| (u.level(s), s))?;
        path.push(next);
        current = next;
    }
    Some(path)
}
