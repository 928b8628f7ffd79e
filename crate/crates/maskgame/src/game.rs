//! The symbolic masking game graph and its finite vertex snippet.
//!
//! The game is played on pairs of states. The Refuter challenges with a
//! transition of either model; the Verifier answers with a matching
//! transition of the opposite model (for a fault challenge she is forced
//! to idle with the Dirac distribution on the nominal state) and a
//! coupling of the two distributions; then the pair advances according to
//! the coupling. A Verifier without a matching answer is sent to the
//! error vertex. Infinite plays are wins for the Verifier, reaching the
//! error vertex is a win for the Refuter.
//!
//! The full game has uncountably many coupling choices, so probabilistic
//! vertices here carry the two contending distributions instead of a
//! coupling; the coupling choice is analysed through the linear system of
//! [`crate::polytope::CouplingSystem`]. The [`SnippetGame`] instantiates
//! each probabilistic vertex with the finitely many polytope-vertex
//! couplings, which suffices for the quantitative analysis and for the
//! brute-force oracle.

use std::cmp::Ordering;
use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use crate::error::PolytopeError;
use crate::model::{dirac, Dist, Prob, StateId, ValidatedPair};
use crate::polytope::{enumerate_vertices, Coupling};

/// Which model the Refuter's challenge was taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Side {
    Nominal,
    Implementation,
}

impl Side {
    /// The superscript used in renderings: 1 for nominal, 2 for
    /// implementation.
    pub fn index(self) -> u8 {
        match self {
            Side::Nominal => 1,
            Side::Implementation => 2,
        }
    }
}

/// Player classes of game vertices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Class {
    Refuter,
    Verifier,
    Prob,
    Err,
}

/// A vertex of the symbolic game graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SymVertex {
    /// The Refuter picks a challenge at state pair `(s, t)`.
    Refuter { s: StateId, t: StateId },
    /// The Verifier must answer `label` (played on `side`, with pending
    /// distribution `pending`) at state pair `(s, t)`.
    Verifier { s: StateId, t: StateId, label: String, side: Side, pending: Dist },
    /// The coupling of `(mu, mu2)` is about to resolve the round.
    Prob { s: StateId, t: StateId, mu: Dist, mu2: Dist },
    /// The error sink: the Verifier failed to match a challenge.
    Err,
}

impl SymVertex {
    pub fn class(&self) -> Class {
        match self {
            SymVertex::Refuter { .. } => Class::Refuter,
            SymVertex::Verifier { .. } => Class::Verifier,
            SymVertex::Prob { .. } => Class::Prob,
            SymVertex::Err => Class::Err,
        }
    }

    /// The challenged action label, for Verifier vertices.
    pub fn challenge_label(&self) -> Option<&str> {
        match self {
            SymVertex::Verifier { label, .. } => Some(label),
            _ => None,
        }
    }

    fn sort_key(&self) -> (u8, Option<(&StateId, &StateId)>) {
        match self {
            SymVertex::Refuter { s, t } => (0, Some((s, t))),
            SymVertex::Verifier { s, t, .. } => (1, Some((s, t))),
            SymVertex::Prob { s, t, .. } => (2, Some((s, t))),
            SymVertex::Err => (3, None),
        }
    }
}

// Vertices order by state pair first, then class, then the remaining
// detail; the error vertex sorts last. This fixes iteration order for
// fixpoints and serializations.
impl Ord for SymVertex {
    fn cmp(&self, other: &Self) -> Ordering {
        let (ca, pa) = self.sort_key();
        let (cb, pb) = other.sort_key();
        pa.cmp(&pb)
            .then(ca.cmp(&cb))
            .then_with(|| match (self, other) {
                (
                    SymVertex::Verifier { label: la, side: sa, pending: da, .. },
                    SymVertex::Verifier { label: lb, side: sb, pending: db, .. },
                ) => la.cmp(lb).then(sa.cmp(sb)).then(da.cmp(db)),
                (
                    SymVertex::Prob { mu: ma, mu2: m2a, .. },
                    SymVertex::Prob { mu: mb, mu2: m2b, .. },
                ) => ma.cmp(mb).then(m2a.cmp(m2b)),
                _ => Ordering::Equal,
            })
    }
}

impl PartialOrd for SymVertex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for SymVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymVertex::Refuter { s, t } => write!(f, "({s}, -, {t}, R)"),
            SymVertex::Verifier { s, t, label, side, .. } => {
                write!(f, "({s}, {label}^{}, {t}, V)", side.index())
            }
            SymVertex::Prob { s, t, .. } => write!(f, "({s}, -, {t}, P)"),
            SymVertex::Err => write!(f, "v_err"),
        }
    }
}

/// The symbolic game graph of a validated model pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolicGame {
    vertices: Vec<SymVertex>,
    successors: Vec<Vec<usize>>,
    predecessors: Vec<Vec<usize>>,
    initial: usize,
    err: usize,
}

impl SymbolicGame {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex(&self, id: usize) -> &SymVertex {
        &self.vertices[id]
    }

    pub fn vertices(&self) -> impl Iterator<Item = (usize, &SymVertex)> {
        self.vertices.iter().enumerate()
    }

    pub fn id_of(&self, v: &SymVertex) -> Option<usize> {
        self.vertices.binary_search_by(|probe| probe.cmp(v)).ok()
    }

    pub fn successors(&self, id: usize) -> &[usize] {
        &self.successors[id]
    }

    pub fn predecessors(&self, id: usize) -> &[usize] {
        &self.predecessors[id]
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn err_id(&self) -> usize {
        self.err
    }

    pub fn edge_count(&self) -> usize {
        self.successors.iter().map(|s| s.len()).sum()
    }

    /// Vertex counts per class: (refuter, verifier, probabilistic).
    pub fn class_counts(&self) -> (usize, usize, usize) {
        let mut r = 0;
        let mut v = 0;
        let mut p = 0;
        for vx in &self.vertices {
            match vx.class() {
                Class::Refuter => r += 1,
                Class::Verifier => v += 1,
                Class::Prob => p += 1,
                Class::Err => {}
            }
        }
        (r, v, p)
    }

    /// Rebuilds a game from sorted vertices and an edge list; used by the
    /// JSON reader.
    pub(crate) fn from_parts(
        vertices: Vec<SymVertex>,
        edges: &[(usize, usize)],
        initial: usize,
    ) -> SymbolicGame {
        let n = vertices.len();
        let err = vertices
            .iter()
            .position(|v| *v == SymVertex::Err)
            .expect("game graphs always carry the error vertex");
        let mut successors = vec![Vec::new(); n];
        let mut predecessors = vec![Vec::new(); n];
        for &(a, b) in edges {
            successors[a].push(b);
        }
        for succ in &mut successors {
            succ.sort_unstable();
            succ.dedup();
        }
        for (a, succ) in successors.iter().enumerate() {
            for &b in succ {
                predecessors[b].push(a);
            }
        }
        SymbolicGame { vertices, successors, predecessors, initial, err }
    }
}

/// Builds the symbolic game graph for a validated pair, restricted to the
/// vertices reachable from the initial Refuter vertex (plus the error
/// vertex, which is part of every game).
pub fn build_symbolic(pair: &ValidatedPair) -> SymbolicGame {
    let nominal = pair.nominal;
    let imp = pair.implementation;
    let faults = pair.faults();

    let mut index: BTreeMap<SymVertex, usize> = BTreeMap::new();
    let mut vertices: Vec<SymVertex> = Vec::new();
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut queue: VecDeque<usize> = VecDeque::new();

    let mut intern = |v: SymVertex,
                      vertices: &mut Vec<SymVertex>,
                      queue: &mut VecDeque<usize>| {
        if let Some(&id) = index.get(&v) {
            return id;
        }
        let id = vertices.len();
        index.insert(v.clone(), id);
        vertices.push(v);
        queue.push_back(id);
        id
    };

    let initial = intern(
        SymVertex::Refuter { s: nominal.initial().clone(), t: imp.initial().clone() },
        &mut vertices,
        &mut queue,
    );
    let err = intern(SymVertex::Err, &mut vertices, &mut queue);

    while let Some(id) = queue.pop_front() {
        let vertex = vertices[id].clone();
        match vertex {
            SymVertex::Refuter { s, t } => {
                let mut succ = Vec::new();
                for tr in nominal.outgoing(&s) {
                    succ.push(SymVertex::Verifier {
                        s: s.clone(),
                        t: t.clone(),
                        label: tr.label.clone(),
                        side: Side::Nominal,
                        pending: tr.target.clone(),
                    });
                }
                for tr in imp.outgoing(&t) {
                    succ.push(SymVertex::Verifier {
                        s: s.clone(),
                        t: t.clone(),
                        label: tr.label.clone(),
                        side: Side::Implementation,
                        pending: tr.target.clone(),
                    });
                }
                assert!(!succ.is_empty(), "PTS totality rules out Refuter deadlocks");
                for v in succ {
                    let to = intern(v, &mut vertices, &mut queue);
                    edges.push((id, to));
                }
            }
            SymVertex::Verifier { s, t, label, side, pending } => {
                let mut any = false;
                match side {
                    Side::Nominal => {
                        // The challenge came from the nominal model; the
                        // Verifier answers with an implementation
                        // transition on the same label.
                        for tr in imp.outgoing_labelled(&t, &label) {
                            let to = intern(
                                SymVertex::Prob {
                                    s: s.clone(),
                                    t: t.clone(),
                                    mu: pending.clone(),
                                    mu2: tr.target.clone(),
                                },
                                &mut vertices,
                                &mut queue,
                            );
                            edges.push((id, to));
                            any = true;
                        }
                    }
                    Side::Implementation => {
                        if faults.contains(&label) {
                            // Fault challenge: the Verifier is forced to
                            // idle with the Dirac distribution.
                            let to = intern(
                                SymVertex::Prob {
                                    s: s.clone(),
                                    t: t.clone(),
                                    mu: dirac(&s),
                                    mu2: pending.clone(),
                                },
                                &mut vertices,
                                &mut queue,
                            );
                            edges.push((id, to));
                            any = true;
                        } else {
                            for tr in nominal.outgoing_labelled(&s, &label) {
                                let to = intern(
                                    SymVertex::Prob {
                                        s: s.clone(),
                                        t: t.clone(),
                                        mu: tr.target.clone(),
                                        mu2: pending.clone(),
                                    },
                                    &mut vertices,
                                    &mut queue,
                                );
                                edges.push((id, to));
                                any = true;
                            }
                        }
                    }
                }
                if !any {
                    edges.push((id, err));
                }
            }
            SymVertex::Prob { s: _, t: _, mu, mu2 } => {
                for t1 in mu.support() {
                    for t2 in mu2.support() {
                        let to = intern(
                            SymVertex::Refuter { s: t1.clone(), t: t2.clone() },
                            &mut vertices,
                            &mut queue,
                        );
                        edges.push((id, to));
                    }
                }
            }
            SymVertex::Err => {
                edges.push((id, err));
            }
        }
    }

    // Renumber into the canonical vertex order.
    let mut order: Vec<usize> = (0..vertices.len()).collect();
    order.sort_by(|&a, &b| vertices[a].cmp(&vertices[b]));
    let mut renumber = vec![0usize; vertices.len()];
    for (new, &old) in order.iter().enumerate() {
        renumber[old] = new;
    }
    let mut sorted = vertices.clone();
    sorted.sort();
    let edges: Vec<(usize, usize)> =
        edges.into_iter().map(|(a, b)| (renumber[a], renumber[b])).collect();
    SymbolicGame::from_parts(sorted, &edges, renumber[initial])
}

/// A vertex of the snippet: like the symbolic graph, but probabilistic
/// vertices carry one concrete polytope-vertex coupling.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum SnipVertex {
    Refuter { s: StateId, t: StateId },
    Verifier { s: StateId, t: StateId, label: String, side: Side, pending: Dist },
    Prob { s: StateId, t: StateId, mu: Dist, mu2: Dist, w: Coupling },
    Err,
}

impl SnipVertex {
    pub fn class(&self) -> Class {
        match self {
            SnipVertex::Refuter { .. } => Class::Refuter,
            SnipVertex::Verifier { .. } => Class::Verifier,
            SnipVertex::Prob { .. } => Class::Prob,
            SnipVertex::Err => Class::Err,
        }
    }

    pub fn challenge_label(&self) -> Option<&str> {
        match self {
            SnipVertex::Verifier { label, .. } => Some(label),
            _ => None,
        }
    }
}

/// The finite vertex snippet of the masking game: each probabilistic
/// vertex of the symbolic graph expanded into one concrete vertex per
/// polytope-vertex coupling.
#[derive(Debug, Clone)]
pub struct SnippetGame {
    vertices: Vec<SnipVertex>,
    successors: Vec<Vec<usize>>,
    /// Probabilistic transition function: per Prob vertex, its successor
    /// distribution (aligned with `successors`).
    delta: Vec<Option<Vec<(usize, Prob)>>>,
    /// Originating symbolic vertex of each snippet vertex.
    sym_of: Vec<usize>,
    initial: usize,
    err: usize,
}

impl SnippetGame {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex(&self, id: usize) -> &SnipVertex {
        &self.vertices[id]
    }

    pub fn vertices(&self) -> impl Iterator<Item = (usize, &SnipVertex)> {
        self.vertices.iter().enumerate()
    }

    pub fn successors(&self, id: usize) -> &[usize] {
        &self.successors[id]
    }

    /// The successor distribution of a probabilistic vertex.
    pub fn delta(&self, id: usize) -> Option<&[(usize, Prob)]> {
        self.delta[id].as_deref()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn err_id(&self) -> usize {
        self.err
    }

    /// The symbolic vertex this snippet vertex was expanded from.
    pub fn symbolic_id(&self, id: usize) -> usize {
        self.sym_of[id]
    }

    /// All snippet vertices expanded from a symbolic vertex.
    pub fn expansions(&self, sym_id: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.sym_of[i] == sym_id).collect()
    }

    /// The minimum positive transition probability over all probabilistic
    /// vertices, if any exist.
    pub fn min_positive_prob(&self) -> Option<Prob> {
        self.delta
            .iter()
            .flatten()
            .flat_map(|d| d.iter().map(|(_, p)| p))
            .min_by(|a, b| a.ratio().cmp(b.ratio()))
            .cloned()
    }
}

/// Expands a symbolic game into its vertex snippet. Fails if some
/// coupling polytope exceeds the enumeration cap.
pub fn build_snippet(game: &SymbolicGame, cap: usize) -> Result<SnippetGame, PolytopeError> {
    // Map each symbolic vertex to its snippet expansion ids.
    let mut expansion: Vec<Vec<usize>> = vec![Vec::new(); game.len()];
    let mut vertices: Vec<SnipVertex> = Vec::new();
    let mut sym_of: Vec<usize> = Vec::new();

    for (id, vx) in game.vertices() {
        match vx {
            SymVertex::Refuter { s, t } => {
                expansion[id].push(vertices.len());
                sym_of.push(id);
                vertices.push(SnipVertex::Refuter { s: s.clone(), t: t.clone() });
            }
            SymVertex::Verifier { s, t, label, side, pending } => {
                expansion[id].push(vertices.len());
                sym_of.push(id);
                vertices.push(SnipVertex::Verifier {
                    s: s.clone(),
                    t: t.clone(),
                    label: label.clone(),
                    side: *side,
                    pending: pending.clone(),
                });
            }
            SymVertex::Prob { s, t, mu, mu2 } => {
                for w in enumerate_vertices(mu, mu2, cap)? {
                    expansion[id].push(vertices.len());
                    sym_of.push(id);
                    vertices.push(SnipVertex::Prob {
                        s: s.clone(),
                        t: t.clone(),
                        mu: mu.clone(),
                        mu2: mu2.clone(),
                        w,
                    });
                }
            }
            SymVertex::Err => {
                expansion[id].push(vertices.len());
                sym_of.push(id);
                vertices.push(SnipVertex::Err);
            }
        }
    }

    let mut successors: Vec<Vec<usize>> = vec![Vec::new(); vertices.len()];
    let mut delta: Vec<Option<Vec<(usize, Prob)>>> = vec![None; vertices.len()];
    for (id, vx) in game.vertices() {
        match vx {
            SymVertex::Refuter { .. } | SymVertex::Verifier { .. } | SymVertex::Err => {
                let from = expansion[id][0];
                let mut succ = Vec::new();
                for &sym_succ in game.successors(id) {
                    succ.extend(expansion[sym_succ].iter().copied());
                }
                succ.sort_unstable();
                succ.dedup();
                successors[from] = succ;
            }
            SymVertex::Prob { .. } => {
                for &snip_id in &expansion[id] {
                    let SnipVertex::Prob { w, .. } = &vertices[snip_id] else {
                        unreachable!()
                    };
                    let mut dist = Vec::new();
                    for ((t1, t2), p) in w.iter() {
                        let succ_sym = game
                            .id_of(&SymVertex::Refuter { s: t1.clone(), t: t2.clone() })
                            .expect("coupling support stays within the game");
                        let succ = expansion[succ_sym][0];
                        dist.push((succ, p.clone()));
                    }
                    dist.sort_by_key(|(id, _)| *id);
                    successors[snip_id] = dist.iter().map(|(id, _)| *id).collect();
                    delta[snip_id] = Some(dist);
                }
            }
        }
    }

    let initial = expansion[game.initial()][0];
    let err = expansion[game.err_id()][0];
    Ok(SnippetGame { vertices, successors, delta, sym_of, initial, err })
}
