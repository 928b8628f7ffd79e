//! Quantifying fault tolerance: expected weighted milestones before
//! failure.
//!
//! A milestone assigns a non-negative integer weight to implementation
//! action labels; a play collects the weight of the challenged label once
//! per round. On games that almost surely fail under a fair Refuter, the
//! expected total collected weight is well-defined and is the greatest
//! fixpoint of a Bellman-style functional over `[0, U]`, approached from
//! above by value iteration.
//!
//! Structure (which coupling polytopes exist, who can move where) was
//! already decided exactly; the iteration itself runs in floating point.
//! No comparison against zero depends on a float.

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::error::{PolytopeError, ValueError};
use crate::game::{build_snippet, Class, SnippetGame, SymVertex, SymbolicGame};
use crate::polytope::{build_system, enumerate_vertices, DEFAULT_VERTEX_CAP};
use crate::rational::{rat_from_f64, rat_int, rat_to_f64_saturating, Rational};

/// Non-negative integer weights on implementation action labels; absent
/// labels weigh zero.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Milestone {
    weights: BTreeMap<String, u64>,
}

impl Milestone {
    pub fn new() -> Milestone {
        Milestone::default()
    }

    pub fn with(mut self, label: impl Into<String>, weight: u64) -> Milestone {
        self.weights.insert(label.into(), weight);
        self
    }

    pub fn set(&mut self, label: impl Into<String>, weight: u64) {
        self.weights.insert(label.into(), weight);
    }

    pub fn weight(&self, label: &str) -> u64 {
        self.weights.get(label).copied().unwrap_or(0)
    }

    pub fn max_weight(&self) -> u64 {
        self.weights.values().copied().max().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.weights.iter().map(|(l, &w)| (l.as_str(), w))
    }

    /// Every weight multiplied by `k`.
    pub fn scaled(&self, k: u64) -> Milestone {
        Milestone {
            weights: self.weights.iter().map(|(l, &w)| (l.clone(), w * k)).collect(),
        }
    }
}

/// A value assignment to the game vertices, clamped to `[0, bound]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueVector {
    pub values: Vec<f64>,
    pub bound: f64,
}

impl ValueVector {
    /// The top element: `bound` everywhere except 0 at the error vertex.
    pub fn top(game: &SymbolicGame, bound: f64) -> ValueVector {
        let mut values = vec![bound; game.len()];
        values[game.err_id()] = 0.0;
        ValueVector { values, bound }
    }

    pub fn get(&self, id: usize) -> f64 {
        self.values[id]
    }

    /// Largest pointwise difference to `other`.
    pub fn distance(&self, other: &ValueVector) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// True iff `self <= other` pointwise, with slack for float noise.
    pub fn le_pointwise(&self, other: &ValueVector) -> bool {
        self.values
            .iter()
            .zip(&other.values)
            .all(|(a, b)| *a <= b * (1.0 + 1e-12) + 1e-12)
    }
}

/// The milestone weight collected at a vertex: the weight of the
/// challenged label at Verifier vertices, 0 elsewhere.
pub fn reward(vertex: &SymVertex, milestone: &Milestone) -> u64 {
    match vertex.challenge_label() {
        Some(label) => milestone.weight(label),
        None => 0,
    }
}

/// The default upper bound for the value lattice, computed from the
/// vertex snippet: `r_max * N / p_min^N` with `N` the number of snippet
/// vertices and `p_min` the least positive transition probability of any
/// snippet coupling. From any vertex the error sink is reached within `N`
/// steps with probability at least `p_min^N` under any strategy pair that
/// absorbs at all, which bounds the expected number of rounds.
pub fn compute_bound_from_snippet(snippet: &SnippetGame, milestone: &Milestone) -> Rational {
    let r_max = rat_int(milestone.max_weight() as i64);
    if r_max.is_zero() {
        return Rational::zero();
    }
    let n = snippet.len();
    let p_min = snippet
        .min_positive_prob()
        .map(|p| p.ratio().clone())
        .unwrap_or_else(|| rat_int(1));
    r_max * rat_int(n as i64) / p_min.pow(n as i32)
}

/// Like [`compute_bound_from_snippet`], building the snippet first.
pub fn compute_bound(
    game: &SymbolicGame,
    milestone: &Milestone,
    cap: usize,
) -> Result<Rational, PolytopeError> {
    let snippet = build_snippet(game, cap)?;
    Ok(compute_bound_from_snippet(&snippet, milestone))
}

/// One synchronous application of the value functional:
///
/// * error vertex: 0;
/// * Refuter vertices: the least successor value;
/// * Verifier vertices: reward plus the greatest successor value;
/// * probabilistic vertices: the greatest expected successor value over
///   all couplings, computed by linear programming over the coupling
///   polytope (linear maxima over a polytope are attained at a vertex);
///
/// everything clamped to `[0, bound]`.
pub fn gamma_step(game: &SymbolicGame, milestone: &Milestone, f: &ValueVector) -> ValueVector {
    let bound = f.bound;
    let mut values = vec![0.0f64; game.len()];
    for (id, vertex) in game.vertices() {
        values[id] = match vertex.class() {
            Class::Err => 0.0,
            Class::Refuter => {
                let m = game
                    .successors(id)
                    .iter()
                    .map(|&s| f.get(s))
                    .fold(f64::INFINITY, f64::min);
                m.min(bound)
            }
            Class::Verifier => {
                let r = reward(vertex, milestone) as f64;
                let m = game
                    .successors(id)
                    .iter()
                    .map(|&s| f.get(s))
                    .fold(f64::NEG_INFINITY, f64::max);
                (r + m).min(bound)
            }
            Class::Prob => {
                let SymVertex::Prob { mu, mu2, .. } = vertex else { unreachable!() };
                let empty = std::collections::BTreeSet::new();
                let sys = build_system(mu, mu2, &empty);
                let (opt, _) = sys
                    .maximize(|t1, t2| {
                        let succ = game
                            .id_of(&SymVertex::Refuter { s: t1.clone(), t: t2.clone() })
                            .expect("supports stay within the game");
                        rat_from_f64(f.get(succ))
                    })
                    .expect("plain coupling polytopes are feasible");
                rat_to_f64_saturating(&opt).min(bound)
            }
        };
        values[id] = values[id].max(0.0);
    }
    ValueVector { values, bound }
}

/// Result of the value iteration.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    /// Value at the initial vertex (an upper estimate: iteration descends
    /// from the top of the lattice).
    pub value: f64,
    /// Final values at every vertex.
    pub values: ValueVector,
    pub iterations: u64,
    /// Last maximal pointwise change.
    pub residual: f64,
    pub converged: bool,
    /// The bound actually used, possibly saturated to the f64 range.
    pub bound: f64,
    /// The exact bound.
    pub bound_exact: Rational,
}

/// Per-vertex evaluation tables for the iteration loop: the polytope
/// vertices of each probabilistic vertex, as weights over successor ids.
/// Vertices whose polytope exceeds the enumeration cap fall back to the
/// LP per step.
enum ProbEval {
    Couplings(Vec<Vec<(usize, f64)>>),
    Lp,
}

/// Iterates the value functional from the top element until the change
/// and its geometric-tail estimate drop below `epsilon`, or `max_iters`
/// is reached.
///
/// Fails if the game is not almost-surely failing under fairness (the
/// value would not be well-defined), or if no bound is given and the
/// snippet needed for the default bound exceeds the enumeration cap.
pub fn solve_value(
    game: &SymbolicGame,
    milestone: &Milestone,
    epsilon: f64,
    max_iters: u64,
    bound_override: Option<Rational>,
) -> Result<SolveOutcome, ValueError> {
    assert!(epsilon > 0.0, "epsilon must be positive");
    if !crate::analysis::check_failing(game) {
        return Err(ValueError::NotFailing);
    }
    let bound_exact = match bound_override {
        Some(b) => b,
        None => compute_bound(game, milestone, DEFAULT_VERTEX_CAP)
            .map_err(ValueError::BoundNeedsSnippet)?,
    };
    let bound = rat_to_f64_saturating(&bound_exact).max(0.0);

    // Precompute the evaluation tables.
    let mut rewards = vec![0.0f64; game.len()];
    let mut prob_eval: Vec<Option<ProbEval>> = Vec::with_capacity(game.len());
    for (id, vertex) in game.vertices() {
        rewards[id] = reward(vertex, milestone) as f64;
        let eval = match vertex {
            SymVertex::Prob { mu, mu2, .. } => {
                match enumerate_vertices(mu, mu2, DEFAULT_VERTEX_CAP) {
                    Ok(vertices) => Some(ProbEval::Couplings(
                        vertices
                            .iter()
                            .map(|w| {
                                w.iter()
                                    .map(|((t1, t2), p)| {
                                        let succ = game
                                            .id_of(&SymVertex::Refuter {
                                                s: t1.clone(),
                                                t: t2.clone(),
                                            })
                                            .expect("supports stay within the game");
                                        (succ, p.to_f64())
                                    })
                                    .collect()
                            })
                            .collect(),
                    )),
                    Err(PolytopeError::CapExceeded { .. }) => Some(ProbEval::Lp),
                    Err(e) => unreachable!("vertex enumeration only fails on the cap: {e}"),
                }
            }
            _ => None,
        };
        prob_eval.push(eval);
    }

    let mut f = ValueVector::top(game, bound);
    let mut iterations: u64 = 0;
    let mut residual = f64::INFINITY;
    let mut prev_residual = f64::INFINITY;
    let mut recent_ratios: Vec<f64> = Vec::new();
    let mut converged = false;

    while iterations < max_iters {
        let mut values = vec![0.0f64; game.len()];
        for (id, vertex) in game.vertices() {
            values[id] = match vertex.class() {
                Class::Err => 0.0,
                Class::Refuter => game
                    .successors(id)
                    .iter()
                    .map(|&s| f.get(s))
                    .fold(f64::INFINITY, f64::min)
                    .min(bound),
                Class::Verifier => {
                    let m = game
                        .successors(id)
                        .iter()
                        .map(|&s| f.get(s))
                        .fold(f64::NEG_INFINITY, f64::max);
                    (rewards[id] + m).min(bound)
                }
                Class::Prob => match prob_eval[id].as_ref().expect("prob vertices have tables") {
                    ProbEval::Couplings(couplings) => couplings
                        .iter()
                        .map(|w| w.iter().map(|&(s, p)| p * f.get(s)).sum::<f64>())
                        .fold(f64::NEG_INFINITY, f64::max)
                        .min(bound),
                    ProbEval::Lp => {
                        let SymVertex::Prob { mu, mu2, .. } = vertex else { unreachable!() };
                        let empty = std::collections::BTreeSet::new();
                        let (opt, _) = build_system(mu, mu2, &empty)
                            .maximize(|t1, t2| {
                                let succ = game
                                    .id_of(&SymVertex::Refuter {
                                        s: t1.clone(),
                                        t: t2.clone(),
                                    })
                                    .expect("supports stay within the game");
                                rat_from_f64(f.get(succ))
                            })
                            .expect("plain coupling polytopes are feasible");
                        rat_to_f64_saturating(&opt).min(bound)
                    }
                },
            };
            values[id] = values[id].max(0.0);
        }
        let next = ValueVector { values, bound };
        assert!(next.le_pointwise(&f), "iteration from the top must descend");
        residual = next.distance(&f);
        f = next;
        iterations += 1;

        if prev_residual.is_finite() && prev_residual > 0.0 {
            recent_ratios.push((residual / prev_residual).clamp(0.0, 0.999_999));
            if recent_ratios.len() > 16 {
                recent_ratios.remove(0);
            }
        }
        prev_residual = residual;

        if residual < epsilon {
            // Estimate the geometric tail left above the fixpoint; stop
            // only when it is also within epsilon.
            let ratio = recent_ratios.iter().copied().fold(0.0, f64::max);
            let tail = if ratio < 1.0 { residual * ratio / (1.0 - ratio) } else { f64::INFINITY };
            if residual == 0.0 || tail <= epsilon {
                converged = true;
                break;
            }
        }
    }

    Ok(SolveOutcome {
        value: f.get(game.initial()),
        values: f,
        iterations,
        residual,
        converged,
        bound,
        bound_exact,
    })
}
