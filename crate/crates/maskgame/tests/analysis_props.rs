//! Property-style checks for the symbolic analyses.

mod common;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use maskgame::analysis::{pre_exists, pre_forall, VertexSet};
use maskgame::game::{build_snippet, build_symbolic, Class, SnipVertex};
use maskgame::model::validate_pair;
use maskgame::polytope::DEFAULT_VERTEX_CAP;

use common::*;

fn random_set(rng: &mut ChaCha8Rng, len: usize, density: f64) -> VertexSet {
    let mut set = VertexSet::empty(len);
    for id in 0..len {
        if rng.gen_bool(density) {
            set.insert(id, 0);
        }
    }
    set
}

fn union(a: &VertexSet, b: &VertexSet, len: usize) -> VertexSet {
    let mut out = VertexSet::empty(len);
    for id in 0..len {
        if a.contains(id) || b.contains(id) {
            out.insert(id, 0);
        }
    }
    out
}

fn subset(a: &VertexSet, b: &VertexSet, len: usize) -> bool {
    (0..len).all(|id| !a.contains(id) || b.contains(id))
}

#[test]
fn pre_operators_are_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let pairs = {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        (0..6).map(|_| random_pair(&mut rng)).collect::<Vec<_>>()
    };
    for (nominal, imp) in &pairs {
        let game = build_symbolic(&validate_pair(nominal, imp).unwrap());
        let n = game.len();
        for _ in 0..4 {
            let small = random_set(&mut rng, n, 0.3);
            let extra = random_set(&mut rng, n, 0.3);
            let large = union(&small, &extra, n);
            assert!(subset(&pre_exists(&game, &small), &pre_exists(&game, &large), n));
            assert!(subset(&pre_forall(&game, &small), &pre_forall(&game, &large), n));
        }
    }
}

/// The symbolic universal-predecessor condition for probabilistic
/// vertices agrees with enumerating the snippet's vertex couplings:
/// no coupling avoids the set iff every vertex coupling hits it.
#[test]
fn pre_forall_prob_case_matches_snippet_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(57);
    let pairs = {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        (0..8).map(|_| random_pair(&mut rng)).collect::<Vec<_>>()
    };
    let mut checked = 0;
    for (nominal, imp) in &pairs {
        let game = build_symbolic(&validate_pair(nominal, imp).unwrap());
        let snippet = build_snippet(&game, DEFAULT_VERTEX_CAP).unwrap();
        for _ in 0..4 {
            // Random set of Refuter vertices.
            let mut c = VertexSet::empty(game.len());
            for (id, vertex) in game.vertices() {
                if vertex.class() == Class::Refuter && rng.gen_bool(0.4) {
                    c.insert(id, 0);
                }
            }
            let pre = pre_forall(&game, &c);
            for (sym_id, vertex) in game.vertices() {
                if vertex.class() != Class::Prob {
                    continue;
                }
                // Every expansion of this vertex carries one polytope
                // vertex coupling; the vertex is forced into `c` iff all
                // of them put positive weight on a successor in `c`.
                let every_coupling_hits = snippet.expansions(sym_id).iter().all(|&sid| {
                    let SnipVertex::Prob { w, .. } = snippet.vertex(sid) else {
                        unreachable!()
                    };
                    w.support().any(|(t1, t2)| {
                        let succ = game
                            .id_of(&maskgame::SymVertex::Refuter {
                                s: t1.clone(),
                                t: t2.clone(),
                            })
                            .unwrap();
                        c.contains(succ)
                    })
                });
                assert_eq!(
                    pre.contains(sym_id),
                    every_coupling_hits,
                    "universal predecessor disagrees with coupling enumeration"
                );
                checked += 1;
            }
        }
    }
    assert!(checked > 50, "need a meaningful number of probabilistic vertices");
}
