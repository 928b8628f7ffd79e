//! Value functional and value iteration behaviour.

mod common;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use maskgame::error::ValueError;
use maskgame::game::{build_snippet, build_symbolic, Class, SymVertex, SymbolicGame};
use maskgame::model::validate_pair;
use maskgame::parse_model;
use maskgame::polytope::{build_system, enumerate_vertices, DEFAULT_VERTEX_CAP};
use maskgame::quantitative::{
    compute_bound_from_snippet, gamma_step, reward, solve_value, Milestone, ValueVector,
};
use maskgame::rational::{rat_from_f64, rat_to_f64_saturating};

use common::*;

fn one_shot_pair() -> (maskgame::Pts, maskgame::Pts) {
    let nominal = parse_model("var y: [0..0] init 0;\n[a] true -> true;\n").unwrap();
    let imp = parse_model(
        "faults: fault;\nvar x: [0..1] init 0;\n\
         [a] (x=0) -> true;\n[fault] (x=0) -> (x'=1);\n[fault] (x=1) -> (x'=1);\n",
    )
    .unwrap();
    (nominal, imp)
}

fn game_of(a: &maskgame::Pts, b: &maskgame::Pts) -> SymbolicGame {
    build_symbolic(&validate_pair(a, b).unwrap())
}

#[test]
fn reward_reads_the_challenge_label() {
    let game = game_of(&memcell_nominal(), &memcell_faulty());
    let m = Milestone::new().with("fault", 1);
    let mut fault_verifiers = 0;
    for (_, vertex) in game.vertices() {
        match vertex {
            SymVertex::Verifier { label, .. } => {
                let expected = if label == "fault" { 1 } else { 0 };
                assert_eq!(reward(vertex, &m), expected);
                if label == "fault" {
                    fault_verifiers += 1;
                }
            }
            other => assert_eq!(reward(other, &m), 0),
        }
    }
    assert!(fault_verifiers > 0);
}

#[test]
fn bound_is_zero_for_zero_milestones() {
    let (nominal, imp) = one_shot_pair();
    let game = game_of(&nominal, &imp);
    let snippet = build_snippet(&game, DEFAULT_VERTEX_CAP).unwrap();
    assert_eq!(compute_bound_from_snippet(&snippet, &Milestone::new()), rat_from_f64(0.0));
}

#[test]
fn bound_for_dirac_snippets_is_weight_times_size() {
    // Every coupling in the one-shot game is a Dirac, so the minimum
    // positive transition probability is 1 and the bound collapses to
    // r_max * N.
    let (nominal, imp) = one_shot_pair();
    let game = game_of(&nominal, &imp);
    let snippet = build_snippet(&game, DEFAULT_VERTEX_CAP).unwrap();
    let m = Milestone::new().with("fault", 3);
    let bound = compute_bound_from_snippet(&snippet, &m);
    assert_eq!(rat_to_f64_saturating(&bound), (3 * snippet.len()) as f64);
}

#[test]
fn gamma_fixes_zero_on_zero_milestones() {
    let (nominal, imp) = one_shot_pair();
    let game = game_of(&nominal, &imp);
    let zero = ValueVector { values: vec![0.0; game.len()], bound: 0.0 };
    let next = gamma_step(&game, &Milestone::new(), &zero);
    assert_eq!(next.values, zero.values);
}

#[test]
fn gamma_pins_err_to_zero() {
    let game = game_of(&memcell_nominal(), &memcell_faulty());
    let m = Milestone::new().with("fault", 1);
    let top = ValueVector::top(&game, 1000.0);
    let next = gamma_step(&game, &m, &top);
    assert_eq!(next.get(game.err_id()), 0.0);
    // And stays within the lattice.
    for (id, _) in game.vertices() {
        assert!(next.get(id) >= 0.0 && next.get(id) <= 1000.0);
    }
}

#[test]
fn gamma_dirac_prob_vertices_copy_their_successor() {
    let (nominal, imp) = one_shot_pair();
    let game = game_of(&nominal, &imp);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let f = ValueVector {
        values: (0..game.len()).map(|_| rng.gen_range(0.0..50.0)).collect(),
        bound: 50.0,
    };
    let next = gamma_step(&game, &Milestone::new().with("fault", 1), &f);
    for (id, vertex) in game.vertices() {
        if let SymVertex::Prob { mu, mu2, .. } = vertex {
            if mu.is_dirac() && mu2.is_dirac() {
                let succ = game.successors(id)[0];
                assert!((next.get(id) - f.get(succ).min(50.0)).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn gamma_is_monotone_on_random_vector_pairs() {
    let game = game_of(&memcell_nominal(), &memcell_faulty_limited());
    let m = Milestone::new().with("fault", 2).with("tick", 1);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..5 {
        let lo: Vec<f64> = (0..game.len()).map(|_| rng.gen_range(0.0..10.0)).collect();
        let hi: Vec<f64> =
            lo.iter().map(|v| v + rng.gen_range(0.0..5.0)).collect();
        let f_lo = ValueVector { values: lo, bound: 100.0 };
        let f_hi = ValueVector { values: hi, bound: 100.0 };
        let g_lo = gamma_step(&game, &m, &f_lo);
        let g_hi = gamma_step(&game, &m, &f_hi);
        assert!(
            g_lo.le_pointwise(&g_hi),
            "the value functional must be monotone"
        );
    }
}

#[test]
fn gamma_lp_matches_explicit_vertex_maximum() {
    let game = game_of(&memcell_nominal(), &memcell_faulty_limited());
    let m = Milestone::new().with("fault", 1);
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let f = ValueVector {
        values: (0..game.len()).map(|_| rng.gen_range(0.0..20.0)).collect(),
        bound: 1e6,
    };
    let next = gamma_step(&game, &m, &f);
    for (id, vertex) in game.vertices() {
        if let SymVertex::Prob { mu, mu2, .. } = vertex {
            let explicit = enumerate_vertices(mu, mu2, DEFAULT_VERTEX_CAP)
                .unwrap()
                .iter()
                .map(|w| {
                    w.iter()
                        .map(|((t1, t2), p)| {
                            let succ = game
                                .id_of(&SymVertex::Refuter { s: t1.clone(), t: t2.clone() })
                                .unwrap();
                            p.to_f64() * f.get(succ)
                        })
                        .sum::<f64>()
                })
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(
                (next.get(id) - explicit).abs() < 1e-9,
                "LP and vertex maximum disagree at {id}"
            );
        }
    }
}

#[test]
fn lp_feasibility_matches_respects_on_relations() {
    // A coupling respecting a relation exists iff the system with the
    // complement forbidden is feasible.
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..40 {
        let mu = random_dist(&mut rng, 4, 3);
        let mu2 = random_dist(&mut rng, 4, 3);
        // Random relation over the supports.
        let mut relation = std::collections::BTreeSet::new();
        for s in mu.support() {
            for t in mu2.support() {
                if rng.gen_bool(0.6) {
                    relation.insert((s.clone(), t.clone()));
                }
            }
        }
        let mut forbidden = std::collections::BTreeSet::new();
        for s in mu.support() {
            for t in mu2.support() {
                if !relation.contains(&(s.clone(), t.clone())) {
                    forbidden.insert((s.clone(), t.clone()));
                }
            }
        }
        let lp = build_system(&mu, &mu2, &forbidden).feasible();
        let brute = enumerate_vertices(&mu, &mu2, DEFAULT_VERTEX_CAP)
            .unwrap()
            .iter()
            .any(|w| w.respects(&relation));
        assert_eq!(lp, brute);
    }
}

#[test]
fn solve_value_zero_milestones_is_zero() {
    let (nominal, imp) = one_shot_pair();
    let game = game_of(&nominal, &imp);
    let out = solve_value(&game, &Milestone::new(), 1e-9, 1000, None).unwrap();
    assert_eq!(out.value, 0.0);
    assert!(out.converged);
}

#[test]
fn solve_value_matches_hand_value_on_one_shot_game() {
    let (nominal, imp) = one_shot_pair();
    let game = game_of(&nominal, &imp);
    let m = Milestone::new().with("fault", 1);
    let out = solve_value(&game, &m, 1e-9, 100_000, None).unwrap();
    assert!(out.converged);
    assert!(close(out.value, 1.0, 2e-9), "value {} should be 1", out.value);
}

#[test]
fn solve_value_respects_bound_override() {
    let (nominal, imp) = one_shot_pair();
    let game = game_of(&nominal, &imp);
    let m = Milestone::new().with("fault", 1);
    let out =
        solve_value(&game, &m, 1e-9, 100_000, Some(maskgame::rational::rat_int(1000))).unwrap();
    assert!(close(out.value, 1.0, 2e-9));
    assert_eq!(out.bound, 1000.0);
}

#[test]
fn solve_value_doubles_with_milestones() {
    let (nominal, imp) = one_shot_pair();
    let game = game_of(&nominal, &imp);
    let m = Milestone::new().with("fault", 3).with("a", 1);
    let out1 = solve_value(&game, &m, 1e-9, 100_000, None).unwrap();
    let out2 = solve_value(&game, &m.scaled(2), 1e-9, 100_000, None).unwrap();
    for (a, b) in out1.values.values.iter().zip(&out2.values.values) {
        assert!(close(2.0 * a, *b, 4e-9), "doubling milestones must double values");
    }
}

#[test]
fn solve_value_refuses_non_failing_games() {
    let game = game_of(&memcell_nominal(), &memcell_faulty_limited());
    let m = Milestone::new().with("fault", 1);
    assert_eq!(
        solve_value(&game, &m, 1e-9, 1000, None).unwrap_err(),
        ValueError::NotFailing
    );
}

#[test]
fn class_counts_are_consistent() {
    let game = game_of(&memcell_nominal(), &memcell_faulty());
    let (r, v, p) = game.class_counts();
    assert_eq!(r + v + p + 1, game.len());
    let snippet = build_snippet(&game, DEFAULT_VERTEX_CAP).unwrap();
    let mut per_class = [0usize; 3];
    for (_, vertex) in snippet.vertices() {
        match vertex.class() {
            Class::Refuter => per_class[0] += 1,
            Class::Verifier => per_class[1] += 1,
            Class::Prob => per_class[2] += 1,
            Class::Err => {}
        }
    }
    assert_eq!(per_class[0], r);
    assert_eq!(per_class[1], v);
    assert!(per_class[2] >= p);
}
