//! Shared helpers for the integration and acceptance suites: the bundled
//! memory-cell models and seeded random generators for small model pairs
//! and distribution pairs.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use maskgame::model::{Dist, Prob, Pts, StateId, Transition, VarDecl};
use maskgame::parse_model;
use maskgame::rational::{rat, Rational};

pub fn memcell_nominal() -> Pts {
    parse_model(include_str!("../../../../models/memcell_nominal.pts")).unwrap()
}

pub fn memcell_faulty() -> Pts {
    parse_model(include_str!("../../../../models/memcell_faulty.pts")).unwrap()
}

pub fn memcell_faulty_limited() -> Pts {
    parse_model(include_str!("../../../../models/memcell_faulty_limited.pts")).unwrap()
}

pub fn single_state() -> Pts {
    parse_model("var x: [0..0] init 0;\n[a] true -> (x'=x);\n").unwrap()
}

/// A random distribution over at most `max_support` of the states
/// `0..universe`, with small random rational weights.
pub fn random_dist(rng: &mut ChaCha8Rng, universe: i64, max_support: usize) -> Dist {
    let support_size = rng.gen_range(1..=max_support.min(universe as usize));
    let mut targets: Vec<i64> = (0..universe).collect();
    targets.shuffle(rng);
    targets.truncate(support_size);
    let weights: Vec<i64> = (0..support_size).map(|_| rng.gen_range(1..=4)).collect();
    let total: i64 = weights.iter().sum();
    let map: BTreeMap<StateId, Prob> = targets
        .iter()
        .zip(&weights)
        .map(|(&t, &w)| (StateId(vec![t]), Prob::new(rat(w, total)).unwrap()))
        .collect();
    Dist::new(map).unwrap()
}

fn random_pts(
    rng: &mut ChaCha8Rng,
    states: i64,
    alphabet: &[&str],
    fault: Option<&str>,
) -> Pts {
    let variables = vec![VarDecl { name: "x".to_string(), lo: 0, hi: states - 1, init: 0 }];
    let mut actions: BTreeSet<String> = alphabet.iter().map(|s| s.to_string()).collect();
    let mut faults = BTreeSet::new();
    if let Some(f) = fault {
        actions.insert(f.to_string());
        faults.insert(f.to_string());
    }

    let mut transitions: BTreeMap<StateId, Vec<Transition>> = BTreeMap::new();
    for s in 0..states {
        let mut outgoing = Vec::new();
        let count = rng.gen_range(1..=2);
        for _ in 0..count {
            let label = if fault.is_some() && rng.gen_bool(0.3) {
                fault.unwrap().to_string()
            } else {
                alphabet[rng.gen_range(0..alphabet.len())].to_string()
            };
            let target = random_dist(rng, states, 3);
            let t = Transition { label, target };
            if !outgoing.contains(&t) {
                outgoing.push(t);
            }
        }
        outgoing.sort();
        transitions.insert(StateId(vec![s]), outgoing);
    }
    Pts::from_parts(variables, actions, faults, transitions, StateId(vec![0])).unwrap()
}

/// A random nominal/implementation pair over a shared alphabet of at most
/// 3 actions, at most 5 states each, at most one fault label, supports of
/// size at most 3.
pub fn random_pair(rng: &mut ChaCha8Rng) -> (Pts, Pts) {
    let full = ["a", "b", "c"];
    let alphabet = &full[..rng.gen_range(1..=2)];
    let nominal_states = rng.gen_range(1..=3);
    let impl_states = rng.gen_range(1..=4);
    let nominal = random_pts(rng, nominal_states, alphabet, None);
    let with_fault = rng.gen_bool(0.7);
    let implementation =
        random_pts(rng, impl_states, alphabet, with_fault.then_some("flip"));
    (nominal, implementation)
}

/// A rational from an f64 for comparisons in tests.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    maskgame::rational::rat_to_f64_saturating(r)
}
