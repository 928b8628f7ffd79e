// Random-pair stress: U-set vs attractor, failing agreement, determinacy.
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};

use maskgame::analysis::{check_failing, compute_u_set, decide_masking};
use maskgame::game::{build_snippet, build_symbolic, Class};
use maskgame::model::{validate_pair, Dist, Prob, Pts, StateId, Transition, VarDecl};
use maskgame::oracle::{oracle_failing, oracle_reach_positive, oracle_value, DEFAULT_STRATEGY_CAP};
use maskgame::quantitative::{solve_value, Milestone};
use maskgame::rational::{rat, rat_to_f64_saturating};

fn random_dist(rng: &mut ChaCha8Rng, universe: i64, max_support: usize) -> Dist {
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

fn random_pts(rng: &mut ChaCha8Rng, states: i64, alphabet: &[&str], fault: Option<&str>) -> Pts {
    let variables = vec![VarDecl { name: "x".into(), lo: 0, hi: states - 1, init: 0 }];
    let mut actions: BTreeSet<String> = alphabet.iter().map(|s| s.to_string()).collect();
    let mut faults = BTreeSet::new();
    if let Some(f) = fault {
        actions.insert(f.to_string());
        faults.insert(f.to_string());
    }
    let mut transitions: BTreeMap<StateId, Vec<Transition>> = BTreeMap::new();
    for s in 0..states {
        let mut outgoing = Vec::new();
        for _ in 0..rng.gen_range(1..=2) {
            let label = if fault.is_some() && rng.gen_bool(0.3) {
                fault.unwrap().to_string()
            } else {
                alphabet[rng.gen_range(0..alphabet.len())].to_string()
            };
            let t = Transition { label, target: random_dist(rng, states, 3) };
            if !outgoing.contains(&t) {
                outgoing.push(t);
            }
        }
        outgoing.sort();
        transitions.insert(StateId(vec![s]), outgoing);
    }
    Pts::from_parts(variables, actions, faults, transitions, StateId(vec![0])).unwrap()
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut failing_count = 0;
    let mut masking_count = 0;
    let mut exhaustive = 0;
    let mut certified = 0;
    for round in 0..60 {
        let full = ["a", "b", "c"];
        let alphabet = &full[..rng.gen_range(1..=2)];
        let n_states = rng.gen_range(1..=3);
        let i_states = rng.gen_range(1..=4);
        let with_fault = rng.gen_bool(0.7);
        let nominal = random_pts(&mut rng, n_states, alphabet, None);
        let imp = random_pts(&mut rng, i_states, alphabet, with_fault.then_some("flip"));
        let pair = validate_pair(&nominal, &imp).unwrap();
        let game = build_symbolic(&pair);
        let snippet = build_snippet(&game, 25).unwrap();

        // U vs attractor
        let u = compute_u_set(&game);
        let reach = oracle_reach_positive(&snippet);
        for (id, v) in snippet.vertices() {
            if matches!(v.class(), Class::Refuter | Class::Verifier) {
                assert_eq!(reach.contains(&id), u.contains(snippet.symbolic_id(id)),
                    "round {round}: U/attractor mismatch");
            }
        }
        // masking => not failing
        let masking = decide_masking(&nominal, &imp).unwrap();
        let failing = check_failing(&game);
        assert_eq!(failing, oracle_failing(&snippet), "round {round}: failing mismatch");
        if masking {
            masking_count += 1;
            assert!(!failing, "round {round}: masking but failing");
        }
        if failing {
            failing_count += 1;
            let m = Milestone::new().with("flip", 2).with("a", 1);
            let ov = oracle_value(&snippet, &m, DEFAULT_STRATEGY_CAP).unwrap();
            match ov.mode {
                maskgame::oracle::OracleMode::Exhaustive => exhaustive += 1,
                maskgame::oracle::OracleMode::Certified => certified += 1,
            }
            let sv = solve_value(&game, &m, 1e-9, 1_000_000, None).unwrap();
            let diff = (sv.value - rat_to_f64_saturating(&ov.value)).abs();
            assert!(sv.converged, "round {round}: no convergence");
            assert!(diff <= 2e-9, "round {round}: value diff {diff} (solve {} vs oracle {})", sv.value, rat_to_f64_saturating(&ov.value));
        }
    }
    println!("60 rounds ok: {failing_count} failing ({exhaustive} exhaustive, {certified} certified), {masking_count} masking");
}
