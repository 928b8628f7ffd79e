//! Graph serialization: determinism, round-trips, DOT well-formedness.

mod common;

use maskgame::game::build_symbolic;
use maskgame::graph_io::{emit_graph, read_graph_json, GraphFormat};
use maskgame::model::validate_pair;

use common::*;

fn game(nominal: &maskgame::Pts, imp: &maskgame::Pts) -> maskgame::SymbolicGame {
    build_symbolic(&validate_pair(nominal, imp).unwrap())
}

#[test]
fn json_round_trip_is_identity() {
    let nominal = memcell_nominal();
    for imp in [memcell_faulty_limited(), memcell_faulty(), memcell_nominal()] {
        let g = game(&nominal, &imp);
        let text = emit_graph(&g, GraphFormat::Json);
        let back = read_graph_json(&text).unwrap();
        assert_eq!(g, back);
        // Serialization is deterministic byte for byte.
        assert_eq!(text, emit_graph(&g, GraphFormat::Json));
        assert_eq!(emit_graph(&back, GraphFormat::Json), text);
    }
}

#[test]
fn json_counts_match_build_statistics() {
    let nominal = memcell_nominal();
    let g = game(&nominal, &memcell_faulty_limited());
    let (r, v, p) = g.class_counts();
    let doc: serde_json::Value =
        serde_json::from_str(&emit_graph(&g, GraphFormat::Json)).unwrap();
    let vertices = doc["vertices"].as_array().unwrap();
    assert_eq!(vertices.len(), g.len());
    let count = |class: &str| {
        vertices.iter().filter(|v| v["class"].as_str() == Some(class)).count()
    };
    assert_eq!(count("R"), r);
    assert_eq!(count("V"), v);
    assert_eq!(count("P"), p);
    assert_eq!(count("err"), 1);
    assert_eq!(doc["edges"].as_array().unwrap().len(), g.edge_count());
}

#[test]
fn identical_fault_free_models_have_square_refuter_count() {
    // Reachable pairs of the self-product stay on the diagonal closure;
    // for the one-state model that is exactly one Refuter vertex.
    let single = single_state();
    let g = game(&single, &single);
    let doc: serde_json::Value =
        serde_json::from_str(&emit_graph(&g, GraphFormat::Json)).unwrap();
    let vertices = doc["vertices"].as_array().unwrap();
    let refuters = vertices.iter().filter(|v| v["class"].as_str() == Some("R")).count();
    assert_eq!(refuters, single.state_count() * single.state_count());
}

#[test]
fn dot_output_is_structurally_sound() {
    let nominal = memcell_nominal();
    let g = game(&nominal, &memcell_faulty_limited());
    let dot = emit_graph(&g, GraphFormat::Dot);
    assert!(dot.starts_with("digraph masking_game {\n"));
    assert!(dot.ends_with("}\n"));
    // One node line per vertex, one edge line per edge.
    let node_lines = dot.lines().filter(|l| l.contains("[shape=")).count();
    assert_eq!(node_lines, g.len());
    let edge_lines = dot.lines().filter(|l| l.contains(" -> ")).count();
    assert_eq!(edge_lines, g.edge_count());
    // Every referenced node is declared.
    for line in dot.lines() {
        if let Some((from, to)) = line.trim().strip_suffix(';').and_then(|l| l.split_once(" -> "))
        {
            for name in [from, to] {
                assert!(dot.contains(&format!("  {name} [shape=")), "undeclared node {name}");
            }
        }
    }
    // The error vertex renders with its own shape.
    assert!(dot.contains("doublecircle"));
}

#[test]
fn malformed_json_is_rejected() {
    assert!(read_graph_json("not json").is_err());
    assert!(read_graph_json("{\"vertices\": [], \"edges\": []}").is_err());
    let junk = r#"{"vertices":[{"id":0,"class":"R","s":[0],"s'":[0]}],"edges":[[0,5]],"initial":0}"#;
    assert!(read_graph_json(junk).is_err());
}
