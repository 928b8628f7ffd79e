//! Serialization of symbolic game graphs.
//!
//! The JSON form is `{"vertices": [...], "edges": [[from, to], ...],
//! "initial": id}` with one vertex object per entry carrying `id`,
//! `class` (`"R" | "V" | "P" | "err"`), the state pair `s`/`s'`, the
//! challenge (for Verifier vertices) and the contending distributions.
//! Vertex ids follow the canonical vertex order, so identical games
//! serialize to identical bytes, and a serialized graph reads back as an
//! equal game.

use std::collections::BTreeMap;

use serde_json::{json, Map, Value};

use crate::error::GraphError;
use crate::game::{Class, Side, SymVertex, SymbolicGame};
use crate::model::{Dist, Prob, StateId};
use crate::rational::{rat_from_str, rat_to_string};

/// Output formats for [`emit_graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    Dot,
    Json,
}

/// Deterministic serialization of a game graph.
pub fn emit_graph(game: &SymbolicGame, format: GraphFormat) -> String {
    match format {
        GraphFormat::Json => emit_json(game),
        GraphFormat::Dot => emit_dot(game),
    }
}

fn state_value(s: &StateId) -> Value {
    Value::Array(s.0.iter().map(|&v| json!(v)).collect())
}

fn dist_value(d: &Dist) -> Value {
    Value::Array(
        d.iter()
            .map(|(s, p)| json!([state_value(s), rat_to_string(p.ratio())]))
            .collect(),
    )
}

fn emit_json(game: &SymbolicGame) -> String {
    let mut vertices = Vec::with_capacity(game.len());
    for (id, vertex) in game.vertices() {
        let mut obj = Map::new();
        obj.insert("id".to_string(), json!(id));
        match vertex {
            SymVertex::Refuter { s, t } => {
                obj.insert("class".to_string(), json!("R"));
                obj.insert("s".to_string(), state_value(s));
                obj.insert("s'".to_string(), state_value(t));
            }
            SymVertex::Verifier { s, t, label, side, pending } => {
                obj.insert("class".to_string(), json!("V"));
                obj.insert("s".to_string(), state_value(s));
                obj.insert("s'".to_string(), state_value(t));
                obj.insert(
                    "challenge".to_string(),
                    json!({"label": label, "side": side.index()}),
                );
                match side {
                    Side::Nominal => {
                        obj.insert("mu".to_string(), dist_value(pending));
                    }
                    Side::Implementation => {
                        obj.insert("mu2".to_string(), dist_value(pending));
                    }
                }
            }
            SymVertex::Prob { s, t, mu, mu2 } => {
                obj.insert("class".to_string(), json!("P"));
                obj.insert("s".to_string(), state_value(s));
                obj.insert("s'".to_string(), state_value(t));
                obj.insert("mu".to_string(), dist_value(mu));
                obj.insert("mu2".to_string(), dist_value(mu2));
            }
            SymVertex::Err => {
                obj.insert("class".to_string(), json!("err"));
            }
        }
        vertices.push(Value::Object(obj));
    }
    let mut edges = Vec::new();
    for (id, _) in game.vertices() {
        for &succ in game.successors(id) {
            edges.push(json!([id, succ]));
        }
    }
    let doc = json!({
        "vertices": vertices,
        "edges": edges,
        "initial": game.initial(),
    });
    serde_json::to_string_pretty(&doc).expect("graph JSON serializes")
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn emit_dot(game: &SymbolicGame) -> String {
    let mut out = String::from("digraph masking_game {\n");
    for (id, vertex) in game.vertices() {
        let shape = match vertex.class() {
            Class::Refuter => "box",
            Class::Verifier => "diamond",
            Class::Prob => "ellipse",
            Class::Err => "doublecircle",
        };
        out.push_str(&format!(
            "  n{id} [shape={shape}, label=\"{}\"];\n",
            dot_escape(&vertex.to_string())
        ));
    }
    for (id, _) in game.vertices() {
        for &succ in game.successors(id) {
            out.push_str(&format!("  n{id} -> n{succ};\n"));
        }
    }
    out.push_str("}\n");
    out
}

fn parse_state(v: &Value) -> Result<StateId, GraphError> {
    let arr = v
        .as_array()
        .ok_or_else(|| GraphError::Schema("state must be an array".to_string()))?;
    let mut vals = Vec::with_capacity(arr.len());
    for x in arr {
        vals.push(
            x.as_i64()
                .ok_or_else(|| GraphError::Schema("state entry must be an integer".to_string()))?,
        );
    }
    Ok(StateId(vals))
}

fn parse_dist(v: &Value) -> Result<Dist, GraphError> {
    let arr = v
        .as_array()
        .ok_or_else(|| GraphError::Schema("distribution must be an array".to_string()))?;
    let mut weights = BTreeMap::new();
    for entry in arr {
        let pair = entry
            .as_array()
            .filter(|p| p.len() == 2)
            .ok_or_else(|| GraphError::Schema("distribution entry must be a pair".to_string()))?;
        let state = parse_state(&pair[0])?;
        let w = pair[1]
            .as_str()
            .and_then(rat_from_str)
            .and_then(Prob::new)
            .ok_or_else(|| GraphError::Schema("weight must be a rational in [0,1]".to_string()))?;
        weights.insert(state, w);
    }
    Dist::new(weights).ok_or_else(|| GraphError::Schema("weights must sum to 1".to_string()))
}

/// Reads a graph serialized by [`emit_graph`] with [`GraphFormat::Json`].
pub fn read_graph_json(text: &str) -> Result<SymbolicGame, GraphError> {
    let doc: Value =
        serde_json::from_str(text).map_err(|e| GraphError::Json(e.to_string()))?;
    let vertices_json = doc["vertices"]
        .as_array()
        .ok_or_else(|| GraphError::Schema("missing vertices".to_string()))?;

    let mut vertices: Vec<SymVertex> = Vec::with_capacity(vertices_json.len());
    for (expect_id, vj) in vertices_json.iter().enumerate() {
        let id = vj["id"]
            .as_u64()
            .ok_or_else(|| GraphError::Schema("vertex without id".to_string()))?;
        if id as usize != expect_id {
            return Err(GraphError::Schema("vertex ids must be dense and ordered".to_string()));
        }
        let class = vj["class"]
            .as_str()
            .ok_or_else(|| GraphError::Schema("vertex without class".to_string()))?;
        let vertex = match class {
            "R" => SymVertex::Refuter { s: parse_state(&vj["s"])?, t: parse_state(&vj["s'"])? },
            "V" => {
                let label = vj["challenge"]["label"]
                    .as_str()
                    .ok_or_else(|| GraphError::Schema("challenge without label".to_string()))?
                    .to_string();
                let side = match vj["challenge"]["side"].as_u64() {
                    Some(1) => Side::Nominal,
                    Some(2) => Side::Implementation,
                    _ => return Err(GraphError::Schema("challenge side must be 1 or 2".into())),
                };
                let pending = match side {
                    Side::Nominal => parse_dist(&vj["mu"])?,
                    Side::Implementation => parse_dist(&vj["mu2"])?,
                };
                SymVertex::Verifier {
                    s: parse_state(&vj["s"])?,
                    t: parse_state(&vj["s'"])?,
                    label,
                    side,
                    pending,
                }
            }
            "P" => SymVertex::Prob {
                s: parse_state(&vj["s"])?,
                t: parse_state(&vj["s'"])?,
                mu: parse_dist(&vj["mu"])?,
                mu2: parse_dist(&vj["mu2"])?,
            },
            "err" => SymVertex::Err,
            other => {
                return Err(GraphError::Schema(format!("unknown vertex class `{other}`")));
            }
        };
        vertices.push(vertex);
    }

    let edges_json = doc["edges"]
        .as_array()
        .ok_or_else(|| GraphError::Schema("missing edges".to_string()))?;
    let mut edges = Vec::with_capacity(edges_json.len());
    for e in edges_json {
        let pair = e
            .as_array()
            .filter(|p| p.len() == 2)
            .ok_or_else(|| GraphError::Schema("edge must be a pair".to_string()))?;
        let a = pair[0].as_u64().ok_or_else(|| GraphError::Schema("bad edge".into()))? as usize;
        let b = pair[1].as_u64().ok_or_else(|| GraphError::Schema("bad edge".into()))? as usize;
        if a >= vertices.len() || b >= vertices.len() {
            return Err(GraphError::Schema("edge out of range".to_string()));
        }
        edges.push((a, b));
    }
    let initial = doc["initial"]
        .as_u64()
        .ok_or_else(|| GraphError::Schema("missing initial".to_string()))? as usize;
    if initial >= vertices.len() {
        return Err(GraphError::Schema("initial out of range".to_string()));
    }

    // Vertices must come back in canonical order for lookups to work.
    if !vertices.windows(2).all(|w| w[0] < w[1]) {
        return Err(GraphError::Schema("vertices must be in canonical order".to_string()));
    }
    Ok(SymbolicGame::from_parts(vertices, &edges, initial))
}
