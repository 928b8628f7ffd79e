//! Structured analysis reports.
//!
//! Reports are deterministic: identical inputs and flags produce
//! byte-identical output. Wall-clock time is therefore not part of a
//! report; the CLI prints it to stderr.

use std::collections::BTreeMap;

use serde::Serialize;

/// Vertex and edge statistics of the symbolic graph (and the snippet,
/// when one was built).
#[derive(Debug, Clone, Serialize, Default, PartialEq)]
pub struct GraphStats {
    pub refuter_vertices: usize,
    pub verifier_vertices: usize,
    pub prob_vertices: usize,
    pub edges: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snippet_vertices: Option<usize>,
}

/// Value-iteration outcome; `value` is approximate with the stated
/// residual, everything else is exact.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ValueStats {
    pub value: f64,
    pub epsilon: f64,
    pub residual: f64,
    pub iterations: u64,
    pub converged: bool,
    pub bound: f64,
    pub bound_exact: String,
    pub milestones: BTreeMap<String, u64>,
}

/// Oracle cross-check results.
#[derive(Debug, Clone, Serialize, Default, PartialEq)]
pub struct OracleStats {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reach_positive_vertices: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failing: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value_exact: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
}

/// The serializable record every command produces.
#[derive(Debug, Clone, Serialize, Default, PartialEq)]
pub struct Report {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
    /// Quantitative and failing verdicts hold at the vertex-snippet
    /// level.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scope: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<ValueStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Report {
    pub fn new(command: &str) -> Report {
        Report { command: command.to_string(), ..Report::default() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// Human-readable rendering; as deterministic as the JSON form.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        if let Some(err) = &self.error {
            out.push_str(&format!("error: {err}\n"));
            return out;
        }
        if let Some(v) = &self.verdict {
            match &self.scope {
                Some(scope) => out.push_str(&format!("verdict: {v} ({scope})\n")),
                None => out.push_str(&format!("verdict: {v}\n")),
            }
        }
        if let Some(g) = &self.graph {
            out.push_str(&format!(
                "game graph: {} refuter, {} verifier, {} probabilistic vertices, {} edges\n",
                g.refuter_vertices, g.verifier_vertices, g.prob_vertices, g.edges
            ));
            if let Some(n) = g.snippet_vertices {
                out.push_str(&format!("vertex snippet: {n} vertices\n"));
            }
        }
        if let Some(v) = &self.value {
            let milestones: Vec<String> =
                v.milestones.iter().map(|(l, w)| format!("{l}={w}")).collect();
            out.push_str(&format!("milestones: {}\n", milestones.join(", ")));
            out.push_str(&format!(
                "value: {:.12} (upper estimate, residual {:.3e}, epsilon {:.3e})\n",
                v.value, v.residual, v.epsilon
            ));
            out.push_str(&format!(
                "iterations: {}{}\n",
                v.iterations,
                if v.converged { "" } else { " (not converged)" }
            ));
            out.push_str(&format!("bound: {:.6e}\n", v.bound));
        }
        if let Some(o) = &self.oracle {
            if let Some(n) = o.reach_positive_vertices {
                out.push_str(&format!("oracle: {n} vertices reach the error vertex\n"));
            }
            if let Some(f) = o.failing {
                out.push_str(&format!("oracle failing verdict: {f}\n"));
            }
            if let (Some(exact), Some(approx)) = (&o.value_exact, o.value) {
                let mode = o.mode.as_deref().unwrap_or("?");
                out.push_str(&format!("oracle value: {exact} (~{approx:.12}, {mode})\n"));
            }
        }
        if let Some(trace) = &self.trace {
            out.push_str("refutation trace:\n");
            for line in trace {
                out.push_str(&format!("  {line}\n"));
            }
        }
        out
    }
}
