//! Command-line front-end.
//!
//! Commands: `check` (masking verdict), `failing` (almost-sure failing
//! under fairness, snippet-level), `value` (expected milestones before
//! failure), `graph` (serialized game graph), and a hidden `oracle`
//! command exposing the brute-force reference analyses.
//!
//! Exit codes: 0 for positive verdicts and successful computations, 1
//! for negative verdicts, 2 for usage, parse or validation errors, 3
//! when a precondition refuses a computation.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::analysis::{check_failing, compute_u_set, refutation_trace};
use crate::game::{build_snippet, build_symbolic, SymbolicGame};
use crate::graph_io::{emit_graph, GraphFormat};
use crate::model::{validate_pair, Pts};
use crate::oracle::{oracle_failing, oracle_reach_positive, oracle_value, OracleMode, DEFAULT_STRATEGY_CAP};
use crate::parse::parse_model;
use crate::polytope::DEFAULT_VERTEX_CAP;
use crate::quantitative::{solve_value, Milestone};
use crate::rational::{rat_from_str, rat_to_string, Rational};
use crate::report::{GraphStats, OracleStats, Report, ValueStats};

pub const EXIT_POSITIVE: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_ERROR: i32 = 2;
pub const EXIT_REFUSED: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "maskgame",
    about = "Masking fault-tolerance analysis for probabilistic transition systems",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Emit the report as JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Decide whether the implementation masks its faults.
    Check {
        nominal: PathBuf,
        implementation: PathBuf,
    },
    /// Decide almost-sure failing under a fair Refuter (snippet-level).
    Failing {
        nominal: PathBuf,
        implementation: PathBuf,
        /// Cross-check the verdict with the brute-force oracle.
        #[arg(long)]
        oracle: bool,
    },
    /// Expected weighted milestones collected before failure.
    Value {
        nominal: PathBuf,
        implementation: PathBuf,
        /// Milestone weight per label, e.g. --milestone fault=1 (repeatable).
        #[arg(long = "milestone", value_name = "LABEL=WEIGHT")]
        milestones: Vec<String>,
        /// Convergence threshold for the value iteration.
        #[arg(long, default_value_t = 1e-9)]
        epsilon: f64,
        /// Iteration budget.
        #[arg(long = "max-iters", default_value_t = 1_000_000)]
        max_iters: u64,
        /// Upper bound for the value lattice, as a rational (default:
        /// computed from the vertex snippet).
        #[arg(long)]
        bound: Option<String>,
        /// Also compute the oracle value and report both.
        #[arg(long)]
        oracle: bool,
    },
    /// Serialize the symbolic game graph to stdout.
    Graph {
        nominal: PathBuf,
        implementation: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Dot)]
        format: FormatArg,
    },
    /// Brute-force oracle analyses on the vertex snippet.
    #[command(hide = true)]
    Oracle {
        nominal: PathBuf,
        implementation: PathBuf,
        #[arg(long = "milestone", value_name = "LABEL=WEIGHT")]
        milestones: Vec<String>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum FormatArg {
    Dot,
    Json,
}

fn load_pair(nominal: &Path, implementation: &Path) -> Result<(Pts, Pts), String> {
    let read = |p: &Path| -> Result<String, String> {
        fs::read_to_string(p).map_err(|e| format!("cannot read {}: {e}", p.display()))
    };
    let nom_text = read(nominal)?;
    let imp_text = read(implementation)?;
    let nom = parse_model(&nom_text)
        .map_err(|e| format!("{}: {e}", nominal.display()))?;
    let imp = parse_model(&imp_text)
        .map_err(|e| format!("{}: {e}", implementation.display()))?;
    Ok((nom, imp))
}

fn validated_game(nominal: &Pts, implementation: &Pts) -> Result<SymbolicGame, String> {
    let pair = validate_pair(nominal, implementation).map_err(|e| e.to_string())?;
    Ok(build_symbolic(&pair))
}

fn graph_stats(game: &SymbolicGame) -> GraphStats {
    let (refuter, verifier, prob) = game.class_counts();
    GraphStats {
        refuter_vertices: refuter,
        verifier_vertices: verifier,
        prob_vertices: prob,
        edges: game.edge_count(),
        snippet_vertices: None,
    }
}

fn error_report(command: &str, msg: String) -> (i32, Report) {
    let mut report = Report::new(command);
    report.error = Some(msg);
    (EXIT_ERROR, report)
}

/// Masking verdict for a model pair; on refutation the report carries a
/// trace from the initial vertex to the error vertex.
pub fn cmd_check(nominal: &Path, implementation: &Path) -> (i32, Report) {
    let (nom, imp) = match load_pair(nominal, implementation) {
        Ok(p) => p,
        Err(e) => return error_report("check", e),
    };
    let game = match validated_game(&nom, &imp) {
        Ok(g) => g,
        Err(e) => return error_report("check", e),
    };
    let u = compute_u_set(&game);
    let mut report = Report::new("check");
    report.graph = Some(graph_stats(&game));
    if !u.contains(game.initial()) {
        report.verdict = Some("masking".to_string());
        (EXIT_POSITIVE, report)
    } else {
        report.verdict = Some("not-masking".to_string());
        report.trace = refutation_trace(&game, &u).map(|path| {
            path.iter()
                .map(|&id| {
                    format!(
                        "level {}: {}",
                        u.level(id).expect("trace stays in U"),
                        game.vertex(id)
                    )
                })
                .collect()
        });
        (EXIT_NEGATIVE, report)
    }
}

/// Almost-sure-failing verdict (snippet-level), optionally cross-checked
/// with the oracle.
pub fn cmd_failing(nominal: &Path, implementation: &Path, with_oracle: bool) -> (i32, Report) {
    let (nom, imp) = match load_pair(nominal, implementation) {
        Ok(p) => p,
        Err(e) => return error_report("failing", e),
    };
    let game = match validated_game(&nom, &imp) {
        Ok(g) => g,
        Err(e) => return error_report("failing", e),
    };
    let failing = check_failing(&game);
    let mut report = Report::new("failing");
    report.graph = Some(graph_stats(&game));
    report.scope = Some("snippet-level".to_string());
    report.verdict = Some(if failing { "failing" } else { "not-failing" }.to_string());
    if with_oracle {
        match build_snippet(&game, DEFAULT_VERTEX_CAP) {
            Ok(snippet) => {
                let oracle_verdict = oracle_failing(&snippet);
                report.oracle = Some(OracleStats {
                    failing: Some(oracle_verdict),
                    ..OracleStats::default()
                });
                if oracle_verdict != failing {
                    return error_report(
                        "failing",
                        "oracle disagrees with the symbolic verdict".to_string(),
                    );
                }
            }
            Err(e) => return error_report("failing", e.to_string()),
        }
    }
    (if failing { EXIT_POSITIVE } else { EXIT_NEGATIVE }, report)
}

fn parse_milestones(flags: &[String]) -> Result<Milestone, String> {
    let mut milestone = Milestone::new();
    for flag in flags {
        let (label, weight) = flag
            .split_once('=')
            .ok_or_else(|| format!("milestone `{flag}` must have the form LABEL=WEIGHT"))?;
        let weight: u64 = weight
            .parse()
            .map_err(|_| format!("milestone weight `{weight}` must be a non-negative integer"))?;
        milestone.set(label.trim(), weight);
    }
    Ok(milestone)
}

/// Expected total milestone weight before failure. Refuses (exit 3) when
/// the game is not almost-surely failing, since the value would not be
/// well-defined.
pub fn cmd_value(
    nominal: &Path,
    implementation: &Path,
    milestone_flags: &[String],
    epsilon: f64,
    max_iters: u64,
    bound: Option<Rational>,
    with_oracle: bool,
) -> (i32, Report) {
    let (nom, imp) = match load_pair(nominal, implementation) {
        Ok(p) => p,
        Err(e) => return error_report("value", e),
    };
    let game = match validated_game(&nom, &imp) {
        Ok(g) => g,
        Err(e) => return error_report("value", e),
    };
    let milestone = match parse_milestones(milestone_flags) {
        Ok(m) => m,
        Err(e) => return error_report("value", e),
    };

    let mut report = Report::new("value");
    report.graph = Some(graph_stats(&game));
    report.scope = Some("snippet-level".to_string());

    if !check_failing(&game) {
        report.verdict = Some("refused".to_string());
        report.error = Some(
            "the game is not almost-surely failing under fairness; \
             the expected milestone value is not well-defined"
                .to_string(),
        );
        return (EXIT_REFUSED, report);
    }

    let outcome = match solve_value(&game, &milestone, epsilon, max_iters, bound) {
        Ok(o) => o,
        Err(e) => return error_report("value", e.to_string()),
    };
    report.value = Some(ValueStats {
        value: outcome.value,
        epsilon,
        residual: outcome.residual,
        iterations: outcome.iterations,
        converged: outcome.converged,
        bound: outcome.bound,
        bound_exact: rat_to_string(&outcome.bound_exact),
        milestones: milestone.iter().map(|(l, w)| (l.to_string(), w)).collect(),
    });

    if with_oracle {
        let snippet = match build_snippet(&game, DEFAULT_VERTEX_CAP) {
            Ok(s) => s,
            Err(e) => return error_report("value", e.to_string()),
        };
        if let Some(g) = report.graph.as_mut() {
            g.snippet_vertices = Some(snippet.len());
        }
        match oracle_value(&snippet, &milestone, DEFAULT_STRATEGY_CAP) {
            Ok(ov) => {
                report.oracle = Some(OracleStats {
                    value_exact: Some(rat_to_string(&ov.value)),
                    value: Some(ov.value_f64()),
                    mode: Some(
                        match ov.mode {
                            OracleMode::Exhaustive => "exhaustive",
                            OracleMode::Certified => "certified",
                        }
                        .to_string(),
                    ),
                    ..OracleStats::default()
                });
            }
            Err(e) => return error_report("value", e.to_string()),
        }
    }
    (EXIT_POSITIVE, report)
}

/// Serializes the symbolic game graph; the serialization itself goes to
/// stdout, so the result here is either the text or an error report.
pub fn cmd_graph(
    nominal: &Path,
    implementation: &Path,
    format: GraphFormat,
) -> Result<String, (i32, Report)> {
    let (nom, imp) = load_pair(nominal, implementation)
        .map_err(|e| error_report("graph", e))?;
    let game = validated_game(&nom, &imp).map_err(|e| error_report("graph", e))?;
    Ok(emit_graph(&game, format))
}

/// The hidden oracle command: attractor size, failing verdict, and the
/// oracle value when milestones are given.
pub fn cmd_oracle(
    nominal: &Path,
    implementation: &Path,
    milestone_flags: &[String],
) -> (i32, Report) {
    let (nom, imp) = match load_pair(nominal, implementation) {
        Ok(p) => p,
        Err(e) => return error_report("oracle", e),
    };
    let game = match validated_game(&nom, &imp) {
        Ok(g) => g,
        Err(e) => return error_report("oracle", e),
    };
    let snippet = match build_snippet(&game, DEFAULT_VERTEX_CAP) {
        Ok(s) => s,
        Err(e) => return error_report("oracle", e.to_string()),
    };
    let milestone = match parse_milestones(milestone_flags) {
        Ok(m) => m,
        Err(e) => return error_report("oracle", e),
    };

    let mut report = Report::new("oracle");
    let mut stats = graph_stats(&game);
    stats.snippet_vertices = Some(snippet.len());
    report.graph = Some(stats);
    report.scope = Some("snippet-level".to_string());

    let reach = oracle_reach_positive(&snippet);
    let failing = oracle_failing(&snippet);
    let mut oracle_stats = OracleStats {
        reach_positive_vertices: Some(reach.len()),
        failing: Some(failing),
        ..OracleStats::default()
    };
    if failing && milestone_flags.iter().len() > 0 {
        match oracle_value(&snippet, &milestone, DEFAULT_STRATEGY_CAP) {
            Ok(ov) => {
                oracle_stats.value_exact = Some(rat_to_string(&ov.value));
                oracle_stats.value = Some(ov.value_f64());
                oracle_stats.mode = Some(
                    match ov.mode {
                        OracleMode::Exhaustive => "exhaustive",
                        OracleMode::Certified => "certified",
                    }
                    .to_string(),
                );
            }
            Err(e) => return error_report("oracle", e.to_string()),
        }
    }
    report.oracle = Some(oracle_stats);
    (EXIT_POSITIVE, report)
}

/// Runs a parsed command line; prints to stdout and returns the exit
/// code.
pub fn run(cli: Cli) -> i32 {
    let started = std::time::Instant::now();
    let (code, output) = match &cli.command {
        Command::Check { nominal, implementation } => {
            let (code, report) = cmd_check(nominal, implementation);
            (code, render(&report, cli.json))
        }
        Command::Failing { nominal, implementation, oracle } => {
            let (code, report) = cmd_failing(nominal, implementation, *oracle);
            (code, render(&report, cli.json))
        }
        Command::Value {
            nominal,
            implementation,
            milestones,
            epsilon,
            max_iters,
            bound,
            oracle,
        } => {
            let bound = match bound.as_deref().map(parse_bound).transpose() {
                Ok(b) => b,
                Err(e) => {
                    let (code, report) = error_report("value", e);
                    print_output(&render(&report, cli.json));
                    return code;
                }
            };
            let (code, report) = cmd_value(
                nominal,
                implementation,
                milestones,
                *epsilon,
                *max_iters,
                bound,
                *oracle,
            );
            (code, render(&report, cli.json))
        }
        Command::Graph { nominal, implementation, format } => {
            let format = match format {
                FormatArg::Dot => GraphFormat::Dot,
                FormatArg::Json => GraphFormat::Json,
            };
            match cmd_graph(nominal, implementation, format) {
                Ok(text) => (EXIT_POSITIVE, text),
                Err((code, report)) => (code, render(&report, cli.json)),
            }
        }
        Command::Oracle { nominal, implementation, milestones } => {
            let (code, report) = cmd_oracle(nominal, implementation, milestones);
            (code, render(&report, cli.json))
        }
    };
    print_output(&output);
    eprintln!("wall time: {} ms", started.elapsed().as_millis());
    code
}

fn parse_bound(s: &str) -> Result<Rational, String> {
    rat_from_str(s).ok_or_else(|| format!("bound `{s}` must be a rational like 7/2"))
}

fn render(report: &Report, json: bool) -> String {
    if json {
        report.to_json()
    } else {
        report.render_text()
    }
}

fn print_output(text: &str) {
    print!("{text}");
    if !text.ends_with('\n') {
        println!();
    }
}
