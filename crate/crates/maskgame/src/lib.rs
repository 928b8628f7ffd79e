//! Masking fault-tolerance analysis for probabilistic transition systems.
//!
//! Given a fault-free nominal model and an implementation whose extra
//! actions are marked as faults, this crate decides whether the
//! implementation masks its faults (no observer can tell it apart from
//! the nominal model), and, for implementations that almost surely fail,
//! quantifies their fault-tolerance as the expected weighted milestones
//! collected before the first unmaskable difference.
//!
//! The analysis runs on a finite symbolic game between a Refuter, who
//! challenges with transitions of either model, and a Verifier, who must
//! match them with couplings of the contending distributions. Coupling
//! choices are kept symbolic as transportation polytopes and queried
//! through an exact rational LP, so every verdict is exact.
//!
//! See the `book/` directory for a guided tour, or start with
//! [`parse_model`], [`decide_masking`] and [`solve_value`].

pub mod analysis;
pub mod cli;
pub mod error;
pub mod game;
pub mod graph_io;
pub mod model;
pub mod oracle;
pub mod parse;
pub mod polytope;
pub mod quantitative;
pub mod rational;
pub mod report;
mod simplex;

pub use analysis::{check_failing, compute_u_set, decide_masking, pre_exists, pre_forall};
pub use error::{ModelError, OracleError, PolytopeError, ValueError};
pub use game::{build_snippet, build_symbolic, SnippetGame, SymVertex, SymbolicGame};
pub use model::{dirac, reachable_states, validate_pair, Dist, Prob, Pts, StateId};
pub use parse::parse_model;
pub use polytope::{build_system, enumerate_vertices, Coupling, CouplingSystem};
pub use quantitative::{compute_bound, gamma_step, reward, solve_value, Milestone, ValueVector};
pub use rational::Rational;

// The book chapters double as doc-tests so their code snippets stay in
// sync with the library.
#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            pub struct $name;
        };
    }

    chapter!(Modeling, "../../../book/src/modeling.md");
    chapter!(Couplings, "../../../book/src/couplings.md");
    chapter!(Games, "../../../book/src/games.md");
    chapter!(Masking, "../../../book/src/masking.md");
    chapter!(Failing, "../../../book/src/failing.md");
    chapter!(Milestones, "../../../book/src/milestones.md");
}
