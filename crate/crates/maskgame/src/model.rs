//! Probabilistic transition systems and distributions.
//!
//! A [`Pts`] is a finite-state system whose transitions carry an action
//! label and a probability distribution over successor states. States are
//! full valuations of the declared variables, probabilities are exact
//! rationals. Nominal models have an empty fault alphabet; implementation
//! models mark a subset of their actions as faults.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use num_traits::{One, Zero};

use crate::error::ModelError;
use crate::rational::{rat_to_string, Rational};

/// An exact probability in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Prob(Rational);

impl Prob {
    pub fn new(value: Rational) -> Option<Prob> {
        if value >= Rational::zero() && value <= Rational::one() {
            Some(Prob(value))
        } else {
            None
        }
    }

    pub fn zero() -> Prob {
        Prob(Rational::zero())
    }

    pub fn one() -> Prob {
        Prob(Rational::one())
    }

    pub fn ratio(&self) -> &Rational {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        crate::rational::rat_to_f64_saturating(&self.0)
    }
}

impl fmt::Display for Prob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", rat_to_string(&self.0))
    }
}

/// A state: the values of the declared variables, in declaration order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub Vec<i64>);

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// A finite-support probability distribution over states.
///
/// Only strictly positive weights are stored, and the stored weights sum
/// to exactly 1.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Dist {
    weights: BTreeMap<StateId, Prob>,
}

impl Dist {
    /// Builds a distribution, dropping zero weights and checking that the
    /// remaining weights sum to exactly 1.
    pub fn new(weights: BTreeMap<StateId, Prob>) -> Option<Dist> {
        let weights: BTreeMap<StateId, Prob> =
            weights.into_iter().filter(|(_, p)| !p.is_zero()).collect();
        let sum: Rational = weights.values().map(|p| p.ratio().clone()).sum();
        if sum.is_one() {
            Some(Dist { weights })
        } else {
            None
        }
    }

    /// The distribution assigning probability 1 to `s`.
    pub fn dirac(s: StateId) -> Dist {
        let mut weights = BTreeMap::new();
        weights.insert(s, Prob::one());
        Dist { weights }
    }

    pub fn is_dirac(&self) -> bool {
        self.weights.len() == 1
    }

    pub fn support(&self) -> impl Iterator<Item = &StateId> {
        self.weights.keys()
    }

    pub fn support_size(&self) -> usize {
        self.weights.len()
    }

    pub fn get(&self, s: &StateId) -> Option<&Prob> {
        self.weights.get(s)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&StateId, &Prob)> {
        self.weights.iter()
    }
}

/// A declared integer variable with its range and initial value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarDecl {
    pub name: String,
    pub lo: i64,
    pub hi: i64,
    pub init: i64,
}

/// One labelled probabilistic transition.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Transition {
    pub label: String,
    pub target: Dist,
}

/// A finite probabilistic transition system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pts {
    variables: Vec<VarDecl>,
    actions: BTreeSet<String>,
    faults: BTreeSet<String>,
    transitions: BTreeMap<StateId, Vec<Transition>>,
    initial: StateId,
}

impl Pts {
    /// Assembles a PTS from parts, checking the structural invariants:
    /// faults are declared actions, all stored states carry at least one
    /// transition, and transition supports stay within the stored states.
    pub fn from_parts(
        variables: Vec<VarDecl>,
        actions: BTreeSet<String>,
        faults: BTreeSet<String>,
        transitions: BTreeMap<StateId, Vec<Transition>>,
        initial: StateId,
    ) -> Result<Pts, ModelError> {
        if actions.is_empty() {
            return Err(ModelError::EmptyModel);
        }
        assert!(
            faults.iter().all(|f| actions.contains(f)),
            "fault labels must be declared actions"
        );
        let pts = Pts { variables, actions, faults, transitions, initial };
        for (state, outgoing) in &pts.transitions {
            if outgoing.is_empty() {
                return Err(ModelError::Deadlock { state: state.to_string() });
            }
            for t in outgoing {
                for succ in t.target.support() {
                    if !pts.transitions.contains_key(succ) {
                        return Err(ModelError::Deadlock { state: succ.to_string() });
                    }
                }
            }
        }
        if !pts.transitions.contains_key(&pts.initial) {
            return Err(ModelError::Deadlock { state: pts.initial.to_string() });
        }
        Ok(pts)
    }

    pub fn variables(&self) -> &[VarDecl] {
        &self.variables
    }

    /// The full action alphabet, faults included.
    pub fn actions(&self) -> &BTreeSet<String> {
        &self.actions
    }

    pub fn faults(&self) -> &BTreeSet<String> {
        &self.faults
    }

    /// The non-fault part of the alphabet.
    pub fn shared_alphabet(&self) -> BTreeSet<String> {
        self.actions.difference(&self.faults).cloned().collect()
    }

    pub fn initial(&self) -> &StateId {
        &self.initial
    }

    pub fn states(&self) -> impl Iterator<Item = &StateId> {
        self.transitions.keys()
    }

    pub fn state_count(&self) -> usize {
        self.transitions.len()
    }

    pub fn transition_count(&self) -> usize {
        self.transitions.values().map(|v| v.len()).sum()
    }

    /// Outgoing transitions of `s`; empty if `s` is not a state of this
    /// system.
    pub fn outgoing(&self, s: &StateId) -> &[Transition] {
        self.transitions.get(s).map(|v| v.as_slice()).unwrap_or(&[])
    }

    /// Transitions from `s` labelled `label`.
    pub fn outgoing_labelled<'a>(
        &'a self,
        s: &StateId,
        label: &'a str,
    ) -> impl Iterator<Item = &'a Transition> {
        self.outgoing(s).iter().filter(move |t| t.label == label)
    }

    pub fn has_label(&self, s: &StateId, label: &str) -> bool {
        self.outgoing(s).iter().any(|t| t.label == label)
    }
}

/// The distribution assigning probability 1 to `s`.
pub fn dirac(s: &StateId) -> Dist {
    Dist::dirac(s.clone())
}

/// States reachable from the initial state through transition supports.
pub fn reachable_states(pts: &Pts) -> BTreeSet<StateId> {
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::new();
    seen.insert(pts.initial().clone());
    queue.push_back(pts.initial().clone());
    while let Some(s) = queue.pop_front() {
        for t in pts.outgoing(&s) {
            for succ in t.target.support() {
                if seen.insert(succ.clone()) {
                    queue.push_back(succ.clone());
                }
            }
        }
    }
    seen
}

/// A nominal/implementation pair that passed the compatibility checks.
#[derive(Debug, Clone, Copy)]
pub struct ValidatedPair<'a> {
    pub nominal: &'a Pts,
    pub implementation: &'a Pts,
}

impl<'a> ValidatedPair<'a> {
    /// The fault alphabet of the pair.
    pub fn faults(&self) -> &BTreeSet<String> {
        self.implementation.faults()
    }
}

/// Checks that `nominal` is fault-free and that `implementation` extends
/// exactly the nominal alphabet with its fault labels.
pub fn validate_pair<'a>(
    nominal: &'a Pts,
    implementation: &'a Pts,
) -> Result<ValidatedPair<'a>, ModelError> {
    if nominal.actions().is_empty() || implementation.actions().is_empty() {
        return Err(ModelError::EmptyModel);
    }
    if !nominal.faults().is_empty() {
        return Err(ModelError::FaultInNominal {
            labels: nominal.faults().iter().cloned().collect(),
        });
    }
    let shared = implementation.shared_alphabet();
    if *nominal.actions() != shared {
        return Err(ModelError::AlphabetMismatch {
            nominal: nominal.actions().iter().cloned().collect(),
            implementation: shared.into_iter().collect(),
        });
    }
    Ok(ValidatedPair { nominal, implementation })
}

impl Pts {
    /// Canonical textual form: one command per transition, guarded by the
    /// full source valuation. Parsing the result reproduces this PTS.
    pub fn to_canonical_text(&self) -> String {
        let mut out = String::new();
        if !self.faults.is_empty() {
            out.push_str("faults: ");
            let names: Vec<&str> = self.faults.iter().map(|s| s.as_str()).collect();
            out.push_str(&names.join(", "));
            out.push_str(";\n");
        }
        for v in &self.variables {
            out.push_str(&format!("var {}: [{}..{}] init {};\n", v.name, v.lo, v.hi, v.init));
        }
        for (state, outgoing) in &self.transitions {
            for t in outgoing {
                let guard: Vec<String> = self
                    .variables
                    .iter()
                    .zip(&state.0)
                    .map(|(v, val)| format!("({}={})", v.name, val))
                    .collect();
                let branches: Vec<String> = t
                    .target
                    .iter()
                    .map(|(succ, p)| {
                        let assigns: Vec<String> = self
                            .variables
                            .iter()
                            .zip(&succ.0)
                            .map(|(v, val)| format!("({}'={})", v.name, val))
                            .collect();
                        format!("{}: {}", rat_to_string(p.ratio()), assigns.join(" & "))
                    })
                    .collect();
                out.push_str(&format!(
                    "[{}] {} -> {};\n",
                    t.label,
                    guard.join(" & "),
                    branches.join(" + ")
                ));
            }
        }
        out
    }
}
