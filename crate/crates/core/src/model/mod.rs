//! Model documents: labeled MDPs, limit-deterministic Büchi automata, and
//! memoryless policies, together with their validation rules.
//!
//! State and action identifiers are strings; dense indices follow document
//! order and are stable across parses. Probability rows must sum to one
//! within [`PROB_SUM_TOL`] and are never renormalized — a bad sum is a
//! modeling bug, not something to paper over.

mod guard;
mod json;

pub use guard::{eval_guard, Guard};
pub use json::{
    parse_model, parse_policy, serialize_ldba, serialize_mdp, serialize_model, serialize_policy,
    ParsedModel,
};

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

/// Tolerance for outgoing-probability sums.
pub const PROB_SUM_TOL: f64 = 1e-9;

/// Exhaustive guard totality checking enumerates all letters when the
/// alphabet has at most this many atoms; beyond it, only the atoms
/// mentioned by a state's guards are enumerated (equivalent to a pairwise
/// disjointness plus cover check over the relevant cube).
pub const EXHAUSTIVE_ATOM_BOUND: usize = 16;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("syntax error at line {line}, column {col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
    #[error("unknown atom `{0}`")]
    UnknownAtom(String),
    #[error("guard syntax error at offset {offset}: {message}")]
    GuardSyntax { offset: usize, message: String },
    #[error("policy is missing state `{0}`")]
    MissingState(String),
    #[error("policy chooses action `{action}` not allowed in state `{state}`")]
    IllegalAction { state: String, action: String },
}

/// Which document kind a labeled MDP was read from. Products reuse the MDP
/// format plus an accepting-state list, so downstream code consumes both
/// uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Mdp,
    Product,
}

/// A labeled Markov decision process, possibly carrying an accepting-state
/// set (present for product documents, empty for plain MDPs).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledMdp {
    pub kind: ModelKind,
    pub states: Vec<String>,
    pub initial: usize,
    pub atoms: Vec<String>,
    /// Per state: set of atom indices that hold there.
    pub labels: Vec<BTreeSet<usize>>,
    /// Per state: allowed actions, in document order.
    pub actions: Vec<Vec<String>>,
    /// `transitions[s][a]` lists `(target, probability)` for the a-th
    /// allowed action of state `s`, in document order.
    pub transitions: Vec<Vec<Vec<(usize, f64)>>>,
    /// Indices of accepting states (empty unless `kind == Product`).
    pub accepting: BTreeSet<usize>,
}

impl LabeledMdp {
    pub fn state_index(&self, id: &str) -> Option<usize> {
        self.states.iter().position(|s| s == id)
    }

    pub fn atom_index(&self, name: &str) -> Option<usize> {
        self.atoms.iter().position(|a| a == name)
    }

    /// Position of `action` within `A(s)`, if allowed there.
    pub fn action_position(&self, state: usize, action: &str) -> Option<usize> {
        self.actions[state].iter().position(|a| a == action)
    }

    /// The label of a state as a set of atom names.
    pub fn label_letter(&self, state: usize) -> BTreeSet<String> {
        self.labels[state]
            .iter()
            .map(|&i| self.atoms[i].clone())
            .collect()
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    /// Checks every structural invariant; used by the parser and after
    /// programmatic construction.
    pub fn validate(&self) -> Result<(), ModelError> {
        let n = self.states.len();
        if n == 0 {
            return Err(ModelError::InvariantViolation("model has no states".into()));
        }
        if self.initial >= n {
            return Err(ModelError::InvariantViolation(
                "initial state out of range".into(),
            ));
        }
        if self.labels.len() != n || self.actions.len() != n || self.transitions.len() != n {
            return Err(ModelError::InvariantViolation(
                "labels/actions/transitions not aligned with states".into(),
            ));
        }
        for (s, acts) in self.actions.iter().enumerate() {
            if acts.is_empty() {
                return Err(ModelError::InvariantViolation(format!(
                    "state `{}` has no allowed actions",
                    self.states[s]
                )));
            }
            let mut seen = BTreeSet::new();
            for a in acts {
                if !seen.insert(a) {
                    return Err(ModelError::InvariantViolation(format!(
                        "duplicate action `{a}` at state `{}`",
                        self.states[s]
                    )));
                }
            }
            if self.transitions[s].len() != acts.len() {
                return Err(ModelError::InvariantViolation(format!(
                    "transition table misaligned at state `{}`",
                    self.states[s]
                )));
            }
            for (a_pos, row) in self.transitions[s].iter().enumerate() {
                let mut sum = 0.0;
                let mut targets = BTreeSet::new();
                for &(t, p) in row {
                    if t >= n {
                        return Err(ModelError::InvariantViolation(format!(
                            "transition target out of range from `{}`",
                            self.states[s]
                        )));
                    }
                    if !targets.insert(t) {
                        return Err(ModelError::InvariantViolation(format!(
                            "duplicate transition ({}, {}, {})",
                            self.states[s], acts[a_pos], self.states[t]
                        )));
                    }
                    if p.is_nan() || p <= 0.0 || p > 1.0 {
                        return Err(ModelError::InvariantViolation(format!(
                            "probability {p} out of (0, 1] on ({}, {}, {})",
                            self.states[s], acts[a_pos], self.states[t]
                        )));
                    }
                    sum += p;
                }
                if (sum - 1.0).abs() > PROB_SUM_TOL {
                    return Err(ModelError::InvariantViolation(format!(
                        "probabilities sum to {sum} on ({}, {})",
                        self.states[s], acts[a_pos]
                    )));
                }
            }
        }
        for (s, label) in self.labels.iter().enumerate() {
            if label.iter().any(|&a| a >= self.atoms.len()) {
                return Err(ModelError::InvariantViolation(format!(
                    "label of `{}` references an undeclared atom",
                    self.states[s]
                )));
            }
        }
        for &b in &self.accepting {
            if b >= n {
                return Err(ModelError::InvariantViolation(
                    "accepting state out of range".into(),
                ));
            }
        }
        Ok(())
    }
}

/// A limit-deterministic Büchi automaton.
#[derive(Debug, Clone, PartialEq)]
pub struct Ldba {
    pub states: Vec<String>,
    pub initial: usize,
    pub atoms: Vec<String>,
    /// Per automaton state: guarded transitions `(guard, target)` in
    /// document order.
    pub transitions: Vec<Vec<(Guard, usize)>>,
    /// Per automaton state: ε-transition targets.
    pub epsilon: Vec<BTreeSet<usize>>,
    /// Accepting states B.
    pub accepting: BTreeSet<usize>,
    /// Initial component of the bipartition.
    pub ini_component: BTreeSet<usize>,
    /// Accepting component of the bipartition.
    pub acc_component: BTreeSet<usize>,
}

impl Ldba {
    pub fn state_index(&self, id: &str) -> Option<usize> {
        self.states.iter().position(|s| s == id)
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    /// Resolves the unique guarded successor for a letter. Assumes the
    /// automaton validated (exactly one guard fires per letter).
    pub fn step(&self, state: usize, letter: &BTreeSet<String>) -> Result<usize, ModelError> {
        for (g, target) in &self.transitions[state] {
            if eval_guard(g, letter, &self.atoms)? {
                return Ok(*target);
            }
        }
        Err(ModelError::InvariantViolation(format!(
            "no guard fires at `{}` on letter {:?}",
            self.states[state], letter
        )))
    }
}

fn letter_from_mask(atoms: &[String], mask: u32) -> BTreeSet<String> {
    atoms
        .iter()
        .enumerate()
        .filter(|(i, _)| mask & (1 << i) != 0)
        .map(|(_, a)| a.clone())
        .collect()
}

/// Checks the bipartition and determinism conditions of an LDBA and reports
/// every violation found. An empty list means the automaton is valid.
pub fn validate_ldba(a: &Ldba) -> Vec<String> {
    let mut violations = Vec::new();
    let n = a.states.len();

    if n == 0 {
        return vec!["automaton has no states".into()];
    }
    if a.initial >= n {
        violations.push("initial state out of range".into());
    }

    // components must partition Q
    for q in 0..n {
        let in_ini = a.ini_component.contains(&q);
        let in_acc = a.acc_component.contains(&q);
        if in_ini == in_acc {
            violations.push(format!(
                "state `{}` must belong to exactly one component",
                a.states[q]
            ));
        }
    }

    // B ⊆ accepting component
    for &b in &a.accepting {
        if b >= n {
            violations.push("accepting state out of range".into());
            continue;
        }
        if !a.acc_component.contains(&b) {
            violations.push(format!(
                "accepting state `{}` outside the accepting component",
                a.states[b]
            ));
        }
    }

    // no ε-transition leaves the accepting component
    for q in 0..n {
        if a.acc_component.contains(&q) && !a.epsilon[q].is_empty() {
            violations.push(format!(
                "epsilon from accepting component at `{}`",
                a.states[q]
            ));
        }
    }

    // no transition (guarded or ε) from the accepting to the initial component
    for q in 0..n {
        if !a.acc_component.contains(&q) {
            continue;
        }
        for (_, target) in &a.transitions[q] {
            if a.ini_component.contains(target) {
                violations.push(format!(
                    "transition from accepting component `{}` into initial component `{}`",
                    a.states[q], a.states[*target]
                ));
            }
        }
        for target in &a.epsilon[q] {
            if a.ini_component.contains(target) {
                violations.push(format!(
                    "epsilon from accepting component `{}` into initial component `{}`",
                    a.states[q], a.states[*target]
                ));
            }
        }
    }

    // guard atoms must be declared
    for q in 0..n {
        for (g, _) in &a.transitions[q] {
            if let Err(ModelError::UnknownAtom(name)) = g.check_atoms(&a.atoms) {
                violations.push(format!(
                    "guard at `{}` references unknown atom `{name}`",
                    a.states[q]
                ));
            }
        }
    }

    // determinism and totality: exactly one guard fires per state and letter
    violations.extend(check_guard_totality(a));

    violations
}

fn check_guard_totality(a: &Ldba) -> Vec<String> {
    let mut violations = Vec::new();
    let all_atoms = &a.atoms;
    for q in 0..a.states.len() {
        // restrict enumeration to atoms the state's guards can observe when
        // the full alphabet is too large to enumerate
        let relevant: Vec<String> = if all_atoms.len() <= EXHAUSTIVE_ATOM_BOUND {
            all_atoms.clone()
        } else {
            let mut mentioned: Vec<String> = Vec::new();
            for (g, _) in &a.transitions[q] {
                for atom in g.atoms() {
                    if !mentioned.iter().any(|m| m == atom) {
                        mentioned.push(atom.to_string());
                    }
                }
            }
            mentioned
        };
        if relevant.len() > EXHAUSTIVE_ATOM_BOUND {
            violations.push(format!(
                "guards at `{}` mention {} atoms; totality check bound is {}",
                a.states[q],
                relevant.len(),
                EXHAUSTIVE_ATOM_BOUND
            ));
            continue;
        }
        for mask in 0u32..(1u32 << relevant.len()) {
            let letter = letter_from_mask(&relevant, mask);
            let mut fired = 0usize;
            for (g, _) in &a.transitions[q] {
                // unknown atoms are reported separately; skip here
                if g.check_atoms(all_atoms).is_err() {
                    continue;
                }
                if eval_guard(g, &letter, all_atoms).unwrap_or(false) {
                    fired += 1;
                }
            }
            let letter_str = letter.iter().cloned().collect::<Vec<_>>().join(",");
            if fired == 0 {
                violations.push(format!(
                    "no guard fires at `{}` on {{{letter_str}}}",
                    a.states[q]
                ));
            } else if fired > 1 {
                violations.push(format!(
                    "nondeterministic guards at `{}` on {{{letter_str}}}",
                    a.states[q]
                ));
            }
        }
    }
    violations
}

/// A deterministic memoryless policy: one chosen action id per state id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Policy {
    pub choice: BTreeMap<String, String>,
}

impl Policy {
    pub fn new(choice: BTreeMap<String, String>) -> Self {
        Self { choice }
    }

    /// Resolves to per-state action positions, requiring a choice for every
    /// state of the model.
    pub fn resolve_total(&self, model: &LabeledMdp) -> Result<Vec<usize>, ModelError> {
        let partial = self.resolve_partial(model)?;
        partial
            .into_iter()
            .enumerate()
            .map(|(s, a)| a.ok_or_else(|| ModelError::MissingState(model.states[s].clone())))
            .collect()
    }

    /// Resolves choices where present; unnamed states stay `None`. Chosen
    /// actions must still be allowed.
    pub fn resolve_partial(&self, model: &LabeledMdp) -> Result<Vec<Option<usize>>, ModelError> {
        for state_id in self.choice.keys() {
            if model.state_index(state_id).is_none() {
                return Err(ModelError::Schema {
                    path: format!("choice.{state_id}"),
                    message: "unknown state".into(),
                });
            }
        }
        let mut out = vec![None; model.num_states()];
        for (state_id, action_id) in &self.choice {
            let s = model.state_index(state_id).unwrap();
            match model.action_position(s, action_id) {
                Some(pos) => out[s] = Some(pos),
                None => {
                    return Err(ModelError::IllegalAction {
                        state: state_id.clone(),
                        action: action_id.clone(),
                    })
                }
            }
        }
        Ok(out)
    }
}
