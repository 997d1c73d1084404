//! Embedded example models, addressable on the CLI as `builtin:<name>`.

/// Three-state MDP with a branching choice at `s1`: `alpha` moves to the
/// accepting self-loop `s2`, `beta` to the rejecting self-loop `s3`.
pub const EX1: &str = r#"{
  "kind": "product",
  "states": ["s1", "s2", "s3"],
  "initial": "s1",
  "atoms": ["b"],
  "labels": {"s1": [], "s2": ["b"], "s3": []},
  "actions": {"s1": ["alpha", "beta"], "s2": ["tau"], "s3": ["tau"]},
  "transitions": [
    {"from": "s1", "action": "alpha", "to": "s2", "prob": 1.0},
    {"from": "s1", "action": "beta", "to": "s3", "prob": 1.0},
    {"from": "s2", "action": "tau", "to": "s2", "prob": 1.0},
    {"from": "s3", "action": "tau", "to": "s3", "prob": 1.0}
  ],
  "accepting": ["s2"]
}"#;

/// Deterministic two-state Büchi automaton for "always eventually b".
pub const GF_LDBA: &str = r#"{
  "kind": "ldba",
  "states": ["q0", "q1"],
  "initial": "q0",
  "atoms": ["b"],
  "transitions": [
    {"from": "q0", "guard": "b", "to": "q1"},
    {"from": "q0", "guard": "!b", "to": "q0"},
    {"from": "q1", "guard": "b", "to": "q1"},
    {"from": "q1", "guard": "!b", "to": "q0"}
  ],
  "accepting": ["q1"],
  "epsilon": {},
  "components": {"ini": [], "acc": ["q0", "q1"]}
}"#;

/// Fair coin into an accepting or a rejecting self-loop.
pub const SPLIT: &str = r#"{
  "kind": "product",
  "states": ["s0", "a", "r"],
  "initial": "s0",
  "atoms": [],
  "labels": {"s0": [], "a": [], "r": []},
  "actions": {"s0": ["tau"], "a": ["tau"], "r": ["tau"]},
  "transitions": [
    {"from": "s0", "action": "tau", "to": "a", "prob": 0.5},
    {"from": "s0", "action": "tau", "to": "r", "prob": 0.5},
    {"from": "a", "action": "tau", "to": "a", "prob": 1.0},
    {"from": "r", "action": "tau", "to": "r", "prob": 1.0}
  ],
  "accepting": ["a"]
}"#;

/// Two-state loop: the accepting state always leaves to `r1`, which returns
/// with probability one half per step.
pub const LOOP2: &str = r#"{
  "kind": "product",
  "states": ["b1", "r1"],
  "initial": "b1",
  "atoms": [],
  "labels": {"b1": [], "r1": []},
  "actions": {"b1": ["tau"], "r1": ["tau"]},
  "transitions": [
    {"from": "b1", "action": "tau", "to": "r1", "prob": 1.0},
    {"from": "r1", "action": "tau", "to": "b1", "prob": 0.5},
    {"from": "r1", "action": "tau", "to": "r1", "prob": 0.5}
  ],
  "accepting": ["b1"]
}"#;

pub const EX1_POLICY_ALPHA: &str =
    r#"{"kind": "policy", "choice": {"s1": "alpha", "s2": "tau", "s3": "tau"}}"#;

pub const EX1_POLICY_BETA: &str =
    r#"{"kind": "policy", "choice": {"s1": "beta", "s2": "tau", "s3": "tau"}}"#;

/// Resolves a `builtin:<name>` reference to its embedded document.
pub fn builtin_document(name: &str) -> Option<&'static str> {
    match name {
        "ex1" => Some(EX1),
        "gf-ldba" => Some(GF_LDBA),
        "split" => Some(SPLIT),
        "loop2" => Some(LOOP2),
        "ex1-alpha" => Some(EX1_POLICY_ALPHA),
        "ex1-beta" => Some(EX1_POLICY_BETA),
        _ => None,
    }
}

/// Names accepted by [`builtin_document`], for error messages.
pub const BUILTIN_NAMES: &[&str] = &["ex1", "gf-ldba", "split", "loop2", "ex1-alpha", "ex1-beta"];
