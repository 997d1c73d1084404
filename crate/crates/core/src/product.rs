//! Product of a labeled MDP and an LDBA, and projection of product
//! policies back to finite-memory controllers on the original MDP.
//!
//! Product states are all pairs `⟨s, q⟩` — materialized densely, since the
//! partition machinery classifies the full state space. Non-ε actions move
//! the MDP component by `P(s, a, ·)` while the automaton component follows
//! `δ(q, L(s))`, reading the label of the state being left. Every automaton
//! ε-transition `q → q'` becomes an action `eps:q'` that jumps the
//! automaton alone, with probability one.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::model::{LabeledMdp, Ldba, ModelError, ModelKind, Policy};
use crate::rng::SplitMix64;

#[derive(Debug, Error)]
pub enum ProductError {
    #[error("atom sets differ: MDP declares {{{}}}, LDBA declares {{{}}}", mdp.join(", "), ldba.join(", "))]
    AtomMismatch { mdp: Vec<String>, ldba: Vec<String> },
    #[error("LDBA is invalid: {}", violations.join("; "))]
    InvalidLdba { violations: Vec<String> },
    #[error("policy is not defined on reachable product state `{0}`")]
    PartialPolicy(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// The product MDP plus the pair structure of its states.
#[derive(Debug, Clone)]
pub struct ProductMdp {
    /// The product as an ordinary labeled MDP (kind `product`, state ids
    /// `"s|q"`, accepting set `{⟨s,q⟩ : q ∈ B}`).
    pub model: LabeledMdp,
    /// Product state index -> (MDP state index, automaton state index).
    pub pairs: Vec<(usize, usize)>,
    /// Per product state: how many of its actions are inherited MDP
    /// actions; the remainder are ε-actions.
    pub mdp_action_count: Vec<usize>,
}

impl ProductMdp {
    pub fn pair_index(&self, s: usize, q: usize, num_aut_states: usize) -> usize {
        s * num_aut_states + q
    }
}

/// Builds the product per the standard construction. The automaton must be
/// valid and both sides must declare the same atom set.
pub fn build_product(mdp: &LabeledMdp, ldba: &Ldba) -> Result<ProductMdp, ProductError> {
    let violations = crate::model::validate_ldba(ldba);
    if !violations.is_empty() {
        return Err(ProductError::InvalidLdba { violations });
    }
    let mdp_atoms: BTreeSet<&String> = mdp.atoms.iter().collect();
    let ldba_atoms: BTreeSet<&String> = ldba.atoms.iter().collect();
    if mdp_atoms != ldba_atoms {
        return Err(ProductError::AtomMismatch {
            mdp: mdp.atoms.clone(),
            ldba: ldba.atoms.clone(),
        });
    }
    for acts in &mdp.actions {
        for a in acts {
            if a.starts_with("eps:") {
                return Err(ProductError::Model(ModelError::InvariantViolation(
                    format!("MDP action id `{a}` collides with the ε-action namespace"),
                )));
            }
        }
    }

    let ns = mdp.num_states();
    let nq = ldba.num_states();
    let total = ns * nq;

    // δ(q, L(s)) for every (s, q); label read from the source MDP state
    let mut aut_step = vec![vec![0usize; nq]; ns];
    for s in 0..ns {
        let letter = mdp.label_letter(s);
        for q in 0..nq {
            aut_step[s][q] = ldba.step(q, &letter)?;
        }
    }

    let mut states = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    let mut actions = Vec::with_capacity(total);
    let mut transitions = Vec::with_capacity(total);
    let mut mdp_action_count = Vec::with_capacity(total);
    let mut pairs = Vec::with_capacity(total);
    let mut accepting = BTreeSet::new();

    for s in 0..ns {
        for q in 0..nq {
            let idx = s * nq + q;
            pairs.push((s, q));
            states.push(format!("{}|{}", mdp.states[s], ldba.states[q]));
            labels.push(mdp.labels[s].clone());
            if ldba.accepting.contains(&q) {
                accepting.insert(idx);
            }

            let mut acts: Vec<String> = mdp.actions[s].clone();
            let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(acts.len());
            let q_next = aut_step[s][q];
            for row in &mdp.transitions[s] {
                rows.push(row.iter().map(|&(t, p)| (t * nq + q_next, p)).collect());
            }
            mdp_action_count.push(acts.len());
            for &eps_target in &ldba.epsilon[q] {
                acts.push(format!("eps:{}", ldba.states[eps_target]));
                rows.push(vec![(s * nq + eps_target, 1.0)]);
            }
            actions.push(acts);
            transitions.push(rows);
        }
    }

    let model = LabeledMdp {
        kind: ModelKind::Product,
        states,
        initial: mdp.initial * nq + ldba.initial,
        atoms: mdp.atoms.clone(),
        labels,
        actions,
        transitions,
        accepting,
    };
    model.validate()?;
    Ok(ProductMdp {
        model,
        pairs,
        mdp_action_count,
    })
}

/// What a controller does at a (memory, MDP state) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControllerOutput {
    /// Play the action at this position of `A(s)`.
    Action(usize),
    /// Jump the memory to this automaton state without an MDP step.
    Jump(usize),
}

/// A product policy re-expressed as a finite-memory controller on the
/// original MDP: memory = automaton states, memory update = the automaton
/// transition on the label of the state being left.
#[derive(Debug, Clone)]
pub struct FiniteMemoryController {
    pub memory_ids: Vec<String>,
    pub initial_memory: usize,
    /// `outputs[q][s]` — `None` only on pairs the policy never covers
    /// (necessarily unreachable under it).
    pub outputs: Vec<Vec<Option<ControllerOutput>>>,
    /// `update[q][s] = δ(q, L(s))`.
    pub update: Vec<Vec<usize>>,
}

impl FiniteMemoryController {
    pub fn output(&self, memory: usize, state: usize) -> Option<ControllerOutput> {
        self.outputs[memory][state]
    }

    pub fn update_memory(&self, memory: usize, state: usize) -> usize {
        self.update[memory][state]
    }
}

/// Projects a memoryless product policy to a controller on the MDP. The
/// policy must cover every product state reachable from the initial pair
/// under its own choices.
pub fn project_policy(
    product: &ProductMdp,
    policy: &Policy,
    mdp: &LabeledMdp,
    ldba: &Ldba,
) -> Result<FiniteMemoryController, ProductError> {
    let choices = policy.resolve_partial(&product.model)?;
    let nq = ldba.num_states();

    // walk the product under the policy; every visited state needs a choice
    let mut visited = vec![false; product.model.num_states()];
    let mut queue = vec![product.model.initial];
    visited[product.model.initial] = true;
    while let Some(x) = queue.pop() {
        let a_pos = match choices[x] {
            Some(pos) => pos,
            None => return Err(ProductError::PartialPolicy(product.model.states[x].clone())),
        };
        for &(t, _) in &product.model.transitions[x][a_pos] {
            if !visited[t] {
                visited[t] = true;
                queue.push(t);
            }
        }
    }

    let mut outputs = vec![vec![None; mdp.num_states()]; nq];
    for (idx, &(s, q)) in product.pairs.iter().enumerate() {
        if let Some(a_pos) = choices[idx] {
            let out = if a_pos < product.mdp_action_count[idx] {
                ControllerOutput::Action(a_pos)
            } else {
                // ε-action positions follow the MDP actions, in ascending
                // target order — mirror that here
                let eps_rank = a_pos - product.mdp_action_count[idx];
                let target = ldba.epsilon[q]
                    .iter()
                    .nth(eps_rank)
                    .copied()
                    .expect("ε-action position out of range");
                ControllerOutput::Jump(target)
            };
            outputs[q][s] = Some(out);
        }
    }

    let mut update = vec![vec![0usize; mdp.num_states()]; nq];
    for q in 0..nq {
        for s in 0..mdp.num_states() {
            update[q][s] = ldba.step(q, &mdp.label_letter(s))?;
        }
    }

    Ok(FiniteMemoryController {
        memory_ids: ldba.states.clone(),
        initial_memory: ldba.initial,
        outputs,
        update,
    })
}

/// Runs the product under a policy for `steps` actions and returns the
/// action-id trace. ε-actions consume no randomness; every other action
/// consumes exactly one draw.
pub fn simulate_product_policy(
    product: &ProductMdp,
    policy: &Policy,
    steps: usize,
    rng: &mut SplitMix64,
) -> Result<Vec<String>, ProductError> {
    let choices = policy.resolve_partial(&product.model)?;
    let mut x = product.model.initial;
    let mut trace = Vec::with_capacity(steps);
    for _ in 0..steps {
        let a_pos = choices[x]
            .ok_or_else(|| ProductError::PartialPolicy(product.model.states[x].clone()))?;
        trace.push(product.model.actions[x][a_pos].clone());
        let row = &product.model.transitions[x][a_pos];
        if a_pos >= product.mdp_action_count[x] {
            x = row[0].0; // ε: single certain transition
        } else {
            let probs: Vec<f64> = row.iter().map(|&(_, p)| p).collect();
            x = row[rng.next_categorical(&probs)].0;
        }
    }
    Ok(trace)
}

/// Runs a controller on the MDP for `steps` actions and returns the
/// action-id trace, with ε-jumps reported as `eps:<memory>`. Draws
/// randomness exactly like [`simulate_product_policy`], so the two traces
/// coincide path-for-path under the same generator.
pub fn simulate_controller(
    mdp: &LabeledMdp,
    controller: &FiniteMemoryController,
    steps: usize,
    rng: &mut SplitMix64,
) -> Result<Vec<String>, ProductError> {
    let mut s = mdp.initial;
    let mut memory = controller.initial_memory;
    let mut trace = Vec::with_capacity(steps);
    for _ in 0..steps {
        let out = controller.output(memory, s).ok_or_else(|| {
            ProductError::PartialPolicy(format!(
                "{}|{}",
                mdp.states[s], controller.memory_ids[memory]
            ))
        })?;
        match out {
            ControllerOutput::Jump(q) => {
                trace.push(format!("eps:{}", controller.memory_ids[q]));
                memory = q;
            }
            ControllerOutput::Action(a_pos) => {
                trace.push(mdp.actions[s][a_pos].clone());
                let row = &mdp.transitions[s][a_pos];
                let probs: Vec<f64> = row.iter().map(|&(_, p)| p).collect();
                let next = row[rng.next_categorical(&probs)].0;
                memory = controller.update_memory(memory, s);
                s = next;
            }
        }
    }
    Ok(trace)
}
