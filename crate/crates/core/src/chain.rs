//! Markov chains induced by memoryless policies, their strongly connected
//! components, and the bottom-SCC classification that drives everything
//! downstream.
//!
//! The state space splits five ways: accepting states inside BSCCs (`B_A`),
//! transient accepting states (`B_T`), non-accepting states inside
//! accepting BSCCs (`nB_A`), states of rejecting BSCCs (`nB_R`), and
//! transient non-accepting states (`nB_T`). Classification runs over the
//! full state space — unreachable states are classified too, since the
//! uniqueness condition quantifies over every rejecting BSCC.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::linalg::Matrix;
use crate::model::{LabeledMdp, ModelError, Policy, PROB_SUM_TOL};

#[derive(Debug, Error)]
pub enum ChainError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("policy is not defined on state `{0}`")]
    PartialPolicy(String),
    #[error("row {0} of the transition matrix sums to {1}, not 1")]
    NotStochastic(usize, f64),
}

/// The Markov chain a deterministic memoryless policy induces on a model.
#[derive(Debug, Clone)]
pub struct InducedChain {
    /// State ids, index-aligned with the source model.
    pub state_ids: Vec<String>,
    /// Dense row-stochastic transition matrix.
    pub matrix: Matrix,
    pub initial: usize,
    /// Accepting state indices (`B`).
    pub accepting: BTreeSet<usize>,
}

impl InducedChain {
    /// Builds a chain from explicit rows; used by tests and generators.
    pub fn from_rows(
        rows: Vec<Vec<f64>>,
        initial: usize,
        accepting: BTreeSet<usize>,
    ) -> Result<Self, ChainError> {
        let n = rows.len();
        let state_ids = (0..n).map(|i| format!("s{i}")).collect();
        let matrix = Matrix::from_rows(&rows);
        let chain = Self {
            state_ids,
            matrix,
            initial,
            accepting,
        };
        chain.check_stochastic()?;
        Ok(chain)
    }

    pub fn num_states(&self) -> usize {
        self.state_ids.len()
    }

    pub fn check_stochastic(&self) -> Result<(), ChainError> {
        for s in 0..self.num_states() {
            let sum: f64 = self.matrix.row(s).iter().sum();
            if (sum - 1.0).abs() > PROB_SUM_TOL {
                return Err(ChainError::NotStochastic(s, sum));
            }
        }
        Ok(())
    }

    /// Successors with positive probability, ascending.
    pub fn successors(&self, s: usize) -> impl Iterator<Item = usize> + '_ {
        self.matrix
            .row(s)
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(t, _)| t)
    }
}

/// Selects the rows of the model's transition function chosen by `policy`.
/// The accepting set is carried over from the model.
pub fn induce_chain(model: &LabeledMdp, policy: &Policy) -> Result<InducedChain, ChainError> {
    let choices = policy.resolve_total(model)?;
    induce_chain_resolved(model, &choices)
}

/// Same as [`induce_chain`] but with pre-resolved action positions.
pub fn induce_chain_resolved(
    model: &LabeledMdp,
    choices: &[usize],
) -> Result<InducedChain, ChainError> {
    let n = model.num_states();
    assert_eq!(choices.len(), n, "choices not aligned with states");
    let mut matrix = Matrix::zeros(n, n);
    for s in 0..n {
        for &(t, p) in &model.transitions[s][choices[s]] {
            matrix[(s, t)] += p;
        }
    }
    let chain = InducedChain {
        state_ids: model.states.clone(),
        matrix,
        initial: model.initial,
        accepting: model.accepting.clone(),
    };
    chain.check_stochastic()?;
    Ok(chain)
}

/// Five-way state classification relative to the accepting set and the
/// BSCC structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StateClass {
    /// Accepting state inside an accepting BSCC.
    #[serde(rename = "B_A")]
    AcceptingInBscc,
    /// Accepting state outside every BSCC.
    #[serde(rename = "B_T")]
    AcceptingTransient,
    /// Non-accepting state inside an accepting BSCC.
    #[serde(rename = "nB_A")]
    RejectingInAcceptingBscc,
    /// State of a rejecting BSCC.
    #[serde(rename = "nB_R")]
    RejectingInRejectingBscc,
    /// Non-accepting state outside every BSCC.
    #[serde(rename = "nB_T")]
    RejectingTransient,
}

impl StateClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            StateClass::AcceptingInBscc => "B_A",
            StateClass::AcceptingTransient => "B_T",
            StateClass::RejectingInAcceptingBscc => "nB_A",
            StateClass::RejectingInRejectingBscc => "nB_R",
            StateClass::RejectingTransient => "nB_T",
        }
    }
}

/// A bottom SCC together with its acceptance flag.
#[derive(Debug, Clone)]
pub struct Bscc {
    /// Index into [`BsccPartition::sccs`].
    pub scc_index: usize,
    /// Member states, ascending.
    pub states: Vec<usize>,
    /// True iff the component contains at least one accepting state.
    pub accepting: bool,
}

/// SCC decomposition plus BSCC flags and the five-way classes.
#[derive(Debug, Clone)]
pub struct BsccPartition {
    /// SCCs in reverse topological order (components only reached later in
    /// the list can have edges into earlier ones). Members ascending.
    pub sccs: Vec<Vec<usize>>,
    /// For each state, the index of its SCC.
    pub scc_of: Vec<usize>,
    /// Bottom SCCs in order of appearance in `sccs`.
    pub bsccs: Vec<Bscc>,
    /// Class of every state.
    pub classes: Vec<StateClass>,
}

impl BsccPartition {
    pub fn rejecting_bscc_count(&self) -> usize {
        self.bsccs.iter().filter(|b| !b.accepting).count()
    }

    pub fn accepting_bscc_count(&self) -> usize {
        self.bsccs.iter().filter(|b| b.accepting).count()
    }

    /// Index into `bsccs` if the state lies in a BSCC.
    pub fn bscc_of(&self, state: usize) -> Option<usize> {
        self.bsccs
            .iter()
            .position(|b| b.scc_index == self.scc_of[state])
    }

    pub fn in_bscc(&self, state: usize) -> bool {
        self.bscc_of(state).is_some()
    }

    /// States with the given class, ascending.
    pub fn states_in_class(&self, class: StateClass) -> Vec<usize> {
        (0..self.classes.len())
            .filter(|&s| self.classes[s] == class)
            .collect()
    }
}

/// Per-class state counts plus the number of rejecting BSCCs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ClassCounts {
    #[serde(rename = "B_A")]
    pub accepting_in_bscc: usize,
    #[serde(rename = "B_T")]
    pub accepting_transient: usize,
    #[serde(rename = "nB_A")]
    pub rejecting_in_accepting_bscc: usize,
    #[serde(rename = "nB_R")]
    pub rejecting_in_rejecting_bscc: usize,
    #[serde(rename = "nB_T")]
    pub rejecting_transient: usize,
    pub rejecting_bsccs: usize,
}

impl ClassCounts {
    pub fn total(&self) -> usize {
        self.accepting_in_bscc
            + self.accepting_transient
            + self.rejecting_in_accepting_bscc
            + self.rejecting_in_rejecting_bscc
            + self.rejecting_transient
    }
}

/// Tallies the partition.
pub fn class_counts(partition: &BsccPartition) -> ClassCounts {
    let mut counts = ClassCounts {
        accepting_in_bscc: 0,
        accepting_transient: 0,
        rejecting_in_accepting_bscc: 0,
        rejecting_in_rejecting_bscc: 0,
        rejecting_transient: 0,
        rejecting_bsccs: partition.rejecting_bscc_count(),
    };
    for class in &partition.classes {
        match class {
            StateClass::AcceptingInBscc => counts.accepting_in_bscc += 1,
            StateClass::AcceptingTransient => counts.accepting_transient += 1,
            StateClass::RejectingInAcceptingBscc => counts.rejecting_in_accepting_bscc += 1,
            StateClass::RejectingInRejectingBscc => counts.rejecting_in_rejecting_bscc += 1,
            StateClass::RejectingTransient => counts.rejecting_transient += 1,
        }
    }
    counts
}

/// Decomposes the chain into SCCs (iterative Tarjan, so deep graphs cannot
/// overflow the call stack), flags bottom components, and assigns classes.
/// Edges are `P(s, s') > 0` exactly; parsers reject nonpositive
/// probabilities, so no epsilon is involved.
pub fn decompose(chain: &InducedChain) -> BsccPartition {
    let n = chain.num_states();
    let succ: Vec<Vec<usize>> = (0..n).map(|s| chain.successors(s).collect()).collect();
    let mut sccs = tarjan_sccs(&succ);
    for comp in &mut sccs {
        comp.sort_unstable();
    }

    let mut scc_of = vec![usize::MAX; n];
    for (ci, comp) in sccs.iter().enumerate() {
        for &s in comp {
            scc_of[s] = ci;
        }
    }

    let mut bsccs = Vec::new();
    for (ci, comp) in sccs.iter().enumerate() {
        let bottom = comp
            .iter()
            .all(|&s| succ[s].iter().all(|&t| scc_of[t] == ci));
        if bottom {
            let accepting = comp.iter().any(|s| chain.accepting.contains(s));
            bsccs.push(Bscc {
                scc_index: ci,
                states: comp.clone(),
                accepting,
            });
        }
    }

    let mut classes = Vec::with_capacity(n);
    for s in 0..n {
        let in_b = chain.accepting.contains(&s);
        let bscc = bsccs.iter().find(|b| b.scc_index == scc_of[s]);
        let class = match (in_b, bscc) {
            (true, Some(_)) => StateClass::AcceptingInBscc,
            (true, None) => StateClass::AcceptingTransient,
            (false, Some(b)) if b.accepting => StateClass::RejectingInAcceptingBscc,
            (false, Some(_)) => StateClass::RejectingInRejectingBscc,
            (false, None) => StateClass::RejectingTransient,
        };
        classes.push(class);
    }

    BsccPartition {
        sccs,
        scc_of,
        bsccs,
        classes,
    }
}

/// Iterative Tarjan over an adjacency list. Roots are tried in ascending
/// index order and successors in list order, so the output is a fixed
/// function of the graph. Components come out in reverse topological order.
fn tarjan_sccs(succ: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = succ.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut next_index = 0usize;
    let mut comps: Vec<Vec<usize>> = Vec::new();
    // explicit DFS frames: (node, next successor position)
    let mut frames: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        frames.push((root, 0));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut pos)) = frames.last_mut() {
            if *pos < succ[v].len() {
                let w = succ[v][*pos];
                *pos += 1;
                if index[w] == usize::MAX {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    frames.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                frames.pop();
                if let Some(&mut (parent, _)) = frames.last_mut() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack underflow");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comps.push(comp);
                }
            }
        }
    }
    comps
}
