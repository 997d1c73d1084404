//! Seeded random model generation with plantable BSCC structure.
//!
//! The chain generator lays out a configurable number of accepting and
//! rejecting BSCCs plus a transient ramp that can only flow forward into
//! them, so the planted component counts are exact by construction: every
//! BSCC is built irreducible (a ring plus chords), BSCCs never link to each
//! other, and the transient part is a DAG with at least one BSCC edge per
//! state. Everything is a pure function of the seed.

use std::collections::{BTreeMap, BTreeSet};

use crate::model::{Guard, LabeledMdp, Ldba, ModelKind, Policy};
use crate::rng::SplitMix64;

/// Layout of a generated single-action chain model.
#[derive(Debug, Clone, Copy)]
pub struct ChainGenConfig {
    pub states: usize,
    pub accepting_bsccs: usize,
    pub rejecting_bsccs: usize,
    /// Total accepting states; `None` picks one per accepting BSCC plus a
    /// random sprinkle of transient accepting states.
    pub accepting_states: Option<usize>,
    pub seed: u64,
}

/// A generated chain model together with its planted structure.
#[derive(Debug, Clone)]
pub struct GeneratedChain {
    /// Single-action model of kind `product`, so the accepting set travels
    /// with the document.
    pub model: LabeledMdp,
    pub accepting_bsccs: usize,
    pub rejecting_bsccs: usize,
}

impl ChainGenConfig {
    fn validate(&self) {
        assert!(self.states >= 1, "need at least one state");
        assert!(
            self.accepting_bsccs + self.rejecting_bsccs >= 1,
            "a finite chain always has a BSCC; plant at least one"
        );
        assert!(
            self.states >= self.accepting_bsccs + self.rejecting_bsccs,
            "not enough states for the requested BSCCs"
        );
        if let Some(k) = self.accepting_states {
            assert!(
                k >= self.accepting_bsccs,
                "each accepting BSCC needs an accepting state"
            );
        }
    }
}

/// Generates a chain with the planted structure. Deterministic in `seed`.
pub fn generate_chain(cfg: &ChainGenConfig) -> GeneratedChain {
    cfg.validate();
    let mut rng = SplitMix64::new(cfg.seed);
    let n = cfg.states;
    let n_bsccs = cfg.accepting_bsccs + cfg.rejecting_bsccs;

    // choose BSCC sizes: one guaranteed slot each, spare states split
    // between BSCC growth and the transient ramp
    let mut sizes = vec![1usize; n_bsccs];
    let mut spare = n - n_bsccs;
    let transient_target = spare.div_ceil(2);
    while spare > transient_target {
        let which = rng.next_index(n_bsccs);
        if sizes[which] < 4 || sizes.iter().all(|&s| s >= 4) {
            sizes[which] += 1;
            spare -= 1;
        }
    }

    // canonical layout: BSCC groups first, then the transient ramp;
    // a random permutation maps canonical indices to final state indices
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.next_index(i + 1);
        perm.swap(i, j);
    }

    let mut groups: Vec<Vec<usize>> = Vec::with_capacity(n_bsccs);
    let mut cursor = 0usize;
    for &size in &sizes {
        groups.push((cursor..cursor + size).map(|c| perm[c]).collect());
        cursor += size;
    }
    let transient: Vec<usize> = (cursor..n).map(|c| perm[c]).collect();

    // dense probability rows
    let mut rows = vec![vec![0.0f64; n]; n];

    for group in &groups {
        let k = group.len();
        for (pos, &s) in group.iter().enumerate() {
            let mut weights: BTreeMap<usize, f64> = BTreeMap::new();
            // ring edge keeps the component irreducible
            weights.insert(group[(pos + 1) % k], 1.0 + rng.next_f64());
            for &other in group {
                if other != group[(pos + 1) % k] && rng.next_f64() < 0.4 {
                    weights.insert(other, 0.2 + rng.next_f64());
                }
            }
            assign_row(&mut rows[s], &weights);
        }
    }

    let all_bscc_states: Vec<usize> = groups.iter().flatten().copied().collect();
    for (rank, &s) in transient.iter().enumerate() {
        let mut weights: BTreeMap<usize, f64> = BTreeMap::new();
        // at least one edge into a BSCC guarantees absorption
        weights.insert(
            all_bscc_states[rng.next_index(all_bscc_states.len())],
            0.5 + rng.next_f64(),
        );
        for _ in 0..2 {
            if rng.next_f64() < 0.6 {
                let t = all_bscc_states[rng.next_index(all_bscc_states.len())];
                weights.entry(t).or_insert_with(|| 0.2 + rng.next_f64());
            }
        }
        // forward edges only: the transient part stays acyclic
        for &later in &transient[rank + 1..] {
            if rng.next_f64() < 0.5 {
                weights.insert(later, 0.3 + rng.next_f64());
            }
        }
        assign_row(&mut rows[s], &weights);
    }

    // accepting states: one per accepting BSCC, then the requested (or a
    // random) surplus over accepting-BSCC members and transient states
    let mut accepting: BTreeSet<usize> = BTreeSet::new();
    for group in groups.iter().take(cfg.accepting_bsccs) {
        accepting.insert(group[rng.next_index(group.len())]);
    }
    let mut surplus_pool: Vec<usize> = groups
        .iter()
        .take(cfg.accepting_bsccs)
        .flatten()
        .chain(transient.iter())
        .copied()
        .filter(|s| !accepting.contains(s))
        .collect();
    let surplus = match cfg.accepting_states {
        Some(k) => k.saturating_sub(accepting.len()).min(surplus_pool.len()),
        None => {
            let cap = surplus_pool.len();
            if cap == 0 {
                0
            } else {
                rng.next_index(cap / 2 + 1)
            }
        }
    };
    for _ in 0..surplus {
        let pick = rng.next_index(surplus_pool.len());
        accepting.insert(surplus_pool.swap_remove(pick));
    }

    let initial = if transient.is_empty() {
        all_bscc_states[rng.next_index(all_bscc_states.len())]
    } else {
        transient[0]
    };

    let states: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
    let transitions: Vec<Vec<Vec<(usize, f64)>>> = rows
        .iter()
        .map(|row| {
            vec![row
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0.0)
                .map(|(t, &p)| (t, p))
                .collect()]
        })
        .collect();

    let model = LabeledMdp {
        kind: ModelKind::Product,
        states,
        initial,
        atoms: Vec::new(),
        labels: vec![BTreeSet::new(); n],
        actions: vec![vec!["a".to_string()]; n],
        transitions,
        accepting,
    };
    model.validate().expect("generated chain must be valid");
    GeneratedChain {
        model,
        accepting_bsccs: cfg.accepting_bsccs,
        rejecting_bsccs: cfg.rejecting_bsccs,
    }
}

/// Converts a weight map to a probability row whose entries sum to one
/// exactly: every entry but the last is `w/Σw` and the last absorbs the
/// rounding slack.
fn assign_row(row: &mut [f64], weights: &BTreeMap<usize, f64>) {
    let total: f64 = weights.values().sum();
    let mut acc = 0.0;
    let last = *weights
        .keys()
        .next_back()
        .expect("weights must be non-empty");
    for (&target, &w) in weights {
        if target == last {
            row[target] = 1.0 - acc;
        } else {
            let p = w / total;
            row[target] = p;
            acc += p;
        }
    }
}

/// The policy that picks each state's single action. `None` when some
/// state offers a choice.
pub fn unique_policy(model: &LabeledMdp) -> Option<Policy> {
    let mut choice = BTreeMap::new();
    for (s, acts) in model.actions.iter().enumerate() {
        if acts.len() != 1 {
            return None;
        }
        choice.insert(model.states[s].clone(), acts[0].clone());
    }
    Some(Policy::new(choice))
}

/// Random multi-action labeled MDP, for format round-trip coverage.
pub fn generate_mdp(seed: u64) -> LabeledMdp {
    let mut rng = SplitMix64::new(seed);
    let n = 2 + rng.next_index(7);
    let atom_pool = ["p", "q", "r"];
    let n_atoms = rng.next_index(atom_pool.len() + 1);
    let atoms: Vec<String> = atom_pool[..n_atoms].iter().map(|s| s.to_string()).collect();

    let labels: Vec<BTreeSet<usize>> = (0..n)
        .map(|_| (0..n_atoms).filter(|_| rng.next_f64() < 0.4).collect())
        .collect();

    let action_pool = ["a", "b", "c"];
    let mut actions = Vec::with_capacity(n);
    let mut transitions = Vec::with_capacity(n);
    for _ in 0..n {
        let k = 1 + rng.next_index(action_pool.len());
        let acts: Vec<String> = action_pool[..k].iter().map(|s| s.to_string()).collect();
        let mut rows = Vec::with_capacity(k);
        for _ in 0..k {
            let support = 1 + rng.next_index(n.min(3));
            let mut weights = BTreeMap::new();
            while weights.len() < support {
                weights
                    .entry(rng.next_index(n))
                    .or_insert_with(|| 0.2 + rng.next_f64());
            }
            let mut row = vec![0.0; n];
            assign_row(&mut row, &weights);
            rows.push(
                row.iter()
                    .enumerate()
                    .filter(|(_, &p)| p > 0.0)
                    .map(|(t, &p)| (t, p))
                    .collect::<Vec<_>>(),
            );
        }
        actions.push(acts);
        transitions.push(rows);
    }

    let model = LabeledMdp {
        kind: ModelKind::Mdp,
        states: (0..n).map(|i| format!("s{i}")).collect(),
        initial: rng.next_index(n),
        atoms,
        labels,
        actions,
        transitions,
        accepting: BTreeSet::new(),
    };
    model.validate().expect("generated MDP must be valid");
    model
}

/// Random valid LDBA built from complete minterm guards, for round-trip
/// and product coverage.
pub fn generate_ldba(seed: u64) -> Ldba {
    let mut rng = SplitMix64::new(seed);
    let nq = 1 + rng.next_index(5);
    let atom_pool = ["p", "q"];
    let n_atoms = 1 + rng.next_index(atom_pool.len());
    let atoms: Vec<String> = atom_pool[..n_atoms].iter().map(|s| s.to_string()).collect();

    // suffix forms the accepting component; it is never empty
    let split = rng.next_index(nq);
    let ini_component: BTreeSet<usize> = (0..split).collect();
    let acc_component: BTreeSet<usize> = (split..nq).collect();
    let acc_list: Vec<usize> = acc_component.iter().copied().collect();

    let mut accepting = BTreeSet::new();
    accepting.insert(acc_list[rng.next_index(acc_list.len())]);
    for &q in &acc_list {
        if rng.next_f64() < 0.3 {
            accepting.insert(q);
        }
    }

    let mut transitions: Vec<Vec<(Guard, usize)>> = Vec::with_capacity(nq);
    for q in 0..nq {
        let mut rows = Vec::new();
        for mask in 0u32..(1 << n_atoms) {
            let guard_src = minterm(&atoms, mask);
            let target = if acc_component.contains(&q) {
                acc_list[rng.next_index(acc_list.len())]
            } else {
                rng.next_index(nq)
            };
            rows.push((Guard::parse(&guard_src).unwrap(), target));
        }
        transitions.push(rows);
    }

    let mut epsilon: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); nq];
    for q in 0..split {
        if rng.next_f64() < 0.5 {
            epsilon[q].insert(rng.next_index(nq));
        }
    }

    let ldba = Ldba {
        states: (0..nq).map(|i| format!("q{i}")).collect(),
        initial: rng.next_index(nq),
        atoms,
        transitions,
        epsilon,
        accepting,
        ini_component,
        acc_component,
    };
    debug_assert!(crate::model::validate_ldba(&ldba).is_empty());
    ldba
}

fn minterm(atoms: &[String], mask: u32) -> String {
    if atoms.is_empty() {
        return "t".to_string();
    }
    atoms
        .iter()
        .enumerate()
        .map(|(i, a)| {
            if mask & (1 << i) != 0 {
                a.clone()
            } else {
                format!("!{a}")
            }
        })
        .collect::<Vec<_>>()
        .join(" & ")
}
