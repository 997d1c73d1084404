//! Tabular temporal-difference policy evaluation with state-dependent
//! discounting, one-step greedy action extraction, and a scripted
//! demonstration of how the `γ = 1` fixed-point family derails learning.
//!
//! Episodes restart from a uniformly random state so transient states keep
//! getting visits, and stop one update after entering a BSCC (the update
//! at the entered state still happens, which is what propagates the BSCC
//! value outward). Both choices mirror the unbiased simulation oracle.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::bellman::{bellman_residual, certify, solve_constrained, SurrogateReward};
use crate::chain::{decompose, induce_chain, BsccPartition, InducedChain};
use crate::model::{parse_model, parse_policy, LabeledMdp};
use crate::rng::SplitMix64;
use crate::{builtin, oracles};

/// Initial value vector for a TD run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ValueInit {
    Zeros,
    Constant(f64),
    /// Explicit values for some states; the rest start at zero.
    PerState(BTreeMap<usize, f64>),
}

/// Configuration of one TD evaluation run. The step size follows the
/// harmonic-style schedule `α_t = a0 / (1 + t/τ)` over the global update
/// counter `t`, which satisfies the usual stochastic-approximation
/// conditions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TdConfig {
    pub episodes: usize,
    pub max_steps: usize,
    pub a0: f64,
    pub tau: f64,
    pub seed: u64,
    pub init: ValueInit,
    /// States whose values are frozen for the whole run.
    pub pinned: BTreeMap<usize, f64>,
}

impl Default for TdConfig {
    fn default() -> Self {
        Self {
            episodes: 50_000,
            max_steps: 100,
            a0: 0.5,
            tau: 1000.0,
            seed: 0,
            init: ValueInit::Zeros,
            pinned: BTreeMap::new(),
        }
    }
}

impl TdConfig {
    pub fn validate(&self, num_states: usize) -> Result<(), String> {
        if self.a0.is_nan() || self.a0 <= 0.0 || self.a0 > 1.0 {
            return Err(format!("a0 = {} must lie in (0, 1]", self.a0));
        }
        if self.tau.is_nan() || self.tau <= 0.0 {
            return Err(format!("tau = {} must be positive", self.tau));
        }
        if self.max_steps == 0 {
            return Err("max_steps must be at least 1".into());
        }
        if let ValueInit::PerState(map) = &self.init {
            if map.keys().any(|&s| s >= num_states) {
                return Err("init refers to a state out of range".into());
            }
        }
        if self.pinned.keys().any(|&s| s >= num_states) {
            return Err("pinned set refers to a state out of range".into());
        }
        Ok(())
    }

    fn initial_values(&self, num_states: usize) -> Vec<f64> {
        let mut v = match &self.init {
            ValueInit::Zeros => vec![0.0; num_states],
            ValueInit::Constant(c) => vec![*c; num_states],
            ValueInit::PerState(map) => {
                let mut v = vec![0.0; num_states];
                for (&s, &x) in map {
                    v[s] = x;
                }
                v
            }
        };
        for (&s, &x) in &self.pinned {
            v[s] = x;
        }
        v
    }
}

/// Outcome of a TD run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TdRun {
    pub values: Vec<f64>,
    /// Largest absolute update per episode — a cheap learning curve.
    pub episode_deltas: Vec<f64>,
    /// Smallest and largest value any state took during the run.
    pub min_seen: f64,
    pub max_seen: f64,
    pub updates: usize,
}

/// Runs TD(0) along seeded trajectories: `V(s) += α_t (R(s) + Γ(s) V(s')
/// - V(s))`, skipping pinned states. Deterministic given the config.
pub fn td_evaluate(
    chain: &InducedChain,
    partition: &BsccPartition,
    reward: &SurrogateReward,
    cfg: &TdConfig,
) -> TdRun {
    let n = chain.num_states();
    cfg.validate(n).expect("invalid TD configuration");
    let mut values = cfg.initial_values(n);
    let mut rng = SplitMix64::new(cfg.seed);
    let mut episode_deltas = Vec::with_capacity(cfg.episodes);
    let mut min_seen = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mut max_seen = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut t = 0usize;

    for _ in 0..cfg.episodes {
        let mut s = rng.next_index(n);
        let mut worst_delta: f64 = 0.0;
        for _ in 0..cfg.max_steps {
            let next = rng.next_categorical(chain.matrix.row(s));
            if !cfg.pinned.contains_key(&s) {
                let alpha = cfg.a0 / (1.0 + t as f64 / cfg.tau);
                let acc = chain.accepting.contains(&s);
                let target = reward.reward_at(acc) + reward.discount_at(acc) * values[next];
                let delta = alpha * (target - values[s]);
                values[s] += delta;
                worst_delta = worst_delta.max(delta.abs());
                min_seen = min_seen.min(values[s]);
                max_seen = max_seen.max(values[s]);
                t += 1;
            }
            if partition.in_bscc(s) {
                break;
            }
            s = next;
        }
        episode_deltas.push(worst_delta);
    }

    TdRun {
        values,
        episode_deltas,
        min_seen,
        max_seen,
        updates: t,
    }
}

/// One-step greedy action at `state`: the action maximizing
/// `Σ_s' P(s, a, s') V(s')`, ties broken toward the lexicographically
/// smallest action id.
pub fn greedy_action(model: &LabeledMdp, values: &[f64], state: usize) -> String {
    assert_eq!(values.len(), model.num_states(), "value vector not aligned");
    let mut best: Option<(f64, &str)> = None;
    for (a_pos, id) in model.actions[state].iter().enumerate() {
        let score: f64 = model.transitions[state][a_pos]
            .iter()
            .map(|&(t, p)| p * values[t])
            .sum();
        best = match best {
            None => Some((score, id)),
            Some((s0, id0)) => {
                if score > s0 || (score == s0 && id.as_str() < id0) {
                    Some((score, id))
                } else {
                    Some((s0, id0))
                }
            }
        };
    }
    best.expect("state has at least one action").1.to_string()
}

/// Machine-checkable record of the multiple-fixed-point pathology on the
/// three-state branching example.
#[derive(Debug, Clone, Serialize)]
pub struct PathologyReport {
    pub gamma_b: f64,
    pub spurious_c: f64,
    pub seed: u64,
    pub states: Vec<String>,
    /// Raw-equation verdict at γ = 1.
    pub unique: bool,
    pub null_space_dim: usize,
    pub rejecting_bscc_count: usize,
    /// Residual of the spurious family member `(1, 1, c)` — zero: it
    /// really is a solution.
    pub family_residual: f64,
    pub constrained_value: Vec<f64>,
    pub constrained_residual: f64,
    /// Greedy choice at the branching state under each vector.
    pub greedy_with_constrained: String,
    pub greedy_with_spurious: String,
    pub td_episodes: usize,
    /// TD endpoint from the constant-`c` start: the learner converges to
    /// the spurious family member, not the value function.
    pub td_final: Vec<f64>,
    /// Final TD value at the rejecting-loop state; equal to `c` bit for
    /// bit, since its TD update is identically zero.
    pub td_final_spurious_state: f64,
}

const DEMO_TD_EPISODES: usize = 20_000;

/// Runs the branching example end to end at `γ = 1`: certifies
/// non-uniqueness, exhibits the `(1, 1, c)` family, shows the greedy flip
/// the spurious member causes, shows TD sticking to it under a constant-`c`
/// start, and shows the pinned solve recovering the value function.
pub fn pathology_demo(gamma_b: f64, spurious_c: f64, seed: u64) -> PathologyReport {
    assert!(spurious_c != 0.0, "spurious constant must be nonzero");
    let reward = SurrogateReward::new(1.0, gamma_b).expect("gamma_b must lie in (0, 1)");

    let model = parse_model(builtin::EX1).unwrap();
    let m = model.as_mdp().unwrap();
    let policy = parse_policy(builtin::EX1_POLICY_ALPHA, m).unwrap();
    let chain = induce_chain(m, &policy).unwrap();
    let partition = decompose(&chain);

    let cert = certify(&chain, &partition, reward).unwrap();
    let constrained = solve_constrained(&chain, &partition, gamma_b).unwrap();

    let spurious = vec![1.0, 1.0, spurious_c];
    let family_residual = bellman_residual(&chain, &reward, &spurious);

    let branching_state = m.state_index("s1").unwrap();
    let greedy_with_constrained = greedy_action(m, &constrained.values, branching_state);
    let greedy_with_spurious = greedy_action(m, &spurious, branching_state);

    let td_cfg = TdConfig {
        episodes: DEMO_TD_EPISODES,
        seed,
        init: ValueInit::Constant(spurious_c),
        ..TdConfig::default()
    };
    let td = td_evaluate(&chain, &partition, &reward, &td_cfg);
    let spurious_state = m.state_index("s3").unwrap();
    let td_final_spurious_state = td.values[spurious_state];

    // sanity cross-check: the spurious family member is a genuine fixed
    // point, so its kernel direction matches the certificate's
    debug_assert_eq!(
        cert.null_space_dim,
        oracles::null_space(
            &{
                let n = chain.num_states();
                let d = reward.discount_vector(&chain.accepting, n);
                let mut mat = crate::linalg::Matrix::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        let v = -d[i] * chain.matrix[(i, j)];
                        mat[(i, j)] = if i == j { 1.0 + v } else { v };
                    }
                }
                mat
            },
            crate::linalg::RANK_REL_TOL,
        )
        .dim
    );

    PathologyReport {
        gamma_b,
        spurious_c,
        seed,
        states: m.states.clone(),
        unique: cert.unique,
        null_space_dim: cert.null_space_dim,
        rejecting_bscc_count: cert.rejecting_bscc_count,
        family_residual,
        constrained_value: constrained.values,
        constrained_residual: constrained.residual,
        greedy_with_constrained,
        greedy_with_spurious,
        td_episodes: DEMO_TD_EPISODES,
        td_final: td.values,
        td_final_spurious_state,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bellman::{build_system, solve_discounted};
    use crate::model::ParsedModel;

    fn ex1() -> (LabeledMdp, InducedChain, BsccPartition) {
        let m = match parse_model(builtin::EX1).unwrap() {
            ParsedModel::Mdp(m) => m,
            _ => unreachable!(),
        };
        let pol = parse_policy(builtin::EX1_POLICY_ALPHA, &m).unwrap();
        let chain = induce_chain(&m, &pol).unwrap();
        let partition = decompose(&chain);
        (m, chain, partition)
    }

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn td_tracks_discounted_solve() {
        let (_, chain, partition) = ex1();
        let reward = SurrogateReward::new(0.9, 0.5).unwrap();
        let cfg = TdConfig {
            episodes: 50_000,
            seed: 7,
            ..TdConfig::default()
        };
        let run = td_evaluate(&chain, &partition, &reward, &cfg);
        let sys = build_system(&chain, reward).unwrap();
        let oracle = solve_discounted(&sys).unwrap();
        assert!(
            max_abs_diff(&run.values, &oracle.values) <= 0.05,
            "{:?} vs {:?}",
            run.values,
            oracle.values
        );
    }

    #[test]
    fn td_with_pinning_tracks_constrained_solve() {
        let (_, chain, partition) = ex1();
        let reward = SurrogateReward::new(1.0, 0.5).unwrap();
        let cfg = TdConfig {
            episodes: 50_000,
            seed: 7,
            pinned: [(2, 0.0)].into_iter().collect(),
            ..TdConfig::default()
        };
        let run = td_evaluate(&chain, &partition, &reward, &cfg);
        assert!(
            max_abs_diff(&run.values, &[1.0, 1.0, 0.0]) <= 0.05,
            "{:?}",
            run.values
        );
    }

    #[test]
    fn rejecting_loop_update_is_identically_zero() {
        // V(s) = 2: the TD target 0 + 1*2 equals the value, so nothing moves
        let chain = InducedChain::from_rows(vec![vec![1.0]], 0, Default::default()).unwrap();
        let partition = decompose(&chain);
        let reward = SurrogateReward::new(1.0, 0.5).unwrap();
        let cfg = TdConfig {
            episodes: 5000,
            init: ValueInit::Constant(2.0),
            ..TdConfig::default()
        };
        let run = td_evaluate(&chain, &partition, &reward, &cfg);
        assert_eq!(run.values[0], 2.0);
        assert!(run.episode_deltas.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn td_started_at_fixed_point_does_not_drift() {
        let (_, chain, partition) = ex1();
        let reward = SurrogateReward::new(1.0, 0.5).unwrap();
        let fixed = solve_constrained(&chain, &partition, 0.5).unwrap().values;
        let init: BTreeMap<usize, f64> = fixed.iter().copied().enumerate().collect();
        let cfg = TdConfig {
            episodes: 10_000,
            seed: 3,
            init: ValueInit::PerState(init),
            ..TdConfig::default()
        };
        let run = td_evaluate(&chain, &partition, &reward, &cfg);
        assert!(max_abs_diff(&run.values, &fixed) <= 0.01);
    }

    #[test]
    fn pinned_run_stays_in_range() {
        let (_, chain, partition) = ex1();
        let reward = SurrogateReward::new(1.0, 0.5).unwrap();
        let cfg = TdConfig {
            episodes: 20_000,
            seed: 5,
            pinned: [(2, 0.0)].into_iter().collect(),
            ..TdConfig::default()
        };
        let run = td_evaluate(&chain, &partition, &reward, &cfg);
        assert!(run.min_seen >= 0.0);
        assert!(run.max_seen <= 1.0 + cfg.a0);
    }

    #[test]
    fn seed_determinism() {
        let (_, chain, partition) = ex1();
        let reward = SurrogateReward::new(0.9, 0.5).unwrap();
        let cfg = TdConfig {
            episodes: 2000,
            seed: 11,
            ..TdConfig::default()
        };
        let a = td_evaluate(&chain, &partition, &reward, &cfg);
        let b = td_evaluate(&chain, &partition, &reward, &cfg);
        assert_eq!(a, b);
    }

    #[test]
    fn greedy_prefers_the_accepting_branch() {
        let (m, _, _) = ex1();
        assert_eq!(greedy_action(&m, &[0.0, 1.0, 0.0], 0), "alpha");
    }

    #[test]
    fn greedy_flips_under_the_spurious_solution() {
        let (m, _, _) = ex1();
        assert_eq!(greedy_action(&m, &[0.0, 1.0, 2.0], 0), "beta");
    }

    #[test]
    fn greedy_breaks_ties_lexicographically() {
        let (m, _, _) = ex1();
        assert_eq!(greedy_action(&m, &[0.0, 1.0, 1.0], 0), "alpha");
    }

    #[test]
    fn pathology_report_shows_the_flip() {
        let report = pathology_demo(0.5, 2.0, 1);
        assert!(!report.unique);
        assert_eq!(report.null_space_dim, 1);
        assert!(report.family_residual <= 1e-12);
        assert_eq!(report.greedy_with_constrained, "alpha");
        assert_eq!(report.greedy_with_spurious, "beta");
        assert_eq!(report.constrained_value, vec![1.0, 1.0, 0.0]);
        assert_eq!(report.td_final_spurious_state, 2.0);
    }

    #[test]
    fn pathology_dimension_is_independent_of_c() {
        let report = pathology_demo(0.5, 0.5, 1);
        assert_eq!(report.null_space_dim, 1);
        // c < 1 keeps the greedy choice honest
        assert_eq!(report.greedy_with_spurious, "alpha");
        assert_eq!(report.td_final_spurious_state, 0.5);
    }
}
