//! The two-discount Bellman system and its direct solvers.
//!
//! For a chain with accepting set `B`, the surrogate reward pays `1 - γ_B`
//! on `B` and nothing elsewhere, while the discount is `γ_B` on `B` and `γ`
//! elsewhere, with `0 < γ_B < γ ≤ 1`. The value equation in block form
//! (states ordered B-first) is
//!
//! ```text
//! V = (1 - γ_B) [1_m; 0_n] + Γ_B P_π V,   Γ_B = diag(γ_B I_m, γ I_n).
//! ```
//!
//! With `γ < 1` the coefficient matrix is invertible outright and
//! [`solve_discounted`] applies. With `γ = 1` the solution set can be an
//! affine family; [`solve_accepting`] and [`solve_constrained`] handle the
//! two `γ = 1` regimes, and [`certify`] wraps the whole story into a
//! uniqueness verdict.

mod certify;
mod constrained;
mod first_return;

pub use certify::{certify, UniquenessCertificate};
pub use constrained::{solve_constrained, ConstrainedSystem};
pub use first_return::{first_return_matrix, solve_accepting, AcceptingChain};

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::chain::InducedChain;
use crate::linalg::{lu_factor, Matrix};

/// Residual contract for every returned solution, in the ∞-norm.
pub const RESIDUAL_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum BellmanError {
    #[error("invalid discount factors: {0}")]
    InvalidDiscounts(String),
    #[error("this solver requires gamma < 1")]
    RequiresGammaLessThanOne,
    #[error("internal solver defect: {0}")]
    SingularSystem(String),
    #[error("chain has a rejecting BSCC {{{}}}", states.join(", "))]
    RejectingBsccPresent { states: Vec<String> },
}

/// Reward `1 - γ_B` with discount `γ_B` on accepting states, reward `0`
/// with discount `γ` elsewhere. Requires `0 < γ_B < γ ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurrogateReward {
    gamma: f64,
    gamma_b: f64,
}

impl SurrogateReward {
    pub fn new(gamma: f64, gamma_b: f64) -> Result<Self, BellmanError> {
        if !gamma.is_finite() || !gamma_b.is_finite() {
            return Err(BellmanError::InvalidDiscounts(
                "discounts must be finite".into(),
            ));
        }
        if gamma_b <= 0.0 {
            return Err(BellmanError::InvalidDiscounts(format!(
                "gamma_b = {gamma_b} must be positive"
            )));
        }
        if gamma_b >= gamma {
            return Err(BellmanError::InvalidDiscounts(format!(
                "gamma_b = {gamma_b} must be strictly below gamma = {gamma}"
            )));
        }
        if gamma > 1.0 {
            return Err(BellmanError::InvalidDiscounts(format!(
                "gamma = {gamma} must be at most 1"
            )));
        }
        Ok(Self { gamma, gamma_b })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn gamma_b(&self) -> f64 {
        self.gamma_b
    }

    pub fn reward_at(&self, accepting: bool) -> f64 {
        if accepting {
            1.0 - self.gamma_b
        } else {
            0.0
        }
    }

    pub fn discount_at(&self, accepting: bool) -> f64 {
        if accepting {
            self.gamma_b
        } else {
            self.gamma
        }
    }

    /// Reward vector over the chain's states, original order.
    pub fn reward_vector(&self, accepting: &BTreeSet<usize>, n: usize) -> Vec<f64> {
        (0..n)
            .map(|s| self.reward_at(accepting.contains(&s)))
            .collect()
    }

    /// Discount vector over the chain's states, original order.
    pub fn discount_vector(&self, accepting: &BTreeSet<usize>, n: usize) -> Vec<f64> {
        (0..n)
            .map(|s| self.discount_at(accepting.contains(&s)))
            .collect()
    }
}

/// How a solution vector was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMethod {
    Discounted,
    Accepting,
    Constrained,
}

/// A value vector in original state order, with its Bellman residual.
#[derive(Debug, Clone, Serialize)]
pub struct Solution {
    pub values: Vec<f64>,
    /// ∞-norm of `V - R - Γ ⊙ (P V)`, checked against [`RESIDUAL_TOL`].
    pub residual: f64,
    pub method: SolveMethod,
}

/// ∞-norm residual of the Bellman equation at `values`, computed in
/// original state order straight from the chain. Deliberately independent
/// of the block bookkeeping the solvers use.
pub fn bellman_residual(chain: &InducedChain, reward: &SurrogateReward, values: &[f64]) -> f64 {
    let n = chain.num_states();
    assert_eq!(values.len(), n, "value vector not aligned with states");
    let mut worst: f64 = 0.0;
    for s in 0..n {
        let acc = chain.accepting.contains(&s);
        let expected: f64 = chain
            .matrix
            .row(s)
            .iter()
            .zip(values)
            .map(|(p, v)| p * v)
            .sum();
        let r = values[s] - reward.reward_at(acc) - reward.discount_at(acc) * expected;
        worst = worst.max(r.abs());
    }
    worst
}

/// The Bellman equation in B-first block form, plus the permutation needed
/// to map solutions back to original state order.
#[derive(Debug, Clone)]
pub struct BellmanSystem {
    pub reward: SurrogateReward,
    /// Sorted position -> original state index (accepting states first,
    /// both groups in original order).
    pub order: Vec<usize>,
    /// Number of accepting states, `m`.
    pub accepting_count: usize,
    pub p_bb: Matrix,
    pub p_bn: Matrix,
    pub p_nb: Matrix,
    pub p_nn: Matrix,
    /// Reward vector `(1 - γ_B) [1_m; 0_n]` in sorted order.
    pub b_vec: Vec<f64>,
    /// The chain's transition matrix in original order, kept for
    /// independent residual checks.
    original: Matrix,
    accepting: BTreeSet<usize>,
}

impl BellmanSystem {
    /// `m`, the accepting block size.
    pub fn m(&self) -> usize {
        self.accepting_count
    }

    /// `n`, the non-accepting block size.
    pub fn n(&self) -> usize {
        self.order.len() - self.accepting_count
    }

    /// Discount applied to the state at a sorted position.
    pub fn discount_at_position(&self, pos: usize) -> f64 {
        self.reward.discount_at(pos < self.accepting_count)
    }

    /// Reassembles `P_π` in sorted order from the four blocks.
    pub fn sorted_transition_matrix(&self) -> Matrix {
        let m = self.m();
        let n = self.n();
        let mut p = Matrix::zeros(m + n, m + n);
        for i in 0..m {
            for j in 0..m {
                p[(i, j)] = self.p_bb[(i, j)];
            }
            for j in 0..n {
                p[(i, m + j)] = self.p_bn[(i, j)];
            }
        }
        for i in 0..n {
            for j in 0..m {
                p[(m + i, j)] = self.p_nb[(i, j)];
            }
            for j in 0..n {
                p[(m + i, m + j)] = self.p_nn[(i, j)];
            }
        }
        p
    }

    /// `I - Γ_B P_π` in sorted order.
    pub fn coefficient_matrix(&self) -> Matrix {
        let p = self.sorted_transition_matrix();
        let size = self.order.len();
        let mut out = Matrix::zeros(size, size);
        for i in 0..size {
            let d = self.discount_at_position(i);
            for j in 0..size {
                let v = -d * p[(i, j)];
                out[(i, j)] = if i == j { 1.0 + v } else { v };
            }
        }
        out
    }

    /// Maps a sorted-order vector back to original state order.
    pub fn to_original_order(&self, sorted: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; sorted.len()];
        for (pos, &orig) in self.order.iter().enumerate() {
            out[orig] = sorted[pos];
        }
        out
    }
}

/// Permutes the chain to B-first order and extracts the four blocks and
/// the reward vector.
pub fn build_system(
    chain: &InducedChain,
    reward: SurrogateReward,
) -> Result<BellmanSystem, BellmanError> {
    let n_total = chain.num_states();
    let accepting: Vec<usize> = (0..n_total)
        .filter(|s| chain.accepting.contains(s))
        .collect();
    let non_accepting: Vec<usize> = (0..n_total)
        .filter(|s| !chain.accepting.contains(s))
        .collect();
    let m = accepting.len();

    let p_bb = chain.matrix.select(&accepting, &accepting);
    let p_bn = chain.matrix.select(&accepting, &non_accepting);
    let p_nb = chain.matrix.select(&non_accepting, &accepting);
    let p_nn = chain.matrix.select(&non_accepting, &non_accepting);

    let mut order = accepting;
    order.extend_from_slice(&non_accepting);

    let mut b_vec = vec![0.0; n_total];
    for item in b_vec.iter_mut().take(m) {
        *item = 1.0 - reward.gamma_b();
    }

    Ok(BellmanSystem {
        reward,
        order,
        accepting_count: m,
        p_bb,
        p_bn,
        p_nb,
        p_nn,
        b_vec,
        original: chain.matrix.clone(),
        accepting: chain.accepting.clone(),
    })
}

/// Largest row sum of `Γ_B P_π` — an upper bound on its spectral radius by
/// the Gershgorin circle theorem, and at most `max(γ, γ_B)` since the rows
/// of `P_π` sum to one.
pub fn gershgorin_bound(sys: &BellmanSystem) -> f64 {
    let n = sys.original.rows();
    (0..n)
        .map(|s| {
            let d = sys.reward.discount_at(sys.accepting.contains(&s));
            d * sys.original.row(s).iter().sum::<f64>()
        })
        .fold(0.0, f64::max)
}

/// Direct solve `V = (1 - γ_B)(I - Γ_B P_π)^{-1} [1_m; 0_n]`, valid for
/// `γ < 1` where the coefficient matrix is provably invertible.
pub fn solve_discounted(sys: &BellmanSystem) -> Result<Solution, BellmanError> {
    if sys.reward.gamma() >= 1.0 {
        return Err(BellmanError::RequiresGammaLessThanOne);
    }
    let coeff = sys.coefficient_matrix();
    let factors = lu_factor(&coeff)
        .map_err(|e| BellmanError::SingularSystem(format!("discounted solve: {e}")))?;
    let sorted = factors.solve(&sys.b_vec);
    let values = sys.to_original_order(&sorted);
    finish_solution(sys, values, SolveMethod::Discounted)
}

/// Validates the residual and range contracts and stamps the method tag.
fn finish_solution(
    sys: &BellmanSystem,
    values: Vec<f64>,
    method: SolveMethod,
) -> Result<Solution, BellmanError> {
    let residual = residual_against_original(sys, &values);
    if residual > RESIDUAL_TOL {
        return Err(BellmanError::SingularSystem(format!(
            "residual {residual:.3e} exceeds {RESIDUAL_TOL:.0e}"
        )));
    }
    if values
        .iter()
        .any(|v| !(-RESIDUAL_TOL..=1.0 + RESIDUAL_TOL).contains(v))
    {
        return Err(BellmanError::SingularSystem(
            "solution leaves [0, 1] beyond tolerance".into(),
        ));
    }
    Ok(Solution {
        values,
        residual,
        method,
    })
}

fn residual_against_original(sys: &BellmanSystem, values: &[f64]) -> f64 {
    let n = sys.original.rows();
    let mut worst: f64 = 0.0;
    for s in 0..n {
        let acc = sys.accepting.contains(&s);
        let expected: f64 = sys
            .original
            .row(s)
            .iter()
            .zip(values)
            .map(|(p, v)| p * v)
            .sum();
        let r = values[s] - sys.reward.reward_at(acc) - sys.reward.discount_at(acc) * expected;
        worst = worst.max(r.abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;
    use crate::chain::induce_chain;
    use crate::model::{parse_model, parse_policy};

    pub(crate) fn ex1_alpha_chain() -> InducedChain {
        let model = parse_model(builtin::EX1).unwrap();
        let m = model.as_mdp().unwrap();
        let pol = parse_policy(builtin::EX1_POLICY_ALPHA, m).unwrap();
        induce_chain(m, &pol).unwrap()
    }

    #[test]
    fn discount_validation() {
        assert!(SurrogateReward::new(1.0, 0.5).is_ok());
        assert!(SurrogateReward::new(0.9, 0.5).is_ok());
        assert!(matches!(
            SurrogateReward::new(0.5, 0.9),
            Err(BellmanError::InvalidDiscounts(_))
        ));
        assert!(matches!(
            SurrogateReward::new(0.5, 0.5),
            Err(BellmanError::InvalidDiscounts(_))
        ));
        assert!(matches!(
            SurrogateReward::new(1.1, 0.5),
            Err(BellmanError::InvalidDiscounts(_))
        ));
        assert!(matches!(
            SurrogateReward::new(1.0, 0.0),
            Err(BellmanError::InvalidDiscounts(_))
        ));
        assert!(matches!(
            SurrogateReward::new(1.0, 1.0),
            Err(BellmanError::InvalidDiscounts(_))
        ));
    }

    #[test]
    fn ex1_system_shape() {
        let chain = ex1_alpha_chain();
        let sys = build_system(&chain, SurrogateReward::new(1.0, 0.5).unwrap()).unwrap();
        assert_eq!(sys.m(), 1);
        assert_eq!(sys.n(), 2);
        // B-first ordering puts s2 first
        assert_eq!(sys.order, vec![1, 0, 2]);
        assert_eq!(sys.b_vec, vec![0.5, 0.0, 0.0]);
    }

    #[test]
    fn empty_accepting_set_gives_zero_reward_vector() {
        let chain =
            InducedChain::from_rows(vec![vec![0.5, 0.5], vec![0.5, 0.5]], 0, BTreeSet::new())
                .unwrap();
        let sys = build_system(&chain, SurrogateReward::new(0.9, 0.45).unwrap()).unwrap();
        assert_eq!(sys.m(), 0);
        assert!(sys.b_vec.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn gershgorin_examples() {
        let chain = ex1_alpha_chain();
        let sys = build_system(&chain, SurrogateReward::new(0.9, 0.5).unwrap()).unwrap();
        assert!((gershgorin_bound(&sys) - 0.9).abs() < 1e-12);

        let sys = build_system(&chain, SurrogateReward::new(1.0, 0.5).unwrap()).unwrap();
        assert!((gershgorin_bound(&sys) - 1.0).abs() < 1e-12);

        // all states accepting: the bound collapses to gamma_b
        let all = InducedChain::from_rows(vec![vec![1.0]], 0, [0].into_iter().collect()).unwrap();
        let sys = build_system(&all, SurrogateReward::new(0.9, 0.5).unwrap()).unwrap();
        assert!((gershgorin_bound(&sys) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn discounted_single_accepting_loop() {
        // V = 0.5 + 0.5 V  ->  V = 1
        let chain = InducedChain::from_rows(vec![vec![1.0]], 0, [0].into_iter().collect()).unwrap();
        let sys = build_system(&chain, SurrogateReward::new(0.9, 0.5).unwrap()).unwrap();
        let sol = solve_discounted(&sys).unwrap();
        assert!((sol.values[0] - 1.0).abs() < 1e-12);
        assert!(sol.residual <= RESIDUAL_TOL);
    }

    #[test]
    fn discounted_two_state_feed() {
        // s0 -> s1 with probability 1, s1 accepting self-loop.
        // V(s1) = 0.75 + 0.25 V(s1) = 1; V(s0) = 0.5 * V(s1) = 0.5.
        let chain = InducedChain::from_rows(
            vec![vec![0.0, 1.0], vec![0.0, 1.0]],
            0,
            [1].into_iter().collect(),
        )
        .unwrap();
        let sys = build_system(&chain, SurrogateReward::new(0.5, 0.25).unwrap()).unwrap();
        let sol = solve_discounted(&sys).unwrap();
        assert!((sol.values[1] - 1.0).abs() < 1e-12);
        assert!((sol.values[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn discounted_rejecting_loop_is_zero() {
        let chain = InducedChain::from_rows(vec![vec![1.0]], 0, BTreeSet::new()).unwrap();
        let sys = build_system(&chain, SurrogateReward::new(0.9, 0.5).unwrap()).unwrap();
        let sol = solve_discounted(&sys).unwrap();
        assert_eq!(sol.values, vec![0.0]);
    }

    #[test]
    fn discounted_requires_gamma_below_one() {
        let chain = ex1_alpha_chain();
        let sys = build_system(&chain, SurrogateReward::new(1.0, 0.5).unwrap()).unwrap();
        assert!(matches!(
            solve_discounted(&sys),
            Err(BellmanError::RequiresGammaLessThanOne)
        ));
    }

    #[test]
    fn blocks_reassemble_row_stochastically() {
        let chain = ex1_alpha_chain();
        let sys = build_system(&chain, SurrogateReward::new(0.9, 0.5).unwrap()).unwrap();
        let p = sys.sorted_transition_matrix();
        for i in 0..3 {
            let sum: f64 = p.row(i).iter().sum();
            assert!((sum - 1.0).abs() <= 1e-9);
        }
    }
}
