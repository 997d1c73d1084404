//! Uniqueness certification for the two-discount Bellman equation.
//!
//! With `γ < 1` the equation always has exactly one solution. With `γ = 1`
//! the solution set is an affine family whose dimension equals the kernel
//! of `I - Γ_B P_π`; pinning the rejecting-BSCC values to zero selects the
//! value function out of that family. The certificate reports the raw
//! equation's kernel, whether pinning was needed, and the value vector the
//! applicable solver produced.

use serde::Serialize;

use crate::chain::{BsccPartition, InducedChain};
use crate::linalg::{Matrix, RANK_REL_TOL};
use crate::oracles;

use super::{
    build_system, solve_constrained, solve_discounted, BellmanError, Solution, SurrogateReward,
};

/// Verdict on the solution set of the Bellman equation for one chain,
/// policy, and discount pair.
#[derive(Debug, Clone, Serialize)]
pub struct UniquenessCertificate {
    pub gamma: f64,
    pub gamma_b: f64,
    /// Whether the raw equation (no pinning) has a unique solution:
    /// always for `γ < 1`, and exactly when the kernel is trivial for
    /// `γ = 1`.
    pub unique: bool,
    /// Kernel dimension of `I - Γ_B P_π`; zero when `γ < 1`.
    pub null_space_dim: usize,
    /// Basis of the kernel in original state order; empty when unique.
    pub null_basis: Vec<Vec<f64>>,
    /// True when the rejecting-BSCC pinning condition actually constrained
    /// something (`γ = 1` with at least one rejecting BSCC).
    pub condition_applied: bool,
    pub rejecting_bscc_count: usize,
    /// The value function: the direct solve for `γ < 1`, the pinned solve
    /// for `γ = 1`.
    pub value: Solution,
}

/// `I - Γ_B P_π` in original state order.
fn bellman_coefficient_matrix(chain: &InducedChain, reward: &SurrogateReward) -> Matrix {
    let n = chain.num_states();
    let discounts = reward.discount_vector(&chain.accepting, n);
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let v = -discounts[i] * chain.matrix[(i, j)];
            m[(i, j)] = if i == j { 1.0 + v } else { v };
        }
    }
    m
}

/// Certifies uniqueness and computes the value function.
pub fn certify(
    chain: &InducedChain,
    partition: &BsccPartition,
    reward: SurrogateReward,
) -> Result<UniquenessCertificate, BellmanError> {
    let rejecting_bscc_count = partition.rejecting_bscc_count();
    if reward.gamma() < 1.0 {
        let sys = build_system(chain, reward)?;
        let value = solve_discounted(&sys)?;
        return Ok(UniquenessCertificate {
            gamma: reward.gamma(),
            gamma_b: reward.gamma_b(),
            unique: true,
            null_space_dim: 0,
            null_basis: Vec::new(),
            condition_applied: false,
            rejecting_bscc_count,
            value,
        });
    }

    let kernel = oracles::null_space(&bellman_coefficient_matrix(chain, &reward), RANK_REL_TOL);
    let value = solve_constrained(chain, partition, reward.gamma_b())?;
    Ok(UniquenessCertificate {
        gamma: reward.gamma(),
        gamma_b: reward.gamma_b(),
        unique: kernel.dim == 0,
        null_space_dim: kernel.dim,
        null_basis: kernel.basis,
        condition_applied: rejecting_bscc_count > 0,
        rejecting_bscc_count,
        value,
    })
}
