//! First-return reduction onto the accepting states and the `γ = 1` solver
//! for chains whose BSCCs are all accepting.
//!
//! `P_B(i, j)` is the probability of, after leaving the i-th accepting
//! state, next visiting the accepting set at its j-th state — excursions
//! through non-accepting states are marginalized out through the
//! fundamental matrix `(I - P_{¬B→¬B})^{-1}`. Without rejecting BSCCs every
//! excursion returns, so `P_B` is again row-stochastic and the reduced
//! equation `U = (1 - γ_B) 1 + γ_B P_B U` has spectral radius below one
//! regardless of `γ`.

use crate::chain::{decompose, InducedChain};
use crate::linalg::{lu_factor, Matrix};

use super::{BellmanError, Solution, SolveMethod, SurrogateReward};

/// The chain restricted to its accepting states.
#[derive(Debug, Clone)]
pub struct AcceptingChain {
    /// Original indices of the accepting states, ascending; row/column
    /// order of `first_return`.
    pub states: Vec<usize>,
    /// Original indices of the non-accepting states, ascending; row order
    /// of `entry`.
    pub non_accepting: Vec<usize>,
    /// First-return matrix `P_B` (|B| × |B|).
    pub first_return: Matrix,
    /// First-visit matrix `P_init` (|¬B| × |B|): row `i` is the
    /// distribution of the accepting state first reached from the i-th
    /// non-accepting state.
    pub entry: Matrix,
    /// Initial distribution µ over the accepting states: a point mass when
    /// the chain starts in `B`, otherwise the start state's row of `entry`.
    pub initial_distribution: Vec<f64>,
}

/// Builds the accepting-chain reduction. Fails when the chain has a
/// rejecting BSCC, naming its states: excursions could then fail to return
/// and `P_B` would be substochastic.
pub fn first_return_matrix(chain: &InducedChain) -> Result<AcceptingChain, BellmanError> {
    let partition = decompose(chain);
    if let Some(bscc) = partition.bsccs.iter().find(|b| !b.accepting) {
        return Err(BellmanError::RejectingBsccPresent {
            states: bscc
                .states
                .iter()
                .map(|&s| chain.state_ids[s].clone())
                .collect(),
        });
    }

    let n_total = chain.num_states();
    let states: Vec<usize> = (0..n_total)
        .filter(|s| chain.accepting.contains(s))
        .collect();
    let non_accepting: Vec<usize> = (0..n_total)
        .filter(|s| !chain.accepting.contains(s))
        .collect();
    let m = states.len();

    let p_bb = chain.matrix.select(&states, &states);
    let p_bn = chain.matrix.select(&states, &non_accepting);
    let p_nb = chain.matrix.select(&non_accepting, &states);
    let p_nn = chain.matrix.select(&non_accepting, &non_accepting);

    // P_init = (I - P_nn)^{-1} P_nb; empty when every state is accepting
    let entry = if non_accepting.is_empty() {
        Matrix::zeros(0, m)
    } else {
        let factors = lu_factor(&p_nn.identity_minus())
            .map_err(|e| BellmanError::SingularSystem(format!("first-visit solve: {e}")))?;
        factors.solve_matrix(&p_nb)
    };

    // P_B = P_bb + P_bn P_init
    let mut first_return = p_bb;
    if !non_accepting.is_empty() {
        let excursion = p_bn.mat_mul(&entry);
        for i in 0..m {
            for j in 0..m {
                first_return[(i, j)] += excursion[(i, j)];
            }
        }
    }

    let initial_distribution = if let Some(pos) = states.iter().position(|&s| s == chain.initial) {
        let mut mu = vec![0.0; m];
        mu[pos] = 1.0;
        mu
    } else {
        let row = non_accepting
            .iter()
            .position(|&s| s == chain.initial)
            .expect("initial state is neither accepting nor non-accepting");
        entry.row(row).to_vec()
    };

    Ok(AcceptingChain {
        states,
        non_accepting,
        first_return,
        entry,
        initial_distribution,
    })
}

/// Solves the `γ = 1` Bellman equation for a chain with only accepting
/// BSCCs: `U^B = (1 - γ_B)(I - γ_B P_B)^{-1} 1`, then
/// `U^{¬B} = P_init U^B`. The assembled vector is the all-ones vector up to
/// numerical tolerance.
pub fn solve_accepting(chain: &InducedChain, gamma_b: f64) -> Result<Solution, BellmanError> {
    let reward = SurrogateReward::new(1.0, gamma_b)?;
    let acc = first_return_matrix(chain)?;
    let m = acc.states.len();

    let mut coeff = acc.first_return.clone();
    for i in 0..m {
        for j in 0..m {
            coeff[(i, j)] *= gamma_b;
        }
    }
    let coeff = coeff.identity_minus();
    let rhs = vec![1.0 - gamma_b; m];
    let u_b = lu_factor(&coeff)
        .map_err(|e| BellmanError::SingularSystem(format!("accepting solve: {e}")))?
        .solve(&rhs);
    let u_n = acc.entry.mul_vec(&u_b);

    let mut values = vec![0.0; chain.num_states()];
    for (pos, &s) in acc.states.iter().enumerate() {
        values[s] = u_b[pos];
    }
    for (pos, &s) in acc.non_accepting.iter().enumerate() {
        values[s] = u_n[pos];
    }

    let residual = super::bellman_residual(chain, &reward, &values);
    if residual > super::RESIDUAL_TOL {
        return Err(BellmanError::SingularSystem(format!(
            "accepting-chain residual {residual:.3e}"
        )));
    }
    Ok(Solution {
        values,
        residual,
        method: SolveMethod::Accepting,
    })
}
