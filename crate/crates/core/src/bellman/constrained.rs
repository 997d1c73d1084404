//! The `γ = 1` solver for the general case, where rejecting BSCCs may
//! exist.
//!
//! Values inside BSCCs are pinned first — `1` throughout accepting BSCCs,
//! `0` throughout rejecting ones — which leaves the transient states as the
//! only unknowns. Over the transient blocks the equation reads
//!
//! ```text
//! [U_bt; U_nt] = diag(γ_B I, I) [P_tt] [U_bt; U_nt] + [B1; B2],
//! ```
//!
//! with the constant part absorbing the one-step mass that flows into the
//! pinned accepting-BSCC states:
//!
//! ```text
//! B1 = (1 - γ_B) 1 + γ_B (P_{bt→acc-bscc} 1),   B2 = P_{nt→acc-bscc} 1.
//! ```
//!
//! Transience makes the coefficient matrix invertible, so the pinned system
//! has exactly one solution.

use crate::chain::{BsccPartition, InducedChain, StateClass};
use crate::linalg::{lu_factor, Matrix};

use super::{BellmanError, Solution, SolveMethod, SurrogateReward};

/// Transient-block system with pinned BSCC values.
#[derive(Debug, Clone)]
pub struct ConstrainedSystem {
    /// Transient accepting states (original indices, ascending).
    pub acc_transient: Vec<usize>,
    /// Transient non-accepting states (original indices, ascending).
    pub rej_transient: Vec<usize>,
    pub p_bt_bt: Matrix,
    pub p_bt_nt: Matrix,
    pub p_nt_bt: Matrix,
    pub p_nt_nt: Matrix,
    /// Constant vector for the accepting-transient rows.
    pub b1: Vec<f64>,
    /// Constant vector for the non-accepting-transient rows.
    pub b2: Vec<f64>,
    pub gamma_b: f64,
}

impl ConstrainedSystem {
    /// Extracts the transient blocks and constant vectors from the chain
    /// and its partition. All-empty classes are fine; the solve below just
    /// degenerates to a 0-dimensional system.
    pub fn build(
        chain: &InducedChain,
        partition: &BsccPartition,
        gamma_b: f64,
    ) -> Result<Self, BellmanError> {
        // validates 0 < gamma_b < 1
        SurrogateReward::new(1.0, gamma_b)?;

        let acc_transient = partition.states_in_class(StateClass::AcceptingTransient);
        let rej_transient = partition.states_in_class(StateClass::RejectingTransient);
        let mut acc_bscc = partition.states_in_class(StateClass::AcceptingInBscc);
        acc_bscc.extend(partition.states_in_class(StateClass::RejectingInAcceptingBscc));
        acc_bscc.sort_unstable();

        let p_bt_bt = chain.matrix.select(&acc_transient, &acc_transient);
        let p_bt_nt = chain.matrix.select(&acc_transient, &rej_transient);
        let p_nt_bt = chain.matrix.select(&rej_transient, &acc_transient);
        let p_nt_nt = chain.matrix.select(&rej_transient, &rej_transient);

        let mass_into_accepting = |rows: &[usize]| -> Vec<f64> {
            rows.iter()
                .map(|&s| acc_bscc.iter().map(|&t| chain.matrix[(s, t)]).sum())
                .collect()
        };
        let bt_entry = mass_into_accepting(&acc_transient);
        let nt_entry = mass_into_accepting(&rej_transient);

        let b1 = bt_entry
            .iter()
            .map(|&p| (1.0 - gamma_b) + gamma_b * p)
            .collect();
        let b2 = nt_entry;

        Ok(Self {
            acc_transient,
            rej_transient,
            p_bt_bt,
            p_bt_nt,
            p_nt_bt,
            p_nt_nt,
            b1,
            b2,
            gamma_b,
        })
    }

    /// Solves for the transient values; returns them split by class.
    pub fn solve(&self) -> Result<(Vec<f64>, Vec<f64>), BellmanError> {
        let m1 = self.acc_transient.len();
        let n1 = self.rej_transient.len();
        let size = m1 + n1;
        if size == 0 {
            return Ok((Vec::new(), Vec::new()));
        }

        // I - diag(gamma_b I, I) * P_tt
        let mut coeff = Matrix::zeros(size, size);
        for i in 0..size {
            let d = if i < m1 { self.gamma_b } else { 1.0 };
            for j in 0..size {
                let p = match (i < m1, j < m1) {
                    (true, true) => self.p_bt_bt[(i, j)],
                    (true, false) => self.p_bt_nt[(i, j - m1)],
                    (false, true) => self.p_nt_bt[(i - m1, j)],
                    (false, false) => self.p_nt_nt[(i - m1, j - m1)],
                };
                let v = -d * p;
                coeff[(i, j)] = if i == j { 1.0 + v } else { v };
            }
        }
        let mut rhs = Vec::with_capacity(size);
        rhs.extend_from_slice(&self.b1);
        rhs.extend_from_slice(&self.b2);

        let x = lu_factor(&coeff)
            .map_err(|e| BellmanError::SingularSystem(format!("transient solve: {e}")))?
            .solve(&rhs);
        Ok((x[..m1].to_vec(), x[m1..].to_vec()))
    }
}

/// Solves the `γ = 1` equation with values pinned to `1` on accepting
/// BSCCs and `0` on rejecting BSCCs, and checks the assembled vector
/// against the full Bellman equation.
pub fn solve_constrained(
    chain: &InducedChain,
    partition: &BsccPartition,
    gamma_b: f64,
) -> Result<Solution, BellmanError> {
    let reward = SurrogateReward::new(1.0, gamma_b)?;
    let system = ConstrainedSystem::build(chain, partition, gamma_b)?;
    let (u_bt, u_nt) = system.solve()?;

    let mut values = vec![0.0; chain.num_states()];
    for s in 0..chain.num_states() {
        values[s] = match partition.classes[s] {
            StateClass::AcceptingInBscc | StateClass::RejectingInAcceptingBscc => 1.0,
            StateClass::RejectingInRejectingBscc => 0.0,
            StateClass::AcceptingTransient => {
                let pos = system.acc_transient.iter().position(|&t| t == s).unwrap();
                u_bt[pos]
            }
            StateClass::RejectingTransient => {
                let pos = system.rej_transient.iter().position(|&t| t == s).unwrap();
                u_nt[pos]
            }
        };
    }

    let residual = super::bellman_residual(chain, &reward, &values);
    if residual > super::RESIDUAL_TOL {
        return Err(BellmanError::SingularSystem(format!(
            "constrained residual {residual:.3e}"
        )));
    }
    if values
        .iter()
        .any(|v| !(-super::RESIDUAL_TOL..=1.0 + super::RESIDUAL_TOL).contains(v))
    {
        return Err(BellmanError::SingularSystem(
            "constrained solution leaves [0, 1] beyond tolerance".into(),
        ));
    }
    Ok(Solution {
        values,
        residual,
        method: SolveMethod::Constrained,
    })
}
