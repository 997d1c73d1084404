//! Independent ground-truth machinery: Monte Carlo return estimation,
//! finite-horizon dynamic programming, reachability solves, and null-space
//! computation. These never share a code path with the direct Bellman
//! solvers they are used to check.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bellman::SurrogateReward;
use crate::chain::{BsccPartition, InducedChain, StateClass};
use crate::linalg::{self, lu_factor, Matrix};
use crate::rng::SplitMix64;

pub use crate::linalg::NullSpace;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("bscc-aware estimation requires gamma = 1")]
    ModeRequiresGammaOne,
}

/// Why a simulated path stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Entered the BSCC with this index in the partition.
    EnteredBscc(usize),
    HorizonCap,
}

/// A finite simulated path.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<usize>,
    pub termination: Termination,
}

/// Walks the chain from `start` until it enters a BSCC or the horizon is
/// hit. Every consecutive pair has positive transition probability.
pub fn simulate_trajectory(
    chain: &InducedChain,
    partition: &BsccPartition,
    start: usize,
    horizon: usize,
    rng: &mut SplitMix64,
) -> Trajectory {
    let mut states = vec![start];
    let mut s = start;
    for _ in 0..horizon {
        if let Some(b) = partition.bscc_of(s) {
            return Trajectory {
                states,
                termination: Termination::EnteredBscc(b),
            };
        }
        s = rng.next_categorical(chain.matrix.row(s));
        states.push(s);
    }
    let termination = match partition.bscc_of(s) {
        Some(b) => Termination::EnteredBscc(b),
        None => Termination::HorizonCap,
    };
    Trajectory {
        states,
        termination,
    }
}

/// Exact `E[G_{0:K} | start = s]` by backward dynamic programming:
/// `E_0 = R`, `E_{k+1} = R + Γ ⊙ (P E_k)`.
pub fn finite_horizon_return(
    chain: &InducedChain,
    reward: &SurrogateReward,
    state: usize,
    horizon: usize,
) -> f64 {
    finite_horizon_values(chain, reward, horizon)[state]
}

/// The full vector version of [`finite_horizon_return`].
pub fn finite_horizon_values(
    chain: &InducedChain,
    reward: &SurrogateReward,
    horizon: usize,
) -> Vec<f64> {
    let n = chain.num_states();
    let r = reward.reward_vector(&chain.accepting, n);
    let d = reward.discount_vector(&chain.accepting, n);
    let mut values = r.clone();
    for _ in 0..horizon {
        let pv = chain.matrix.mul_vec(&values);
        for s in 0..n {
            values[s] = r[s] + d[s] * pv[s];
        }
    }
    values
}

/// Estimation mode for [`mc_return`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EstimatorMode {
    /// Stop on BSCC entry and substitute the exact remaining return
    /// (1 inside accepting BSCCs, 0 inside rejecting ones). Unbiased, but
    /// only valid for `γ = 1` where those remaining returns are exact.
    #[serde(rename = "bscc-aware")]
    BsccAware,
    /// Truncate after `K + 1` reward terms. Biased by at most the remaining
    /// discount mass, which for `γ < 1` is at most `γ^{K+1} / (1 - γ_max)`
    /// times the largest reward; for `γ = 1` the truncation bias is
    /// unbounded in general and this mode is only a heuristic.
    #[serde(rename = "cap")]
    HorizonCap(usize),
}

/// Monte Carlo estimate of the expected return from one start state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReturnEstimate {
    pub mean: f64,
    /// Sample standard deviation over √samples; zero when all samples
    /// agree (or there is a single sample).
    pub stderr: f64,
    pub samples: usize,
    pub seed: u64,
    pub mode: EstimatorMode,
}

// Samples are grouped into fixed-size chunks whose partial sums are
// combined in chunk order, so the reduction is identical no matter how
// many worker threads rayon uses.
const CHUNK: usize = 4096;

/// Estimates the expected return from `state` over `samples` simulated
/// paths. Sample `i` draws from substream `(seed, i)`, making the result a
/// pure function of `(seed, samples)` regardless of parallel scheduling.
pub fn mc_return(
    chain: &InducedChain,
    partition: &BsccPartition,
    reward: &SurrogateReward,
    state: usize,
    samples: usize,
    seed: u64,
    mode: EstimatorMode,
) -> Result<ReturnEstimate, OracleError> {
    assert!(samples >= 1, "need at least one sample");
    if mode == EstimatorMode::BsccAware && reward.gamma() < 1.0 {
        return Err(OracleError::ModeRequiresGammaOne);
    }

    let n_chunks = samples.div_ceil(CHUNK);
    let partial: Vec<(f64, f64)> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = ((c + 1) * CHUNK).min(samples);
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for i in lo..hi {
                let mut rng = SplitMix64::substream(seed, i as u64);
                let g = match mode {
                    EstimatorMode::BsccAware => {
                        sample_bscc_aware(chain, partition, reward, state, &mut rng)
                    }
                    EstimatorMode::HorizonCap(k) => {
                        sample_capped(chain, reward, state, k, &mut rng)
                    }
                };
                sum += g;
                sum_sq += g * g;
            }
            (sum, sum_sq)
        })
        .collect();

    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for (s, s2) in partial {
        sum += s;
        sum_sq += s2;
    }
    let n = samples as f64;
    let mean = sum / n;
    let stderr = if samples > 1 {
        let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok(ReturnEstimate {
        mean,
        stderr,
        samples,
        seed,
        mode,
    })
}

/// One path, stopping at BSCC entry with the exact remaining return
/// substituted. `d` carries the accumulated discount product.
fn sample_bscc_aware(
    chain: &InducedChain,
    partition: &BsccPartition,
    reward: &SurrogateReward,
    start: usize,
    rng: &mut SplitMix64,
) -> f64 {
    let mut s = start;
    let mut g = 0.0;
    let mut d = 1.0;
    loop {
        if let Some(b) = partition.bscc_of(s) {
            if partition.bsccs[b].accepting {
                g += d;
            }
            return g;
        }
        let acc = chain.accepting.contains(&s);
        g += d * reward.reward_at(acc);
        d *= reward.discount_at(acc);
        s = rng.next_categorical(chain.matrix.row(s));
    }
}

/// One path truncated after `K + 1` reward terms.
fn sample_capped(
    chain: &InducedChain,
    reward: &SurrogateReward,
    start: usize,
    horizon: usize,
    rng: &mut SplitMix64,
) -> f64 {
    let mut s = start;
    let mut g = 0.0;
    let mut d = 1.0;
    for step in 0..=horizon {
        let acc = chain.accepting.contains(&s);
        g += d * reward.reward_at(acc);
        d *= reward.discount_at(acc);
        if step < horizon {
            s = rng.next_categorical(chain.matrix.row(s));
        }
    }
    g
}

/// Probability of eventually entering an accepting BSCC, per state: one on
/// accepting-BSCC states, zero on rejecting-BSCC states, and the unique
/// solution of `x = P_TT x + P_{T→acc} 1` on the transient states.
pub fn reachability_probability(chain: &InducedChain, partition: &BsccPartition) -> Vec<f64> {
    let n = chain.num_states();
    let transient: Vec<usize> = (0..n)
        .filter(|&s| {
            matches!(
                partition.classes[s],
                StateClass::AcceptingTransient | StateClass::RejectingTransient
            )
        })
        .collect();
    let accepting_bscc: Vec<usize> = (0..n)
        .filter(|&s| {
            matches!(
                partition.classes[s],
                StateClass::AcceptingInBscc | StateClass::RejectingInAcceptingBscc
            )
        })
        .collect();

    let mut x = vec![0.0; n];
    for &s in &accepting_bscc {
        x[s] = 1.0;
    }
    if !transient.is_empty() {
        let p_tt = chain.matrix.select(&transient, &transient);
        let rhs: Vec<f64> = transient
            .iter()
            .map(|&s| accepting_bscc.iter().map(|&t| chain.matrix[(s, t)]).sum())
            .collect();
        let sol = lu_factor(&p_tt.identity_minus())
            .expect("transient reachability system is nonsingular")
            .solve(&rhs);
        for (pos, &s) in transient.iter().enumerate() {
            x[s] = sol[pos];
        }
    }
    x
}

/// Null space of a square matrix: dimension and an orthonormal-ish basis,
/// with pivots treated as zero below `rel_tol * ‖M‖_∞`. The workhorse
/// behind uniqueness certificates: each basis vector is a direction along
/// which the Bellman solution set is free.
pub fn null_space(matrix: &Matrix, rel_tol: f64) -> NullSpace {
    linalg::null_space(matrix, rel_tol)
}
