// Dense matrix code indexes several aligned structures per loop; iterator
// chains would obscure the coupling.
#![allow(clippy::needless_range_loop)]

//! Evaluation of memoryless policies on (product) MDPs under the
//! two-discount surrogate reward for Büchi objectives.
//!
//! The library parses labeled MDPs, limit-deterministic Büchi automata, and
//! policies; builds product MDPs; decomposes induced Markov chains into
//! bottom strongly connected components; assembles and solves the resulting
//! Bellman systems; and certifies whether the solution is unique. A set of
//! independent oracles (Monte Carlo return estimation, finite-horizon
//! dynamic programming, reachability solves, null-space computation) backs
//! the direct solvers, and a small tabular TD learner demonstrates how a
//! non-unique fixed point derails policy evaluation when the non-accepting
//! discount factor is one.
//!
//! ```
//! use buchi_eval::{
//!     builtin, certify, decompose, induce_chain, parse_model, parse_policy,
//!     SurrogateReward,
//! };
//!
//! let model = parse_model(builtin::EX1).unwrap();
//! let mdp = model.as_mdp().unwrap();
//! let policy = parse_policy(builtin::EX1_POLICY_ALPHA, mdp).unwrap();
//! let chain = induce_chain(mdp, &policy).unwrap();
//! let partition = decompose(&chain);
//!
//! let reward = SurrogateReward::new(1.0, 0.5).unwrap();
//! let cert = certify(&chain, &partition, reward).unwrap();
//! assert!(!cert.unique); // gamma = 1 with a rejecting BSCC
//! assert_eq!(cert.null_space_dim, 1);
//! assert_eq!(cert.value.values, vec![1.0, 1.0, 0.0]);
//! ```

pub mod bellman;
pub mod builtin;
pub mod chain;
pub mod cli;
pub mod generator;
pub mod linalg;
pub mod model;
pub mod oracles;
pub mod product;
pub mod rng;
pub mod td;

pub use bellman::{
    bellman_residual, build_system, certify, first_return_matrix, gershgorin_bound,
    solve_accepting, solve_constrained, solve_discounted, AcceptingChain, BellmanError,
    BellmanSystem, ConstrainedSystem, Solution, SolveMethod, SurrogateReward,
    UniquenessCertificate, RESIDUAL_TOL,
};
pub use chain::{
    class_counts, decompose, induce_chain, Bscc, BsccPartition, ChainError, ClassCounts,
    InducedChain, StateClass,
};
pub use model::{
    eval_guard, parse_model, parse_policy, serialize_model, validate_ldba, Guard, LabeledMdp, Ldba,
    ModelError, ModelKind, ParsedModel, Policy,
};
