//! Dual decomposition: dynamic programming on forests, the decomposition
//! dual and its smoothed version, the tree-reweighted free energy, and primal
//! reconstruction from subgradient histories.

pub mod dp;
pub mod objective;
pub mod reconstruct;

pub use dp::{dp_min, dp_softmin, SoftMin};
pub use objective::{
    decomposition_entropy, dual_u, dual_u_smoothed, entropy_constant, free_energy, DualEval, SmoothedDualEval,
};
pub use reconstruct::{reconstruct_primal_subgradient, PrimalAverager};
