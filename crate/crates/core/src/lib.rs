//! Feasible primal and dual bounds for the local polytope relaxation of
//! pairwise MRF energy minimization.
//!
//! First-order dual methods (subgradient ascent on a dual decomposition,
//! accelerated gradient on its smoothed version, primal-dual saddle point
//! iterations) produce primal estimates that are in general infeasible. This
//! crate turns them into feasible points of the local polytope with an
//! *optimizing projection*: the node blocks are projected onto their simplices,
//! after which every edge block is obtained by exactly minimizing the objective
//! over the remaining (small, independent) transportation problems. The energy
//! of the projected point is an upper bound on the relaxed optimum, and
//! together with any dual value it yields a certified duality gap.
//!
//! Module map:
//!
//! * [`model`]: models, labelings, marginals, dual points and their
//!   evaluation; [`generate`] builds random and LP-tight grid instances;
//!   [`uai`] reads and writes models; [`log`] holds convergence records.
//! * [`decomposition`]: splitting the graph into two acyclic subgraphs.
//! * [`projection`]: simplex projection, transportation solvers (exact and
//!   entropic), the primal and dual optimizing projections, Lipschitz bounds.
//! * [`dual`]: min-sum and soft-min dynamic programming on forests, the
//!   decomposition dual, its smoothed version, and the tree-reweighted free
//!   energy.
//! * [`solvers`]: subgradient ascent, Nesterov's method on the smoothed dual,
//!   and the first-order primal-dual algorithm.

pub mod decomposition;
pub mod dual;
pub mod error;
pub mod generate;
pub mod log;
pub mod model;
pub mod projection;
pub mod solvers;
pub mod tolerance;
pub mod uai;

pub use decomposition::{decompose_grid, Decomposition, Reparametrization};
pub use error::{Error, Result};
pub use model::{DualPoint, EdgeMessages, GridShape, Labeling, Marginals, MrfModel};
