//! Projections onto the local polytope and the dual feasible set.

pub mod dual;
pub mod entropic;
pub mod lipschitz;
pub mod primal;
pub mod simplex;
pub mod transport;

pub use dual::{dual_value, project_dual};
pub use entropic::{solve_transport_entropic, EntropicSolution};
pub use lipschitz::{dual_constant_diagnostic, lipschitz_entropy, lipschitz_linear, LipschitzEstimate};
pub use primal::{project_nodes, project_primal_energy, project_primal_free_energy};
pub use simplex::project_simplex;
pub use transport::{solve_transport, TransportProblem, TransportSolution};
