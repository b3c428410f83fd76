//! Feasibility tolerances shared by projections, verification and solvers.

/// Maximum violation of the local polytope equalities accepted as feasible.
pub const EQUALITY: f64 = 1e-9;

/// Largest negative entry accepted as nonnegative.
pub const NONNEGATIVITY: f64 = 1e-12;

/// Slack allowed when checking weak duality (`primal - dual >= -WEAK_DUALITY`).
pub const WEAK_DUALITY: f64 = 1e-9;

/// Runtime view of the tolerances, for callers that want to override them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub equality: f64,
    pub nonnegativity: f64,
    pub weak_duality: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            equality: EQUALITY,
            nonnegativity: NONNEGATIVITY,
            weak_duality: WEAK_DUALITY,
        }
    }
}
