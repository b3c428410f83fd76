//! Lipschitz constants of the objectives involved in the projection bounds.

use crate::error::{Error, Result};
use crate::model::MrfModel;

/// Lipschitz constants of `mu -> <theta, mu>` with respect to the node
/// blocks (`l_x`), the edge blocks (`l_y`), and both jointly (`l_xy`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzEstimate {
    pub l_x: f64,
    pub l_y: f64,
    pub l_xy: f64,
}

/// Euclidean norms of the unary and pairwise potential vectors.
pub fn lipschitz_linear(model: &MrfModel) -> LipschitzEstimate {
    let l_x = model
        .unaries()
        .iter()
        .flatten()
        .map(|t| t * t)
        .sum::<f64>()
        .sqrt();
    let l_y = model
        .pairwise_tables()
        .iter()
        .flatten()
        .map(|t| t * t)
        .sum::<f64>()
        .sqrt();
    LipschitzEstimate {
        l_x,
        l_y,
        l_xy: l_x.hypot(l_y),
    }
}

/// Lipschitz constant of `z -> <a, z> + sum_i z_i log z_i` on the box
/// `[eps, m]^n`: `|a| + n max(|1 + log eps|, |1 + log m|)`.
pub fn lipschitz_entropy(a_norm: f64, n: usize, eps: f64, m: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::Parameter(format!("box lower end {eps} must be positive")));
    }
    if !(m >= eps && m.is_finite()) {
        return Err(Error::Parameter(format!(
            "box upper end {m} must be at least {eps}"
        )));
    }
    if !(a_norm >= 0.0) {
        return Err(Error::Parameter(format!("norm {a_norm} must be nonnegative")));
    }
    let slope = (1.0 + eps.ln()).abs().max((1.0 + m.ln()).abs());
    Ok(a_norm + n as f64 * slope)
}

/// `sqrt(|V|) + sqrt(|E|)`, the rough size of the dual objective's
/// Lipschitz constant. Reported for information only.
pub fn dual_constant_diagnostic(model: &MrfModel) -> f64 {
    (model.num_nodes() as f64).sqrt() + (model.num_edges() as f64).sqrt()
}
