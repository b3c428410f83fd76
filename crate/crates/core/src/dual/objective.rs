//! The decomposition dual `U`, its smoothed version, and the tree-reweighted
//! free energy.

use crate::decomposition::{Decomposition, Reparametrization};
use crate::error::{Error, Result};
use crate::model::{Labeling, Marginals, MrfModel};
use crate::tolerance;

use super::dp::{dp_min, dp_softmin, SoftMin};

/// Value of `U(lambda)` with the subgradient `phi_V(x^1) - phi_V(x^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualEval {
    pub value: f64,
    pub subgradient: Vec<Vec<f64>>,
    pub argmins: [Labeling; 2],
}

impl DualEval {
    pub fn subgradient_norm_sq(&self) -> f64 {
        self.subgradient.iter().flatten().map(|g| g * g).sum()
    }
}

/// Value, gradient and Gibbs marginals of both subproblems of the smoothed
/// dual.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedDualEval {
    pub value: f64,
    pub gradient: Vec<Vec<f64>>,
    pub subproblems: [SoftMin; 2],
}

impl SmoothedDualEval {
    /// Average of the two node marginal maps.
    pub fn mean_node_marginals(&self) -> Vec<Vec<f64>> {
        self.subproblems[0]
            .nodes
            .iter()
            .zip(&self.subproblems[1].nodes)
            .map(|(a, b)| a.iter().zip(b).map(|(a, b)| 0.5 * (a + b)).collect())
            .collect()
    }
}

fn prepare(model: &MrfModel, d: &Decomposition, lambda: &Reparametrization) -> Result<[Vec<Vec<f64>>; 2]> {
    d.require_two()?;
    lambda.check(model)?;
    Ok(lambda.subproblem_unaries(model))
}

/// `U(lambda) = sum_i min_x E(theta^i(lambda), x)` with a subgradient.
pub fn dual_u(model: &MrfModel, d: &Decomposition, lambda: &Reparametrization) -> Result<DualEval> {
    let [t1, t2] = prepare(model, d, lambda)?;
    let (a, b) = rayon::join(
        || dp_min(model, d.forest(0), &t1),
        || dp_min(model, d.forest(1), &t2),
    );
    let ((v1, x1), (v2, x2)) = (a?, b?);
    let subgradient = model
        .label_counts()
        .iter()
        .enumerate()
        .map(|(v, &k)| {
            let mut g = vec![0.0; k];
            g[x1.0[v]] += 1.0;
            g[x2.0[v]] -= 1.0;
            g
        })
        .collect();
    Ok(DualEval {
        value: v1 + v2,
        subgradient,
        argmins: [x1, x2],
    })
}

/// `U_rho(lambda)`: the soft-min of both subproblems, with gradient
/// `mu^1_V - mu^2_V`.
pub fn dual_u_smoothed(
    model: &MrfModel,
    d: &Decomposition,
    lambda: &Reparametrization,
    rho: f64,
) -> Result<SmoothedDualEval> {
    let [t1, t2] = prepare(model, d, lambda)?;
    let (a, b) = rayon::join(
        || dp_softmin(model, d.forest(0), &t1, rho),
        || dp_softmin(model, d.forest(1), &t2, rho),
    );
    let (s1, s2) = (a?, b?);
    let gradient = s1
        .nodes
        .iter()
        .zip(&s2.nodes)
        .map(|(a, b)| a.iter().zip(b).map(|(a, b)| a - b).collect())
        .collect();
    Ok(SmoothedDualEval {
        value: s1.value + s2.value,
        gradient,
        subproblems: [s1, s2],
    })
}

fn xlogx_sum(p: &[f64]) -> f64 {
    p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.max(1e-300).ln())
        .sum()
}

/// `sum_v N_v H(mu_v) - sum_uv N_uv I(mu_uv)`, the summed entropy of the
/// subgraph restrictions of `mu`. Nonnegative on the local polytope.
pub fn decomposition_entropy(model: &MrfModel, d: &Decomposition, mu: &Marginals) -> Result<f64> {
    model.check_node_blocks(&mu.nodes)?;
    let edges = mu.edges.as_ref().ok_or(Error::MissingEdgeBlocks)?;
    model.check_edge_blocks(edges)?;
    let mut h = 0.0;
    for (v, b) in mu.nodes.iter().enumerate() {
        h -= d.node_count(v) as f64 * xlogx_sum(b);
    }
    for (e, block) in edges.iter().enumerate() {
        let edge = model.edge(e);
        let kv = model.labels(edge.v);
        let (mu_u, mu_v) = (&mu.nodes[edge.u], &mu.nodes[edge.v]);
        let mut info = 0.0;
        for (k, &p) in block.iter().enumerate() {
            if p > 0.0 {
                let q = (mu_u[k / kv] * mu_v[k % kv]).max(1e-300);
                info += p * (p.max(1e-300).ln() - q.ln());
            }
        }
        h -= d.edge_count(e) as f64 * info;
    }
    Ok(h)
}

/// `C_H = sum_i sum_v log |X_v|`, the largest possible decomposition
/// entropy.
pub fn entropy_constant(model: &MrfModel, d: &Decomposition) -> f64 {
    (0..model.num_nodes())
        .map(|v| d.node_count(v) as f64 * (model.labels(v) as f64).ln())
        .sum()
}

/// Tree-reweighted free energy `<theta, mu> - rho H_d(mu)` of a feasible
/// point. It lies between `E(mu) - rho C_H` and `E(mu)`.
pub fn free_energy(model: &MrfModel, d: &Decomposition, mu: &Marginals, rho: f64) -> Result<f64> {
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(Error::Parameter(format!("smoothing {rho} must be nonnegative")));
    }
    let residual = model.constraint_residual(mu)?;
    if residual > tolerance::EQUALITY {
        return Err(Error::Domain { residual });
    }
    Ok(model.relaxed_energy(mu)? - rho * decomposition_entropy(model, d, mu)?)
}
