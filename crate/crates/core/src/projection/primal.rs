//! Primal optimizing projections onto the local polytope.
//!
//! Both operators project the node blocks onto their simplices and then
//! minimize the objective over the edge blocks with the node blocks fixed.
//! The edge problems decouple into one transportation problem per edge; they
//! are solved in parallel and collected in edge order.

use rayon::prelude::*;

use super::entropic::solve_transport_entropic;
use super::simplex::project_simplex;
use super::transport::{solve_transport, TransportProblem};
use crate::decomposition::Decomposition;
use crate::error::{Error, Result};
use crate::model::{Marginals, MrfModel};

/// Simplex projection of every node block.
pub fn project_nodes(model: &MrfModel, nodes: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    model.check_node_blocks(nodes)?;
    nodes.iter().map(|b| project_simplex(b)).collect()
}

fn edge_problem(model: &MrfModel, nodes: &[Vec<f64>], e: usize) -> Result<TransportProblem> {
    let edge = model.edge(e);
    TransportProblem::new(model.pairwise(e).to_vec(), &nodes[edge.u], &nodes[edge.v])
}

/// `P_{E,L}`: simplex projection of the node blocks, then an exact
/// transportation solve per edge with the pairwise potentials as cost.
/// Edge blocks of the input are not needed.
pub fn project_primal_energy(model: &MrfModel, nodes: &[Vec<f64>]) -> Result<Marginals> {
    let nodes = project_nodes(model, nodes)?;
    let edges = (0..model.num_edges())
        .into_par_iter()
        .map(|e| Ok(solve_transport(&edge_problem(model, &nodes, e)?)?.plan))
        .collect::<Result<Vec<_>>>()?;
    Ok(Marginals {
        nodes,
        edges: Some(edges),
    })
}

/// `P_{E_rho,L}`: as [`project_primal_energy`], but every edge block
/// minimizes `<theta_uv, mu_uv> + rho N_uv KL(mu_uv || mu_u mu_v^T)`.
pub fn project_primal_free_energy(
    model: &MrfModel,
    decomposition: &Decomposition,
    nodes: &[Vec<f64>],
    rho: f64,
) -> Result<Marginals> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::Parameter(format!("smoothing {rho} must be positive")));
    }
    let nodes = project_nodes(model, nodes)?;
    let edges = (0..model.num_edges())
        .into_par_iter()
        .map(|e| {
            let p = edge_problem(model, &nodes, e)?;
            let (r, s) = (p.supply().to_vec(), p.demand().to_vec());
            Ok(solve_transport_entropic(&p, rho, decomposition.edge_count(e), &r, &s)?.plan)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Marginals {
        nodes,
        edges: Some(edges),
    })
}
