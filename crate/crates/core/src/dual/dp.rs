//! Min-sum and sum-product dynamic programming on a spanning forest.
//!
//! Only the pairwise potentials of the forest's own edges take part; every
//! node contributes the supplied unary table.

use crate::decomposition::ForestPlan;
use crate::error::{Error, Result};
use crate::model::{Labeling, MrfModel};
use crate::projection::entropic::log_sum_exp;

/// Pairwise entry for (parent label, child label).
#[inline]
fn pair(table: &[f64], child_is_u: bool, kp: usize, kc: usize, xp: usize, xc: usize) -> f64 {
    if child_is_u {
        table[xc * kp + xp]
    } else {
        table[xp * kc + xc]
    }
}

/// Minimum energy of the forest and a minimizing labeling. Ties go to the
/// smaller label, at the roots and at every backtracking step.
pub fn dp_min(model: &MrfModel, plan: &ForestPlan, unary: &[Vec<f64>]) -> Result<(f64, Labeling)> {
    model.check_node_blocks(unary)?;
    let n = model.num_nodes();
    let mut cost: Vec<Vec<f64>> = unary.to_vec();
    // best child label for each parent label
    let mut choice: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &c in plan.order.iter().rev() {
        let Some(link) = plan.parent[c] else { continue };
        let (kp, kc) = (model.labels(link.parent), model.labels(c));
        let table = model.pairwise(link.edge);
        let mut arg = vec![0; kp];
        for (xp, a) in arg.iter_mut().enumerate() {
            let mut best = f64::INFINITY;
            for xc in 0..kc {
                let val = pair(table, link.child_is_u, kp, kc, xp, xc) + cost[c][xc];
                if val < best {
                    best = val;
                    *a = xc;
                }
            }
            cost[link.parent][xp] += best;
        }
        choice[c] = arg;
    }
    let mut x = vec![0; n];
    let mut value = 0.0;
    for &v in &plan.order {
        match plan.parent[v] {
            None => {
                let mut best = 0;
                for (l, &val) in cost[v].iter().enumerate() {
                    if val < cost[v][best] {
                        best = l;
                    }
                }
                x[v] = best;
                value += cost[v][best];
            }
            Some(link) => x[v] = choice[v][x[link.parent]],
        }
    }
    Ok((value, Labeling(x)))
}

/// Result of the soft-min recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftMin {
    /// `-rho log sum_x exp(-E(x) / rho)`.
    pub value: f64,
    /// Gibbs marginals of every node.
    pub nodes: Vec<Vec<f64>>,
    /// Gibbs marginals of the forest's edges, in the order of `plan.edges`,
    /// laid out like the pairwise tables.
    pub edges: Vec<Vec<f64>>,
}

/// Sum-product in the log domain at temperature `rho`.
pub fn dp_softmin(model: &MrfModel, plan: &ForestPlan, unary: &[Vec<f64>], rho: f64) -> Result<SoftMin> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::Parameter(format!("smoothing {rho} must be positive")));
    }
    model.check_node_blocks(unary)?;
    let n = model.num_nodes();
    // inside: log of unary factor times all messages from children
    let mut inside: Vec<Vec<f64>> = unary
        .iter()
        .map(|t| t.iter().map(|x| -x / rho).collect())
        .collect();
    // message from each child to its parent, indexed by parent label
    let mut up: Vec<Vec<f64>> = vec![Vec::new(); n];
    let mut buf = Vec::new();
    for &c in plan.order.iter().rev() {
        let Some(link) = plan.parent[c] else { continue };
        let (kp, kc) = (model.labels(link.parent), model.labels(c));
        let table = model.pairwise(link.edge);
        let mut msg = vec![0.0; kp];
        for (xp, m) in msg.iter_mut().enumerate() {
            buf.clear();
            buf.extend((0..kc).map(|xc| inside[c][xc] - pair(table, link.child_is_u, kp, kc, xp, xc) / rho));
            *m = log_sum_exp(&buf);
        }
        for (a, m) in inside[link.parent].iter_mut().zip(&msg) {
            *a += m;
        }
        up[c] = msg;
    }
    // outside: log of everything not below the node
    let mut outside: Vec<Vec<f64>> = vec![Vec::new(); n];
    let mut log_z = 0.0;
    let mut nodes = vec![Vec::new(); n];
    let mut edge_blocks: Vec<Option<Vec<f64>>> = vec![None; model.num_edges()];
    for &v in &plan.order {
        let kv = model.labels(v);
        match plan.parent[v] {
            None => {
                outside[v] = vec![0.0; kv];
                log_z += log_sum_exp(&inside[v]);
            }
            Some(link) => {
                let p = link.parent;
                let kp = model.labels(p);
                let table = model.pairwise(link.edge);
                // parent belief without this child's message
                let rest: Vec<f64> = (0..kp)
                    .map(|xp| inside[p][xp] + outside[p][xp] - up[v][xp])
                    .collect();
                let mut out = vec![0.0; kv];
                for (xc, o) in out.iter_mut().enumerate() {
                    buf.clear();
                    buf.extend(
                        (0..kp).map(|xp| rest[xp] - pair(table, link.child_is_u, kp, kv, xp, xc) / rho),
                    );
                    *o = log_sum_exp(&buf);
                }
                outside[v] = out;
                let (ku_len, kv_len) = if link.child_is_u { (kv, kp) } else { (kp, kv) };
                let mut block = vec![0.0; ku_len * kv_len];
                for xp in 0..kp {
                    for xc in 0..kv {
                        let k = if link.child_is_u {
                            xc * kp + xp
                        } else {
                            xp * kv + xc
                        };
                        block[k] = rest[xp] + inside[v][xc] - table[k] / rho;
                    }
                }
                edge_blocks[link.edge] = Some(normalize_log(&block));
            }
        }
        let belief: Vec<f64> = inside[v].iter().zip(&outside[v]).map(|(a, b)| a + b).collect();
        nodes[v] = normalize_log(&belief);
    }
    let edges = plan
        .edges
        .iter()
        .map(|&e| edge_blocks[e].take().expect("forest edge has a marginal"))
        .collect();
    Ok(SoftMin {
        value: -rho * log_z,
        nodes,
        edges,
    })
}

/// `exp(x - logsumexp(x))`, renormalized once more to absorb rounding.
fn normalize_log(x: &[f64]) -> Vec<f64> {
    let lz = log_sum_exp(x);
    let mut p: Vec<f64> = x.iter().map(|a| (a - lz).exp()).collect();
    let s: f64 = p.iter().sum();
    for q in &mut p {
        *q /= s;
    }
    p
}
