//! Dual optimizing projection.

use crate::error::Result;
use crate::model::{DualPoint, EdgeMessages, MrfModel};

/// `P_{U,D}`: keeps the messages and sets every node and edge bound to the
/// minimum of its reweighted potential, which makes all dual constraints hold
/// with equality at their minimizers.
pub fn project_dual(model: &MrfModel, messages: &[EdgeMessages]) -> Result<DualPoint> {
    model.check_messages(messages)?;
    let node_bounds = (0..model.num_nodes())
        .map(|v| {
            (0..model.labels(v))
                .map(|x| model.reweighted_unary(v, x, messages))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let edge_bounds = model
        .edges()
        .iter()
        .enumerate()
        .map(|(e, edge)| {
            let kv = model.labels(edge.v);
            let table = model.pairwise(e);
            let m = &messages[e];
            let mut best = f64::INFINITY;
            for xu in 0..model.labels(edge.u) {
                for xv in 0..kv {
                    best = best.min(table[xu * kv + xv] + m.from_u[xu] + m.from_v[xv]);
                }
            }
            best
        })
        .collect();
    Ok(DualPoint {
        messages: messages.to_vec(),
        node_bounds,
        edge_bounds,
    })
}

/// `sum_v nu_v + sum_uv nu_uv`.
pub fn dual_value(nu: &DualPoint) -> f64 {
    nu.node_bounds.iter().sum::<f64>() + nu.edge_bounds.iter().sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate_grid, PotentialLaw};

    #[test]
    fn zero_messages_give_plain_minima() {
        let m = generate_grid(2, 2, 3, PotentialLaw::UniformSym(5.0), 3).unwrap();
        let nu = project_dual(&m, &m.zero_messages()).unwrap();
        for v in 0..4 {
            let min = m.unary(v).iter().copied().fold(f64::INFINITY, f64::min);
            assert_eq!(nu.node_bounds[v], min);
        }
        for e in 0..4 {
            let min = m.pairwise(e).iter().copied().fold(f64::INFINITY, f64::min);
            assert_eq!(nu.edge_bounds[e], min);
        }
    }

    #[test]
    fn single_node_value() {
        let m = MrfModel::new(vec![vec![3.0, 5.0]], vec![]).unwrap();
        let nu = project_dual(&m, &[]).unwrap();
        assert_eq!(nu.node_bounds, vec![3.0]);
        assert_eq!(dual_value(&nu), 3.0);
    }

    #[test]
    fn zero_point_has_zero_value() {
        let nu = DualPoint {
            messages: vec![],
            node_bounds: vec![0.0; 3],
            edge_bounds: vec![0.0; 2],
        };
        assert_eq!(dual_value(&nu), 0.0);
    }

    #[test]
    fn projected_point_is_feasible() {
        let m = generate_grid(2, 2, 2, PotentialLaw::Uniform01, 1).unwrap();
        let mut msgs = m.zero_messages();
        for (e, mm) in msgs.iter_mut().enumerate() {
            for (x, y) in mm.from_u.iter_mut().chain(mm.from_v.iter_mut()).enumerate() {
                *y = ((e * 5 + x) as f64 * 1.7).cos() * 3.0;
            }
        }
        let nu = project_dual(&m, &msgs).unwrap();
        assert!(m.dual_feasibility_margin(&nu).unwrap() >= 0.0);
        assert_eq!(nu.messages, msgs);
    }
}
