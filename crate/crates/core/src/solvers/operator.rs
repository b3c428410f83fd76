//! The local polytope constraint operator `A`, applied by streaming over the
//! model structure instead of being stored.
//!
//! Primal layout: all node blocks, then all edge blocks. Row layout: one
//! normalization row per node, one per edge, then for every edge the
//! marginalization rows `mu_u(x_u) - sum_{x_v} mu_uv(x_u, x_v)` (multiplier
//! `nu_{u->v}(x_u)`) followed by `mu_v(x_v) - sum_{x_u} mu_uv(x_u, x_v)`
//! (multiplier `nu_{v->u}(x_v)`).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{EdgeMessages, Marginals, MrfModel};

#[derive(Debug, Clone)]
pub struct LocalPolytopeOperator<'a> {
    model: &'a MrfModel,
    node_off: Vec<usize>,
    edge_off: Vec<usize>,
    msg_off: Vec<usize>,
    cols: usize,
    rows: usize,
}

impl<'a> LocalPolytopeOperator<'a> {
    pub fn new(model: &'a MrfModel) -> Self {
        let mut off = 0;
        let mut node_off = Vec::with_capacity(model.num_nodes());
        for v in 0..model.num_nodes() {
            node_off.push(off);
            off += model.labels(v);
        }
        let mut edge_off = Vec::with_capacity(model.num_edges());
        for e in 0..model.num_edges() {
            edge_off.push(off);
            off += model.pairwise(e).len();
        }
        let cols = off;
        let mut row = model.num_nodes() + model.num_edges();
        let mut msg_off = Vec::with_capacity(model.num_edges());
        for e in model.edges() {
            msg_off.push(row);
            row += model.labels(e.u) + model.labels(e.v);
        }
        Self {
            model,
            node_off,
            edge_off,
            msg_off,
            cols,
            rows: row,
        }
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Objective vector `theta` in primal layout.
    pub fn cost(&self) -> Vec<f64> {
        let m = self.model;
        m.unaries()
            .iter()
            .chain(m.pairwise_tables())
            .flatten()
            .copied()
            .collect()
    }

    /// Right-hand side `b`: ones on normalization rows, zeros elsewhere.
    pub fn rhs(&self) -> Vec<f64> {
        let mut b = vec![0.0; self.rows];
        let k = self.model.num_nodes() + self.model.num_edges();
        b[..k].iter_mut().for_each(|x| *x = 1.0);
        b
    }

    /// `out = A mu`.
    pub fn apply(&self, mu: &[f64], out: &mut [f64]) {
        let m = self.model;
        let n = m.num_nodes();
        for v in 0..n {
            out[v] = mu[self.node_off[v]..self.node_off[v] + m.labels(v)].iter().sum();
        }
        for (e, edge) in m.edges().iter().enumerate() {
            let (ku, kv) = (m.labels(edge.u), m.labels(edge.v));
            let block = &mu[self.edge_off[e]..self.edge_off[e] + ku * kv];
            out[n + e] = block.iter().sum();
            let r = self.msg_off[e];
            for xu in 0..ku {
                out[r + xu] =
                    mu[self.node_off[edge.u] + xu] - block[xu * kv..(xu + 1) * kv].iter().sum::<f64>();
            }
            for xv in 0..kv {
                let col: f64 = (0..ku).map(|xu| block[xu * kv + xv]).sum();
                out[r + ku + xv] = mu[self.node_off[edge.v] + xv] - col;
            }
        }
    }

    /// `out = A^T nu`.
    pub fn apply_transpose(&self, nu: &[f64], out: &mut [f64]) {
        let m = self.model;
        let n = m.num_nodes();
        for v in 0..n {
            let o = self.node_off[v];
            for x in 0..m.labels(v) {
                out[o + x] = nu[v];
            }
            for inc in m.incidence(v) {
                let edge = m.edge(inc.edge);
                let r = self.msg_off[inc.edge] + if inc.is_u { 0 } else { m.labels(edge.u) };
                for x in 0..m.labels(v) {
                    out[o + x] += nu[r + x];
                }
            }
        }
        for (e, edge) in m.edges().iter().enumerate() {
            let (ku, kv) = (m.labels(edge.u), m.labels(edge.v));
            let r = self.msg_off[e];
            let o = self.edge_off[e];
            for xu in 0..ku {
                for xv in 0..kv {
                    out[o + xu * kv + xv] = nu[n + e] - nu[r + xu] - nu[r + ku + xv];
                }
            }
        }
    }

    /// Power iteration on `A^T A` from a seeded random start; returns the
    /// estimate of the spectral norm of `A`.
    pub fn norm_estimate(&self, iterations: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x: Vec<f64> = (0..self.cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut ax = vec![0.0; self.rows];
        let mut estimate = 0.0;
        for _ in 0..iterations {
            let norm = x.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            x.iter_mut().for_each(|a| *a /= norm);
            self.apply(&x, &mut ax);
            estimate = ax.iter().map(|a| a * a).sum::<f64>().sqrt();
            self.apply_transpose(&ax, &mut x);
        }
        estimate
    }

    pub fn node_blocks(&self, mu: &[f64]) -> Vec<Vec<f64>> {
        (0..self.model.num_nodes())
            .map(|v| mu[self.node_off[v]..self.node_off[v] + self.model.labels(v)].to_vec())
            .collect()
    }

    pub fn marginals(&self, mu: &[f64]) -> Marginals {
        let edges = (0..self.model.num_edges())
            .map(|e| mu[self.edge_off[e]..self.edge_off[e] + self.model.pairwise(e).len()].to_vec())
            .collect();
        Marginals {
            nodes: self.node_blocks(mu),
            edges: Some(edges),
        }
    }

    /// Messages stored in the marginalization multipliers.
    pub fn messages(&self, nu: &[f64]) -> Vec<EdgeMessages> {
        self.model
            .edges()
            .iter()
            .enumerate()
            .map(|(e, edge)| {
                let (ku, kv) = (self.model.labels(edge.u), self.model.labels(edge.v));
                let r = self.msg_off[e];
                EdgeMessages {
                    from_u: nu[r..r + ku].to_vec(),
                    from_v: nu[r + ku..r + ku + kv].to_vec(),
                }
            })
            .collect()
    }
}
