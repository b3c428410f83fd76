//! Pairwise MRF models and the objects living on them.
//!
//! Nodes are numbered `0..n` (row-major for grids). Edges are stored with
//! `u < v` and sorted lexicographically, so all vector layouts are canonical.
//! A pairwise table for edge `(u, v)` is row-major with `x_u` as the row
//! index: entry `x_u * |X_v| + x_v`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An undirected edge with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
}

/// Row/column layout of a grid model, kept so the horizontal/vertical
/// decomposition can be recovered after I/O.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridShape {
    pub rows: usize,
    pub cols: usize,
}

impl GridShape {
    pub fn node(&self, r: usize, c: usize) -> usize {
        r * self.cols + c
    }
}

/// One end of an edge as seen from a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Incidence {
    pub edge: usize,
    /// `true` when the node is the `u` endpoint of the edge.
    pub is_u: bool,
    pub other: usize,
}

/// Pairwise MRF with energies (min-sum convention).
#[derive(Debug, Clone, PartialEq)]
pub struct MrfModel {
    label_counts: Vec<usize>,
    unary: Vec<Vec<f64>>,
    edges: Vec<Edge>,
    pairwise: Vec<Vec<f64>>,
    incidence: Vec<Vec<Incidence>>,
    grid: Option<GridShape>,
}

impl MrfModel {
    /// Builds a model from unary tables and `(a, b, table)` triples, where
    /// `table` is row-major with `x_a` as the row. Edges given as `a > b` are
    /// transposed into canonical orientation.
    pub fn new(unary: Vec<Vec<f64>>, pairs: Vec<(usize, usize, Vec<f64>)>) -> Result<Self> {
        let label_counts: Vec<usize> = unary.iter().map(Vec::len).collect();
        if let Some(v) = label_counts.iter().position(|&k| k == 0) {
            return Err(Error::InvalidModel(format!("node {v} has no labels")));
        }
        for (v, table) in unary.iter().enumerate() {
            if table.iter().any(|t| !t.is_finite()) {
                return Err(Error::InvalidModel(format!(
                    "unary potential of node {v} is not finite"
                )));
            }
        }
        let n = unary.len();
        let mut canonical = Vec::with_capacity(pairs.len());
        for (a, b, table) in pairs {
            if a >= n || b >= n {
                return Err(Error::InvalidModel(format!(
                    "edge ({a}, {b}) references a missing node"
                )));
            }
            if a == b {
                return Err(Error::InvalidModel(format!("self loop on node {a}")));
            }
            let (ka, kb) = (label_counts[a], label_counts[b]);
            if table.len() != ka * kb {
                return Err(Error::InvalidModel(format!(
                    "pairwise table of edge ({a}, {b}) has {} entries, expected {}",
                    table.len(),
                    ka * kb
                )));
            }
            if table.iter().any(|t| !t.is_finite()) {
                return Err(Error::InvalidModel(format!(
                    "pairwise potential of edge ({a}, {b}) is not finite"
                )));
            }
            if a < b {
                canonical.push((Edge { u: a, v: b }, table));
            } else {
                let mut t = vec![0.0; ka * kb];
                for xa in 0..ka {
                    for xb in 0..kb {
                        t[xb * ka + xa] = table[xa * kb + xb];
                    }
                }
                canonical.push((Edge { u: b, v: a }, t));
            }
        }
        canonical.sort_by(|x, y| x.0.cmp(&y.0));
        for w in canonical.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidModel(format!(
                    "duplicate edge ({}, {})",
                    w[0].0.u, w[0].0.v
                )));
            }
        }
        let (edges, pairwise): (Vec<_>, Vec<_>) = canonical.into_iter().unzip();
        let mut incidence = vec![Vec::new(); n];
        for (e, edge) in edges.iter().enumerate() {
            incidence[edge.u].push(Incidence {
                edge: e,
                is_u: true,
                other: edge.v,
            });
            incidence[edge.v].push(Incidence {
                edge: e,
                is_u: false,
                other: edge.u,
            });
        }
        Ok(Self {
            label_counts,
            unary,
            edges,
            pairwise,
            incidence,
            grid: None,
        })
    }

    /// Attaches grid metadata. The model must be exactly the 4-connected
    /// `rows x cols` grid.
    pub fn with_grid(mut self, shape: GridShape) -> Result<Self> {
        if shape.rows * shape.cols != self.num_nodes() {
            return Err(Error::InvalidModel(format!(
                "grid {}x{} does not match {} nodes",
                shape.rows,
                shape.cols,
                self.num_nodes()
            )));
        }
        let expected = grid_edges(shape);
        if expected != self.edges {
            return Err(Error::InvalidModel("edge set is not the 4-connected grid".into()));
        }
        self.grid = Some(shape);
        Ok(self)
    }

    pub fn num_nodes(&self) -> usize {
        self.label_counts.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn label_counts(&self) -> &[usize] {
        &self.label_counts
    }

    pub fn labels(&self, v: usize) -> usize {
        self.label_counts[v]
    }

    pub fn unary(&self, v: usize) -> &[f64] {
        &self.unary[v]
    }

    pub fn unaries(&self) -> &[Vec<f64>] {
        &self.unary
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> Edge {
        self.edges[e]
    }

    /// Row-major table of edge `e` (`x_u` rows, `x_v` columns).
    pub fn pairwise(&self, e: usize) -> &[f64] {
        &self.pairwise[e]
    }

    pub fn pairwise_tables(&self) -> &[Vec<f64>] {
        &self.pairwise
    }

    pub fn incidence(&self, v: usize) -> &[Incidence] {
        &self.incidence[v]
    }

    pub fn grid(&self) -> Option<GridShape> {
        self.grid
    }

    /// Index of the edge joining `a` and `b`, in either order.
    pub fn find_edge(&self, a: usize, b: usize) -> Option<usize> {
        let key = Edge {
            u: a.min(b),
            v: a.max(b),
        };
        self.edges.binary_search(&key).ok()
    }

    /// Total number of primal coordinates (node plus edge blocks).
    pub fn primal_dim(&self) -> usize {
        self.label_counts.iter().sum::<usize>()
            + self
                .edges
                .iter()
                .map(|e| self.label_counts[e.u] * self.label_counts[e.v])
                .sum::<usize>()
    }

    /// Energy of a labeling: sum of the selected unary and pairwise entries.
    pub fn energy(&self, x: &Labeling) -> Result<f64> {
        self.check_labeling(x)?;
        let mut total: f64 = (0..self.num_nodes()).map(|v| self.unary[v][x.0[v]]).sum();
        for (e, edge) in self.edges.iter().enumerate() {
            total += self.pairwise[e][x.0[edge.u] * self.label_counts[edge.v] + x.0[edge.v]];
        }
        Ok(total)
    }

    pub fn check_labeling(&self, x: &Labeling) -> Result<()> {
        if x.0.len() != self.num_nodes() {
            return Err(Error::InvalidLabeling(format!(
                "{} labels for {} nodes",
                x.0.len(),
                self.num_nodes()
            )));
        }
        for (v, (&l, &k)) in x.0.iter().zip(&self.label_counts).enumerate() {
            if l >= k {
                return Err(Error::InvalidLabeling(format!(
                    "label {l} of node {v} is outside [0, {k})"
                )));
            }
        }
        Ok(())
    }

    /// Linear objective `<theta, mu>` over all blocks. Feasibility is not
    /// required, but edge blocks are.
    pub fn relaxed_energy(&self, mu: &Marginals) -> Result<f64> {
        self.check_node_blocks(&mu.nodes)?;
        let edges = mu.edges.as_ref().ok_or(Error::MissingEdgeBlocks)?;
        self.check_edge_blocks(edges)?;
        Ok(self.unary_energy(&mu.nodes) + self.pairwise_energy(edges))
    }

    /// `sum_v <theta_v, mu_v>`.
    pub fn unary_energy(&self, nodes: &[Vec<f64>]) -> f64 {
        self.unary.iter().zip(nodes).map(|(t, m)| dot(t, m)).sum()
    }

    /// `sum_uv <theta_uv, mu_uv>`.
    pub fn pairwise_energy(&self, edges: &[Vec<f64>]) -> f64 {
        self.pairwise.iter().zip(edges).map(|(t, m)| dot(t, m)).sum()
    }

    /// Indicator embedding of a labeling into the local polytope.
    pub fn embed_labeling(&self, x: &Labeling) -> Result<Marginals> {
        self.check_labeling(x)?;
        let nodes = self
            .label_counts
            .iter()
            .zip(&x.0)
            .map(|(&k, &l)| {
                let mut b = vec![0.0; k];
                b[l] = 1.0;
                b
            })
            .collect();
        let edges = self
            .edges
            .iter()
            .map(|edge| {
                let kv = self.label_counts[edge.v];
                let mut b = vec![0.0; self.label_counts[edge.u] * kv];
                b[x.0[edge.u] * kv + x.0[edge.v]] = 1.0;
                b
            })
            .collect();
        Ok(Marginals {
            nodes,
            edges: Some(edges),
        })
    }

    /// Largest violation of the local polytope constraints: node
    /// normalization, both marginalization families, and nonnegativity
    /// (`max(0, -min entry)`).
    pub fn constraint_residual(&self, mu: &Marginals) -> Result<f64> {
        self.check_node_blocks(&mu.nodes)?;
        let edges = mu.edges.as_ref().ok_or(Error::MissingEdgeBlocks)?;
        self.check_edge_blocks(edges)?;
        let mut worst = self.node_residual(&mu.nodes);
        for (e, edge) in self.edges.iter().enumerate() {
            let (ku, kv) = (self.label_counts[edge.u], self.label_counts[edge.v]);
            let block = &edges[e];
            for xu in 0..ku {
                let s: f64 = block[xu * kv..(xu + 1) * kv].iter().sum();
                worst = worst.max((s - mu.nodes[edge.u][xu]).abs());
            }
            for xv in 0..kv {
                let s: f64 = (0..ku).map(|xu| block[xu * kv + xv]).sum();
                worst = worst.max((s - mu.nodes[edge.v][xv]).abs());
            }
            for &m in block {
                worst = worst.max(-m);
            }
        }
        Ok(worst)
    }

    /// Residual of the node constraints alone (normalization, nonnegativity).
    pub fn node_residual(&self, nodes: &[Vec<f64>]) -> f64 {
        let mut worst: f64 = 0.0;
        for block in nodes {
            let s: f64 = block.iter().sum();
            worst = worst.max((s - 1.0).abs());
            for &m in block {
                worst = worst.max(-m);
            }
        }
        worst
    }

    pub fn check_node_blocks(&self, nodes: &[Vec<f64>]) -> Result<()> {
        if nodes.len() != self.num_nodes() {
            return Err(Error::Dimension(format!(
                "{} node blocks for {} nodes",
                nodes.len(),
                self.num_nodes()
            )));
        }
        for (v, (b, &k)) in nodes.iter().zip(&self.label_counts).enumerate() {
            if b.len() != k {
                return Err(Error::Dimension(format!(
                    "node block {v} has {} entries, expected {k}",
                    b.len()
                )));
            }
        }
        Ok(())
    }

    pub fn check_edge_blocks(&self, edges: &[Vec<f64>]) -> Result<()> {
        if edges.len() != self.num_edges() {
            return Err(Error::Dimension(format!(
                "{} edge blocks for {} edges",
                edges.len(),
                self.num_edges()
            )));
        }
        for (e, (b, t)) in edges.iter().zip(&self.pairwise).enumerate() {
            if b.len() != t.len() {
                return Err(Error::Dimension(format!(
                    "edge block {e} has {} entries, expected {}",
                    b.len(),
                    t.len()
                )));
            }
        }
        Ok(())
    }

    /// Zero messages of the right shape.
    pub fn zero_messages(&self) -> Vec<EdgeMessages> {
        self.edges
            .iter()
            .map(|e| EdgeMessages {
                from_u: vec![0.0; self.label_counts[e.u]],
                from_v: vec![0.0; self.label_counts[e.v]],
            })
            .collect()
    }

    pub fn check_messages(&self, messages: &[EdgeMessages]) -> Result<()> {
        if messages.len() != self.num_edges() {
            return Err(Error::Dimension(format!(
                "{} message pairs for {} edges",
                messages.len(),
                self.num_edges()
            )));
        }
        for (e, (m, edge)) in messages.iter().zip(&self.edges).enumerate() {
            if m.from_u.len() != self.label_counts[edge.u] || m.from_v.len() != self.label_counts[edge.v] {
                return Err(Error::Dimension(format!("messages of edge {e}")));
            }
        }
        Ok(())
    }

    /// Smallest slack of the dual constraints
    ///
    /// ```text
    /// theta_v(x) - sum_u nu_{v->u}(x) - nu_v >= 0
    /// theta_uv(x_u, x_v) + nu_{u->v}(x_u) + nu_{v->u}(x_v) - nu_uv >= 0
    /// ```
    ///
    /// A feasible dual point has a nonnegative margin.
    pub fn dual_feasibility_margin(&self, nu: &DualPoint) -> Result<f64> {
        self.check_messages(&nu.messages)?;
        if nu.node_bounds.len() != self.num_nodes() || nu.edge_bounds.len() != self.num_edges() {
            return Err(Error::Dimension("dual bound vectors".into()));
        }
        let mut margin = f64::INFINITY;
        for v in 0..self.num_nodes() {
            for x in 0..self.label_counts[v] {
                let r = self.reweighted_unary(v, x, &nu.messages);
                margin = margin.min(r - nu.node_bounds[v]);
            }
        }
        for (e, edge) in self.edges.iter().enumerate() {
            let kv = self.label_counts[edge.v];
            let m = &nu.messages[e];
            for xu in 0..self.label_counts[edge.u] {
                for xv in 0..kv {
                    let r = self.pairwise[e][xu * kv + xv] + m.from_u[xu] + m.from_v[xv];
                    margin = margin.min(r - nu.edge_bounds[e]);
                }
            }
        }
        Ok(margin)
    }

    /// `theta_v(x) - sum_{u in N(v)} nu_{v->u}(x)`.
    pub fn reweighted_unary(&self, v: usize, x: usize, messages: &[EdgeMessages]) -> f64 {
        let mut r = self.unary[v][x];
        for inc in &self.incidence[v] {
            let m = &messages[inc.edge];
            r -= if inc.is_u { m.from_u[x] } else { m.from_v[x] };
        }
        r
    }
}

pub(crate) fn grid_edges(shape: GridShape) -> Vec<Edge> {
    let mut edges = Vec::new();
    for r in 0..shape.rows {
        for c in 0..shape.cols {
            let v = shape.node(r, c);
            if c + 1 < shape.cols {
                edges.push(Edge { u: v, v: v + 1 });
            }
            if r + 1 < shape.rows {
                edges.push(Edge {
                    u: v,
                    v: v + shape.cols,
                });
            }
        }
    }
    edges.sort();
    edges
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One label per node.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Labeling(pub Vec<usize>);

impl Labeling {
    pub fn zeros(n: usize) -> Self {
        Labeling(vec![0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Relaxed primal variables. `edges` is `None` for purely dual
/// reconstructions that only produce node blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Marginals {
    pub nodes: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<Vec<f64>>>,
}

impl Marginals {
    pub fn from_nodes(nodes: Vec<Vec<f64>>) -> Self {
        Self { nodes, edges: None }
    }

    pub fn has_edge_blocks(&self) -> bool {
        self.edges.is_some()
    }

    /// Per-node argmax, ties toward the smallest label.
    pub fn round_to_labeling(&self) -> Labeling {
        Labeling(
            self.nodes
                .iter()
                .map(|b| {
                    let mut best = 0;
                    for (i, &m) in b.iter().enumerate() {
                        if m > b[best] {
                            best = i;
                        }
                    }
                    best
                })
                .collect(),
        )
    }
}

/// Messages of one edge: `from_u` is `nu_{u->v}` (indexed by `x_u`) and
/// `from_v` is `nu_{v->u}` (indexed by `x_v`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeMessages {
    pub from_u: Vec<f64>,
    pub from_v: Vec<f64>,
}

/// Point of the explicit dual LP: messages plus the lower bounds on the
/// reweighted unary and pairwise potentials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualPoint {
    pub messages: Vec<EdgeMessages>,
    pub node_bounds: Vec<f64>,
    pub edge_bounds: Vec<f64>,
}
