//! Covers of the master graph by acyclic subgraphs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::MrfModel;

/// Rooted traversal of one spanning forest over all nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestPlan {
    /// Nodes in breadth-first order; every parent precedes its children.
    pub order: Vec<usize>,
    /// Parent link of each node: `(parent, edge, node_is_u)`.
    pub parent: Vec<Option<ParentLink>>,
    /// Edge indices of the subgraph, sorted.
    pub edges: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParentLink {
    pub parent: usize,
    pub edge: usize,
    /// `true` when the child is the `u` endpoint of `edge`.
    pub child_is_u: bool,
}

impl ForestPlan {
    /// Builds the traversal, failing if the edges contain a cycle.
    pub fn new(model: &MrfModel, edges: &[usize]) -> Result<Self> {
        let n = model.num_nodes();
        let mut edges = edges.to_vec();
        edges.sort_unstable();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut uf = UnionFind::new(n);
        for &e in &edges {
            if e >= model.num_edges() {
                return Err(Error::Structure(format!("edge index {e} out of range")));
            }
            let edge = model.edge(e);
            if !uf.union(edge.u, edge.v) {
                return Err(Error::Structure(format!(
                    "subgraph contains a cycle through edge ({}, {})",
                    edge.u, edge.v
                )));
            }
            adj[edge.u].push(e);
            adj[edge.v].push(e);
        }
        let mut parent = vec![None; n];
        let mut seen = vec![false; n];
        let mut order = Vec::with_capacity(n);
        for root in 0..n {
            if seen[root] {
                continue;
            }
            seen[root] = true;
            let start = order.len();
            order.push(root);
            let mut head = start;
            while head < order.len() {
                let p = order[head];
                head += 1;
                for &e in &adj[p] {
                    let edge = model.edge(e);
                    let (child, child_is_u) = if edge.u == p {
                        (edge.v, false)
                    } else {
                        (edge.u, true)
                    };
                    if !seen[child] {
                        seen[child] = true;
                        parent[child] = Some(ParentLink {
                            parent: p,
                            edge: e,
                            child_is_u,
                        });
                        order.push(child);
                    }
                }
            }
        }
        Ok(Self { order, parent, edges })
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut a: usize) -> usize {
        while self.parent[a] != a {
            self.parent[a] = self.parent[self.parent[a]];
            a = self.parent[a];
        }
        a
    }

    /// Returns `false` if `a` and `b` were already connected.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

/// Edge-disjoint cover of the graph by spanning forests. Every subgraph
/// contains all nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    forests: Vec<ForestPlan>,
    node_counts: Vec<usize>,
    edge_counts: Vec<usize>,
}

impl Decomposition {
    /// Validates that the edge sets partition `E` and that each is acyclic.
    pub fn new(model: &MrfModel, subgraphs: Vec<Vec<usize>>) -> Result<Self> {
        if subgraphs.is_empty() {
            return Err(Error::Structure("decomposition has no subgraphs".into()));
        }
        let mut edge_counts = vec![0usize; model.num_edges()];
        for sg in &subgraphs {
            for &e in sg {
                if e >= model.num_edges() {
                    return Err(Error::Structure(format!("edge index {e} out of range")));
                }
                edge_counts[e] += 1;
            }
        }
        if let Some(e) = edge_counts.iter().position(|&c| c != 1) {
            return Err(Error::Structure(format!(
                "edge {e} is covered {} times; subgraph edge sets must partition the edges",
                edge_counts[e]
            )));
        }
        let forests = subgraphs
            .iter()
            .map(|sg| ForestPlan::new(model, sg))
            .collect::<Result<Vec<_>>>()?;
        let node_counts = vec![forests.len(); model.num_nodes()];
        Ok(Self {
            forests,
            node_counts,
            edge_counts,
        })
    }

    /// Builds the decomposition from a color per edge (`colors[e]` is the
    /// subgraph of edge `e`).
    pub fn from_edge_coloring(model: &MrfModel, colors: &[usize], count: usize) -> Result<Self> {
        if colors.len() != model.num_edges() {
            return Err(Error::Dimension(format!(
                "{} colors for {} edges",
                colors.len(),
                model.num_edges()
            )));
        }
        let mut subgraphs = vec![Vec::new(); count];
        for (e, &c) in colors.iter().enumerate() {
            if c >= count {
                return Err(Error::Structure(format!("edge {e} has color {c} >= {count}")));
            }
            subgraphs[c].push(e);
        }
        Self::new(model, subgraphs)
    }

    /// Two-forest decomposition of an acyclic graph: every edge in the first
    /// subgraph, the second holds only the nodes.
    pub fn for_forest(model: &MrfModel) -> Result<Self> {
        Self::new(model, vec![(0..model.num_edges()).collect(), Vec::new()])
    }

    pub fn num_subgraphs(&self) -> usize {
        self.forests.len()
    }

    pub fn forest(&self, i: usize) -> &ForestPlan {
        &self.forests[i]
    }

    pub fn forests(&self) -> &[ForestPlan] {
        &self.forests
    }

    pub fn subgraph_edges(&self, i: usize) -> &[usize] {
        &self.forests[i].edges
    }

    /// `N_v`: number of subgraphs containing node `v`.
    pub fn node_count(&self, v: usize) -> usize {
        self.node_counts[v]
    }

    /// `N_uv`: number of subgraphs containing edge `e`.
    pub fn edge_count(&self, e: usize) -> usize {
        self.edge_counts[e]
    }

    pub fn require_two(&self) -> Result<()> {
        if self.forests.len() != 2 {
            return Err(Error::Unsupported(format!(
                "dual decomposition objectives need exactly two subgraphs, got {}",
                self.forests.len()
            )));
        }
        Ok(())
    }
}

/// Horizontal edges in the first subgraph, vertical edges in the second.
pub fn decompose_grid(model: &MrfModel) -> Result<Decomposition> {
    let shape = model
        .grid()
        .ok_or_else(|| Error::Unsupported("model carries no grid layout; supply an edge coloring".into()))?;
    let colors: Vec<usize> = model
        .edges()
        .iter()
        .map(|e| usize::from(e.v - e.u == shape.cols))
        .collect();
    Decomposition::from_edge_coloring(model, &colors, 2)
}

/// Split of the unary potentials between the two subgraphs:
/// `theta^1_v = theta_v / 2 + lambda_v`, `theta^2_v = theta_v / 2 - lambda_v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reparametrization {
    pub lambda: Vec<Vec<f64>>,
}

impl Reparametrization {
    pub fn zeros(model: &MrfModel) -> Self {
        Self {
            lambda: model.label_counts().iter().map(|&k| vec![0.0; k]).collect(),
        }
    }

    pub fn check(&self, model: &MrfModel) -> Result<()> {
        model.check_node_blocks(&self.lambda)
    }

    /// Unary potentials of both subproblems.
    pub fn subproblem_unaries(&self, model: &MrfModel) -> [Vec<Vec<f64>>; 2] {
        let mut first = Vec::with_capacity(model.num_nodes());
        let mut second = Vec::with_capacity(model.num_nodes());
        for (t, l) in model.unaries().iter().zip(&self.lambda) {
            first.push(t.iter().zip(l).map(|(t, l)| 0.5 * t + l).collect());
            second.push(t.iter().zip(l).map(|(t, l)| 0.5 * t - l).collect());
        }
        [first, second]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate_grid, PotentialLaw};

    #[test]
    fn two_by_two_grid_splits_evenly() {
        let m = generate_grid(2, 2, 2, PotentialLaw::Uniform01, 0).unwrap();
        let d = decompose_grid(&m).unwrap();
        assert_eq!(d.subgraph_edges(0).len(), 2);
        assert_eq!(d.subgraph_edges(1).len(), 2);
        for e in d.subgraph_edges(0) {
            let edge = m.edge(*e);
            assert_eq!(edge.v, edge.u + 1);
        }
    }

    #[test]
    fn row_chain_leaves_second_subgraph_empty() {
        let m = generate_grid(1, 6, 2, PotentialLaw::Uniform01, 0).unwrap();
        let d = decompose_grid(&m).unwrap();
        assert_eq!(d.subgraph_edges(0).len(), 5);
        assert!(d.subgraph_edges(1).is_empty());
        assert_eq!(d.forest(1).order.len(), 6);
    }

    #[test]
    fn column_chain_goes_to_second_subgraph() {
        let m = generate_grid(6, 1, 2, PotentialLaw::Uniform01, 0).unwrap();
        let d = decompose_grid(&m).unwrap();
        assert!(d.subgraph_edges(0).is_empty());
        assert_eq!(d.subgraph_edges(1).len(), 5);
    }

    #[test]
    fn grid_counts() {
        let m = generate_grid(4, 5, 2, PotentialLaw::Uniform01, 0).unwrap();
        let d = decompose_grid(&m).unwrap();
        assert!((0..m.num_nodes()).all(|v| d.node_count(v) == 2));
        assert!((0..m.num_edges()).all(|e| d.edge_count(e) == 1));
    }

    #[test]
    fn non_grid_needs_coloring() {
        let m = MrfModel::new(vec![vec![0.0]; 3], vec![(0, 1, vec![0.0])]).unwrap();
        assert!(matches!(decompose_grid(&m), Err(Error::Unsupported(_))));
    }

    #[test]
    fn cycle_is_rejected() {
        let m = generate_grid(2, 2, 1, PotentialLaw::Uniform01, 0).unwrap();
        let err = Decomposition::new(&m, vec![(0..4).collect(), vec![]]).unwrap_err();
        assert!(matches!(err, Error::Structure(_)));
    }

    #[test]
    fn overlapping_cover_is_rejected() {
        let m = generate_grid(1, 3, 1, PotentialLaw::Uniform01, 0).unwrap();
        assert!(Decomposition::new(&m, vec![vec![0, 1], vec![1]]).is_err());
        assert!(Decomposition::new(&m, vec![vec![0], vec![]]).is_err());
    }

    #[test]
    fn forest_plan_parents_precede_children() {
        let m = generate_grid(3, 4, 1, PotentialLaw::Uniform01, 0).unwrap();
        let d = decompose_grid(&m).unwrap();
        for f in d.forests() {
            let mut pos = vec![0; m.num_nodes()];
            for (i, &v) in f.order.iter().enumerate() {
                pos[v] = i;
            }
            for v in 0..m.num_nodes() {
                if let Some(link) = f.parent[v] {
                    assert!(pos[link.parent] < pos[v]);
                }
            }
        }
    }

    #[test]
    fn reparametrization_sums_back() {
        let m = generate_grid(2, 3, 3, PotentialLaw::UniformSym(4.0), 1).unwrap();
        let mut r = Reparametrization::zeros(&m);
        for (v, l) in r.lambda.iter_mut().enumerate() {
            for (x, y) in l.iter_mut().enumerate() {
                *y = (v as f64 * 0.37 - x as f64 * 1.3).sin();
            }
        }
        let [a, b] = r.subproblem_unaries(&m);
        for v in 0..m.num_nodes() {
            for x in 0..3 {
                let t = m.unary(v)[x];
                assert!((a[v][x] + b[v][x] - t).abs() <= 1e-15 * (1.0 + t.abs()) * 4.0);
            }
        }
    }
}
