//! Independent reference implementations used only by the tests.
#![allow(dead_code)]

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use mrf_relax::projection::TransportProblem;
use mrf_relax::{Labeling, Marginals, MrfModel};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random tree (odd seeds) or chain (even seeds) with at most 50 nodes and
/// 2..=5 labels, potentials uniform in `[-1, 1]`.
pub fn random_tree(seed: u64) -> MrfModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=50);
    let k: Vec<usize> = (0..n).map(|_| rng.gen_range(2..=5)).collect();
    let unary = k
        .iter()
        .map(|&k| (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let chain = seed % 2 == 0;
    let pairs = (1..n)
        .map(|i| {
            let j = if chain { i - 1 } else { rng.gen_range(0..i) };
            let t = (0..k[j] * k[i]).map(|_| rng.gen_range(-1.0..1.0)).collect();
            (j, i, t)
        })
        .collect();
    MrfModel::new(unary, pairs).unwrap()
}

/// Minimum energy by enumerating every labeling.
pub fn exhaustive_map(model: &MrfModel) -> (f64, Labeling) {
    let n = model.num_nodes();
    let mut x = vec![0usize; n];
    let mut best = (f64::INFINITY, Labeling(x.clone()));
    loop {
        let e = model.energy(&Labeling(x.clone())).unwrap();
        if e < best.0 {
            best = (e, Labeling(x.clone()));
        }
        let mut v = 0;
        loop {
            if v == n {
                return best;
            }
            x[v] += 1;
            if x[v] < model.labels(v) {
                break;
            }
            x[v] = 0;
            v += 1;
        }
    }
}

/// Minimum energy of a forest by eliminating leaves one at a time.
pub fn leaf_elimination(model: &MrfModel) -> f64 {
    let n = model.num_nodes();
    let mut unary: Vec<Vec<f64>> = model.unaries().to_vec();
    let mut alive_edges: Vec<bool> = vec![true; model.num_edges()];
    let mut degree: Vec<usize> = (0..n).map(|v| model.incidence(v).len()).collect();
    let mut done = vec![false; n];
    let mut total = 0.0;
    loop {
        let Some(leaf) = (0..n).find(|&v| !done[v] && degree[v] <= 1) else {
            break;
        };
        done[leaf] = true;
        let edge = (0..model.num_edges()).find(|&e| {
            let ed = model.edge(e);
            alive_edges[e] && (ed.u == leaf || ed.v == leaf)
        });
        match edge {
            None => total += unary[leaf].iter().copied().fold(f64::INFINITY, f64::min),
            Some(e) => {
                alive_edges[e] = false;
                let ed = model.edge(e);
                let (ku, kv) = (model.labels(ed.u), model.labels(ed.v));
                let t = model.pairwise(e);
                let other = if ed.u == leaf { ed.v } else { ed.u };
                degree[other] -= 1;
                let folded: Vec<f64> = (0..model.labels(other))
                    .map(|y| {
                        (0..model.labels(leaf))
                            .map(|x| {
                                let (xu, xv) = if ed.u == leaf { (x, y) } else { (y, x) };
                                debug_assert!(xu < ku && xv < kv);
                                unary[leaf][x] + t[xu * kv + xv]
                            })
                            .fold(f64::INFINITY, f64::min)
                    })
                    .collect();
                for (a, b) in unary[other].iter_mut().zip(folded) {
                    *a += b;
                }
            }
        }
    }
    assert!(done.iter().all(|d| *d), "model is not a forest");
    total
}

/// Dense LP over the local polytope constraints solved by `minilp`.
pub fn lp_oracle(model: &MrfModel) -> (f64, Marginals) {
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let nodes: Vec<Vec<_>> = (0..model.num_nodes())
        .map(|v| {
            model
                .unary(v)
                .iter()
                .map(|&c| lp.add_var(c, (0.0, f64::INFINITY)))
                .collect()
        })
        .collect();
    let edges: Vec<Vec<_>> = (0..model.num_edges())
        .map(|e| {
            model
                .pairwise(e)
                .iter()
                .map(|&c| lp.add_var(c, (0.0, f64::INFINITY)))
                .collect()
        })
        .collect();
    for block in &nodes {
        let terms: Vec<_> = block.iter().map(|&x| (x, 1.0)).collect();
        lp.add_constraint(terms.as_slice(), ComparisonOp::Eq, 1.0);
    }
    for (e, block) in edges.iter().enumerate() {
        let ed = model.edge(e);
        let (ku, kv) = (model.labels(ed.u), model.labels(ed.v));
        for xu in 0..ku {
            let mut terms: Vec<_> = (0..kv).map(|xv| (block[xu * kv + xv], 1.0)).collect();
            terms.push((nodes[ed.u][xu], -1.0));
            lp.add_constraint(terms.as_slice(), ComparisonOp::Eq, 0.0);
        }
        for xv in 0..kv {
            let mut terms: Vec<_> = (0..ku).map(|xu| (block[xu * kv + xv], 1.0)).collect();
            terms.push((nodes[ed.v][xv], -1.0));
            lp.add_constraint(terms.as_slice(), ComparisonOp::Eq, 0.0);
        }
    }
    let sol = lp.solve().expect("local polytope LP is feasible and bounded");
    let get = |b: &Vec<Vec<_>>| -> Vec<Vec<f64>> {
        b.iter()
            .map(|v| v.iter().map(|&x| *sol.var_value(x)).collect())
            .collect()
    };
    let mu = Marginals {
        nodes: get(&nodes),
        edges: Some(get(&edges)),
    };
    (sol.objective(), mu)
}

/// Cheapest basic feasible solution of a transportation problem, found by
/// enumerating every spanning tree of the row/column graph.
pub fn transport_bfs_oracle(p: &TransportProblem) -> f64 {
    let (n, m) = (p.rows(), p.cols());
    let cells = n * m;
    let need = n + m - 1;
    let mut best = f64::INFINITY;
    let mut chosen = Vec::with_capacity(need);
    fn find(parent: &mut [usize], a: usize) -> usize {
        let mut a = a;
        while parent[a] != a {
            a = parent[a];
        }
        a
    }
    fn rec(
        p: &TransportProblem,
        start: usize,
        cells: usize,
        need: usize,
        chosen: &mut Vec<usize>,
        parent: &mut Vec<usize>,
        best: &mut f64,
    ) {
        if chosen.len() == need {
            if let Some(c) = tree_cost(p, chosen) {
                *best = best.min(c);
            }
            return;
        }
        if cells - start < need - chosen.len() {
            return;
        }
        for k in start..cells {
            let (i, j) = (k / p.cols(), p.rows() + k % p.cols());
            let (ri, rj) = (find(parent, i), find(parent, j));
            if ri == rj {
                continue;
            }
            let saved = parent.clone();
            parent[ri] = rj;
            chosen.push(k);
            rec(p, k + 1, cells, need, chosen, parent, best);
            chosen.pop();
            *parent = saved;
        }
    }
    let mut parent: Vec<usize> = (0..n + m).collect();
    rec(p, 0, cells, need, &mut chosen, &mut parent, &mut best);
    best
}

/// Flows on a spanning tree by peeling leaves; `None` if some flow is
/// negative.
fn tree_cost(p: &TransportProblem, tree: &[usize]) -> Option<f64> {
    let (n, m) = (p.rows(), p.cols());
    let mut rest: Vec<f64> = p.supply().iter().chain(p.demand()).copied().collect();
    let mut used = vec![false; tree.len()];
    let mut cost = 0.0;
    for _ in 0..tree.len() {
        let mut degree = vec![0usize; n + m];
        for (t, &k) in tree.iter().enumerate() {
            if !used[t] {
                degree[k / m] += 1;
                degree[n + k % m] += 1;
            }
        }
        let (t, leaf) = tree
            .iter()
            .enumerate()
            .filter(|(t, _)| !used[*t])
            .find_map(|(t, &k)| {
                if degree[k / m] == 1 {
                    Some((t, k / m))
                } else if degree[n + k % m] == 1 {
                    Some((t, n + k % m))
                } else {
                    None
                }
            })?;
        let k = tree[t];
        let flow = rest[leaf];
        if flow < -1e-12 {
            return None;
        }
        used[t] = true;
        let other = if leaf < n { n + k % m } else { k / m };
        rest[leaf] = 0.0;
        rest[other] -= flow;
        cost += flow * p.cost()[k];
    }
    Some(cost)
}

/// Dense constraint matrix of the local polytope (node normalization and
/// both marginalization families) with its right-hand side, in the layout
/// nodes-then-edges.
pub fn dense_constraints(model: &MrfModel) -> (DMatrix<f64>, DVector<f64>) {
    let mut node_off = vec![0];
    for v in 0..model.num_nodes() {
        node_off.push(node_off[v] + model.labels(v));
    }
    let mut edge_off = vec![node_off[model.num_nodes()]];
    for e in 0..model.num_edges() {
        edge_off.push(edge_off[e] + model.pairwise(e).len());
    }
    let cols = edge_off[model.num_edges()];
    let mut rows: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
    for v in 0..model.num_nodes() {
        rows.push(((node_off[v]..node_off[v + 1]).map(|c| (c, 1.0)).collect(), 1.0));
    }
    for e in 0..model.num_edges() {
        let ed = model.edge(e);
        let (ku, kv) = (model.labels(ed.u), model.labels(ed.v));
        for xu in 0..ku {
            let mut r: Vec<_> = (0..kv).map(|xv| (edge_off[e] + xu * kv + xv, 1.0)).collect();
            r.push((node_off[ed.u] + xu, -1.0));
            rows.push((r, 0.0));
        }
        for xv in 0..kv {
            let mut r: Vec<_> = (0..ku).map(|xu| (edge_off[e] + xu * kv + xv, 1.0)).collect();
            r.push((node_off[ed.v] + xv, -1.0));
            rows.push((r, 0.0));
        }
    }
    let mut a = DMatrix::zeros(rows.len(), cols);
    let mut b = DVector::zeros(rows.len());
    for (i, (r, rhs)) in rows.into_iter().enumerate() {
        for (c, v) in r {
            a[(i, c)] = v;
        }
        b[i] = rhs;
    }
    (a, b)
}

pub fn flatten(mu: &Marginals) -> DVector<f64> {
    let edges = mu.edges.as_ref().expect("edge blocks");
    DVector::from_iterator(
        mu.nodes.iter().map(Vec::len).sum::<usize>() + edges.iter().map(Vec::len).sum::<usize>(),
        mu.nodes.iter().chain(edges).flatten().copied(),
    )
}

/// Euclidean projection onto the local polytope by Dykstra's alternating
/// projections between the affine hull and the nonnegative orthant.
pub struct Dykstra {
    a_pinv_a: DMatrix<f64>,
    a_pinv_b: DVector<f64>,
}

impl Dykstra {
    pub fn new(model: &MrfModel) -> Self {
        let (a, b) = dense_constraints(model);
        let pinv = a.clone().pseudo_inverse(1e-10).unwrap();
        Self {
            a_pinv_a: &pinv * &a,
            a_pinv_b: &pinv * &b,
        }
    }

    fn affine(&self, z: &DVector<f64>) -> DVector<f64> {
        z - &self.a_pinv_a * z + &self.a_pinv_b
    }

    /// Projection of `z`, iterated until successive iterates differ by less
    /// than `tol`.
    pub fn project(&self, z: &DVector<f64>, tol: f64, max_iters: usize) -> DVector<f64> {
        let mut x = z.clone();
        let mut p = DVector::zeros(z.len());
        let mut q = DVector::zeros(z.len());
        for _ in 0..max_iters {
            let y = self.affine(&(&x + &p));
            p = &x + &p - &y;
            let next = (&y + &q).map(|v| v.max(0.0));
            q = &y + &q - &next;
            let change = (&next - &x).norm();
            x = next;
            if change < tol {
                break;
            }
        }
        x
    }
}

/// Central finite difference of `f` at `x` along coordinate `k`.
pub fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], k: usize, h: f64) -> f64 {
    let mut a = x.to_vec();
    let mut b = x.to_vec();
    a[k] += h;
    b[k] -= h;
    (f(&a) - f(&b)) / (2.0 * h)
}

/// Random point of the local polytope: a convex combination of embedded
/// labelings.
pub fn random_feasible(model: &MrfModel, rng: &mut ChaCha8Rng, terms: usize) -> Marginals {
    let weights: Vec<f64> = (0..terms).map(|_| rng.gen::<f64>() + 1e-3).collect();
    let total: f64 = weights.iter().sum();
    let mut acc: Option<Marginals> = None;
    for w in weights {
        let x = Labeling(
            (0..model.num_nodes())
                .map(|v| rng.gen_range(0..model.labels(v)))
                .collect(),
        );
        let mu = model.embed_labeling(&x).unwrap();
        let scale = |b: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            b.iter()
                .map(|r| r.iter().map(|v| v * w / total).collect())
                .collect()
        };
        let (n, e) = (scale(&mu.nodes), scale(mu.edges.as_ref().unwrap()));
        acc = Some(match acc {
            None => Marginals {
                nodes: n,
                edges: Some(e),
            },
            Some(a) => {
                let add = |x: Vec<Vec<f64>>, y: Vec<Vec<f64>>| -> Vec<Vec<f64>> {
                    x.into_iter()
                        .zip(y)
                        .map(|(r, s)| r.into_iter().zip(s).map(|(a, b)| a + b).collect())
                        .collect()
                };
                Marginals {
                    nodes: add(a.nodes, n),
                    edges: Some(add(a.edges.unwrap(), e)),
                }
            }
        });
    }
    acc.unwrap()
}
