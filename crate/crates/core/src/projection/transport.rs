//! Transportation simplex on the spanning-tree basis with Bland's rule.

use crate::error::{Error, Result};
use crate::tolerance;

/// `min <c, P>` over nonnegative `n x m` plans with row sums `supply` and
/// column sums `demand`. Marginals are clamped at zero within the
/// nonnegativity tolerance and rescaled to sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportProblem {
    rows: usize,
    cols: usize,
    cost: Vec<f64>,
    supply: Vec<f64>,
    demand: Vec<f64>,
}

impl TransportProblem {
    /// `cost` is row-major, `supply.len() x demand.len()`.
    pub fn new(cost: Vec<f64>, supply: &[f64], demand: &[f64]) -> Result<Self> {
        let (rows, cols) = (supply.len(), demand.len());
        if rows == 0 || cols == 0 {
            return Err(Error::Parameter(
                "transport problem needs rows and columns".into(),
            ));
        }
        if cost.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "cost has {} entries, expected {rows}x{cols}",
                cost.len()
            )));
        }
        if cost.iter().any(|c| !c.is_finite()) {
            return Err(Error::Parameter("cost has non-finite entries".into()));
        }
        Ok(Self {
            rows,
            cols,
            cost,
            supply: normalize(supply, "row")?,
            demand: normalize(demand, "column")?,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn cost(&self) -> &[f64] {
        &self.cost
    }

    pub fn supply(&self) -> &[f64] {
        &self.supply
    }

    pub fn demand(&self) -> &[f64] {
        &self.demand
    }
}

fn normalize(m: &[f64], what: &str) -> Result<Vec<f64>> {
    if m.iter().any(|x| !x.is_finite() || *x < -tolerance::NONNEGATIVITY) {
        return Err(Error::InfeasibleMarginals(format!(
            "{what} marginal has negative or non-finite entries"
        )));
    }
    let clamped: Vec<f64> = m.iter().map(|x| x.max(0.0)).collect();
    let sum: f64 = clamped.iter().sum();
    if sum <= 0.0 {
        return Err(Error::InfeasibleMarginals(format!(
            "{what} marginal sums to zero"
        )));
    }
    Ok(clamped.into_iter().map(|x| x / sum).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportSolution {
    /// Row-major optimal plan.
    pub plan: Vec<f64>,
    pub cost: f64,
    /// Dual potentials of the final basis: `alpha_i + beta_j = c_ij` on basic
    /// cells and `<= c_ij` everywhere at optimality.
    pub row_potentials: Vec<f64>,
    pub col_potentials: Vec<f64>,
    pub pivots: usize,
}

impl TransportSolution {
    /// Largest violation of the optimality certificate: dual infeasibility
    /// `alpha_i + beta_j - c_ij` over all cells, and complementary slackness
    /// `|alpha_i + beta_j - c_ij|` on the support of the plan.
    pub fn certificate_violation(&self, p: &TransportProblem) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..p.rows {
            for j in 0..p.cols {
                let k = i * p.cols + j;
                let slack = p.cost[k] - self.row_potentials[i] - self.col_potentials[j];
                worst = worst.max(-slack);
                if self.plan[k] > 0.0 {
                    worst = worst.max(slack.abs());
                }
            }
        }
        worst
    }
}

/// Upper bound on simplex pivots before the solver reports failure.
fn pivot_cap(n: usize, m: usize) -> usize {
    let cells = n * m;
    100 * cells * cells + 100
}

/// Solves the problem with the transportation simplex.
///
/// The initial basis comes from the northwest-corner rule and always holds
/// `n + m - 1` cells forming a spanning tree of the bipartite row/column
/// graph (degenerate cells carry zero flow). Each pivot computes the
/// potentials on the tree, enters the nonbasic cell of smallest row-major
/// index with negative reduced cost, and removes the decreasing cell of the
/// entering cycle with the smallest flow, ties toward the smallest index.
/// Flows are re-derived from the basis tree after every pivot, so rounding
/// does not accumulate.
pub fn solve_transport(p: &TransportProblem) -> Result<TransportSolution> {
    let (n, m) = (p.rows, p.cols);
    let mut basis = Basis::northwest(p);
    let scale = p.cost.iter().fold(1.0f64, |a, c| a.max(c.abs()));
    let tol = 1e-12 * scale;
    let cap = pivot_cap(n, m);
    let mut pivots = 0;
    loop {
        let (alpha, beta) = basis.potentials(p);
        let entering =
            (0..n * m).find(|&k| !basis.is_basic[k] && p.cost[k] - alpha[k / m] - beta[k % m] < -tol);
        let Some(enter) = entering else {
            let plan = basis.flow.clone();
            let cost = plan.iter().zip(&p.cost).map(|(x, c)| x * c).sum();
            return Ok(TransportSolution {
                plan,
                cost,
                row_potentials: alpha,
                col_potentials: beta,
                pivots,
            });
        };
        if pivots >= cap {
            return Err(Error::Numerical {
                message: format!("transportation simplex exceeded {cap} pivots"),
                residual: p.cost[enter] - alpha[enter / m] - beta[enter % m],
            });
        }
        let path = basis.tree_path(enter / m, n + enter % m);
        // cells alternate -, +, -, ... starting next to the entering row
        let mut leave = usize::MAX;
        for &k in path.iter().step_by(2) {
            if leave == usize::MAX
                || basis.flow[k] < basis.flow[leave]
                || (basis.flow[k] == basis.flow[leave] && k < leave)
            {
                leave = k;
            }
        }
        basis.is_basic[leave] = false;
        basis.is_basic[enter] = true;
        basis.cells.retain(|&k| k != leave);
        basis.cells.push(enter);
        basis.solve_flows(p);
        pivots += 1;
    }
}

struct Basis {
    rows: usize,
    cols: usize,
    cells: Vec<usize>,
    is_basic: Vec<bool>,
    flow: Vec<f64>,
}

impl Basis {
    fn northwest(p: &TransportProblem) -> Self {
        let (n, m) = (p.rows, p.cols);
        let mut cells = Vec::with_capacity(n + m - 1);
        let mut r = p.supply.clone();
        let mut s = p.demand.clone();
        let (mut i, mut j) = (0, 0);
        loop {
            cells.push(i * m + j);
            let q = r[i].min(s[j]);
            r[i] -= q;
            s[j] -= q;
            if i == n - 1 && j == m - 1 {
                break;
            }
            if i == n - 1 {
                j += 1;
            } else if j == m - 1 || r[i] <= s[j] {
                i += 1;
            } else {
                j += 1;
            }
        }
        let mut is_basic = vec![false; n * m];
        for &k in &cells {
            is_basic[k] = true;
        }
        let mut basis = Self {
            rows: n,
            cols: m,
            cells,
            is_basic,
            flow: vec![0.0; n * m],
        };
        basis.solve_flows(p);
        basis
    }

    /// Tree adjacency over vertices `0..n` (rows) and `n..n+m` (columns);
    /// each entry is `(neighbor, cell)`.
    fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let m = self.cols;
        let mut adj = vec![Vec::new(); self.rows + m];
        for &k in &self.cells {
            let (i, j) = (k / m, self.rows + k % m);
            adj[i].push((j, k));
            adj[j].push((i, k));
        }
        adj
    }

    /// Unique flows supported on the tree, by repeatedly peeling leaves.
    fn solve_flows(&mut self, p: &TransportProblem) {
        let (n, m) = (self.rows, self.cols);
        let adj = self.adjacency();
        let mut degree: Vec<usize> = adj.iter().map(Vec::len).collect();
        let mut remaining: Vec<f64> = p.supply.iter().chain(&p.demand).copied().collect();
        let mut done = vec![false; n * m];
        self.flow.iter_mut().for_each(|f| *f = 0.0);
        let mut stack: Vec<usize> = (0..n + m).filter(|&a| degree[a] == 1).collect();
        while let Some(a) = stack.pop() {
            if degree[a] != 1 {
                continue;
            }
            let Some(&(b, k)) = adj[a].iter().find(|(_, k)| !done[*k]) else {
                continue;
            };
            let q = remaining[a].max(0.0);
            self.flow[k] = q;
            done[k] = true;
            remaining[b] -= q;
            degree[a] -= 1;
            degree[b] -= 1;
            if degree[b] == 1 {
                stack.push(b);
            }
        }
    }

    /// Potentials with `alpha_0 = 0` and `alpha_i + beta_j = c_ij` on the tree.
    fn potentials(&self, p: &TransportProblem) -> (Vec<f64>, Vec<f64>) {
        let (n, m) = (self.rows, self.cols);
        let adj = self.adjacency();
        let mut pot = vec![0.0; n + m];
        let mut seen = vec![false; n + m];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(a) = stack.pop() {
            for &(b, k) in &adj[a] {
                if !seen[b] {
                    seen[b] = true;
                    pot[b] = p.cost[k] - pot[a];
                    stack.push(b);
                }
            }
        }
        let beta = pot.split_off(n);
        (pot, beta)
    }

    /// Cells on the tree path between vertices `from` and `to`, in order.
    fn tree_path(&self, from: usize, to: usize) -> Vec<usize> {
        let adj = self.adjacency();
        let mut prev: Vec<Option<(usize, usize)>> = vec![None; adj.len()];
        let mut seen = vec![false; adj.len()];
        let mut queue = std::collections::VecDeque::from([from]);
        seen[from] = true;
        while let Some(a) = queue.pop_front() {
            if a == to {
                break;
            }
            for &(b, k) in &adj[a] {
                if !seen[b] {
                    seen[b] = true;
                    prev[b] = Some((a, k));
                    queue.push_back(b);
                }
            }
        }
        let mut path = Vec::new();
        let mut at = to;
        while let Some((a, k)) = prev[at] {
            path.push(k);
            at = a;
        }
        path.reverse();
        path
    }
}
