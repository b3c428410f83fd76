//! Entropy-regularized transport by iterative proportional fitting with
//! Newton acceleration.

use nalgebra::{DMatrix, DVector};

use super::transport::TransportProblem;
use crate::error::{Error, Result};

/// Largest change of a potential in one Newton step, in units of the
/// temperature.
const MAX_LOG_STEP: f64 = 30.0;

/// Floor applied to reference entries before taking logarithms.
pub const REF_FLOOR: f64 = 1e-300;

/// Target residual of the marginal constraints.
pub const MARGINAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct EntropicSolution {
    pub plan: Vec<f64>,
    /// `<c, plan> + rho N sum plan log(plan / (ref_u ref_v))`.
    pub objective: f64,
    pub iterations: usize,
    /// Largest row-sum violation at exit (columns are matched exactly by the
    /// last half-step).
    pub residual: f64,
}

/// Minimizes `<c, mu> + rho N KL(mu || ref_u ref_v^T)` over plans with the
/// problem's marginals.
///
/// The minimizer has the form `mu_ij = ref_u_i ref_v_j exp((f_i + g_j -
/// c_ij) / (rho N))`; the potentials `f`, `g` are fitted by alternating
/// row and column scaling in the log domain. Plain scaling slows to a crawl
/// when the kernel is badly conditioned, so every sweep after the first is
/// preceded by a damped Newton step on the (concave, smooth) dual of the
/// problem. The temperature `rho N` is approached from above by halving,
/// warm-starting each stage from the previous potentials.
/// Rows and columns with zero marginal get an all-zero plan directly.
pub fn solve_transport_entropic(
    p: &TransportProblem,
    rho: f64,
    edge_count: usize,
    ref_u: &[f64],
    ref_v: &[f64],
) -> Result<EntropicSolution> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::Parameter(format!("smoothing {rho} must be positive")));
    }
    if edge_count == 0 {
        return Err(Error::Parameter("edge count must be positive".into()));
    }
    let (n, m) = (p.rows(), p.cols());
    if ref_u.len() != n || ref_v.len() != m {
        return Err(Error::Dimension("reference marginals".into()));
    }
    if ref_u.iter().chain(ref_v).any(|x| !(*x >= 0.0) || !x.is_finite()) {
        return Err(Error::Parameter("reference marginals must be nonnegative".into()));
    }
    let eps = rho * edge_count as f64;
    let mut fit = Fit::new(p, ref_u, ref_v);

    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &i in &fit.rows {
        for &j in &fit.cols {
            lo = lo.min(p.cost()[i * m + j]);
            hi = hi.max(p.cost()[i * m + j]);
        }
    }
    let spread = hi - lo;
    let mut stage_eps = if spread > eps { spread } else { eps };

    let cap = iteration_cap(n, m);
    let mut iterations = 0;
    loop {
        let last = stage_eps <= eps;
        let tol = if last { MARGINAL_TOL } else { 1e-6 };
        let mut it = 0;
        let mut residual = fit.residual(stage_eps);
        while residual >= tol && it < cap {
            if it > 0 {
                fit.newton_step(stage_eps);
            }
            fit.sweep(stage_eps);
            residual = fit.residual(stage_eps);
            it += 1;
        }
        iterations += it;
        if last {
            if residual >= MARGINAL_TOL {
                return Err(Error::Numerical {
                    message: format!("proportional fitting did not converge in {it} iterations"),
                    residual,
                });
            }
            let (plan, objective) = fit.plan(eps);
            return Ok(EntropicSolution {
                plan,
                objective,
                iterations,
                residual,
            });
        }
        stage_eps = (0.5 * stage_eps).max(eps);
    }
}

/// Log-domain potentials of the scaling form, restricted to rows and
/// columns with positive marginal.
struct Fit<'a> {
    p: &'a TransportProblem,
    rows: Vec<usize>,
    cols: Vec<usize>,
    la: Vec<f64>,
    lb: Vec<f64>,
    lr: Vec<f64>,
    ls: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
    buf: Vec<f64>,
}

impl<'a> Fit<'a> {
    fn new(p: &'a TransportProblem, ref_u: &[f64], ref_v: &[f64]) -> Self {
        let (n, m) = (p.rows(), p.cols());
        Self {
            p,
            rows: (0..n).filter(|&i| p.supply()[i] > 0.0).collect(),
            cols: (0..m).filter(|&j| p.demand()[j] > 0.0).collect(),
            la: ref_u.iter().map(|x| x.max(REF_FLOOR).ln()).collect(),
            lb: ref_v.iter().map(|x| x.max(REF_FLOOR).ln()).collect(),
            lr: p.supply().iter().map(|x| x.ln()).collect(),
            ls: p.demand().iter().map(|x| x.ln()).collect(),
            f: vec![0.0; n],
            g: vec![0.0; m],
            buf: Vec::with_capacity(n.max(m)),
        }
    }

    #[inline]
    fn log_entry(&self, i: usize, j: usize, eps: f64) -> f64 {
        let c = self.p.cost()[i * self.p.cols() + j];
        self.la[i] + self.lb[j] + (self.f[i] + self.g[j] - c) / eps
    }

    /// Row scaling followed by column scaling; columns match exactly
    /// afterwards.
    fn sweep(&mut self, eps: f64) {
        let m = self.p.cols();
        let cost = self.p.cost();
        for &i in &self.rows {
            self.buf.clear();
            self.buf.extend(
                self.cols
                    .iter()
                    .map(|&j| self.lb[j] + (self.g[j] - cost[i * m + j]) / eps),
            );
            self.f[i] = eps * (self.lr[i] - self.la[i] - log_sum_exp(&self.buf));
        }
        for &j in &self.cols {
            self.buf.clear();
            self.buf.extend(
                self.rows
                    .iter()
                    .map(|&i| self.la[i] + (self.f[i] - cost[i * m + j]) / eps),
            );
            self.g[j] = eps * (self.ls[j] - self.lb[j] - log_sum_exp(&self.buf));
        }
    }

    /// Largest violation of either marginal.
    fn residual(&self, eps: f64) -> f64 {
        let mut worst = 0.0f64;
        for &i in &self.rows {
            let s: f64 = self.cols.iter().map(|&j| self.log_entry(i, j, eps).exp()).sum();
            worst = worst.max((s - self.p.supply()[i]).abs());
        }
        for &j in &self.cols {
            let s: f64 = self.rows.iter().map(|&i| self.log_entry(i, j, eps).exp()).sum();
            worst = worst.max((s - self.p.demand()[j]).abs());
        }
        worst
    }

    /// Concave dual `<r, f> + <s, g> - eps sum_ij mu_ij(f, g)`.
    fn dual(&self, eps: f64) -> f64 {
        let mut v = 0.0;
        for &i in &self.rows {
            v += self.p.supply()[i] * self.f[i];
            for &j in &self.cols {
                v -= eps * self.log_entry(i, j, eps).exp();
            }
        }
        for &j in &self.cols {
            v += self.p.demand()[j] * self.g[j];
        }
        v
    }

    /// Damped Newton step on the dual with the last column potential held
    /// fixed (the dual is invariant under `f + t, g - t`). Left untouched
    /// when the system is singular or no ascent is found.
    fn newton_step(&mut self, eps: f64) {
        let (nr, nc) = (self.rows.len(), self.cols.len());
        if nc < 1 || nr < 1 {
            return;
        }
        let dim = nr + nc - 1;
        let mut h = DMatrix::<f64>::zeros(dim, dim);
        let mut grad = DVector::<f64>::zeros(dim);
        for (a, &i) in self.rows.iter().enumerate() {
            grad[a] += self.p.supply()[i];
        }
        for (b, &j) in self.cols.iter().enumerate().take(nc - 1) {
            grad[nr + b] += self.p.demand()[j];
        }
        for (a, &i) in self.rows.iter().enumerate() {
            for (b, &j) in self.cols.iter().enumerate() {
                let mu = self.log_entry(i, j, eps).exp();
                grad[a] -= mu;
                h[(a, a)] += mu;
                if b + 1 < nc {
                    grad[nr + b] -= mu;
                    h[(nr + b, nr + b)] += mu;
                    h[(a, nr + b)] += mu;
                    h[(nr + b, a)] += mu;
                }
            }
        }
        let shift = 1e-3 * grad.amax();
        for k in 0..dim {
            h[(k, k)] += shift;
        }
        let Some(chol) = h.cholesky() else { return };
        let mut dir = chol.solve(&grad) * eps;
        let longest = dir.amax() / eps;
        if longest > MAX_LOG_STEP {
            dir *= MAX_LOG_STEP / longest;
        }
        let slope = grad.dot(&dir);
        if !(slope > 0.0) || dir.iter().any(|x| !x.is_finite()) {
            return;
        }
        let (f0, g0) = (self.f.clone(), self.g.clone());
        let base = self.dual(eps);
        let base_residual = self.residual(eps);
        let mut step = 1.0;
        for _ in 0..30 {
            for (a, &i) in self.rows.iter().enumerate() {
                self.f[i] = f0[i] + step * dir[a];
            }
            for (b, &j) in self.cols.iter().enumerate().take(nc - 1) {
                self.g[j] = g0[j] + step * dir[nr + b];
            }
            let v = self.dual(eps);
            if v.is_finite() && v >= base + 1e-4 * step * slope {
                return;
            }
            // Near the optimum the dual gain drowns in rounding; fall back to
            // the marginal violation as merit.
            if v.is_finite()
                && v >= base - 1e-12 * base.abs().max(1.0)
                && self.residual(eps) < (1.0 - 1e-4 * step) * base_residual
            {
                return;
            }
            step *= 0.5;
        }
        self.f = f0;
        self.g = g0;
    }

    /// Plan and objective `<c, mu> + eps KL(mu || ref)` at temperature `eps`.
    fn plan(&self, eps: f64) -> (Vec<f64>, f64) {
        let m = self.p.cols();
        let mut plan = vec![0.0; self.p.rows() * m];
        let mut objective = 0.0;
        for &i in &self.rows {
            for &j in &self.cols {
                let k = i * m + j;
                let log_mu = self.log_entry(i, j, eps);
                let mu = log_mu.exp();
                plan[k] = mu;
                if mu > 0.0 {
                    objective += self.p.cost()[k] * mu + eps * mu * (log_mu - self.la[i] - self.lb[j]);
                }
            }
        }
        (plan, objective)
    }
}

/// `10 n m log(1 / tol)` iterations per temperature stage.
fn iteration_cap(n: usize, m: usize) -> usize {
    (10.0 * (n * m) as f64 * (1.0 / MARGINAL_TOL).ln()).ceil() as usize
}

pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projection::transport::solve_transport;

    fn problem(c: &[f64], r: &[f64], s: &[f64]) -> TransportProblem {
        TransportProblem::new(c.to_vec(), r, s).unwrap()
    }

    #[test]
    fn zero_cost_gives_product_plan() {
        let p = problem(&[0.0; 9], &[1.0 / 3.0; 3], &[1.0 / 3.0; 3]);
        let sol = solve_transport_entropic(&p, 1.0, 1, &[1.0 / 3.0; 3], &[1.0 / 3.0; 3]).unwrap();
        for &x in &sol.plan {
            assert!((x - 1.0 / 9.0).abs() < 1e-12);
        }
        assert!(sol.objective.abs() < 1e-12);
    }

    #[test]
    fn large_temperature_approaches_product() {
        let r = [0.2, 0.8];
        let s = [0.6, 0.4];
        let p = problem(&[0.0, 3.0, 1.0, -2.0], &r, &s);
        let sol = solve_transport_entropic(&p, 1e6, 1, &r, &s).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((sol.plan[i * 2 + j] - r[i] * s[j]).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn plans_are_positive_with_positive_marginals() {
        let r = [0.1, 0.3, 0.6];
        let s = [0.5, 0.5];
        let p = problem(&[4.0, -1.0, 0.0, 2.0, 7.0, 1.0], &r, &s);
        let sol = solve_transport_entropic(&p, 0.2, 1, &r, &s).unwrap();
        assert!(sol.plan.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn zero_rows_stay_zero() {
        let r = [0.0, 1.0];
        let s = [0.5, 0.5];
        let p = problem(&[0.0, 1.0, 2.0, 3.0], &r, &s);
        let sol = solve_transport_entropic(&p, 0.5, 1, &r, &s).unwrap();
        assert_eq!(&sol.plan[..2], &[0.0, 0.0]);
        assert!((sol.plan[2] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn tiny_temperature_recovers_transport_plan() {
        let r = [0.3, 0.7];
        let s = [0.45, 0.55];
        let c = [0.2, 1.1, 0.9, 0.4];
        let p = problem(&c, &r, &s);
        let exact = solve_transport(&p).unwrap();
        let sol = solve_transport_entropic(&p, 1e-6, 1, &r, &s).unwrap();
        let cost: f64 = sol.plan.iter().zip(&c).map(|(x, c)| x * c).sum();
        assert!((cost - exact.cost).abs() < 1e-6);
    }

    #[test]
    fn invalid_rho_is_rejected() {
        let p = problem(&[0.0], &[1.0], &[1.0]);
        assert!(solve_transport_entropic(&p, 0.0, 1, &[1.0], &[1.0]).is_err());
        assert!(solve_transport_entropic(&p, -1.0, 1, &[1.0], &[1.0]).is_err());
    }

    #[test]
    fn log_sum_exp_is_stable() {
        assert!((log_sum_exp(&[1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
    }
}
