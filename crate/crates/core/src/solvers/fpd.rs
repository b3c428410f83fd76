//! First-order primal-dual iteration on the Lagrangian of the local polytope
//! LP.

use super::operator::LocalPolytopeOperator;
use super::{is_epoch, DualSolution, SolverConfig, SolverKind, SolverReport, TerminationReason, Tracker};
use crate::error::Result;
use crate::model::MrfModel;
use crate::projection::{dual_value, project_dual};

/// Power iterations for the norm of `A`.
pub const POWER_ITERATIONS: usize = 50;

/// Growth of the iterate increment, relative to the smallest seen, that
/// triggers a step reduction.
const DIVERGENCE_FACTOR: f64 = 1e3;

/// Saddle point iteration for `min_{mu >= 0} max_nu <theta, mu> + <nu, b - A mu>`:
///
/// ```text
/// mu+   = max(0, mu - tau (theta - A^T nu))
/// nu+   = nu + sigma (b - A (2 mu+ - mu))
/// ```
///
/// with `sigma = tau = 0.99 / |A|`. At logging epochs the node blocks of `mu`
/// are projected for the primal bound and the messages in `nu` are
/// completed by the dual projection for the dual bound. If the increments
/// blow up the steps are halved, the last step is undone, and the report
/// counts the reduction.
pub fn solve_fpd(model: &MrfModel, cfg: &SolverConfig) -> Result<SolverReport> {
    cfg.validate()?;
    let op = LocalPolytopeOperator::new(model);
    let theta = op.cost();
    let b = op.rhs();
    let norm = op
        .norm_estimate(POWER_ITERATIONS, cfg.seed)
        .max(f64::MIN_POSITIVE);
    let mut tau = 0.99 / norm;
    let mut sigma = 0.99 / norm;
    let mut mu = vec![0.0; op.cols()];
    let mut nu = vec![0.0; op.rows()];
    let mut mu_next = vec![0.0; op.cols()];
    let mut atv = vec![0.0; op.cols()];
    let mut bar = vec![0.0; op.cols()];
    let mut abar = vec![0.0; op.rows()];
    let mut smallest_step = f64::INFINITY;
    let mut halvings = 0;
    let mut tracker = Tracker::new(model);
    let mut t = 0;
    let termination = loop {
        if is_epoch(t, cfg.epoch, cfg.max_iters) {
            let dual = project_dual(model, &op.messages(&nu))?;
            tracker.observe_dual(dual_value(&dual));
            tracker.observe_primal(&op.node_blocks(&mu))?;
            tracker.record(t, None, None)?;
            if tracker.converged(cfg.tolerance) {
                break TerminationReason::Converged;
            }
        }
        if t == cfg.max_iters {
            break TerminationReason::MaxIterations;
        }
        if tracker.elapsed() > cfg.time_budget_s {
            if tracker.last_recorded() != Some(t) {
                let dual = project_dual(model, &op.messages(&nu))?;
                tracker.observe_dual(dual_value(&dual));
                tracker.observe_primal(&op.node_blocks(&mu))?;
                tracker.record(t, None, None)?;
            }
            break TerminationReason::TimeBudget;
        }
        op.apply_transpose(&nu, &mut atv);
        for i in 0..mu.len() {
            mu_next[i] = (mu[i] - tau * (theta[i] - atv[i])).max(0.0);
            bar[i] = 2.0 * mu_next[i] - mu[i];
        }
        op.apply(&bar, &mut abar);
        let mut step = 0.0;
        for i in 0..mu.len() {
            let d = mu_next[i] - mu[i];
            step += d * d;
        }
        let mut dual_step = 0.0;
        for j in 0..nu.len() {
            let d = sigma * (b[j] - abar[j]);
            dual_step += d * d;
        }
        let step = (step + dual_step).sqrt();
        if !step.is_finite()
            || (smallest_step > 0.0 && step > DIVERGENCE_FACTOR * smallest_step && smallest_step.is_finite())
        {
            tau *= 0.5;
            sigma *= 0.5;
            halvings += 1;
            smallest_step = f64::INFINITY;
            continue;
        }
        smallest_step = smallest_step.min(step);
        for j in 0..nu.len() {
            nu[j] += sigma * (b[j] - abar[j]);
        }
        std::mem::swap(&mut mu, &mut mu_next);
        t += 1;
    };
    let dual = project_dual(model, &op.messages(&nu))?;
    let mut notes = vec![format!("power-iteration estimate of |A|: {norm}")];
    if halvings > 0 {
        notes.push(format!("divergence monitor halved the steps {halvings} times"));
    }
    tracker.finish(
        SolverKind::Fpd,
        DualSolution::Point(dual),
        termination,
        t,
        halvings,
        notes,
    )
}
