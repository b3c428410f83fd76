//! Accelerated gradient ascent on the smoothed decomposition dual.

use super::{
    is_epoch, DualSolution, RhoSchedule, SolverConfig, SolverKind, SolverReport, TerminationReason, Tracker,
};
use crate::decomposition::{Decomposition, Reparametrization};
use crate::dual::{dual_u, dual_u_smoothed, free_energy, SmoothedDualEval};
use crate::error::Result;
use crate::model::MrfModel;
use crate::projection::project_primal_free_energy;

/// Largest number of subgraphs sharing a node.
const SHARING: f64 = 2.0;

fn axpy(lambda: &Reparametrization, a: f64, dir: &[Vec<f64>]) -> Reparametrization {
    Reparametrization {
        lambda: lambda
            .lambda
            .iter()
            .zip(dir)
            .map(|(l, d)| l.iter().zip(d).map(|(l, d)| l + a * d).collect())
            .collect(),
    }
}

fn norm_sq(g: &[Vec<f64>]) -> f64 {
    g.iter().flatten().map(|x| x * x).sum()
}

/// `E_rho(P_{E_rho,L}(mu)) - U_rho(lambda)` for the averaged marginal map.
fn smoothed_gap(model: &MrfModel, d: &Decomposition, eval: &SmoothedDualEval, rho: f64) -> Option<f64> {
    let mu = project_primal_free_energy(model, d, &eval.mean_node_marginals(), rho).ok()?;
    let f = free_energy(model, d, &mu, rho).ok()?;
    Some(f - eval.value)
}

/// FISTA on `U_rho` starting from `lambda = 0`.
///
/// The step is `1 / L` with `L = 2 s / rho` (`s = 2` subgraphs per node)
/// doubled whenever the sufficient-ascent test fails. At each logging epoch
/// the dual bound is the nonsmooth `U(lambda)`, and the primal bound is the
/// exact projection of the averaged Gibbs node marginals. Under the
/// diminishing schedule `rho` is halved (and momentum restarted) once the
/// smoothed relative gap falls below `factor * rho`.
pub fn solve_nesterov(model: &MrfModel, d: &Decomposition, cfg: &SolverConfig) -> Result<SolverReport> {
    cfg.validate()?;
    d.require_two()?;
    let mut tracker = Tracker::new(model);
    let mut rho = cfg.rho;
    let mut lip = 2.0 * SHARING / rho;
    let mut lambda = Reparametrization::zeros(model);
    let mut y = lambda.clone();
    let mut momentum = 1.0f64;
    let mut eval = dual_u_smoothed(model, d, &lambda, rho)?;
    let mut eval_y = eval.clone();
    let mut halvings = 0;
    let mut t = 0;
    let diminishing = matches!(cfg.rho_schedule, RhoSchedule::Diminishing { .. });
    let termination = loop {
        if is_epoch(t, cfg.epoch, cfg.max_iters) {
            tracker.observe_dual(dual_u(model, d, &lambda)?.value);
            tracker.observe_primal(&eval.mean_node_marginals())?;
            let sg = if cfg.track_smoothed_gap || diminishing {
                smoothed_gap(model, d, &eval, rho)
            } else {
                None
            };
            tracker.record(t, Some(rho), sg)?;
            if tracker.converged(cfg.tolerance) {
                break TerminationReason::Converged;
            }
            if let (RhoSchedule::Diminishing { factor, min_rho }, Some(sg)) = (cfg.rho_schedule, sg) {
                if rho > min_rho && sg / eval.value.abs().max(1.0) < factor * rho {
                    rho = (0.5 * rho).max(min_rho);
                    lip *= 2.0;
                    momentum = 1.0;
                    eval = dual_u_smoothed(model, d, &lambda, rho)?;
                    y = lambda.clone();
                    eval_y = eval.clone();
                }
            }
        }
        if t == cfg.max_iters {
            break TerminationReason::MaxIterations;
        }
        if tracker.elapsed() > cfg.time_budget_s {
            if tracker.last_recorded() != Some(t) {
                tracker.observe_dual(dual_u(model, d, &lambda)?.value);
                tracker.observe_primal(&eval.mean_node_marginals())?;
                tracker.record(t, Some(rho), None)?;
            }
            break TerminationReason::TimeBudget;
        }
        let g_sq = norm_sq(&eval_y.gradient);
        let (candidate, eval_c) = loop {
            let c = axpy(&y, 1.0 / lip, &eval_y.gradient);
            let e = dual_u_smoothed(model, d, &c, rho)?;
            let slack = 1e-12 * eval_y.value.abs().max(1.0);
            if e.value >= eval_y.value + g_sq / (2.0 * lip) - slack || g_sq == 0.0 {
                break (c, e);
            }
            lip *= 2.0;
            halvings += 1;
        };
        let next = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        let beta = (momentum - 1.0) / next;
        let diff: Vec<Vec<f64>> = candidate
            .lambda
            .iter()
            .zip(&lambda.lambda)
            .map(|(c, l)| c.iter().zip(l).map(|(c, l)| c - l).collect())
            .collect();
        y = axpy(&candidate, beta, &diff);
        eval_y = if beta == 0.0 {
            eval_c.clone()
        } else {
            dual_u_smoothed(model, d, &y, rho)?
        };
        lambda = candidate;
        eval = eval_c;
        momentum = next;
        t += 1;
    };
    let notes = if diminishing {
        vec!["diminishing-smoothing NEST: rho is halved when the smoothed gap is small".into()]
    } else {
        Vec::new()
    };
    tracker.finish(
        SolverKind::Nest,
        DualSolution::Lambda(lambda),
        termination,
        t,
        halvings,
        notes,
    )
}
