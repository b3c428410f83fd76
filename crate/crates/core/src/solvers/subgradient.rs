//! Subgradient ascent on the decomposition dual with averaged primal
//! reconstruction.

use serde::{Deserialize, Serialize};

use super::{
    is_epoch, step_size, DualSolution, SolverConfig, SolverKind, SolverReport, StepLaw, StepState,
    TerminationReason, Tracker,
};
use crate::decomposition::{Decomposition, Reparametrization};
use crate::dual::{dual_u, PrimalAverager};
use crate::error::Result;
use crate::model::MrfModel;

/// Weights of the minimizer average.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Averaging {
    Uniform,
    StepWeighted,
}

/// Consecutive decreases of the dual value treated as divergence.
pub const DIVERGENCE_WINDOW: usize = 200;

/// `lambda^{t+1} = lambda^t + tau^t g^t` with `g^t` the subgradient of
/// `U`. The primal node blocks are the (weighted) average of the subproblem
/// minimizers; at every logging epoch they are projected for the primal
/// bound. A zero subgradient means both subproblems agree on one labeling,
/// which is then optimal and ends the run.
pub fn solve_subgradient(
    model: &MrfModel,
    decomposition: &Decomposition,
    cfg: &SolverConfig,
    averaging: Averaging,
) -> Result<SolverReport> {
    cfg.validate()?;
    decomposition.require_two()?;
    let kind = match averaging {
        Averaging::Uniform => SolverKind::SgAve,
        Averaging::StepWeighted => SolverKind::SgWei,
    };
    let mut notes = Vec::new();
    if matches!(cfg.step_law, StepLaw::Adaptive { .. }) {
        notes.push("adaptive step law is a gap-over-norm surrogate clipped to a diminishing envelope".into());
    }
    let mut tracker = Tracker::new(model);
    let mut lambda = Reparametrization::zeros(model);
    let mut avg = PrimalAverager::new(model);
    let mut previous = f64::NEG_INFINITY;
    let mut decreases = 0;
    let mut t = 0;
    let termination = loop {
        let eval = dual_u(model, decomposition, &lambda)?;
        tracker.observe_dual(eval.value);
        let state = StepState {
            best_primal: tracker.best_primal,
            dual: eval.value,
            subgradient_norm_sq: eval.subgradient_norm_sq(),
        };
        let Some(tau) = step_size(&cfg.step_law, t, &state) else {
            let mu = model.embed_labeling(&eval.argmins[0])?;
            tracker.observe_primal(&mu.nodes)?;
            tracker.record(t, None, None)?;
            break TerminationReason::ZeroSubgradient;
        };
        let weight = match averaging {
            Averaging::Uniform => 1.0,
            Averaging::StepWeighted => tau,
        };
        avg.push(&eval.argmins, weight)?;
        if is_epoch(t, cfg.epoch, cfg.max_iters) {
            tracker.observe_primal(&avg.mean()?)?;
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
                tracker.observe_primal(&avg.mean()?)?;
                tracker.record(t, None, None)?;
            }
            break TerminationReason::TimeBudget;
        }
        decreases = if eval.value < previous { decreases + 1 } else { 0 };
        previous = eval.value;
        if decreases >= DIVERGENCE_WINDOW {
            if tracker.last_recorded() != Some(t) {
                tracker.observe_primal(&avg.mean()?)?;
                tracker.record(t, None, None)?;
            }
            break TerminationReason::NumericalFailure(format!(
                "dual value decreased for {DIVERGENCE_WINDOW} consecutive iterations"
            ));
        }
        for (l, g) in lambda.lambda.iter_mut().zip(&eval.subgradient) {
            for (l, g) in l.iter_mut().zip(g) {
                *l += tau * g;
            }
        }
        t += 1;
    };
    tracker.finish(kind, DualSolution::Lambda(lambda), termination, t, 0, notes)
}
