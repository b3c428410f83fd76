use std::path::PathBuf;

use anyhow::{anyhow, Result};
use clap::Args;
use mrf_relax::solvers::{solve, SolverKind, SolverReport, TerminationReason};
use mrf_relax::tolerance;
use mrf_relax::{Error, MrfModel};

use crate::files::{create_dir, decomposition, load_model, write_report};
use crate::options::SolverArgs;
use crate::Status;

#[derive(Args, Debug)]
pub struct SolveArgs {
    /// Model in UAI format.
    #[arg(long)]
    model: PathBuf,
    /// `sg-ave`, `sg-wei`, `nest` or `fpd`.
    #[arg(long)]
    solver: SolverKind,
    #[command(flatten)]
    solver_args: SolverArgs,
    /// Directory for the outputs; created if missing.
    #[arg(long)]
    out_dir: PathBuf,
    /// Also write the edge blocks of the marginals.
    #[arg(long)]
    emit_edge_marginals: bool,
}

/// Runs `kind` and refuses reports whose marginals left the local polytope.
pub fn run_solver(kind: SolverKind, model: &MrfModel, args: &SolverArgs) -> Result<SolverReport> {
    let d = decomposition(model);
    if kind.needs_decomposition() && d.is_none() {
        return Err(anyhow!(
            "solver {kind} needs a grid or a forest; use --solver fpd for other graphs"
        ));
    }
    let report = solve(kind, model, d.as_ref(), &args.config())?;
    let residual = model.constraint_residual(&report.marginals)?;
    if residual > tolerance::EQUALITY {
        return Err(Error::Numerical {
            message: format!("{kind} returned infeasible marginals"),
            residual,
        }
        .into());
    }
    Ok(report)
}

pub fn run(args: &SolveArgs) -> Result<Status> {
    args.solver_args.install_threads()?;
    let model = load_model(&args.model)?;
    let report = run_solver(args.solver, &model, &args.solver_args)?;
    let dir = create_dir(&args.out_dir)?;
    write_report(
        &dir,
        &report,
        &args.solver_args.config(),
        args.emit_edge_marginals,
    )?;
    let last = report.last();
    println!(
        "{}: {} after {} iterations, dual {} primal {} gap {:e}",
        report.solver,
        termination_label(&report.termination),
        report.iterations,
        last.dual_bound,
        last.primal_bound,
        last.gap
    );
    Ok(match report.termination {
        TerminationReason::NumericalFailure(_) => Status::NumericalFailure,
        _ => Status::Ok,
    })
}

fn termination_label(t: &TerminationReason) -> String {
    match t {
        TerminationReason::Converged => "converged".into(),
        TerminationReason::ZeroSubgradient => "zero subgradient".into(),
        TerminationReason::MaxIterations => "iteration limit".into(),
        TerminationReason::TimeBudget => "time budget".into(),
        TerminationReason::NumericalFailure(m) => format!("numerical failure ({m})"),
    }
}
