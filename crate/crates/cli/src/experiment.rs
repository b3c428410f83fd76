use std::path::{Path, PathBuf};

use anyhow::{bail, Result};
use clap::{Args, Subcommand};
use mrf_relax::generate::{generate_grid, generate_lp_tight, LpTightParams, PotentialLaw, LP_TIGHT_RANGE};
use mrf_relax::solvers::{solve, SolverConfig, SolverKind};
use mrf_relax::uai::{write_labeling, write_model};
use mrf_relax::{decompose_grid, tolerance};
use serde::Serialize;

use crate::files::{create_dir, write_json, write_records, write_report, write_text, SCHEMA_VERSION};
use crate::options::{parse_law, SolverArgs};
use crate::solve::run_solver;
use crate::Status;

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    #[command(subcommand)]
    name: Experiment,
}

#[derive(Subcommand, Debug)]
enum Experiment {
    /// All four solvers on one random grid.
    GapConvergence {
        #[arg(long, default_value_t = 30)]
        rows: usize,
        #[arg(long, default_value_t = 30)]
        cols: usize,
        #[arg(long, default_value_t = 4)]
        labels: usize,
        /// Seed of the instance.
        #[arg(long, default_value_t = 0)]
        instance_seed: u64,
        /// `uniform01` or `sym:R`.
        #[arg(long, default_value = "uniform01", value_parser = parse_law)]
        law: PotentialLaw,
        #[command(flatten)]
        solver_args: SolverArgs,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// NEST on LP-tight grids that differ only in the cost of forbidden
    /// pairs; reports how far apart the log primal excess curves are.
    InfinityScaling {
        #[arg(long, default_value_t = 20)]
        rows: usize,
        #[arg(long, default_value_t = 20)]
        cols: usize,
        #[arg(long, default_value_t = 3)]
        labels: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = LP_TIGHT_RANGE)]
        margin: f64,
        #[arg(long, default_value_t = 0.3)]
        forbidden_fraction: f64,
        /// Comma-separated costs of forbidden pairs, in increasing order.
        #[arg(long, value_delimiter = ',', default_value = "1e4,1e5,1e6,1e7")]
        infinities: Vec<f64>,
        #[arg(long, default_value_t = 400)]
        max_iters: usize,
        #[arg(long, default_value_t = 20)]
        epoch: usize,
        #[arg(long, default_value_t = 1.0)]
        rho: f64,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

pub fn run(args: &ExperimentArgs) -> Result<Status> {
    match &args.name {
        Experiment::GapConvergence {
            rows,
            cols,
            labels,
            instance_seed,
            law,
            solver_args,
            out_dir,
        } => {
            solver_args.install_threads()?;
            let model = generate_grid(*rows, *cols, *labels, *law, *instance_seed)?;
            gap_convergence(&model, solver_args, out_dir)
        }
        Experiment::InfinityScaling {
            rows,
            cols,
            labels,
            seed,
            margin,
            forbidden_fraction,
            infinities,
            max_iters,
            epoch,
            rho,
            threads,
            out_dir,
        } => {
            SolverArgs {
                threads: *threads,
                ..default_solver_args()
            }
            .install_threads()?;
            let base = LpTightParams {
                rows: *rows,
                cols: *cols,
                labels: *labels,
                margin: *margin,
                infinity: 0.0,
                forbidden_fraction: *forbidden_fraction,
                seed: *seed,
            };
            let cfg = SolverConfig {
                max_iters: *max_iters,
                epoch: *epoch,
                rho: *rho,
                tolerance: 0.0,
                track_smoothed_gap: false,
                ..SolverConfig::default()
            };
            infinity_scaling(&base, infinities, &cfg, out_dir)
        }
    }
}

fn default_solver_args() -> SolverArgs {
    let cfg = SolverConfig::default();
    SolverArgs {
        max_iters: cfg.max_iters,
        time_budget_s: cfg.time_budget_s,
        epoch: cfg.epoch,
        rho: cfg.rho,
        rho_schedule: cfg.rho_schedule,
        step_law: cfg.step_law,
        tol: cfg.tolerance,
        seed: cfg.seed,
        threads: 1,
    }
}

#[derive(Serialize)]
struct SolverOutcome {
    solver: SolverKind,
    iterations: usize,
    dual_bound: f64,
    primal_bound: f64,
    integer_bound: f64,
    relative_gap: f64,
    /// Primal bound at least the dual bound on every logged row.
    weak_duality: bool,
}

#[derive(Serialize)]
struct GapSummary {
    schema_version: u32,
    nodes: usize,
    edges: usize,
    solvers: Vec<SolverOutcome>,
}

fn gap_convergence(model: &mrf_relax::MrfModel, args: &SolverArgs, out_dir: &Path) -> Result<Status> {
    let dir = create_dir(out_dir)?;
    write_text(&dir.join("model.uai"), &write_model(model))?;
    let cfg = args.config();
    let mut solvers = Vec::new();
    for kind in SolverKind::ALL {
        let report = run_solver(kind, model, args)?;
        write_records(&dir.join(format!("{kind}.csv")), &report)?;
        write_report(&create_dir(&dir.join(kind.name()))?, &report, &cfg, true)?;
        let last = report.last();
        let weak_duality = report
            .records
            .iter()
            .all(|r| r.primal_bound >= r.dual_bound - tolerance::WEAK_DUALITY);
        println!(
            "{kind}: dual {} primal {} relative gap {:e}",
            last.dual_bound,
            last.primal_bound,
            last.relative_gap()
        );
        solvers.push(SolverOutcome {
            solver: kind,
            iterations: report.iterations,
            dual_bound: last.dual_bound,
            primal_bound: last.primal_bound,
            integer_bound: last.integer_bound,
            relative_gap: last.relative_gap(),
            weak_duality,
        });
    }
    let ok = solvers.iter().all(|s| s.weak_duality);
    let summary = GapSummary {
        schema_version: SCHEMA_VERSION,
        nodes: model.num_nodes(),
        edges: model.num_edges(),
        solvers,
    };
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(if ok {
        Status::Ok
    } else {
        Status::VerificationFailed
    })
}

#[derive(Serialize)]
struct Curve {
    infinity: f64,
    optimal_energy: f64,
    iterations: usize,
}

#[derive(Serialize)]
struct ScalingSummary {
    schema_version: u32,
    rows: usize,
    cols: usize,
    labels: usize,
    margin: f64,
    forbidden_fraction: f64,
    seed: u64,
    curves: Vec<Curve>,
    /// Mean of `log(excess_{k+1}) - log(excess_k)` over rows where both
    /// excesses are positive, per consecutive pair of infinities.
    offsets: Vec<Option<f64>>,
    log_ratios: Vec<f64>,
}

fn infinity_scaling(
    base: &LpTightParams,
    infinities: &[f64],
    cfg: &SolverConfig,
    out_dir: &Path,
) -> Result<Status> {
    if infinities.len() < 2 {
        bail!("--infinities needs at least two values");
    }
    let dir = create_dir(out_dir)?;
    let mut curves = Vec::new();
    let mut excess: Vec<Vec<(usize, f64)>> = Vec::new();
    for &infinity in infinities {
        let params = LpTightParams { infinity, ..*base };
        let (model, planted) = generate_lp_tight(&params)?;
        let d = decompose_grid(&model)?;
        let e_star = model.energy(&planted)?;
        let report = solve(SolverKind::Nest, &model, Some(&d), cfg)?;
        let stem = format!("infinity-{infinity:e}");
        write_text(&dir.join(format!("{stem}.uai")), &write_model(&model))?;
        write_text(&dir.join(format!("{stem}.planted")), &write_labeling(&planted))?;
        write_records(&dir.join(format!("{stem}.csv")), &report)?;
        excess.push(
            report
                .records
                .iter()
                .map(|r| (r.iter, r.primal_bound - e_star))
                .collect(),
        );
        curves.push(Curve {
            infinity,
            optimal_energy: e_star,
            iterations: report.iterations,
        });
        println!(
            "infinity {infinity:e}: optimum {e_star}, final excess {}",
            report.last().primal_bound - e_star
        );
    }

    let rows = excess.iter().map(Vec::len).min().unwrap_or(0);
    let log = |x: f64| {
        if x > 0.0 {
            x.ln().to_string()
        } else {
            String::new()
        }
    };
    let mut table = String::from("iter");
    for inf in infinities {
        table.push_str(&format!(",log_excess_{inf:e}"));
    }
    table.push('\n');
    for i in 0..rows {
        table.push_str(&excess[0][i].0.to_string());
        for curve in &excess {
            table.push(',');
            table.push_str(&log(curve[i].1));
        }
        table.push('\n');
    }
    write_text(&dir.join("curves.csv"), &table)?;

    let offsets = excess
        .windows(2)
        .map(|pair| {
            let logs: Vec<f64> = pair[0]
                .iter()
                .zip(&pair[1])
                .filter(|(a, b)| a.1 > 0.0 && b.1 > 0.0)
                .map(|(a, b)| b.1.ln() - a.1.ln())
                .collect();
            (!logs.is_empty()).then(|| logs.iter().sum::<f64>() / logs.len() as f64)
        })
        .collect::<Vec<_>>();
    let log_ratios = infinities.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
    for (o, w) in offsets.iter().zip(infinities.windows(2)) {
        match o {
            Some(o) => println!("offset {:e} -> {:e}: {o:.4}", w[0], w[1]),
            None => println!("offset {:e} -> {:e}: undefined (no positive excess)", w[0], w[1]),
        }
    }
    let summary = ScalingSummary {
        schema_version: SCHEMA_VERSION,
        rows: base.rows,
        cols: base.cols,
        labels: base.labels,
        margin: base.margin,
        forbidden_fraction: base.forbidden_fraction,
        seed: base.seed,
        curves,
        offsets,
        log_ratios,
    };
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(Status::Ok)
}
