//! Reading models and writing solver outputs.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use mrf_relax::log::write_csv;
use mrf_relax::solvers::{DualSolution, SolverConfig, SolverKind, SolverReport, TerminationReason};
use mrf_relax::uai::{read_model, write_labeling};
use mrf_relax::{decompose_grid, Decomposition, Marginals, MrfModel};
use serde::Serialize;

use crate::options::read_text;

/// Version of the JSON outputs.
pub const SCHEMA_VERSION: u32 = 1;

pub fn load_model(path: &Path) -> Result<MrfModel> {
    read_model(&read_text(path)?).with_context(|| format!("cannot parse {}", path.display()))
}

/// Two-forest split: the grid split when the model is a grid, the trivial
/// split when it is a forest. `None` otherwise.
pub fn decomposition(model: &MrfModel) -> Option<Decomposition> {
    if model.grid().is_some() {
        decompose_grid(model).ok()
    } else {
        Decomposition::for_forest(model).ok()
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

pub fn write_records(path: &Path, report: &SolverReport) -> Result<()> {
    let file = fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    write_csv(BufWriter::new(file), &report.records)
        .with_context(|| format!("cannot write {}", path.display()))
}

pub fn create_dir(path: &Path) -> Result<PathBuf> {
    fs::create_dir_all(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(path.to_path_buf())
}

#[derive(Serialize)]
pub struct Summary<'a> {
    pub schema_version: u32,
    pub solver: SolverKind,
    #[serde(flatten)]
    pub termination: &'a TerminationReason,
    pub iterations: usize,
    pub dual_bound: f64,
    pub primal_bound: f64,
    pub integer_bound: f64,
    pub gap: f64,
    pub relative_gap: f64,
    pub wall_time_s: f64,
    pub step_halvings: usize,
    pub notes: &'a [String],
    pub config: &'a SolverConfig,
}

impl<'a> Summary<'a> {
    pub fn new(report: &'a SolverReport, config: &'a SolverConfig) -> Self {
        let last = report.last();
        Self {
            schema_version: SCHEMA_VERSION,
            solver: report.solver,
            termination: &report.termination,
            iterations: report.iterations,
            dual_bound: last.dual_bound,
            primal_bound: last.primal_bound,
            integer_bound: last.integer_bound,
            gap: last.gap,
            relative_gap: last.relative_gap(),
            wall_time_s: last.time_s,
            step_halvings: report.step_halvings,
            notes: &report.notes,
            config,
        }
    }
}

/// Writes the full set of solve outputs into `dir`.
pub fn write_report(
    dir: &Path,
    report: &SolverReport,
    config: &SolverConfig,
    edge_marginals: bool,
) -> Result<()> {
    write_records(&dir.join("convergence.csv"), report)?;
    let marginals = if edge_marginals {
        report.marginals.clone()
    } else {
        Marginals::from_nodes(report.marginals.nodes.clone())
    };
    write_json(&dir.join("marginals.json"), &marginals)?;
    write_text(&dir.join("labeling.txt"), &write_labeling(&report.labeling))?;
    match &report.dual {
        DualSolution::Point(nu) => write_json(&dir.join("dual.json"), nu)?,
        DualSolution::Lambda(l) => write_json(&dir.join("lambda.json"), l)?,
    }
    write_json(&dir.join("summary.json"), &Summary::new(report, config))
}
