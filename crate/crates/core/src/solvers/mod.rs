//! Iterative dual schemes with feasible primal bounds.
//!
//! Every solver keeps best-so-far dual and primal bounds. Primal bounds are
//! only taken from points that passed the optimizing projection and whose
//! constraint residual was checked, so each logged gap is certified.

pub mod fpd;
pub mod nesterov;
pub mod operator;
pub mod subgradient;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::decomposition::{Decomposition, Reparametrization};
use crate::error::{Error, Result};
use crate::log::ConvergenceRecord;
use crate::model::{DualPoint, Labeling, Marginals, MrfModel};
use crate::projection::project_primal_energy;
use crate::tolerance;

pub use fpd::solve_fpd;
pub use nesterov::solve_nesterov;
pub use subgradient::{solve_subgradient, Averaging};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    SgAve,
    SgWei,
    Nest,
    Fpd,
}

impl SolverKind {
    pub const ALL: [SolverKind; 4] = [Self::SgAve, Self::SgWei, Self::Nest, Self::Fpd];

    pub fn name(self) -> &'static str {
        match self {
            Self::SgAve => "sg-ave",
            Self::SgWei => "sg-wei",
            Self::Nest => "nest",
            Self::Fpd => "fpd",
        }
    }

    pub fn needs_decomposition(self) -> bool {
        self != Self::Fpd
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown solver {s:?}")))
    }
}

/// Step sizes of subgradient ascent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum StepLaw {
    /// `tau0 / (1 + t)^alpha`.
    Diminishing { tau0: f64, alpha: f64 },
    /// `gamma (best_primal - dual) / |g|^2`, clipped to the diminishing
    /// envelope. A gap-over-norm stand-in for adaptive rules that estimate
    /// the optimum from the primal bound.
    Adaptive { gamma: f64, tau0: f64, alpha: f64 },
}

impl StepLaw {
    fn envelope(tau0: f64, alpha: f64, t: usize) -> f64 {
        tau0 / (1.0 + t as f64).powf(alpha)
    }

    pub fn validate(&self) -> Result<()> {
        let (tau0, alpha) = match *self {
            StepLaw::Diminishing { tau0, alpha } => (tau0, alpha),
            StepLaw::Adaptive { gamma, tau0, alpha } => {
                if !(gamma > 0.0 && gamma < 2.0) {
                    return Err(Error::Parameter(format!("gamma {gamma} outside (0, 2)")));
                }
                (tau0, alpha)
            }
        };
        if !(tau0 > 0.0 && tau0.is_finite()) {
            return Err(Error::Parameter(format!("initial step {tau0} must be positive")));
        }
        if !(alpha > 0.5 && alpha <= 1.0) {
            return Err(Error::Parameter(format!(
                "step exponent {alpha} outside (0.5, 1]"
            )));
        }
        Ok(())
    }
}

/// Quantities the adaptive law looks at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepState {
    pub best_primal: f64,
    pub dual: f64,
    pub subgradient_norm_sq: f64,
}

/// Step size at iteration `t`, or `None` when the subgradient is zero (the
/// current point is dual optimal).
pub fn step_size(law: &StepLaw, t: usize, state: &StepState) -> Option<f64> {
    if state.subgradient_norm_sq == 0.0 {
        return None;
    }
    Some(match *law {
        StepLaw::Diminishing { tau0, alpha } => StepLaw::envelope(tau0, alpha, t),
        StepLaw::Adaptive { gamma, tau0, alpha } => {
            let cap = StepLaw::envelope(tau0, alpha, t);
            if state.best_primal.is_finite() {
                let gap = (state.best_primal - state.dual).max(0.0);
                (gamma * gap / state.subgradient_norm_sq).min(cap)
            } else {
                cap
            }
        }
    })
}

/// Smoothing schedule of the Nesterov solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "schedule", rename_all = "kebab-case")]
pub enum RhoSchedule {
    Fixed,
    /// Halve `rho` whenever the smoothed relative gap drops below
    /// `factor * rho`, down to `min_rho`. This is diminishing-smoothing NEST.
    Diminishing {
        factor: f64,
        min_rho: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub time_budget_s: f64,
    /// Iterations between projections and log records.
    pub epoch: usize,
    pub step_law: StepLaw,
    pub rho: f64,
    pub rho_schedule: RhoSchedule,
    /// Stop once the relative gap is at most this value.
    pub tolerance: f64,
    pub seed: u64,
    /// Compute the smoothed gap at every record (Nesterov only).
    pub track_smoothed_gap: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 1000,
            time_budget_s: f64::INFINITY,
            epoch: 20,
            step_law: StepLaw::Adaptive {
                gamma: 1.0,
                tau0: 1.0,
                alpha: 0.75,
            },
            rho: 1.0,
            rho_schedule: RhoSchedule::Fixed,
            tolerance: 1e-6,
            seed: 0,
            track_smoothed_gap: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epoch == 0 {
            return Err(Error::Parameter("logging epoch must be positive".into()));
        }
        if !(self.time_budget_s > 0.0) {
            return Err(Error::Parameter("time budget must be positive".into()));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::Parameter(format!(
                "smoothing {} must be positive",
                self.rho
            )));
        }
        if let RhoSchedule::Diminishing { factor, min_rho } = self.rho_schedule {
            if !(factor > 0.0 && min_rho > 0.0 && min_rho <= self.rho) {
                return Err(Error::Parameter("invalid smoothing schedule".into()));
            }
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::Parameter("gap tolerance must be nonnegative".into()));
        }
        self.step_law.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", content = "detail", rename_all = "kebab-case")]
pub enum TerminationReason {
    /// Relative gap reached the tolerance.
    Converged,
    /// Both subproblems agree, so the current labeling is optimal.
    ZeroSubgradient,
    MaxIterations,
    TimeBudget,
    NumericalFailure(String),
}

/// Final dual iterate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DualSolution {
    Lambda(Reparametrization),
    Point(DualPoint),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    pub solver: SolverKind,
    /// Feasible point with the best primal bound.
    pub marginals: Marginals,
    pub dual: DualSolution,
    /// Rounded labeling with the lowest energy.
    pub labeling: Labeling,
    pub records: Vec<ConvergenceRecord>,
    pub termination: TerminationReason,
    pub iterations: usize,
    /// Step reductions (Nesterov backtracking, primal-dual divergence
    /// monitor).
    pub step_halvings: usize,
    pub notes: Vec<String>,
}

impl SolverReport {
    pub fn last(&self) -> &ConvergenceRecord {
        self.records.last().expect("reports hold at least one record")
    }
}

/// Certified duality gap of a feasible point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapCertificate {
    pub primal: f64,
    pub gap: f64,
    pub relative_gap: f64,
}

/// `gap = <theta, mu> - dual_bound`, refusing points outside the local
/// polytope and gaps that are negative beyond tolerance.
pub fn gap_certificate(model: &MrfModel, mu: &Marginals, dual_bound: f64) -> Result<GapCertificate> {
    let residual = model.constraint_residual(mu)?;
    if residual > tolerance::EQUALITY {
        return Err(Error::Domain { residual });
    }
    let primal = model.relaxed_energy(mu)?;
    let gap = primal - dual_bound;
    if gap < -tolerance::WEAK_DUALITY {
        return Err(Error::NegativeGap { gap });
    }
    Ok(GapCertificate {
        primal,
        gap,
        relative_gap: gap / dual_bound.abs().max(1.0),
    })
}

/// Runs one of the solvers; `decomposition` is required by all but FPD.
pub fn solve(
    kind: SolverKind,
    model: &MrfModel,
    decomposition: Option<&Decomposition>,
    cfg: &SolverConfig,
) -> Result<SolverReport> {
    let need = || {
        decomposition
            .ok_or_else(|| Error::Unsupported(format!("solver {kind} needs a two-subgraph decomposition")))
    };
    match kind {
        SolverKind::SgAve => solve_subgradient(model, need()?, cfg, Averaging::Uniform),
        SolverKind::SgWei => solve_subgradient(model, need()?, cfg, Averaging::StepWeighted),
        SolverKind::Nest => solve_nesterov(model, need()?, cfg),
        SolverKind::Fpd => solve_fpd(model, cfg),
    }
}

/// Best-so-far bookkeeping shared by the solvers.
pub(crate) struct Tracker<'a> {
    model: &'a MrfModel,
    start: Instant,
    pub records: Vec<ConvergenceRecord>,
    pub best_dual: f64,
    pub best_primal: f64,
    pub best_integer: f64,
    pub marginals: Option<Marginals>,
    pub labeling: Option<Labeling>,
}

impl<'a> Tracker<'a> {
    pub fn new(model: &'a MrfModel) -> Self {
        Self {
            model,
            start: Instant::now(),
            records: Vec::new(),
            best_dual: f64::NEG_INFINITY,
            best_primal: f64::INFINITY,
            best_integer: f64::INFINITY,
            marginals: None,
            labeling: None,
        }
    }

    pub fn elapsed(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }

    pub fn observe_dual(&mut self, value: f64) {
        if value > self.best_dual {
            self.best_dual = value;
        }
    }

    /// Projects node blocks, certifies feasibility, and updates the primal
    /// and integer bounds. Returns the projected point.
    pub fn observe_primal(&mut self, nodes: &[Vec<f64>]) -> Result<Marginals> {
        let mu = project_primal_energy(self.model, nodes)?;
        let residual = self.model.constraint_residual(&mu)?;
        if residual > tolerance::EQUALITY {
            return Err(Error::Domain { residual });
        }
        let energy = self.model.relaxed_energy(&mu)?;
        if energy < self.best_primal || self.marginals.is_none() {
            self.best_primal = energy;
            self.marginals = Some(mu.clone());
        }
        let x = mu.round_to_labeling();
        let e = self.model.energy(&x)?;
        if e < self.best_integer || self.labeling.is_none() {
            self.best_integer = e;
            self.labeling = Some(x);
        }
        Ok(mu)
    }

    /// Appends a record of the current best bounds after checking weak
    /// duality.
    pub fn record(
        &mut self,
        iter: usize,
        rho: Option<f64>,
        smoothed_gap: Option<f64>,
    ) -> Result<&ConvergenceRecord> {
        let gap = self.best_primal - self.best_dual;
        let slack = tolerance::WEAK_DUALITY * self.best_dual.abs().max(1.0);
        if gap < -slack {
            return Err(Error::NegativeGap { gap });
        }
        self.records.push(ConvergenceRecord {
            iter,
            time_s: self.elapsed(),
            dual_bound: self.best_dual,
            primal_bound: self.best_primal,
            integer_bound: self.best_integer,
            gap,
            rho,
            smoothed_gap,
        });
        Ok(self.records.last().expect("just pushed"))
    }

    pub fn last_recorded(&self) -> Option<usize> {
        self.records.last().map(|r| r.iter)
    }

    pub fn converged(&self, tol: f64) -> bool {
        self.records.last().is_some_and(|r| r.relative_gap() <= tol)
    }

    pub fn finish(
        self,
        solver: SolverKind,
        dual: DualSolution,
        termination: TerminationReason,
        iterations: usize,
        step_halvings: usize,
        notes: Vec<String>,
    ) -> Result<SolverReport> {
        let marginals = self
            .marginals
            .ok_or_else(|| Error::State("solver produced no primal point".into()))?;
        let labeling = self
            .labeling
            .ok_or_else(|| Error::State("solver produced no labeling".into()))?;
        Ok(SolverReport {
            solver,
            marginals,
            dual,
            labeling,
            records: self.records,
            termination,
            iterations,
            step_halvings,
            notes,
        })
    }
}

/// Logging schedule: iteration 0, every multiple of `epoch`, and the last
/// iteration.
pub(crate) fn is_epoch(t: usize, epoch: usize, max_iters: usize) -> bool {
    t % epoch == 0 || t == max_iters
}
