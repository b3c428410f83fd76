//! Solver flags shared by `solve` and `experiment`, and parsers for the
//! compact `name:param:param` flag values.

use anyhow::{bail, Context, Result};
use clap::Args;
use mrf_relax::generate::PotentialLaw;
use mrf_relax::solvers::{RhoSchedule, SolverConfig, StepLaw};

#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    /// Iteration limit.
    #[arg(long, default_value_t = 1000)]
    pub max_iters: usize,
    /// Wall-clock limit in seconds.
    #[arg(long, default_value_t = f64::INFINITY)]
    pub time_budget_s: f64,
    /// Iterations between projections and log records.
    #[arg(long, default_value_t = 20)]
    pub epoch: usize,
    /// Smoothing parameter of NEST (initial value under a diminishing schedule).
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    /// `fixed`, `diminishing`, or `diminishing:FACTOR:MIN_RHO`.
    #[arg(long, default_value = "diminishing", value_parser = parse_rho_schedule)]
    pub rho_schedule: RhoSchedule,
    /// `adaptive`, `adaptive:GAMMA`, `diminishing`, or `diminishing:TAU0:ALPHA`.
    #[arg(long, default_value = "adaptive", value_parser = parse_step_law)]
    pub step_law: StepLaw,
    /// Stop when the relative gap falls to this value.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Seed of the randomized parts (power iteration start).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for the per-edge and per-subgraph fan-out.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

impl SolverArgs {
    pub fn config(&self) -> SolverConfig {
        SolverConfig {
            max_iters: self.max_iters,
            time_budget_s: self.time_budget_s,
            epoch: self.epoch,
            step_law: self.step_law,
            rho: self.rho,
            rho_schedule: self.rho_schedule,
            tolerance: self.tol,
            seed: self.seed,
            track_smoothed_gap: true,
        }
    }

    /// Installs the global thread pool. Only the first call has an effect.
    pub fn install_threads(&self) -> Result<()> {
        if self.threads == 0 {
            bail!("--threads must be positive");
        }
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build_global();
        Ok(())
    }
}

fn params(s: &str) -> (&str, Vec<&str>) {
    let mut parts = s.split(':');
    let name = parts.next().unwrap_or_default();
    (name, parts.collect())
}

fn number(s: &str, what: &str) -> Result<f64, String> {
    s.parse::<f64>()
        .map_err(|_| format!("{what} {s:?} is not a number"))
}

pub fn parse_rho_schedule(s: &str) -> Result<RhoSchedule, String> {
    match params(s) {
        ("fixed", p) if p.is_empty() => Ok(RhoSchedule::Fixed),
        ("diminishing", p) if p.is_empty() => Ok(RhoSchedule::Diminishing {
            factor: 1.0,
            min_rho: 1e-8,
        }),
        ("diminishing", p) if p.len() == 2 => Ok(RhoSchedule::Diminishing {
            factor: number(p[0], "factor")?,
            min_rho: number(p[1], "minimum rho")?,
        }),
        _ => Err(format!("unknown smoothing schedule {s:?}")),
    }
}

pub fn parse_step_law(s: &str) -> Result<StepLaw, String> {
    match params(s) {
        ("adaptive", p) if p.len() <= 1 => Ok(StepLaw::Adaptive {
            gamma: p.first().map(|g| number(g, "gamma")).transpose()?.unwrap_or(1.0),
            tau0: 1.0,
            alpha: 0.75,
        }),
        ("diminishing", p) if p.is_empty() => Ok(StepLaw::Diminishing {
            tau0: 0.1,
            alpha: 0.75,
        }),
        ("diminishing", p) if p.len() == 2 => Ok(StepLaw::Diminishing {
            tau0: number(p[0], "tau0")?,
            alpha: number(p[1], "alpha")?,
        }),
        _ => Err(format!("unknown step law {s:?}")),
    }
}

/// `uniform01` or `sym:R` (uniform on `[-R, R]`).
pub fn parse_law(s: &str) -> Result<PotentialLaw, String> {
    match params(s) {
        ("uniform01", p) if p.is_empty() => Ok(PotentialLaw::Uniform01),
        ("sym", p) if p.len() == 1 => Ok(PotentialLaw::UniformSym(number(p[0], "range")?)),
        _ => Err(format!("unknown potential law {s:?}")),
    }
}

pub fn read_text(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}
