use std::path::PathBuf;

use anyhow::{anyhow, Context, Result};
use clap::Args;
use mrf_relax::dual::dual_u;
use mrf_relax::projection::{dual_value, project_primal_energy};
use mrf_relax::tolerance;
use mrf_relax::{DualPoint, Marginals, MrfModel, Reparametrization};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::files::{decomposition, load_model};
use crate::options::read_text;
use crate::Status;

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Model in UAI format.
    #[arg(long)]
    model: PathBuf,
    /// Marginals JSON; node blocks alone are completed optimally.
    #[arg(long)]
    marginals: PathBuf,
    /// Dual point or reparametrization JSON, as written by `solve`.
    #[arg(long)]
    dual: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum DualFile {
    Point(DualPoint),
    Lambda(Reparametrization),
}

fn read_json<T: DeserializeOwned>(path: &std::path::Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?).with_context(|| format!("cannot parse {}", path.display()))
}

/// Dual bound and the smallest dual constraint slack (zero for a
/// reparametrization, whose bound is valid for every value).
fn dual_bound(model: &MrfModel, dual: &DualFile) -> Result<(f64, f64)> {
    match dual {
        DualFile::Point(nu) => Ok((dual_value(nu), model.dual_feasibility_margin(nu)?)),
        DualFile::Lambda(lambda) => {
            lambda.check(model)?;
            let d = decomposition(model)
                .ok_or_else(|| anyhow!("a reparametrization needs a grid or forest model"))?;
            Ok((dual_u(model, &d, lambda)?.value, 0.0))
        }
    }
}

pub fn run(args: &VerifyArgs) -> Result<Status> {
    let model = load_model(&args.model)?;
    let mut mu: Marginals = read_json(&args.marginals)?;
    model.check_node_blocks(&mu.nodes)?;
    let dual = args.dual.as_ref().map(|p| read_json::<DualFile>(p)).transpose()?;

    let mut ok = true;
    let residual = if mu.has_edge_blocks() {
        model.constraint_residual(&mu)?
    } else {
        let r = model.node_residual(&mu.nodes);
        if r <= tolerance::EQUALITY {
            mu = project_primal_energy(&model, &mu.nodes)?;
            println!("edge blocks: completed by the optimizing projection");
            model.constraint_residual(&mu)?.max(r)
        } else {
            r
        }
    };
    println!("residual: {residual:e}");
    ok &= residual <= tolerance::EQUALITY;
    let primal = model.relaxed_energy(&mu).ok();
    if let Some(p) = primal {
        println!("primal bound: {p}");
    }
    if let Some(dual) = &dual {
        let (bound, margin) = dual_bound(&model, dual)?;
        println!("dual feasibility margin: {margin:e}");
        println!("dual bound: {bound}");
        ok &= margin >= -tolerance::WEAK_DUALITY;
        if let Some(p) = primal {
            let gap = p - bound;
            println!("gap: {gap:e}");
            println!("relative gap: {:e}", gap / bound.abs().max(1.0));
            ok &= gap >= -tolerance::WEAK_DUALITY;
        }
    }
    println!("verdict: {}", if ok { "ok" } else { "failed" });
    Ok(if ok {
        Status::Ok
    } else {
        Status::VerificationFailed
    })
}
