use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::{Args, Subcommand};
use mrf_relax::generate::{generate_grid, generate_lp_tight, LpTightParams, PotentialLaw, LP_TIGHT_RANGE};
use mrf_relax::uai::{write_labeling, write_model};
use serde::Serialize;

use crate::files::{write_json, write_text, SCHEMA_VERSION};
use crate::options::parse_law;
use crate::Status;

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[command(subcommand)]
    kind: Kind,
}

#[derive(Subcommand, Debug)]
enum Kind {
    /// Grid with i.i.d. potentials.
    Grid {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
        #[arg(long)]
        labels: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// `uniform01` or `sym:R`.
        #[arg(long, default_value = "uniform01", value_parser = parse_law)]
        law: PotentialLaw,
        #[arg(long)]
        out: PathBuf,
    },
    /// Grid whose relaxation is tight at a planted labeling; the labeling is
    /// written next to the model with the extension `.planted`.
    LpTight {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
        #[arg(long)]
        labels: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Energy margin of the planted labeling.
        #[arg(long, default_value_t = LP_TIGHT_RANGE)]
        margin: f64,
        /// Cost of forbidden label pairs.
        #[arg(long, default_value_t = 1e4)]
        infinity: f64,
        /// Probability that a non-planted pair is forbidden.
        #[arg(long, default_value_t = 0.3)]
        forbidden_fraction: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum Params {
    Grid {
        rows: usize,
        cols: usize,
        labels: usize,
        seed: u64,
        law: PotentialLaw,
    },
    LpTight(LpTightParams),
}

#[derive(Serialize)]
struct Meta {
    schema_version: u32,
    #[serde(flatten)]
    params: Params,
}

fn sidecar(out: &Path, ext: &str) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(ext);
    PathBuf::from(s)
}

pub fn run(args: &GenerateArgs) -> Result<Status> {
    match args.kind {
        Kind::Grid {
            rows,
            cols,
            labels,
            seed,
            law,
            ref out,
        } => {
            let model = generate_grid(rows, cols, labels, law, seed)?;
            write_text(out, &write_model(&model))?;
            let params = Params::Grid {
                rows,
                cols,
                labels,
                seed,
                law,
            };
            write_json(
                &sidecar(out, ".meta.json"),
                &Meta {
                    schema_version: SCHEMA_VERSION,
                    params,
                },
            )?;
        }
        Kind::LpTight {
            rows,
            cols,
            labels,
            seed,
            margin,
            infinity,
            forbidden_fraction,
            ref out,
        } => {
            let p = LpTightParams {
                rows,
                cols,
                labels,
                margin,
                infinity,
                forbidden_fraction,
                seed,
            };
            let (model, planted) = generate_lp_tight(&p)?;
            write_text(out, &write_model(&model))?;
            write_text(&sidecar(out, ".planted"), &write_labeling(&planted))?;
            let meta = Meta {
                schema_version: SCHEMA_VERSION,
                params: Params::LpTight(p),
            };
            write_json(&sidecar(out, ".meta.json"), &meta)?;
        }
    }
    Ok(Status::Ok)
}
