//! Seeded random grid instances.
//!
//! All generators draw from a `ChaCha8Rng`, so a seed reproduces the same
//! model bit-for-bit on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{grid_edges, GridShape, Labeling, MrfModel};

/// Distribution of every potential entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PotentialLaw {
    /// Uniform on `[0, 1]`.
    Uniform01,
    /// Uniform on `[-r, r]`.
    UniformSym(f64),
}

impl PotentialLaw {
    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            PotentialLaw::Uniform01 => rng.gen::<f64>(),
            PotentialLaw::UniformSym(r) => rng.gen_range(-r..=r),
        }
    }
}

/// 4-connected `rows x cols` grid with i.i.d. potentials.
pub fn generate_grid(
    rows: usize,
    cols: usize,
    labels: usize,
    law: PotentialLaw,
    seed: u64,
) -> Result<MrfModel> {
    if rows == 0 || cols == 0 || labels == 0 {
        return Err(Error::Parameter("rows, cols and labels must be positive".into()));
    }
    if let PotentialLaw::UniformSym(r) = law {
        if !(r.is_finite() && r >= 0.0) {
            return Err(Error::Parameter(format!("invalid range {r}")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = GridShape { rows, cols };
    let n = rows * cols;
    let unary: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..labels).map(|_| law.sample(&mut rng)).collect())
        .collect();
    let pairs = grid_edges(shape)
        .into_iter()
        .map(|e| {
            let t = (0..labels * labels).map(|_| law.sample(&mut rng)).collect();
            (e.u, e.v, t)
        })
        .collect();
    MrfModel::new(unary, pairs)?.with_grid(shape)
}

/// Parameters of an LP-tight instance with planted optimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LpTightParams {
    pub rows: usize,
    pub cols: usize,
    pub labels: usize,
    /// Amount subtracted from every entry selected by the planted labeling.
    pub margin: f64,
    /// Finite stand-in for an infinite pairwise potential.
    pub infinity: f64,
    /// Probability that a pairwise entry off the planted labeling is forbidden.
    pub forbidden_fraction: f64,
    pub seed: u64,
}

/// Bound of the potential range of LP-tight instances.
pub const LP_TIGHT_RANGE: f64 = 10.0;

/// Grid with a planted labeling `x*` that is the unique optimum whenever the
/// margin dominates the potential range.
///
/// Every entry is drawn uniform in `[-10, 10]`, then `margin` is subtracted
/// from each unary entry `theta_{v, x*_v}` and each pairwise entry
/// `theta_{uv, x*_uv}`. The result is mapped back onto `[-10, 10]` by the
/// increasing affine map `t -> a t + b`; since every node and every edge
/// selects exactly one entry, this scales all energies by `a` and shifts them
/// by a constant, leaving the minimizers of both the energy and its LP
/// relaxation unchanged. Finally each pairwise entry not on `x*` is replaced
/// by `infinity` with probability `forbidden_fraction`. The random stream is
/// independent of `infinity`, so instances differing only in that value share
/// everything else.
pub fn generate_lp_tight(p: &LpTightParams) -> Result<(MrfModel, Labeling)> {
    if p.rows == 0 || p.cols == 0 || p.labels == 0 {
        return Err(Error::Parameter("rows, cols and labels must be positive".into()));
    }
    if !(0.0..=1.0).contains(&p.forbidden_fraction) {
        return Err(Error::Parameter(format!(
            "forbidden fraction {} outside [0, 1]",
            p.forbidden_fraction
        )));
    }
    if !(p.margin > 0.0 && p.margin.is_finite()) {
        return Err(Error::Parameter(format!("margin {} must be positive", p.margin)));
    }
    if !(p.infinity.is_finite() && p.infinity >= LP_TIGHT_RANGE) {
        return Err(Error::Parameter(format!(
            "infinity value {} must be finite and at least {LP_TIGHT_RANGE}",
            p.infinity
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let shape = GridShape {
        rows: p.rows,
        cols: p.cols,
    };
    let n = p.rows * p.cols;
    let k = p.labels;
    let planted = Labeling((0..n).map(|_| rng.gen_range(0..k)).collect());

    // a (t) + b maps [-10 - margin, 10] onto [-10, 10]
    let scale = 2.0 * LP_TIGHT_RANGE / (2.0 * LP_TIGHT_RANGE + p.margin);
    let shift = LP_TIGHT_RANGE - scale * LP_TIGHT_RANGE;
    let rescale = |t: f64| (scale * t + shift).clamp(-LP_TIGHT_RANGE, LP_TIGHT_RANGE);

    let draw = |rng: &mut ChaCha8Rng, planted_entry: bool| {
        let t = rng.gen_range(-LP_TIGHT_RANGE..=LP_TIGHT_RANGE);
        rescale(if planted_entry { t - p.margin } else { t })
    };
    let unary: Vec<Vec<f64>> = (0..n)
        .map(|v| (0..k).map(|x| draw(&mut rng, x == planted.0[v])).collect())
        .collect();
    let edges = grid_edges(shape);
    let mut pairs = Vec::with_capacity(edges.len());
    for e in &edges {
        let on = planted.0[e.u] * k + planted.0[e.v];
        let mut table: Vec<f64> = (0..k * k).map(|i| draw(&mut rng, i == on)).collect();
        for (i, t) in table.iter_mut().enumerate() {
            // always consume the coin so the stream does not depend on the outcome
            let coin: f64 = rng.gen();
            if i != on && coin < p.forbidden_fraction {
                *t = p.infinity;
            }
        }
        pairs.push((e.u, e.v, table));
    }
    let model = MrfModel::new(unary, pairs)?.with_grid(shape)?;
    Ok((model, planted))
}
