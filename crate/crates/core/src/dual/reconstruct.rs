//! Primal node blocks from averaged subproblem minimizers.

use crate::error::{Error, Result};
use crate::model::{Labeling, MrfModel};

/// Running weighted average of `(phi_V(x^1) + phi_V(x^2)) / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalAverager {
    sum: Vec<Vec<f64>>,
    total: f64,
    count: usize,
}

impl PrimalAverager {
    pub fn new(model: &MrfModel) -> Self {
        Self {
            sum: model.label_counts().iter().map(|&k| vec![0.0; k]).collect(),
            total: 0.0,
            count: 0,
        }
    }

    pub fn push(&mut self, argmins: &[Labeling; 2], weight: f64) -> Result<()> {
        if !(weight >= 0.0 && weight.is_finite()) {
            return Err(Error::Parameter(format!("averaging weight {weight} is invalid")));
        }
        for x in argmins {
            if x.len() != self.sum.len() {
                return Err(Error::Dimension("labeling length".into()));
            }
            for (s, &l) in self.sum.iter_mut().zip(&x.0) {
                s[l] += 0.5 * weight;
            }
        }
        self.total += weight;
        self.count += 1;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Current average; every block lies in its simplex.
    pub fn mean(&self) -> Result<Vec<Vec<f64>>> {
        if self.count == 0 || self.total <= 0.0 {
            return Err(Error::State(
                "no minimizers with positive weight were recorded".into(),
            ));
        }
        Ok(self
            .sum
            .iter()
            .map(|s| s.iter().map(|x| x / self.total).collect())
            .collect())
    }
}

/// Weighted average of a history of minimizer pairs: unit weights give the
/// plain time average, step sizes give the step-weighted one.
pub fn reconstruct_primal_subgradient(
    model: &MrfModel,
    history: &[[Labeling; 2]],
    weights: &[f64],
) -> Result<Vec<Vec<f64>>> {
    if history.len() != weights.len() {
        return Err(Error::Dimension(format!(
            "{} history entries but {} weights",
            history.len(),
            weights.len()
        )));
    }
    let mut avg = PrimalAverager::new(model);
    for (x, &w) in history.iter().zip(weights) {
        avg.push(x, w)?;
    }
    avg.mean()
}
