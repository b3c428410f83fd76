use crate::error::{Error, Result};

/// Euclidean projection onto the probability simplex by Michelot's
/// shift-and-clip iteration. Each pass shifts the active coordinates
/// uniformly so they sum to one and drops those that became negative; it
/// terminates after at most `n` passes with the exact projection.
pub fn project_simplex(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::Parameter("cannot project an empty vector".into()));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Parameter("vector has non-finite entries".into()));
    }
    let mut active = vec![true; v.len()];
    let mut count = v.len();
    loop {
        let sum: f64 = v.iter().zip(&active).filter(|(_, &a)| a).map(|(x, _)| x).sum();
        let shift = (sum - 1.0) / count as f64;
        let mut dropped = false;
        for (x, a) in v.iter().zip(active.iter_mut()) {
            if *a && x - shift < 0.0 {
                *a = false;
                count -= 1;
                dropped = true;
            }
        }
        if !dropped {
            return Ok(v
                .iter()
                .zip(&active)
                .map(|(x, &a)| if a { x - shift } else { 0.0 })
                .collect());
        }
    }
}
