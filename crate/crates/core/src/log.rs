//! Convergence records and their CSV form.

use std::io::Write;

use serde::{Deserialize, Serialize};

/// Column header of convergence logs.
pub const CSV_HEADER: &str = "iter,time_s,dual_bound,primal_bound,integer_bound,gap,rho";

/// Bounds at one logging event. Bounds are best-so-far values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub iter: usize,
    pub time_s: f64,
    pub dual_bound: f64,
    /// Relaxed energy of the best projected (feasible) primal point.
    pub primal_bound: f64,
    /// Energy of the best rounded labeling.
    pub integer_bound: f64,
    /// `primal_bound - dual_bound`.
    pub gap: f64,
    pub rho: Option<f64>,
    /// Smoothed gap `E_rho(P(mu)) - U_rho(lambda)` where available; not part
    /// of the CSV.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothed_gap: Option<f64>,
}

impl ConvergenceRecord {
    pub fn relative_gap(&self) -> f64 {
        self.gap / self.dual_bound.abs().max(1.0)
    }

    pub fn csv_row(&self) -> String {
        let rho = self.rho.map(|r| r.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{}",
            self.iter, self.time_s, self.dual_bound, self.primal_bound, self.integer_bound, self.gap, rho
        )
    }
}

pub fn write_csv<W: Write>(mut w: W, records: &[ConvergenceRecord]) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(w, "{}", r.csv_row())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let r = ConvergenceRecord {
            iter: 20,
            time_s: 0.5,
            dual_bound: -1.0,
            primal_bound: 2.0,
            integer_bound: 3.0,
            gap: 3.0,
            rho: None,
            smoothed_gap: None,
        };
        let mut out = Vec::new();
        write_csv(&mut out, &[r.clone(), ConvergenceRecord { rho: Some(0.25), ..r }]).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "20,0.5,-1,2,3,3,");
        assert_eq!(lines[2], "20,0.5,-1,2,3,3,0.25");
    }
}
