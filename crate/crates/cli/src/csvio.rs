//! CSV artifacts: iteration history, sweep tables, convergence tables.
//!
//! All files use `.` decimals, `,` separators, LF line endings and 17
//! significant digits, so reading a value back reproduces the double bit
//! for bit and reruns of the same configuration are byte-identical.

use std::fs;
use std::path::Path;

use porodarcy_core::benchmarks::ConvergenceReport;
use porodarcy_core::picard::PicardReport;

use crate::error::{io_err, Result};

/// 17 significant digits; the shortest count that identifies every f64.
pub fn full(x: f64) -> String {
    format!("{x:.16e}")
}

/// `iter,diff_norm` with one row per fixed-point sweep, iterations counted
/// from 1.
pub fn history_string(report: &PicardReport) -> String {
    let mut s = String::from("iter,diff_norm\n");
    for (i, &d) in report.diff_norms.iter().enumerate() {
        s.push_str(&format!("{},{}\n", i + 1, full(d)));
    }
    s
}

pub fn write_history(report: &PicardReport, path: &Path) -> Result<()> {
    fs::write(path, history_string(report)).map_err(|e| io_err(path, e))
}

#[derive(Debug, Clone)]
pub enum SweepStatus {
    Done {
        iterations: usize,
        converged: bool,
        fluxes: Vec<(String, f64)>,
    },
    /// The run errored out; the message lands in the status column.
    Failed(String),
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub beta: f64,
    pub status: SweepStatus,
}

impl SweepRow {
    pub fn converged(&self) -> bool {
        matches!(self.status, SweepStatus::Done { converged: true, .. })
    }
}

/// `beta,iters,status,<one column per opening>`. Failed rows keep their
/// line with empty numeric cells and the error text in `status`.
pub fn sweep_string(rows: &[SweepRow]) -> String {
    let mut flux_names: Vec<String> = Vec::new();
    for row in rows {
        if let SweepStatus::Done { fluxes, .. } = &row.status {
            for (name, _) in fluxes {
                if !flux_names.contains(name) {
                    flux_names.push(name.clone());
                }
            }
        }
    }
    let mut s = String::from("beta,iters,status");
    for name in &flux_names {
        s.push(',');
        s.push_str(name);
    }
    s.push('\n');
    for row in rows {
        s.push_str(&full(row.beta));
        match &row.status {
            SweepStatus::Done {
                iterations,
                converged,
                fluxes,
            } => {
                let status = if *converged { "converged" } else { "no-convergence" };
                s.push_str(&format!(",{iterations},{status}"));
                for name in &flux_names {
                    s.push(',');
                    if let Some((_, f)) = fluxes.iter().find(|(n, _)| n == name) {
                        s.push_str(&full(*f));
                    }
                }
            }
            SweepStatus::Failed(msg) => {
                // keep the row parseable: no field separators in the message
                s.push_str(&format!(",,error: {}", msg.replace(',', ";")));
                for _ in &flux_names {
                    s.push(',');
                }
            }
        }
        s.push('\n');
    }
    s
}

pub fn write_sweep(rows: &[SweepRow], path: &Path) -> Result<()> {
    fs::write(path, sweep_string(rows)).map_err(|e| io_err(path, e))
}

/// `h,e_p,e_v` rows plus a trailing comment line with the fitted rates.
pub fn convergence_string(report: &ConvergenceReport) -> String {
    let mut s = String::from("h,e_p,e_v\n");
    for row in &report.rows {
        s.push_str(&format!(
            "{},{},{}\n",
            full(row.h),
            full(row.e_p),
            full(row.e_v)
        ));
    }
    s.push_str(&format!(
        "# rate_p = {}, rate_v = {}\n",
        report.rate_p, report.rate_v
    ));
    s
}

pub fn write_convergence(report: &ConvergenceReport, path: &Path) -> Result<()> {
    fs::write(path, convergence_string(report)).map_err(|e| io_err(path, e))
}
