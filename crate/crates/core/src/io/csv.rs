//! Plot-ready CSV: one `#` comment line documenting the columns, a header
//! row, then one row per (experiment, λ, μ, time sample).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::Result;
use crate::scheme::SampleNorms;

pub const STEP_COLUMNS: [&str; 25] = [
    "experiment",
    "grid",
    "step",
    "lambda",
    "mu",
    "t",
    "delta_r",
    "osc_r",
    "transport_r",
    "osc_transport_r",
    "error1_r",
    "error2_r",
    "delta_f",
    "osc_f",
    "transport_f",
    "osc_transport_f",
    "error1_f",
    "error2_f",
    "w_sup",
    "w_mean",
    "div_w",
    "b_max",
    "beta_max",
    "energy_gap",
    "overflow",
];

const COLUMN_DOC: &str = "sup norms per time sample: delta_r/delta_f = stress/flux increment, \
osc/transport/error1/error2 = its parts, w_* = velocity perturbation, b_max/beta_max = amplitudes, \
energy_gap = e(1-δ/2) - ∫|v|^2 (empty when not measured), overflow = truncated products in the run";

/// Rows of diagnostics waiting to be written.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DiagnosticsTable {
    pub rows: Vec<Vec<String>>,
}

/// Identifies the run a group of rows belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct RowKey<'a> {
    pub experiment: &'a str,
    pub grid: String,
    pub step: usize,
    pub lambda: u64,
    pub mu: u64,
}

impl DiagnosticsTable {
    pub fn push_samples(&mut self, key: &RowKey, samples: &[SampleNorms], energy_gap: &[Option<f64>], overflow: u64) {
        for (i, s) in samples.iter().enumerate() {
            let gap = energy_gap.get(i).copied().flatten().map_or(String::new(), |g| format!("{g:e}"));
            let nums = [
                s.t,
                s.delta_r,
                s.osc_r,
                s.transport_r,
                s.osc_transport_r,
                s.error1_r,
                s.error2_r,
                s.delta_f,
                s.osc_f,
                s.transport_f,
                s.osc_transport_f,
                s.error1_f,
                s.error2_f,
                s.w_sup,
                s.w_mean,
                s.div_w,
                s.b_max,
                s.beta_max,
            ];
            let mut row = vec![
                key.experiment.to_string(),
                key.grid.clone(),
                key.step.to_string(),
                key.lambda.to_string(),
                key.mu.to_string(),
            ];
            row.extend(nums.iter().map(|x| format!("{x:e}")));
            row.push(gap);
            row.push(overflow.to_string());
            self.rows.push(row);
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# columns: {} ; {COLUMN_DOC}", STEP_COLUMNS.join(","));
        let _ = writeln!(out, "{}", STEP_COLUMNS.join(","));
        for r in &self.rows {
            let _ = writeln!(out, "{}", r.join(","));
        }
        out
    }
}

pub fn write_diagnostics(path: &Path, table: &DiagnosticsTable) -> Result<()> {
    fs::write(path, table.render())?;
    Ok(())
}
