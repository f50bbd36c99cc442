//! Report rows, the meta block, and CSV/JSON emission.
//!
//! CSV uses a fixed column order with a mandatory header row; floats are
//! printed with 17 significant digits so values round-trip exactly.

use std::io::Write;

use serde::Serialize;

use crate::config::ExperimentConfig;

pub const REPORT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// One CSV cell. Floats get the exact round-trip format.
#[derive(Clone, Debug)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Bool(bool),
    Text(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format!("{v:.16e}"),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(v) => v.clone(),
            Cell::Empty => String::new(),
        }
    }
}

/// A report row type with a fixed CSV schema.
pub trait CsvRow {
    fn headers() -> &'static [&'static str];
    fn cells(&self) -> Vec<Cell>;
}

#[derive(Clone, Debug, Serialize)]
pub struct Meta {
    pub version: String,
    pub seed: u64,
    pub config: ExperimentConfig,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report<R: Serialize> {
    pub meta: Meta,
    pub summary: serde_json::Value,
    pub rows: Vec<R>,
}

impl<R: Serialize + CsvRow> Report<R> {
    pub fn new(config: &ExperimentConfig, summary: serde_json::Value, rows: Vec<R>) -> Self {
        Report {
            meta: Meta {
                version: REPORT_VERSION.to_string(),
                seed: config.master_seed,
                config: config.clone(),
            },
            summary,
            rows,
        }
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "{}", R::headers().join(","))?;
        for row in &self.rows {
            let line: Vec<String> = row.cells().iter().map(Cell::render).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn write_json<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        serde_json::to_writer_pretty(&mut *out, self)?;
        writeln!(out)?;
        Ok(())
    }
}

/// Certification row: one per trial (trial 0 may be the covariance target
/// itself; design trials follow).
#[derive(Clone, Debug, Serialize)]
pub struct CertRow {
    pub trial_index: usize,
    pub target: String,
    pub rho_min_2s: f64,
    pub rho_max_s: f64,
    pub eigen_exact: bool,
    pub rip_theta: Option<f64>,
    pub k_est: f64,
    pub runtime_ms: f64,
}

impl CsvRow for CertRow {
    fn headers() -> &'static [&'static str] {
        &[
            "trial_index",
            "target",
            "rho_min_2s",
            "rho_max_s",
            "eigen_exact",
            "rip_theta",
            "k_est",
            "runtime_ms",
        ]
    }

    fn cells(&self) -> Vec<Cell> {
        vec![
            Cell::Int(self.trial_index as u64),
            Cell::Text(self.target.clone()),
            Cell::Float(self.rho_min_2s),
            Cell::Float(self.rho_max_s),
            Cell::Bool(self.eigen_exact),
            self.rip_theta.map_or(Cell::Empty, Cell::Float),
            Cell::Float(self.k_est),
            Cell::Float(self.runtime_ms),
        ]
    }
}

/// Two-sided verification row: extreme ratios over sampled cone vectors and
/// design columns for one realized design.
#[derive(Clone, Debug, Serialize)]
pub struct VerifyRow {
    pub trial_index: usize,
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub col_min: f64,
    pub col_max: f64,
    pub bounds_hold: bool,
    pub runtime_ms: f64,
}

impl CsvRow for VerifyRow {
    fn headers() -> &'static [&'static str] {
        &[
            "trial_index",
            "ratio_min",
            "ratio_max",
            "col_min",
            "col_max",
            "bounds_hold",
            "runtime_ms",
        ]
    }

    fn cells(&self) -> Vec<Cell> {
        vec![
            Cell::Int(self.trial_index as u64),
            Cell::Float(self.ratio_min),
            Cell::Float(self.ratio_max),
            Cell::Float(self.col_min),
            Cell::Float(self.col_max),
            Cell::Bool(self.bounds_hold),
            Cell::Float(self.runtime_ms),
        ]
    }
}

/// Recovery row: raw error norms, raw cone quantities, theoretical bounds,
/// and event flags, so every verdict is re-derivable from the stored values.
#[derive(Clone, Debug, Serialize)]
pub struct RecoverRow {
    pub trial_index: usize,
    pub f_theta: bool,
    pub t_a: bool,
    pub converged: bool,
    pub lambda: f64,
    pub err_l2: f64,
    pub err_l1: f64,
    /// l1 mass of the error off the true support.
    pub cone_tail_l1: f64,
    /// l1 mass of the error on the true support.
    pub cone_support_l1: f64,
    pub cone_holds: bool,
    pub l2_bound: f64,
    pub l1_bound: f64,
    pub l2_within: bool,
    pub l1_within: bool,
    /// Estimate has no more l1 mass than the truth (Dantzig optimality).
    pub l1_dominated: bool,
    pub runtime_ms: f64,
}

impl CsvRow for RecoverRow {
    fn headers() -> &'static [&'static str] {
        &[
            "trial_index",
            "f_theta",
            "t_a",
            "converged",
            "lambda",
            "err_l2",
            "err_l1",
            "cone_tail_l1",
            "cone_support_l1",
            "cone_holds",
            "l2_bound",
            "l1_bound",
            "l2_within",
            "l1_within",
            "l1_dominated",
            "runtime_ms",
        ]
    }

    fn cells(&self) -> Vec<Cell> {
        vec![
            Cell::Int(self.trial_index as u64),
            Cell::Bool(self.f_theta),
            Cell::Bool(self.t_a),
            Cell::Bool(self.converged),
            Cell::Float(self.lambda),
            Cell::Float(self.err_l2),
            Cell::Float(self.err_l1),
            Cell::Float(self.cone_tail_l1),
            Cell::Float(self.cone_support_l1),
            Cell::Bool(self.cone_holds),
            Cell::Float(self.l2_bound),
            Cell::Float(self.l1_bound),
            Cell::Bool(self.l2_within),
            Cell::Bool(self.l1_within),
            Cell::Bool(self.l1_dominated),
            Cell::Float(self.runtime_ms),
        ]
    }
}

/// Width row: one estimated set per row with its theoretical ceiling.
#[derive(Clone, Debug, Serialize)]
pub struct WidthRow {
    pub set: String,
    pub m: Option<usize>,
    pub estimate: f64,
    pub std_error: f64,
    pub trials: usize,
    pub bound: f64,
    pub within_bound: bool,
}

impl CsvRow for WidthRow {
    fn headers() -> &'static [&'static str] {
        &["set", "m", "estimate", "std_error", "trials", "bound", "within_bound"]
    }

    fn cells(&self) -> Vec<Cell> {
        vec![
            Cell::Text(self.set.clone()),
            self.m.map_or(Cell::Empty, |m| Cell::Int(m as u64)),
            Cell::Float(self.estimate),
            Cell::Float(self.std_error),
            Cell::Int(self.trials as u64),
            Cell::Float(self.bound),
            Cell::Bool(self.within_bound),
        ]
    }
}

/// One sweep cell: empirical success frequency, recovery error quantiles,
/// and the theoretical sample-size threshold for overlay plotting.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub p: usize,
    pub s: usize,
    pub rho: f64,
    pub trials: usize,
    pub success_freq: f64,
    pub err_l2_median: f64,
    pub err_l2_p90: f64,
    pub threshold_n: f64,
    pub failed: bool,
}

impl CsvRow for SweepRow {
    fn headers() -> &'static [&'static str] {
        &[
            "n",
            "p",
            "s",
            "rho",
            "trials",
            "success_freq",
            "err_l2_median",
            "err_l2_p90",
            "threshold_n",
            "failed",
        ]
    }

    fn cells(&self) -> Vec<Cell> {
        vec![
            Cell::Int(self.n as u64),
            Cell::Int(self.p as u64),
            Cell::Int(self.s as u64),
            Cell::Float(self.rho),
            Cell::Int(self.trials as u64),
            Cell::Float(self.success_freq),
            Cell::Float(self.err_l2_median),
            Cell::Float(self.err_l2_p90),
            Cell::Float(self.threshold_n),
            Cell::Bool(self.failed),
        ]
    }
}

/// Gaussian-design row: realized extreme ratios against the slackened
/// two-sided gates and the width-based lower prediction.
#[derive(Clone, Debug, Serialize)]
pub struct GaussRow {
    pub trial_index: usize,
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub lower_gate: f64,
    pub upper_gate: f64,
    pub holds: bool,
    pub predicted_lower: f64,
    pub margin: f64,
    pub runtime_ms: f64,
}

impl CsvRow for GaussRow {
    fn headers() -> &'static [&'static str] {
        &[
            "trial_index",
            "ratio_min",
            "ratio_max",
            "lower_gate",
            "upper_gate",
            "holds",
            "predicted_lower",
            "margin",
            "runtime_ms",
        ]
    }

    fn cells(&self) -> Vec<Cell> {
        vec![
            Cell::Int(self.trial_index as u64),
            Cell::Float(self.ratio_min),
            Cell::Float(self.ratio_max),
            Cell::Float(self.lower_gate),
            Cell::Float(self.upper_gate),
            Cell::Bool(self.holds),
            Cell::Float(self.predicted_lower),
            Cell::Float(self.margin),
            Cell::Float(self.runtime_ms),
        ]
    }
}
