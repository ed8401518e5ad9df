//! CSV rows and key=value records written by the CLI.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::CSV_HEADER;

/// Header comment, column line, then rows.
pub fn csv(columns: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{CSV_HEADER}");
    let _ = writeln!(out, "{columns}");
    for r in rows {
        let _ = writeln!(out, "{r}");
    }
    out
}

pub fn write(dir: &Path, name: &str, content: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), content)?;
    Ok(())
}

/// `key=value` lines.
pub fn key_values<K: AsRef<str>, V: std::fmt::Display>(pairs: impl IntoIterator<Item = (K, V)>) -> String {
    let mut out = String::new();
    for (k, v) in pairs {
        let _ = writeln!(out, "{}={v}", k.as_ref());
    }
    out
}

pub const SWEEP_CSV_COLUMNS: &str =
    "lambda,lambda_fraction,w1n,sup,residual,positivity_min,norm_bound,norm_ok,sup_envelope,sup_ok,sup_bound,sup_bound_ok,status";

/// One λ of a sweep. `norm_bound = (2λK₁)^{1/(N−q)}`, `sup_envelope = C̃ w1n^Θ`,
/// `sup_bound` the Moser bound at `w1n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub lambda: f64,
    pub lambda_fraction: f64,
    pub w1n: f64,
    pub sup: f64,
    pub residual: f64,
    pub positivity_min: f64,
    pub norm_bound: f64,
    pub norm_ok: bool,
    pub sup_envelope: f64,
    pub sup_ok: bool,
    pub sup_bound: f64,
    pub sup_bound_ok: bool,
    pub status: String,
}

impl SweepRow {
    pub fn failed(lambda: f64, lambda_fraction: f64, norm_bound: f64, status: String) -> Self {
        Self {
            lambda,
            lambda_fraction,
            w1n: f64::NAN,
            sup: f64::NAN,
            residual: f64::NAN,
            positivity_min: f64::NAN,
            norm_bound,
            norm_ok: false,
            sup_envelope: f64::NAN,
            sup_ok: false,
            sup_bound: f64::NAN,
            sup_bound_ok: false,
            status,
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.lambda,
            self.lambda_fraction,
            self.w1n,
            self.sup,
            self.residual,
            self.positivity_min,
            self.norm_bound,
            self.norm_ok,
            self.sup_envelope,
            self.sup_ok,
            self.sup_bound,
            self.sup_bound_ok,
            self.status
        )
    }
}

pub const FK_UNIFORM_COLUMNS: &str = "k,s_max,max_abs_err,max_rel_err";
pub const FK_ENVELOPE_COLUMNS: &str = "k,checked,violations";
pub const EIGEN_COLUMNS: &str = "N,R,elements,sigma1";

/// Stable short name used in error records.
pub fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Config(_) | Error::Parse(_) => "config",
        Error::Parameter(_) => "parameter",
        Error::CertificateFailed { .. } => "certificate_failed",
        Error::BudgetExhausted { .. } => "budget_exhausted",
        Error::ScheduleNotConverged { .. } => "schedule_not_converged",
        Error::Stagnation { .. } => "stagnation",
        Error::Domain(_) => "domain",
        Error::Range { .. } | Error::RangeAtNode { .. } => "range",
        Error::Quadrature { .. } => "quadrature",
        Error::MeshMismatch => "mesh_mismatch",
        Error::Bracket(_) => "bracket",
        Error::Io(_) => "io",
    }
}

/// Exit status for a failed run.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Parse(_) | Error::Parameter(_) => 2,
        Error::CertificateFailed { .. } => 3,
        Error::BudgetExhausted { .. } | Error::ScheduleNotConverged { .. } | Error::Stagnation { .. } => 4,
        _ => 1,
    }
}

/// Machine-readable failure record.
pub fn error_record(command: &str, e: &Error) -> String {
    let mut pairs: Vec<(String, String)> = vec![
        ("status".into(), "error".into()),
        ("command".into(), command.into()),
        ("exit_code".into(), exit_code(e).to_string()),
        ("kind".into(), error_kind(e).into()),
        ("message".into(), e.to_string().replace('\n', " ")),
    ];
    match e {
        Error::CertificateFailed { min, threshold } => {
            pairs.push(("certificate_min".into(), min.to_string()));
            pairs.push(("threshold".into(), threshold.to_string()));
        }
        Error::BudgetExhausted { best_residual } => pairs.push(("best_residual".into(), best_residual.to_string())),
        Error::ScheduleNotConverged { trace } => {
            let t: Vec<String> = trace.iter().map(|v| v.to_string()).collect();
            pairs.push(("cauchy_trace".into(), t.join(";")));
        }
        _ => {}
    }
    key_values(pairs)
}
