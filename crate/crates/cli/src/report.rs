//! CSV and JSON emission. Machine-readable files carry 17 significant
//! digits so values round-trip; human summaries use 6.

use starpulse_core::evolution::Trajectory;
use starpulse_core::spectral::EigenMode;
use starpulse_core::validation::{ExperimentReport, Verdict};
use std::io::Write;
use std::path::Path;

use crate::CliError;

/// Full-precision float for machine files (17 significant digits).
pub fn full(v: f64) -> String {
    format!("{v:.16e}")
}

/// Six significant digits for human summaries.
pub fn human(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e-3 && v.abs() < 1e6 {
        let digits = (5 - v.abs().log10().floor() as i32).max(0) as usize;
        format!("{v:.digits$}")
    } else {
        format!("{v:.5e}")
    }
}

pub fn write_trajectory_csv(
    path: &Path,
    traj: &Trajectory<f64>,
    stride: usize,
) -> Result<(), CliError> {
    let mut out = Vec::new();
    writeln!(out, "t,r_free,y_center,y_surface,energy")?;
    for d in traj.diagnostics.iter().step_by(stride.max(1)) {
        writeln!(
            out,
            "{},{},{},{},{}",
            full(d.t),
            full(d.r_free),
            full(d.y_center),
            full(d.y_surface),
            full(d.energy)
        )?;
    }
    crate::cache::write_atomic(path, &out)
}

pub fn write_modes_csv(
    path: &Path,
    x_nodes: &[f64],
    modes: &[EigenMode<f64>],
) -> Result<(), CliError> {
    let mut out = Vec::new();
    write!(out, "n,lambda,lambda_phys")?;
    for &x in x_nodes {
        write!(out, ",phi@x={}", full(x))?;
    }
    writeln!(out)?;
    for mode in modes {
        write!(
            out,
            "{},{},{}",
            mode.index,
            full(mode.lambda),
            full(mode.lambda_phys)
        )?;
        for &p in &mode.phi {
            write!(out, ",{}", full(p))?;
        }
        writeln!(out)?;
    }
    crate::cache::write_atomic(path, &out)
}

pub fn write_report_csv(path: &Path, report: &ExperimentReport) -> Result<(), CliError> {
    let mut out = Vec::new();
    writeln!(out, "metric,value,expected,provenance,verdict")?;
    for row in &report.rows {
        writeln!(
            out,
            "{:?},{},{:?},{:?},{:?}",
            row.metric,
            full(row.value),
            row.expected,
            row.provenance,
            row.verdict
        )?;
    }
    crate::cache::write_atomic(path, &out)
}

pub fn write_json<D: serde::Serialize>(path: &Path, doc: &D) -> Result<(), CliError> {
    let bytes = serde_json::to_vec_pretty(doc)?;
    crate::cache::write_atomic(path, &bytes)
}

pub fn verdict_str(report: &ExperimentReport) -> &'static str {
    if report.passed() {
        "PASS"
    } else if report
        .rows
        .iter()
        .any(|r| r.verdict == Verdict::Inconclusive)
    {
        "INCONCLUSIVE"
    } else {
        "FAIL"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn human_formatting() {
        assert_eq!(human(3.141592653589793), "3.14159");
        assert_eq!(human(0.060466763), "0.0604668");
        assert_eq!(human(12345.678), "12345.7");
        assert_eq!(human(1.23456789e-8), "1.23457e-8");
        assert_eq!(human(0.0), "0");
    }

    #[test]
    fn full_round_trips() {
        for v in [std::f64::consts::PI, 1.0 / 3.0, 2.018235950991709] {
            let s = full(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(v, back);
        }
    }
}
