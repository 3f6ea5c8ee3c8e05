//! Deterministic file formats: CSV tables with fixed column orders, JSON
//! sidecars with provenance, and gnuplot scripts per curve. Floats are
//! written with the shortest round-trip representation and a '.' decimal
//! separator; line endings are LF; rerunning a config reproduces the bytes.

use anyhow::{Context, Result};
use lab_core::dyadic::DyadicLedger;
use lab_core::estimators::CostCurve;
use lab_core::torus::ShiftCouplingReport;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path;

pub fn write_text(path: &Path, content: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, content).with_context(|| format!("writing {}", path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

/// CSV with header `replica,point`, one row per sampled point.
pub fn samples_csv(replicas: &[lab_core::PointConfiguration]) -> String {
    let mut out = String::from("replica,point\n");
    for (r, config) in replicas.iter().enumerate() {
        for &x in config.points() {
            let _ = writeln!(out, "{r},{x}");
        }
    }
    out
}

/// CSV with header `n,mean,se,R`.
pub fn curve_csv(curve: &CostCurve) -> String {
    let mut out = String::from("n,mean,se,R\n");
    for pt in &curve.points {
        let _ = writeln!(out, "{},{},{},{}", pt.n, pt.mean, pt.se, curve.replicas);
    }
    out
}

/// CSV with header `level,mean_cbar,se_cbar,mean_increment,bound_term`.
pub fn dyadic_csv(ledger: &DyadicLedger) -> String {
    let mut out = String::from("level,mean_cbar,se_cbar,mean_increment,bound_term\n");
    for level in &ledger.levels {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            level.level, level.mean_cbar, level.se_cbar, level.mean_increment, level.bound_term
        );
    }
    out
}

/// CSV with header `t,lhs_mean,lhs_se,rhs_mean,rhs_se,margin`.
pub fn shift_coupling_csv(report: &ShiftCouplingReport) -> String {
    let mut out = String::from("t,lhs_mean,lhs_se,rhs_mean,rhs_se,margin\n");
    for pt in &report.points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            pt.t, pt.lhs_mean, pt.lhs_se, pt.rhs_mean, pt.rhs_se, pt.margin
        );
    }
    out
}

/// gnuplot script plotting columns 1:2 with error bars from column 3.
pub fn gnuplot_script(csv_name: &str, title: &str, logscale: bool) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "set datafile separator ','");
    let _ = writeln!(out, "set key left top");
    if logscale {
        let _ = writeln!(out, "set logscale xy");
    }
    let _ = writeln!(out, "set xlabel 'n'");
    let _ = writeln!(out, "set title '{title}'");
    let _ = writeln!(
        out,
        "plot '{csv_name}' skip 1 using 1:2:3 with yerrorlines title '{title}'"
    );
    out
}

/// Transport plan JSON: `{cost, l, r, a, b, assignments, params}`.
pub fn plan_json(
    plan: &lab_core::transport::SemicouplingPlan,
    diag: &lab_core::transport::BoundaryDiagnostics,
) -> serde_json::Value {
    serde_json::json!({
        "cost": plan.total_cost,
        "l": plan.l,
        "r": plan.r,
        "a": diag.a,
        "b": diag.b,
        "assignments": plan.assignments,
        "params": {
            "p": plan.p,
            "delta": plan.delta,
            "padding": plan.padding,
            "n": plan.window_n,
            "num_atoms": plan.num_atoms,
        },
    })
}

/// Filesystem-safe slug of a model descriptor.
pub fn slug(s: &str) -> String {
    let mut out: String = s
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect();
    while out.contains("__") {
        out = out.replace("__", "_");
    }
    out.trim_matches('_').to_string()
}
