//! CSV and text-report emission. Files are written atomically (temp file
//! plus rename) and contain no timestamps, so reruns are byte-identical.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use oscdf_core::error::{Error, Result};
use oscdf_core::metrics::{ComparisonReport, WaveformMetrics};
use oscdf_core::predict::PredictionReport;
use oscdf_core::sim::Trajectory;

/// Shortest round-trip decimal form of a float.
pub fn fmt(v: f64) -> String {
    format!("{v}")
}

/// Write an RFC-4180-style CSV (comma separators, `\n` line endings).
pub fn emit_csv(header: &[&str], rows: &[Vec<String>], path: &Path) -> Result<()> {
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::Config(format!(
                "ragged CSV row: {} fields, header has {}",
                row.len(),
                header.len()
            )));
        }
    }
    let mut body = String::new();
    body.push_str(&header.join(","));
    body.push('\n');
    for row in rows {
        body.push_str(&row.join(","));
        body.push('\n');
    }
    write_atomic(path, body.as_bytes())
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp: PathBuf = path.with_extension("tmp");
    let io = |e: std::io::Error| Error::Config(format!("cannot write {}: {e}", path.display()));
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(io)?;
        }
    }
    let mut f = fs::File::create(&tmp).map_err(io)?;
    f.write_all(bytes).map_err(io)?;
    f.sync_all().ok();
    drop(f);
    fs::rename(&tmp, path).map_err(io)?;
    Ok(())
}

pub fn df_curve_rows(curve: &oscdf_core::df::DfCurve) -> Vec<Vec<String>> {
    curve
        .samples
        .iter()
        .map(|s| vec![fmt(s.amplitude), fmt(s.dc), fmt(s.n.re), fmt(s.n.im)])
        .collect()
}

pub fn trajectory_rows(traj: &Trajectory) -> Vec<Vec<String>> {
    traj.times
        .iter()
        .zip(&traj.states)
        .map(|(t, row)| {
            let mut out = Vec::with_capacity(row.len() + 1);
            out.push(fmt(*t));
            out.extend(row.iter().map(|v| fmt(*v)));
            out
        })
        .collect()
}

pub fn metrics_row(node: &str, m: &WaveformMetrics) -> Vec<String> {
    vec![
        node.to_string(),
        fmt(m.amplitude),
        fmt(m.offset),
        fmt(m.period),
        m.thd.map(fmt).unwrap_or_default(),
    ]
}

pub fn prediction_rows(reports: &[PredictionReport]) -> Vec<Vec<String>> {
    reports
        .iter()
        .map(|r| {
            vec![
                fmt(r.amplitude),
                fmt(r.omega),
                fmt(r.period),
                r.stability.as_str().to_string(),
                fmt(r.residual),
            ]
        })
        .collect()
}

pub fn render_prediction_text(name: &str, reports: &[PredictionReport]) -> String {
    let mut out = format!("oscillator: {name}\n");
    if reports.is_empty() {
        out.push_str("prediction: no oscillation found\n");
        return out;
    }
    for (i, r) in reports.iter().enumerate() {
        out.push_str(&format!("prediction {}:\n", i + 1));
        out.push_str(&format!("  amplitude A* = {}\n", fmt(r.amplitude)));
        out.push_str(&format!(
            "  omega* = {} rad/s (f* = {} Hz, period = {} s)\n",
            fmt(r.omega),
            fmt(r.frequency_hz),
            fmt(r.period)
        ));
        out.push_str(&format!("  stability: {}\n", r.stability.as_str()));
        out.push_str(&format!("  residual: {}\n", fmt(r.residual)));
        if let Some(b) = r.bias {
            out.push_str(&format!("  dc offset B* = {}\n", fmt(b)));
        }
        if !r.node_amplitudes.is_empty() {
            out.push_str("  node amplitudes:\n");
            for (node, amp) in &r.node_amplitudes {
                out.push_str(&format!("    {node} = {}\n", fmt(*amp)));
            }
        }
        for w in &r.warnings {
            out.push_str(&format!("  warning: {w}\n"));
        }
    }
    out
}

pub fn render_metrics_text(rows: &[(String, WaveformMetrics)]) -> String {
    let mut out = String::from("simulation metrics:\n");
    for (node, m) in rows {
        out.push_str(&format!(
            "  {node}: amplitude = {}, offset = {}, period = {} s{}{}\n",
            fmt(m.amplitude),
            fmt(m.offset),
            fmt(m.period),
            m.thd.map(|t| format!(", thd = {}", fmt(t))).unwrap_or_default(),
            if m.steady { "" } else { " [non-steady]" },
        ));
    }
    out
}

pub fn comparison_rows(rep: &ComparisonReport) -> Vec<Vec<String>> {
    rep.rows
        .iter()
        .map(|r| {
            vec![
                r.metric.clone(),
                fmt(r.predicted),
                fmt(r.simulated),
                fmt(r.rel_error),
                fmt(r.tolerance),
                if r.pass { "pass" } else { "fail" }.to_string(),
            ]
        })
        .collect()
}

pub fn render_comparison_text(rep: &ComparisonReport) -> String {
    let mut out = String::from("comparison (prediction vs simulation):\n");
    for r in &rep.rows {
        out.push_str(&format!(
            "  {}: predicted = {}, simulated = {}, rel_error = {} (tol {}): {}\n",
            r.metric,
            fmt(r.predicted),
            fmt(r.simulated),
            fmt(r.rel_error),
            fmt(r.tolerance),
            if r.pass { "PASS" } else { "FAIL" }
        ));
    }
    out
}
