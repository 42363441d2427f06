use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::phase::PhasePlane;
use super::tracking::{Comparison, TrackingMetrics, TrackingRun, TrackingTrace};
use crate::error::{Error, Result};

pub const TRACE_HEADER: [&str; 6] = ["t", "y_d", "y", "e", "u", "s"];

pub fn write_trace_csv<W: Write>(trace: &TrackingTrace, out: W, decimation: usize) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for i in (0..trace.len()).step_by(decimation.max(1)) {
        w.write_record([
            trace.t[i].to_string(),
            trace.y_d[i].to_string(),
            trace.y[i].to_string(),
            trace.e[i].to_string(),
            trace.u[i].to_string(),
            trace.s[i].to_string(),
        ])?;
    }
    w.flush()
}

/// `key: value` lines, one per metric.
pub fn format_metrics(m: &TrackingMetrics) -> String {
    let mut out = String::new();
    for (k, v) in TrackingMetrics::FIELDS.iter().zip(m.values()) {
        let _ = writeln!(out, "{k}: {v}");
    }
    out
}

/// Ranked table, one row per run.
pub fn format_comparison(cmp: &Comparison) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<4} {:<16} {:>14} {:>14} {:>12} {:>12}",
        "rank", "controller", "rms_error_m", "max_abs_err_m", "effort_v", "chatter_v"
    );
    for (rank, &i) in cmp.ranking.iter().enumerate() {
        let r = &cmp.runs[i];
        let m = &r.metrics;
        let _ = writeln!(
            out,
            "{:<4} {:<16} {:>14.6e} {:>14.6e} {:>12.4} {:>12.4}",
            rank + 1,
            r.label,
            m.rms_error_m,
            m.max_abs_error_m,
            m.control_effort_rms_v,
            m.chatter_index_v
        );
    }
    out
}

fn write_comparison_csv<W: Write>(cmp: &Comparison, out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["rank".to_string(), "controller".to_string()];
    header.extend(TrackingMetrics::FIELDS.iter().map(|s| s.to_string()));
    w.write_record(&header)?;
    for (rank, &i) in cmp.ranking.iter().enumerate() {
        let r = &cmp.runs[i];
        let mut row = vec![(rank + 1).to_string(), r.label.clone()];
        row.extend(r.metrics.values().iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()
}

/// `t,y_d,e_<label>,u_<label>,...` on the shared time base.
fn write_aligned_csv<W: Write>(cmp: &Comparison, out: W, decimation: usize) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string(), "y_d".to_string()];
    for r in &cmp.runs {
        header.push(format!("e_{}", r.label));
        header.push(format!("u_{}", r.label));
    }
    w.write_record(&header)?;
    let n = cmp.runs.iter().map(|r| r.trace.len()).min().unwrap_or(0);
    for i in (0..n).step_by(decimation.max(1)) {
        let base = &cmp.runs[0].trace;
        let mut row = vec![base.t[i].to_string(), base.y_d[i].to_string()];
        for r in &cmp.runs {
            row.push(r.trace.e[i].to_string());
            row.push(r.trace.u[i].to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()
}

/// Stand-alone matplotlib script plotting error and input from a trace CSV
/// with `t`, `e_*`/`e` and `u_*`/`u` columns.
pub fn plot_script(csv_name: &str, title: &str) -> String {
    format!(
        r#"#!/usr/bin/env python3
import csv
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
path = sys.argv[1] if len(sys.argv) > 1 else os.path.join(here, "{csv_name}")
with open(path, newline="") as f:
    rows = list(csv.DictReader(f))
if not rows:
    sys.exit("no samples in " + path)
cols = list(rows[0].keys())
t = [float(r["t"]) for r in rows]
fig, (ax_e, ax_u) = plt.subplots(2, 1, sharex=True, figsize=(8, 6))
for c in cols:
    if c == "e" or c.startswith("e_"):
        ax_e.plot(t, [float(r[c]) * 1e3 for r in rows], label=c[2:] or "e", linewidth=0.8)
    if c == "u" or c.startswith("u_"):
        ax_u.plot(t, [float(r[c]) for r in rows], label=c[2:] or "u", linewidth=0.8)
ax_e.set_ylabel("tracking error (mm)")
ax_u.set_ylabel("input (V)")
ax_u.set_xlabel("t (s)")
ax_e.legend(loc="upper right")
ax_u.legend(loc="upper right")
ax_e.set_title("{title}")
fig.tight_layout()
out = os.path.splitext(path)[0] + ".png"
fig.savefig(out, dpi=150)
print(out)
"#
    )
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(std::io::BufWriter::new(f))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes `<prefix>trace.csv`, `<prefix>metrics.txt` and optionally
/// `<prefix>plot.py` into `dir`. Returns the written paths.
pub fn emit_outputs(
    run: &TrackingRun,
    dir: &Path,
    prefix: &str,
    decimation: usize,
    plot: bool,
) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let trace_name = format!("{prefix}trace.csv");
    let trace_path = dir.join(&trace_name);
    write_trace_csv(&run.trace, create(&trace_path)?, decimation).map_err(|e| Error::io(&trace_path, e))?;
    let metrics_path = dir.join(format!("{prefix}metrics.txt"));
    write_text(&metrics_path, &format_metrics(&run.metrics))?;
    let mut paths = vec![trace_path, metrics_path];
    if plot {
        let plot_path = dir.join(format!("{prefix}plot.py"));
        write_text(&plot_path, &plot_script(&trace_name, &run.label))?;
        paths.push(plot_path);
    }
    Ok(paths)
}

/// Writes `comparison.txt`, `comparison.csv`, the aligned `compare_trace.csv`
/// and optionally `compare_plot.py`.
pub fn emit_comparison(cmp: &Comparison, dir: &Path, decimation: usize, plot: bool) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let table = dir.join("comparison.txt");
    write_text(&table, &format_comparison(cmp))?;
    let csv_path = dir.join("comparison.csv");
    write_comparison_csv(cmp, create(&csv_path)?).map_err(|e| Error::io(&csv_path, e))?;
    let aligned = dir.join("compare_trace.csv");
    write_aligned_csv(cmp, create(&aligned)?, decimation).map_err(|e| Error::io(&aligned, e))?;
    let mut paths = vec![table, csv_path, aligned];
    if plot {
        let p = dir.join("compare_plot.py");
        write_text(&p, &plot_script("compare_trace.csv", "controller comparison"))?;
        paths.push(p);
    }
    Ok(paths)
}

/// Writes `phase.csv`.
pub fn emit_phase(phase: &PhasePlane, dir: &Path, decimation: usize) -> Result<PathBuf> {
    ensure_dir(dir)?;
    let path = dir.join("phase.csv");
    phase
        .write_csv(create(&path)?, decimation)
        .map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_trace_is_header_only() {
        let mut buf = Vec::new();
        write_trace_csv(&TrackingTrace::default(), &mut buf, 1).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t,y_d,y,e,u,s\n");
    }

    #[test]
    fn metrics_document_has_exactly_the_fields() {
        let m = TrackingMetrics::compute(&TrackingTrace::default(), 1.0, 6.0);
        let text = format_metrics(&m);
        let keys: Vec<&str> = text.lines().map(|l| l.split(':').next().unwrap()).collect();
        assert_eq!(keys, TrackingMetrics::FIELDS);
        let parsed = crate::sysid::parse_key_values(&text).unwrap();
        assert_eq!(parsed["window_end_s"], "6");
    }

    #[test]
    fn plot_script_names_its_csv() {
        let s = plot_script("trace.csv", "smcpmc");
        assert!(s.contains("\"trace.csv\""));
        assert!(s.starts_with("#!/usr/bin/env python3"));
    }
}
