//! CSV, JSON and SVG output.
//!
//! - `{solver}_seed{seed}.csv`: `iter,error_sq,loss_1,…,loss_n`
//! - `aggregate.csv`: `solver,iter,mean,std,runs`
//! - `report.json`
//! - `aggregate.svg` (optional): log-log mean curves

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use perfgame_core::Trajectory;
use serde::Serialize;

use crate::error::{HarnessError, Result};
use crate::experiment::{aggregate, AggregatePoint};

pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const REPORT_FILE: &str = "report.json";
pub const PLOT_FILE: &str = "aggregate.svg";

pub fn trajectory_file_name(t: &Trajectory) -> String {
    format!("{}_seed{}.csv", t.solver, t.seed)
}

fn write_trajectory(path: &Path, t: &Trajectory) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| HarnessError::csv(path, e))?;
    let players = t.records.first().map_or(0, |r| r.losses.len());
    let mut header = vec!["iter".to_string(), "error_sq".to_string()];
    header.extend((1..=players).map(|i| format!("loss_{i}")));
    w.write_record(&header).map_err(|e| HarnessError::csv(path, e))?;
    for r in &t.records {
        let mut row = vec![r.iter.to_string(), r.error_sq.to_string()];
        row.extend(r.losses.iter().map(|v| v.to_string()));
        w.write_record(&row).map_err(|e| HarnessError::csv(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

fn write_aggregate(path: &Path, points: &[AggregatePoint]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| HarnessError::csv(path, e))?;
    w.write_record(["solver", "iter", "mean", "std", "runs"]).map_err(|e| HarnessError::csv(path, e))?;
    for p in points {
        let row = [p.solver.clone(), p.iter.to_string(), p.mean.to_string(), p.std.to_string(), p.runs.to_string()];
        w.write_record(&row).map_err(|e| HarnessError::csv(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

/// Writes every artifact into `outdir` (created if missing) and returns the
/// paths in the order written.
pub fn emit_artifacts(trajectories: &[Trajectory], report: &impl Serialize, outdir: &Path, plots: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(outdir).map_err(|e| HarnessError::io(outdir, e))?;
    let mut written = Vec::new();
    for t in trajectories {
        let path = outdir.join(trajectory_file_name(t));
        write_trajectory(&path, t)?;
        written.push(path);
    }
    let points = aggregate(trajectories);
    let path = outdir.join(AGGREGATE_FILE);
    write_aggregate(&path, &points)?;
    written.push(path);

    let path = outdir.join(REPORT_FILE);
    let mut json = serde_json::to_string_pretty(report).expect("report serializes");
    json.push('\n');
    fs::write(&path, json).map_err(|e| HarnessError::io(&path, e))?;
    written.push(path);

    if plots {
        let path = outdir.join(PLOT_FILE);
        fs::write(&path, svg_loglog(&points)).map_err(|e| HarnessError::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

/// Reads `(iter, error_sq)` back from a trajectory CSV.
pub fn read_error_curve(path: &Path) -> Result<Vec<(usize, f64)>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| HarnessError::csv(path, e))?;
    let mut out = Vec::new();
    for row in r.records() {
        let row = row.map_err(|e| HarnessError::csv(path, e))?;
        let bad = |what: &str| HarnessError::Config(format!("{}: bad {what} in row {:?}", path.display(), row));
        let iter = row.get(0).and_then(|v| v.parse().ok()).ok_or_else(|| bad("iter"))?;
        let err = row.get(1).and_then(|v| v.parse().ok()).ok_or_else(|| bad("error_sq"))?;
        out.push((iter, err));
    }
    Ok(out)
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Log-log line plot of the mean curves; points with `iter = 0` or a
/// non-positive mean are dropped.
pub fn svg_loglog(points: &[AggregatePoint]) -> String {
    let (w, h, m) = (640.0, 420.0, 60.0);
    let mut curves: Vec<(&str, Vec<(f64, f64)>)> = Vec::new();
    for p in points {
        if p.iter == 0 || !(p.mean > 0.0) || !p.mean.is_finite() {
            continue;
        }
        let xy = ((p.iter as f64).log10(), p.mean.log10());
        match curves.last_mut() {
            Some((name, pts)) if *name == p.solver => pts.push(xy),
            _ => curves.push((&p.solver, vec![xy])),
        }
    }
    let all = curves.iter().flat_map(|c| c.1.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x.floor());
        x1 = x1.max(x.ceil());
        y0 = y0.min(y.floor());
        y1 = y1.max(y.ceil());
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{m} {m} V{} H{}" fill="none" stroke="black"/>"#,
        h - m,
        w - m
    );
    for k in x0 as i64..=x1 as i64 {
        let x = sx(k as f64);
        let _ = writeln!(s, r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">1e{k}</text>"#, h - m + 18.0);
    }
    for k in y0 as i64..=y1 as i64 {
        let y = sy(k as f64);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{y:.1}" text-anchor="end">1e{k}</text>"#, m - 6.0);
    }
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">iteration</text>"#, w / 2.0, h - 12.0);
    let _ = writeln!(s, r#"<text x="14" y="{:.1}" transform="rotate(-90 14 {:.1})" text-anchor="middle">mean squared error</text>"#, h / 2.0, h / 2.0);
    for (k, (name, pts)) in curves.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#, coords.join(" "));
        let ly = m + 16.0 * k as f64;
        let _ = writeln!(s, r#"<text x="{:.1}" y="{ly:.1}" fill="{colour}">{name}</text>"#, w - m - 80.0);
    }
    s.push_str("</svg>\n");
    s
}
