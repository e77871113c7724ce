//! Trajectory CSV to SVG 1.1: one polyline per coordinate with its error band.

use std::fmt::Write;
use std::path::Path;

use crate::CliError;

pub struct Trajectory {
    pub coords: Vec<String>,
    pub rows: Vec<Row>,
}

pub struct Row {
    pub t: f64,
    pub x: Vec<f64>,
    pub err: f64,
}

fn malformed(path: &Path, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{}: malformed trajectory CSV: {msg}", path.display()))
}

/// Reads `t, coord..., certified_error` rows.
pub fn read_trajectory(path: &Path) -> Result<Trajectory, CliError> {
    let mut r = csv::ReaderBuilder::new()
        .from_path(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let header: Vec<String> = r.headers().map_err(|e| malformed(path, e))?.iter().map(str::to_string).collect();
    if header.len() < 3 || header[0] != "t" || header[header.len() - 1] != "certified_error" {
        return Err(malformed(path, "expected columns t, coordinates..., certified_error"));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| malformed(path, e))?;
        let vals = rec
            .iter()
            .map(|f| f.trim().parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| malformed(path, format!("row {} has a non-numeric field", i + 1)))?;
        let err = vals[vals.len() - 1];
        if err < 0.0 {
            return Err(malformed(path, format!("row {} has a negative error", i + 1)));
        }
        rows.push(Row { t: vals[0], x: vals[1..vals.len() - 1].to_vec(), err });
    }
    if rows.is_empty() {
        return Err(CliError::Config(format!("{}: empty trajectory, nothing to plot", path.display())));
    }
    Ok(Trajectory { coords: header[1..header.len() - 1].to_vec(), rows })
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 56.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub fn render_svg(traj: &Trajectory, title: &str) -> String {
    let (t_lo, t_hi) = bounds(traj.rows.iter().map(|r| r.t));
    let (y_lo, y_hi) = bounds(traj.rows.iter().flat_map(|r| r.x.iter().flat_map(move |x| [x - r.err, x + r.err])));
    let sx = |t: f64| MARGIN + (t - t_lo) / (t_hi - t_lo) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y_lo) / (y_hi - y_lo) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{:.1}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#, WIDTH / 2.0, escape(title));
    let (x0, x1, y0, y1) = (MARGIN, WIDTH - MARGIN, HEIGHT - MARGIN, MARGIN);
    let _ = writeln!(s, r#"<path d="M{x0:.1} {y1:.1} L{x0:.1} {y0:.1} L{x1:.1} {y0:.1}" fill="none" stroke="black"/>"#);
    for (v, x) in [(t_lo, x0), (t_hi, x1)] {
        let _ = writeln!(s, r#"<text x="{x:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#, y0 + 16.0, fmt_tick(v));
    }
    for (v, y) in [(y_lo, y0), (y_hi, y1)] {
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#, x0 - 6.0, y + 4.0, fmt_tick(v));
    }
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle">t</text>"#, WIDTH / 2.0, HEIGHT - 16.0);

    for (k, name) in traj.coords.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let upper = traj.rows.iter().map(|r| (sx(r.t), sy(r.x[k] + r.err)));
        let lower = traj.rows.iter().rev().map(|r| (sx(r.t), sy(r.x[k] - r.err)));
        let band: Vec<String> = upper.chain(lower).map(|(a, b)| format!("{a:.2},{b:.2}")).collect();
        let _ = writeln!(s, r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#, band.join(" "));
        let line: Vec<String> = traj.rows.iter().map(|r| format!("{:.2},{:.2}", sx(r.t), sy(r.x[k]))).collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, line.join(" "));
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" fill="{color}">{}</text>"#,
            x1 + 6.0,
            y1 + 14.0 * (k as f64 + 1.0),
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

fn fmt_tick(v: f64) -> String {
    format!("{v:.3}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
