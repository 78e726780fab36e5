use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::CmcCurve;
use crate::error::{ReidError, Result};
use crate::solver::{trace_to_csv, TraceEntry};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_TOP: f64 = 50.0;
const MARGIN_BOTTOM: f64 = 70.0;

/// Files written by [`emit_report`] and anything intentionally skipped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub files: Vec<PathBuf>,
    pub omitted: Vec<String>,
}

pub fn cmc_to_csv(curve: &CmcCurve) -> String {
    let mut out = String::from("rank,rate\n");
    for (k, r) in curve.rates.iter().enumerate() {
        writeln!(out, "{},{:.6}", k + 1, r).unwrap();
    }
    out
}

fn write(dir: &Path, name: &str, body: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, body).map_err(|e| ReidError::io(&path, e))?;
    files.push(path);
    Ok(())
}

/// Writes `cmc.csv` and `cmc.svg`, plus `convergence.csv` and
/// `convergence.svg` when the trace is non-empty.
pub fn emit_report(curve: &CmcCurve, trace: &[TraceEntry], out_dir: &Path) -> Result<Report> {
    fs::create_dir_all(out_dir).map_err(|e| ReidError::io(out_dir, e))?;
    let mut files = Vec::new();
    let mut omitted = Vec::new();
    write(out_dir, "cmc.csv", &cmc_to_csv(curve), &mut files)?;
    let points: Vec<(f64, f64)> = curve
        .rates
        .iter()
        .enumerate()
        .map(|(k, &r)| ((k + 1) as f64, r * 100.0))
        .collect();
    let svg = line_plot("CMC", "Rank", "Matching rate (%)", &points, Some((0.0, 100.0)));
    write(out_dir, "cmc.svg", &svg, &mut files)?;

    if trace.is_empty() {
        omitted.push("convergence.csv and convergence.svg: empty loss trace".to_string());
    } else {
        write(out_dir, "convergence.csv", &trace_to_csv(trace), &mut files)?;
        let points: Vec<(f64, f64)> = trace.iter().map(|e| (e.iteration as f64, e.objective)).collect();
        let svg = line_plot("Convergence", "Iteration", "Objective", &points, None);
        write(out_dir, "convergence.svg", &svg, &mut files)?;
    }
    Ok(Report { files, omitted })
}

fn nice_range(lo: f64, hi: f64) -> (f64, f64) {
    if !(hi > lo) {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        (lo - pad, hi + pad)
    } else {
        (lo, hi)
    }
}

/// Minimal static line chart with labelled axes and five ticks per axis.
fn line_plot(title: &str, x_label: &str, y_label: &str, points: &[(f64, f64)], y_range: Option<(f64, f64)>) -> String {
    let (x_lo, x_hi) = nice_range(
        points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min),
        points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max),
    );
    let (y_lo, y_hi) = y_range.unwrap_or_else(|| {
        nice_range(
            points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min).min(0.0),
            points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max),
        )
    });
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |x: f64| MARGIN_LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = |y: f64| MARGIN_TOP + (1.0 - (y - y_lo) / (y_hi - y_lo)) * plot_h;
    let bottom = MARGIN_TOP + plot_h;

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<text x="{}" y="30" font-family="sans-serif" font-size="18" text-anchor="middle">{title}</text>"#,
        WIDTH / 2.0
    )
    .unwrap();
    writeln!(
        s,
        r#"<line x1="{MARGIN_LEFT}" y1="{bottom}" x2="{}" y2="{bottom}" stroke="black"/>"#,
        WIDTH - MARGIN_RIGHT
    )
    .unwrap();
    writeln!(
        s,
        r#"<line x1="{MARGIN_LEFT}" y1="{MARGIN_TOP}" x2="{MARGIN_LEFT}" y2="{bottom}" stroke="black"/>"#
    )
    .unwrap();
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let xv = x_lo + f * (x_hi - x_lo);
        let yv = y_lo + f * (y_hi - y_lo);
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
            sx(xv),
            bottom + 20.0,
            tick(xv)
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="end">{}</text>"#,
            MARGIN_LEFT - 8.0,
            sy(yv) + 4.0,
            tick(yv)
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="14" text-anchor="middle">{x_label}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 20.0
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="20" y="{:.2}" font-family="sans-serif" font-size="14" text-anchor="middle" transform="rotate(-90 20 {:.2})">{y_label}</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    )
    .unwrap();
    let path: Vec<String> = points
        .iter()
        .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
        .collect();
    writeln!(
        s,
        r#"<polyline fill="none" stroke="steelblue" stroke-width="2" points="{}"/>"#,
        path.join(" ")
    )
    .unwrap();
    s.push_str("</svg>\n");
    s
}

fn tick(v: f64) -> String {
    if v.abs() >= 100.0 || v == v.round() {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}
