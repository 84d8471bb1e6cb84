//! Result files: row CSV, JSON run record, plot polylines and an SVG scatter.

use std::fmt::Write as _;
use std::path::Path;

use jcas_core::pareto::{frontier_check, CellInfo, FrontierDiagnostics, ParetoPoint, SweepOutput};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, Result};

#[derive(Serialize)]
struct Row<'a> {
    scenario: &'a str,
    #[serde(rename = "K")]
    k: usize,
    n_tx: usize,
    n_rx: usize,
    p_tx_dbm: f64,
    eirp_dbm: Option<f64>,
    seed: u64,
    alpha: f64,
    mi_bits: Option<f64>,
    fi: Option<f64>,
    power_used: Option<f64>,
    converged: bool,
    iterations: usize,
}

fn row(p: &ParetoPoint) -> Row<'_> {
    let ok = p.error.is_none();
    Row {
        scenario: p.scenario.as_str(),
        k: p.params.k,
        n_tx: p.params.n_tx,
        n_rx: p.params.n_rx(),
        p_tx_dbm: p.params.p_tx_dbm,
        eirp_dbm: p.params.eirp_dbm,
        seed: p.params.seed,
        alpha: p.alpha,
        mi_bits: ok.then_some(p.mi_bits),
        fi: ok.then_some(p.fi),
        power_used: ok.then_some(p.power_used),
        converged: ok && p.report.converged,
        iterations: p.report.outer_iterations,
    }
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    CliError::io(path, std::io::Error::other(e))
}

pub fn write_rows(path: &Path, points: &[ParetoPoint]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for p in points {
        w.serialize(row(p)).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

#[derive(Serialize)]
struct PlotRow {
    cell: usize,
    alpha: f64,
    fi: f64,
    mi_bits: f64,
}

/// Successful points as one `(FI, MI)` polyline per cell, ordered by α.
pub fn write_plot_data(path: &Path, out: &SweepOutput) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for c in 0..out.cells.len() {
        let mut pts = out.cell_points(c);
        pts.retain(|p| p.error.is_none());
        pts.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
        for p in pts {
            let r = PlotRow {
                cell: c,
                alpha: p.alpha,
                fi: p.fi,
                mi_bits: p.mi_bits,
            };
            w.serialize(r).map_err(|e| csv_error(path, e))?;
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

#[derive(Serialize)]
pub struct CellDiagnostics {
    pub cell: usize,
    pub frontier: FrontierDiagnostics,
}

pub fn diagnostics(out: &SweepOutput) -> Vec<CellDiagnostics> {
    (0..out.cells.len())
        .map(|c| CellDiagnostics {
            cell: c,
            frontier: frontier_check(&out.cell_points(c)),
        })
        .collect()
}

#[derive(Serialize)]
pub struct RunRecord<'a> {
    pub tool: &'static str,
    pub cli_version: &'static str,
    pub core_version: &'static str,
    pub created_unix_s: u64,
    pub config: &'a RunConfig,
    pub cells: &'a [CellInfo],
    pub diagnostics: &'a [CellDiagnostics],
    pub points: &'a [ParetoPoint],
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("record serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

/// Static FI/MI scatter with one polyline per cell.
pub fn svg(out: &SweepOutput) -> String {
    let (w, h, m) = (640.0, 480.0, 60.0);
    let ok: Vec<&ParetoPoint> = out.points.iter().filter(|p| p.error.is_none()).collect();
    let span = |f: fn(&ParetoPoint) -> f64| {
        let lo = ok.iter().map(|p| f(p)).fold(f64::INFINITY, f64::min);
        let hi = ok.iter().map(|p| f(p)).fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() {
            (0.0, 1.0)
        } else if hi > lo {
            (lo, hi)
        } else {
            (lo - 0.5, hi + 0.5)
        }
    };
    let (x0, x1) = span(|p| p.fi);
    let (y0, y1) = span(|p| p.mi_bits);
    let sx = |v: f64| m + (v - x0) / (x1 - x0) * (w - 2.0 * m);
    let sy = |v: f64| h - m - (v - y0) / (y1 - y0) * (h - 2.0 * m);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{m} {} H{} M{m} {} V{m}" stroke="black" fill="none"/>"#,
        h - m,
        w - m,
        h - m
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">FI (trace)</text>"#,
        w / 2.0,
        h - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" transform="rotate(-90 15 {})" text-anchor="middle">MI (bits)</text>"#,
        h / 2.0,
        h / 2.0
    );
    for (v, anchor, x, y) in [
        (x0, "start", m, h - m + 15.0),
        (x1, "end", w - m, h - m + 15.0),
    ] {
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{y}" text-anchor="{anchor}">{v:.4}</text>"#
        );
    }
    for (v, y) in [(y0, h - m), (y1, m)] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{y}" text-anchor="end">{v:.4}</text>"#,
            m - 5.0
        );
    }
    for c in 0..out.cells.len() {
        let color = PALETTE[c % PALETTE.len()];
        let mut pts = out.cell_points(c);
        pts.retain(|p| p.error.is_none());
        pts.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
        let line: Vec<String> = pts
            .iter()
            .map(|p| format!("{:.2},{:.2}", sx(p.fi), sy(p.mi_bits)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" stroke="{color}" fill="none"/>"#,
            line.join(" ")
        );
        for p in &pts {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#,
                sx(p.fi),
                sy(p.mi_bits)
            );
        }
        let q = &out.cells[c].params;
        let label = format!("K={} Nt={} P={}dBm", q.k, q.n_tx, q.p_tx_dbm);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{color}" text-anchor="end">{label}</text>"#,
            w - m,
            m + 15.0 * c as f64
        );
    }
    s.push_str("</svg>\n");
    s
}
