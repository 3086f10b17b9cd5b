//! Report files: per-record CSV, aggregate JSON and a VS-vs-CBB scatter SVG.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use manimkit_core::eval::AggregateReport;
use serde::{Deserialize, Serialize};

use crate::error::{io_err, KitError, KitResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Csv,
    Json,
    Svg,
}

pub const ALL_FORMATS: [ReportFormat; 3] = [ReportFormat::Csv, ReportFormat::Json, ReportFormat::Svg];

pub fn write_csv(report: &AggregateReport, path: &Path) -> KitResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| KitError::Environment(format!("{}: {e}", path.display())))?;
    let fail = |e: csv::Error| KitError::Environment(format!("{}: {e}", path.display()));
    w.write_record(["id", "render_status", "vs", "cbb", "rounds_used", "failure", "error"]).map_err(fail)?;
    for r in &report.per_record {
        w.write_record([
            r.id.as_str(),
            r.render_status.as_str(),
            &r.vs.to_string(),
            &r.cbb.to_string(),
            &r.rounds_used.to_string(),
            r.failure.as_str(),
            r.error.as_deref().unwrap_or(""),
        ])
        .map_err(fail)?;
    }
    w.flush().map_err(io_err(path))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Self-contained SVG: unit square axes, one `<circle>` per record.
pub fn scatter_svg(report: &AggregateReport) -> String {
    let (size, pad) = (400.0, 50.0);
    let x = |v: f64| pad + v.clamp(0.0, 1.0) * size;
    let y = |v: f64| pad + (1.0 - v.clamp(0.0, 1.0)) * size;
    let mut s = String::new();
    let total = size + 2.0 * pad;
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total}" height="{total}" viewBox="0 0 {total} {total}">"#);
    let _ = writeln!(s, r#"<rect x="{pad}" y="{pad}" width="{size}" height="{size}" fill="none" stroke="black"/>"#);
    for t in 1..4 {
        let v = f64::from(t) * 0.25;
        let _ = writeln!(s, r##"<line x1="{}" y1="{pad}" x2="{}" y2="{}" stroke="#ddd"/>"##, x(v), x(v), pad + size);
        let _ = writeln!(s, r##"<line x1="{pad}" y1="{}" x2="{}" y2="{}" stroke="#ddd"/>"##, y(v), pad + size, y(v));
    }
    for v in [0.0, 0.5, 1.0] {
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="11" text-anchor="middle">{v}</text>"#, x(v), pad + size + 15.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{v}</text>"#, pad - 5.0, y(v) + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="13" text-anchor="middle">CBB</text>"#, pad + size / 2.0, total - 10.0);
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" font-size="13" text-anchor="middle" transform="rotate(-90 15 {})">VS</text>"#,
        pad + size / 2.0,
        pad + size / 2.0
    );
    let title = match &report.correlations {
        Some(c) => format!("n={} rho={:.3} tau={:.3}", report.n, c.spearman_rho, c.kendall_tau),
        None => format!("n={}", report.n),
    };
    let _ = writeln!(s, r#"<text x="{}" y="30" font-size="13" text-anchor="middle">{}</text>"#, total / 2.0, escape(&title));
    for r in &report.per_record {
        let fill = if r.render_status.is_success() { "#1f77b4" } else { "#d62728" };
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{fill}" fill-opacity="0.7"><title>{}</title></circle>"#,
            x(r.cbb),
            y(r.vs),
            escape(&r.id)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Writes `per_record.csv`, `aggregate.json` and `scatter.svg` (as selected)
/// into `out_dir`.
pub fn emit_report(report: &AggregateReport, out_dir: &Path, formats: &[ReportFormat]) -> KitResult<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| KitError::Environment(format!("{}: cannot create output directory: {e}", out_dir.display())))?;
    let mut written = Vec::new();
    for f in formats {
        let path = match f {
            ReportFormat::Csv => {
                let p = out_dir.join("per_record.csv");
                write_csv(report, &p)?;
                p
            }
            ReportFormat::Json => {
                let p = out_dir.join("aggregate.json");
                std::fs::write(&p, serde_json::to_string_pretty(report)?).map_err(io_err(&p))?;
                p
            }
            ReportFormat::Svg => {
                let p = out_dir.join("scatter.svg");
                std::fs::write(&p, scatter_svg(report)).map_err(io_err(&p))?;
                p
            }
        };
        written.push(path);
    }
    Ok(written)
}
