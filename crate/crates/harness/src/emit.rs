//! Writing results as CSV, JSON and SVG.

use std::fmt::Write as _;
use std::io::Write;

use crate::error::Result;
use crate::experiment::{Results, Row, Summary};

/// One CSV line per row, with a header.
pub fn write_csv<W: Write>(rows: &[Row], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Config, rows and summary as one pretty-printed JSON document.
pub fn write_json<W: Write>(results: &Results, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, results)?;
    writeln!(out)?;
    Ok(())
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 48.0;
const COLORS: &[&str] = &[
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

/// Mean volume against time, one line per method, dashed when the method
/// only holds at a fixed time. Audit runs plot stopping-time histograms.
pub fn render_svg(summary: &Summary) -> String {
    let audit = summary.methods.iter().any(|m| m.stop.is_some());
    let series: Vec<(&str, bool, Vec<f64>)> = summary
        .methods
        .iter()
        .map(|m| {
            let ys = match &m.stop {
                Some(s) => s.histogram.iter().map(|&c| c as f64).collect(),
                None => m.volume.clone(),
            };
            (m.method.as_str(), m.time_uniform, ys)
        })
        .collect();
    let n = series.iter().map(|s| s.2.len()).max().unwrap_or(0).max(2);
    let y_max = if audit {
        series
            .iter()
            .flat_map(|s| s.2.iter().copied())
            .fold(1.0, f64::max)
    } else {
        1.0
    };
    let x = |i: usize| MARGIN + (WIDTH - 2.0 * MARGIN) * i as f64 / (n - 1) as f64;
    let y = |v: f64| HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * v / y_max;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    let (x_label, y_label) = if audit {
        ("stopping time bin", "permutations")
    } else {
        ("t", "relative volume")
    };
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{x_label}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="12" y="{}" transform="rotate(-90 12 {})" text-anchor="middle">{y_label}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    for (i, (name, uniform, ys)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let points: Vec<String> = ys
            .iter()
            .enumerate()
            .map(|(t, &v)| format!("{:.2},{:.2}", x(t), y(v)))
            .collect();
        let dash = if *uniform {
            ""
        } else {
            r#" stroke-dasharray="6 4""#
        };
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
            points.join(" ")
        );
        let ly = MARGIN + 16.0 + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{ly}" fill="{color}">{name}</text>"#,
            WIDTH - MARGIN - 90.0
        );
    }
    s.push_str("</svg>\n");
    s
}
