//! Minimal SVG rendering of median-error curves.

use std::fmt::Write as _;

use super::stats::{iter_summaries, lambda_summaries};
use super::table::Table;
use crate::error::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#7f7f7f",
];
/// Floor for exact-zero errors on the log axis.
const ERROR_FLOOR: f64 = 1e-16;

/// One labelled curve; points with non-finite coordinates are dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub series: Vec<Series>,
}

/// Median relative error vs λ per level, or vs k per λ.
pub fn plot_spec(table: &Table) -> Result<PlotSpec> {
    match table {
        Table::Lambda(rows) => {
            let mut series: Vec<Series> = Vec::new();
            for s in lambda_summaries(rows)? {
                let label = s.level_desc.clone();
                let p = (s.lambda, s.stats.median);
                match series.iter_mut().find(|c| c.label == label) {
                    Some(c) => c.points.push(p),
                    None => series.push(Series { label, points: vec![p] }),
                }
            }
            Ok(PlotSpec {
                title: "median relative error vs lambda".into(),
                x_label: "lambda".into(),
                y_label: "relative error".into(),
                log_x: true,
                series,
            })
        }
        Table::Iter(rows) => {
            let mut series: Vec<Series> = Vec::new();
            for s in iter_summaries(rows)? {
                let label = format!("lambda={}", s.lambda);
                let p = (s.k as f64, s.stats.median);
                match series.iter_mut().find(|c| c.label == label) {
                    Some(c) => c.points.push(p),
                    None => series.push(Series { label, points: vec![p] }),
                }
            }
            Ok(PlotSpec {
                title: "median relative error vs iteration".into(),
                x_label: "k".into(),
                y_label: "relative error".into(),
                log_x: false,
                series,
            })
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders with a log-scale y axis.
pub fn render_svg(spec: &PlotSpec) -> Result<String> {
    let tx = |x: f64| if spec.log_x { x.log10() } else { x };
    let ty = |y: f64| y.max(ERROR_FLOOR).log10();
    let curves: Vec<(&str, Vec<(f64, f64)>)> = spec
        .series
        .iter()
        .map(|s| {
            let pts = s
                .points
                .iter()
                .filter(|(x, y)| x.is_finite() && y.is_finite() && (!spec.log_x || *x > 0.0))
                .map(|&(x, y)| (tx(x), ty(y)))
                .collect();
            (s.label.as_str(), pts)
        })
        .collect();
    let all = curves.iter().flat_map(|(_, p)| p.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        return Err(Error::EmptyTable);
    }
    if x1 - x0 < 1e-12 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    y0 = y0.floor();
    y1 = y1.ceil().max(y0 + 1.0);
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    let w = &mut svg;
    // writes into a String cannot fail
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(w, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        w,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{}</text>"#,
        WIDTH / 2.0,
        escape(&spec.title)
    );
    let _ = writeln!(
        w,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    let mut decade = y0;
    while decade <= y1 + 1e-9 {
        let y = py(decade);
        let _ = writeln!(
            w,
            r##"<line x1="{MARGIN}" x2="{}" y1="{y:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{}" y="{:.2}" text-anchor="end">1e{}</text>"##,
            WIDTH - MARGIN,
            MARGIN - 4.0,
            y + 4.0,
            decade as i64
        );
        decade += 1.0;
    }
    for i in 0..=4 {
        let x = x0 + (x1 - x0) * i as f64 / 4.0;
        let v = if spec.log_x { 10f64.powf(x) } else { x };
        let _ = writeln!(
            w,
            r#"<text x="{:.2}" y="{}" text-anchor="middle">{:.3}</text>"#,
            px(x),
            HEIGHT - MARGIN + 16.0,
            v
        );
    }
    let _ = writeln!(
        w,
        r#"<text x="{}" y="{}" text-anchor="middle">{}{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 18.0,
        escape(&spec.x_label),
        if spec.log_x { " (log)" } else { "" }
    );
    let _ = writeln!(
        w,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(&spec.y_label)
    );
    for (i, (label, pts)) in curves.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(
            w,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            path.join(" ")
        );
        let ly = MARGIN + 14.0 * (i as f64 + 1.0);
        let _ = writeln!(
            w,
            r#"<text x="{}" y="{ly:.2}" fill="{color}" text-anchor="end">{}</text>"#,
            WIDTH - MARGIN - 6.0,
            escape(label)
        );
    }
    let _ = writeln!(w, "</svg>");
    Ok(svg)
}
