//! Minimal SVG: scatter of the joint winding points with the contour
//! `A^{1/2}·{|u| = 1}` overlaid.

use std::fmt::Write;

use noisewalk::Cov2;

use crate::output::SCHEMA_VERSION;

const SIZE: f64 = 480.0;
const MARGIN: f64 = 20.0;
/// Points drawn at most; the rest only enter the CSV statistics.
const MAX_POINTS: usize = 2000;
const CONTOUR_SEGMENTS: usize = 180;

pub fn ellipse_scatter(points: &[(f64, f64)], predicted: &Cov2, title: &str) -> String {
    let root = predicted.sqrt();
    let contour: Vec<(f64, f64)> = (0..=CONTOUR_SEGMENTS)
        .map(|k| {
            let a = std::f64::consts::TAU * k as f64 / CONTOUR_SEGMENTS as f64;
            root.apply(a.cos(), a.sin())
        })
        .collect();
    let shown = &points[..points.len().min(MAX_POINTS)];
    let extent = shown
        .iter()
        .chain(&contour)
        .flat_map(|&(x, y)| [x.abs(), y.abs()])
        .filter(|v| v.is_finite())
        .fold(1e-9, f64::max)
        * 1.05;
    let half = SIZE / 2.0;
    let scale = (half - MARGIN) / extent;
    let px = |x: f64| half + x * scale;
    let py = |y: f64| half - y * scale;

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}" data-schema-version="{SCHEMA_VERSION}">"#
    )
    .unwrap();
    writeln!(s, "<title>{}</title>", escape(title)).unwrap();
    writeln!(
        s,
        r##"<line x1="{MARGIN}" y1="{half}" x2="{}" y2="{half}" stroke="#999"/><line x1="{half}" y1="{MARGIN}" x2="{half}" y2="{}" stroke="#999"/>"##,
        SIZE - MARGIN,
        SIZE - MARGIN
    )
    .unwrap();
    s.push_str(r##"<g fill="#1f77b4" fill-opacity="0.35">"##);
    for &(x, y) in shown {
        if x.is_finite() && y.is_finite() {
            write!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="1.5"/>"#, px(x), py(y)).unwrap();
        }
    }
    s.push_str("</g>\n");
    let path: Vec<String> = contour
        .iter()
        .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
        .collect();
    writeln!(
        s,
        r##"<polyline fill="none" stroke="#d62728" stroke-width="2" points="{}"/>"##,
        path.join(" ")
    )
    .unwrap();
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
