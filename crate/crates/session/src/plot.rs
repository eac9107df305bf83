//! Small SVG renderings for exports.

use std::fmt::Write as _;

use neuroswarm_core::glm::contrast::ProbeMap;

const SIZE: f64 = 480.0;
const MARGIN: f64 = 40.0;

/// Channels as circles at their probe positions; red for positive t, blue
/// for negative, opacity by magnitude, black ring when significant.
pub fn probe_map_svg(map: &ProbeMap<f64>) -> String {
    let xs = map.entries.iter().map(|e| e.x);
    let ys = map.entries.iter().map(|e| e.y);
    let (x0, x1) = (xs.clone().fold(f64::INFINITY, f64::min), xs.fold(f64::NEG_INFINITY, f64::max));
    let (y0, y1) = (ys.clone().fold(f64::INFINITY, f64::min), ys.fold(f64::NEG_INFINITY, f64::max));
    let span = (x1 - x0).max(y1 - y0).max(1e-9);
    let scale = (SIZE - 2.0 * MARGIN) / span;

    let mut out = format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    out.push('\n');
    out.push_str(r#"<rect width="100%" height="100%" fill="white"/>"#);
    out.push('\n');
    for e in &map.entries {
        let cx = MARGIN + (e.x - x0) * scale;
        // y grows upwards in layout units
        let cy = SIZE - MARGIN - (e.y - y0) * scale;
        let fill = if e.t >= 0.0 { "#d62728" } else { "#1f77b4" };
        let stroke = if e.significant { r#" stroke="black" stroke-width="2""# } else { "" };
        let _ = writeln!(
            out,
            r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="12" fill="{fill}" fill-opacity="{:.3}"{stroke}><title>ch{} {} t={:.3}</title></circle>"#,
            0.15 + 0.85 * e.magnitude,
            e.channel,
            e.region.as_str(),
            e.t
        );
        let _ = writeln!(
            out,
            r#"<text x="{cx:.2}" y="{:.2}" font-size="9" text-anchor="middle" font-family="sans-serif">{}</text>"#,
            cy + 3.0,
            e.channel
        );
    }
    out.push_str("</svg>\n");
    out
}

/// A single polyline of `(x, y)` points with axis labels.
pub fn line_chart_svg(points: &[(f64, f64)], x_label: &str, y_label: &str) -> String {
    let (x0, x1) = bounds(points.iter().map(|p| p.0));
    let (y0, y1) = bounds(points.iter().map(|p| p.1));
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (SIZE - 2.0 * MARGIN);
    let sy = |y: f64| SIZE - MARGIN - (y - y0) / (y1 - y0) * (SIZE - 2.0 * MARGIN);
    let path: Vec<String> = points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
    let mut out = format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    out.push('\n');
    let _ = writeln!(
        out,
        r#"<polyline points="{}" fill="none" stroke="black" stroke-width="1.5"/>"#,
        path.join(" ")
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.0}" y="{:.0}" font-size="12" text-anchor="middle" font-family="sans-serif">{x_label} ({x0:.2}..{x1:.2})</text>"#,
        SIZE / 2.0,
        SIZE - 10.0
    );
    let _ = writeln!(
        out,
        r#"<text x="12" y="{:.0}" font-size="12" font-family="sans-serif" transform="rotate(-90 12 {:.0})" text-anchor="middle">{y_label} ({y0:.3}..{y1:.3})</text>"#,
        SIZE / 2.0,
        SIZE / 2.0
    );
    out.push_str("</svg>\n");
    out
}

fn bounds(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let lo = values.clone().fold(f64::INFINITY, f64::min);
    let hi = values.fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}
