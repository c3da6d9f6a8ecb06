//! Output formatting: fixed-precision numbers and SVG scatter plots.

use std::fmt::Write as _;

use nalgebra::DMatrix;

/// Points drawn per plot; larger inputs are thinned with a fixed stride.
pub const MAX_PLOT_POINTS: usize = 6000;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

/// `x` with `digits` significant digits, in plain notation when reasonable.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{}", if x == 0.0 { 0.0 } else { x });
    }
    let magnitude = x.abs().log10().floor() as i64;
    let decimals = digits as i64 - 1 - magnitude;
    if (0..=20).contains(&decimals) {
        format!("{x:.*}", decimals as usize)
    } else if decimals < 0 && magnitude < 21 {
        format!("{x:.0}")
    } else {
        format!("{x:.*e}", digits - 1)
    }
}

/// Scatter of the first two columns of `points` (or row index against the
/// only column for 1-D data), colored by `labels`, with `centers` drawn as
/// crosses in the same coordinates.
pub fn scatter_svg(
    title: &str,
    points: &DMatrix<f64>,
    labels: &[usize],
    centers: &[(f64, f64)],
) -> String {
    let coords = |r: usize| -> (f64, f64) {
        if points.ncols() >= 2 {
            (points[(r, 0)], points[(r, 1)])
        } else {
            (r as f64, points[(r, 0)])
        }
    };
    let stride = points.nrows().div_ceil(MAX_PLOT_POINTS).max(1);
    let rows: Vec<usize> = (0..points.nrows()).step_by(stride).collect();

    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for (x, y) in rows
        .iter()
        .map(|&r| coords(r))
        .chain(centers.iter().copied())
    {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    let (w, h, pad) = (640.0, 480.0, 40.0);
    let sx = |x: f64| pad + (x - x0) / (x1 - x0).max(1e-12) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - y0) / (y1 - y0).max(1e-12) * (h - 2.0 * pad);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        w / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r##"<rect x="{pad}" y="{pad}" width="{}" height="{}" fill="none" stroke="#444"/>"##,
        w - 2.0 * pad,
        h - 2.0 * pad
    );
    for &r in &rows {
        let (x, y) = coords(r);
        let color = PALETTE[labels.get(r).copied().unwrap_or(0) % PALETTE.len()];
        let _ = writeln!(
            s,
            r#"<circle cx="{:.1}" cy="{:.1}" r="1.5" fill="{color}" fill-opacity="0.6"/>"#,
            sx(x),
            sy(y)
        );
    }
    for (x, y) in centers {
        let (cx, cy) = (sx(*x), sy(*y));
        let _ = writeln!(
            s,
            r#"<path d="M{:.1} {:.1}L{:.1} {:.1}M{:.1} {:.1}L{:.1} {:.1}" stroke="black" stroke-width="3"/>"#,
            cx - 7.0,
            cy - 7.0,
            cx + 7.0,
            cy + 7.0,
            cx - 7.0,
            cy + 7.0,
            cx + 7.0,
            cy - 7.0
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
