//! Minimal deterministic SVG charts: axes, polylines, points and labels.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 56.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn fit(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Self {
        let span = |it: &mut dyn Iterator<Item = f64>| {
            let (lo, hi) = it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
            match (lo.is_finite(), (hi - lo).abs() > 1e-12) {
                (false, _) => (0.0, 1.0),
                (true, false) => (lo - 0.5, hi + 0.5),
                (true, true) => (lo, hi),
            }
        };
        Frame { x: span(&mut xs.clone()), y: span(&mut ys.clone()) }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn open(title: &str, x_label: &str, y_label: &str, frame: &Frame) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title));
    let (x0, x1, y0, y1) = (MARGIN, WIDTH - MARGIN, HEIGHT - MARGIN, MARGIN);
    let _ = writeln!(s, r#"<path d="M{x0} {y1} L{x0} {y0} L{x1} {y0}" stroke="black" fill="none"/>"#);
    for (v, anchor_x) in [(frame.x.0, x0), (frame.x.1, x1)] {
        let _ = writeln!(s, r#"<text x="{anchor_x}" y="{}" text-anchor="middle">{v:.2}</text>"#, y0 + 16.0);
    }
    for (v, anchor_y) in [(frame.y.0, y0), (frame.y.1, y1)] {
        let _ = writeln!(s, r#"<text x="{}" y="{anchor_y}" text-anchor="end">{v:.3}</text>"#, x0 - 4.0);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - 12.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
    s
}

fn polyline(frame: &Frame, points: &[(f64, f64)], color: &str, dashed: bool) -> String {
    let coords: Vec<String> = points.iter().map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y))).collect();
    let dash = if dashed { r#" stroke-dasharray="5 3""# } else { "" };
    format!(r#"<polyline points="{}" stroke="{color}" fill="none" stroke-width="1.5"{dash}/>"#, coords.join(" ")) + "\n"
}

/// Series as a line with point markers, plus an optional dashed curve.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, points: &[(f64, f64)], curve: Option<&dyn Fn(f64) -> f64>) -> String {
    let curve_points: Vec<(f64, f64)> = match (curve, points.first(), points.last()) {
        (Some(f), Some(&(lo, _)), Some(&(hi, _))) => (0..=60).map(|i| lo + (hi - lo) * f64::from(i) / 60.0).map(|x| (x, f(x))).collect(),
        _ => Vec::new(),
    };
    let all = points.iter().chain(&curve_points);
    let frame = Frame::fit(all.clone().map(|p| p.0), all.map(|p| p.1));
    let mut s = open(title, x_label, y_label, &frame);
    s += &polyline(&frame, points, PALETTE[0], false);
    for &(x, y) in points {
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{}"/>"#, frame.px(x), frame.py(y), PALETTE[0]);
    }
    if !curve_points.is_empty() {
        s += &polyline(&frame, &curve_points, PALETTE[1], true);
    }
    s + "</svg>\n"
}

/// Points coloured by group.
pub fn scatter(title: &str, points: &[(f64, f64, usize)]) -> String {
    let frame = Frame::fit(points.iter().map(|p| p.0), points.iter().map(|p| p.1));
    let mut s = open(title, "x", "y", &frame);
    for &(x, y, g) in points {
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}"/>"#, frame.px(x), frame.py(y), PALETTE[g % PALETTE.len()]);
    }
    s + "</svg>\n"
}

/// Horizontal bars centred on zero, one labelled row per entry.
pub fn bar_chart(title: &str, bars: &[(String, f64)]) -> String {
    let row = 16.0;
    let height = MARGIN + row * bars.len().max(1) as f64 + 20.0;
    let max = bars.iter().map(|b| b.1.abs()).fold(0.0, f64::max).max(1e-12);
    let (mid, half) = (WIDTH / 2.0 + 60.0, WIDTH / 2.0 - 100.0);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{height}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title));
    for (i, (label, v)) in bars.iter().enumerate() {
        let y = MARGIN + row * i as f64;
        let w = v.abs() / max * half;
        let x = if *v >= 0.0 { mid } else { mid - w };
        let color = if *v >= 0.0 { PALETTE[0] } else { PALETTE[1] };
        let _ = writeln!(s, r#"<rect x="{x:.2}" y="{:.2}" width="{w:.2}" height="{:.2}" fill="{color}"/>"#, y - 11.0, row - 4.0);
        let _ = writeln!(s, r#"<text x="8" y="{y:.2}">{} ({v:.3})</text>"#, escape(label));
    }
    let _ = writeln!(s, r#"<path d="M{mid} {} L{mid} {}" stroke="black"/>"#, MARGIN - 14.0, height - 20.0);
    s + "</svg>\n"
}
