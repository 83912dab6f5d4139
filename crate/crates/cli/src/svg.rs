//! Static SVG phase portraits.
//!
//! Output is a pure function of the scene: layers are drawn in a fixed order,
//! polylines in insertion order, and every coordinate is printed with six
//! significant digits.

use std::fmt::Write;

use num_complex::Complex64;

const SIZE: f64 = 600.0;

/// Square viewing window in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub center: Complex64,
    pub half_width: f64,
}

impl Window {
    pub fn contains(&self, z: Complex64) -> bool {
        (z.re - self.center.re).abs() <= self.half_width && (z.im - self.center.im).abs() <= self.half_width
    }

    fn to_px(self, z: Complex64) -> (f64, f64) {
        let scale = SIZE / (2.0 * self.half_width);
        ((z.re - self.center.re + self.half_width) * scale, (self.center.im + self.half_width - z.im) * scale)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Layer {
    Segment,
    LevelCurve,
    Trajectory,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pub layer: Layer,
    pub points: Vec<Complex64>,
    /// Drawn in the accent colour, e.g. trajectories that blow up.
    pub highlight: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarkerKind {
    Zero,
    Seed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Marker {
    pub z: Complex64,
    pub kind: MarkerKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvgScene {
    pub window: Window,
    pub polylines: Vec<Polyline>,
    pub markers: Vec<Marker>,
    pub legend: Vec<String>,
}

impl SvgScene {
    pub fn new(window: Window) -> Self {
        SvgScene { window, polylines: Vec::new(), markers: Vec::new(), legend: Vec::new() }
    }
}

/// Six significant digits, fixed notation, trailing zeros trimmed.
pub fn fmt6(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return "0".into();
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(0) as usize;
    let factor = 10f64.powi(magnitude - 5);
    let rounded = if magnitude > 5 { (v / factor).round() * factor } else { v };
    let mut s = format!("{rounded:.decimals$}");
    if s.contains('.') {
        s = s.trim_end_matches('0').trim_end_matches('.').to_string();
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

/// Liang–Barsky clip of `a → b` to the window; returns the visible part.
fn clip(w: &Window, a: Complex64, b: Complex64) -> Option<(Complex64, Complex64)> {
    let d = b - a;
    let (xmin, xmax) = (w.center.re - w.half_width, w.center.re + w.half_width);
    let (ymin, ymax) = (w.center.im - w.half_width, w.center.im + w.half_width);
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for (p, q) in [(-d.re, a.re - xmin), (d.re, xmax - a.re), (-d.im, a.im - ymin), (d.im, ymax - a.im)] {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
        }
    }
    let at = |t: f64| match t {
        0.0 => a,
        1.0 => b,
        _ => a + d * t,
    };
    (t0 <= t1).then(|| (at(t0), at(t1)))
}

/// Splits a polyline into the runs that are visible in the window.
fn visible_runs(w: &Window, points: &[Complex64]) -> Vec<Vec<Complex64>> {
    let finite: Vec<Complex64> = points.iter().copied().filter(|z| z.re.is_finite() && z.im.is_finite()).collect();
    let mut runs: Vec<Vec<Complex64>> = Vec::new();
    let mut current: Vec<Complex64> = Vec::new();
    if finite.len() == 1 && w.contains(finite[0]) {
        return vec![finite];
    }
    for pair in finite.windows(2) {
        match clip(w, pair[0], pair[1]) {
            Some((p, q)) => {
                if current.last() != Some(&p) {
                    if current.len() > 1 {
                        runs.push(std::mem::take(&mut current));
                    }
                    current = vec![p];
                }
                current.push(q);
                if q != pair[1] {
                    runs.push(std::mem::take(&mut current));
                }
            }
            None => {
                if current.len() > 1 {
                    runs.push(std::mem::take(&mut current));
                }
                current.clear();
            }
        }
    }
    if current.len() > 1 {
        runs.push(current);
    }
    runs
}

fn style(layer: Layer, highlight: bool) -> (&'static str, &'static str) {
    match (layer, highlight) {
        (_, true) => ("#d62728", "1.5"),
        (Layer::Segment, false) => ("#000000", "2"),
        (Layer::LevelCurve, false) => ("#2ca02c", "1.5"),
        (Layer::Trajectory, false) => ("#1f77b4", "1"),
    }
}

pub fn render_svg(scene: &SvgScene) -> String {
    let w = &scene.window;
    let size = fmt6(SIZE);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
    );
    let _ = writeln!(out, r##"<rect x="0" y="0" width="{size}" height="{size}" fill="#ffffff" stroke="#888888"/>"##);
    let (ox, oy) = w.to_px(Complex64::new(0.0, 0.0));
    if (0.0..=SIZE).contains(&ox) {
        let _ = writeln!(out, r##"<line x1="{0}" y1="0" x2="{0}" y2="{size}" stroke="#bbbbbb"/>"##, fmt6(ox));
    }
    if (0.0..=SIZE).contains(&oy) {
        let _ = writeln!(out, r##"<line x1="0" y1="{0}" x2="{size}" y2="{0}" stroke="#bbbbbb"/>"##, fmt6(oy));
    }
    let mut order: Vec<&Polyline> = scene.polylines.iter().collect();
    order.sort_by_key(|p| (p.layer, p.highlight));
    for line in order {
        let (colour, width) = style(line.layer, line.highlight);
        for run in visible_runs(w, &line.points) {
            let pts: Vec<String> = run
                .iter()
                .map(|z| {
                    let (x, y) = w.to_px(*z);
                    format!("{},{}", fmt6(x), fmt6(y))
                })
                .collect();
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{colour}" stroke-width="{width}" points="{}"/>"#,
                pts.join(" ")
            );
        }
    }
    for m in scene.markers.iter().filter(|m| w.contains(m.z)) {
        let (x, y) = w.to_px(m.z);
        let fill = match m.kind {
            MarkerKind::Zero => r##"fill="none" stroke="#000000""##,
            MarkerKind::Seed => r##"fill="#ff7f0e""##,
        };
        let _ = writeln!(out, r#"<circle cx="{}" cy="{}" r="4" {fill}/>"#, fmt6(x), fmt6(y));
    }
    for (i, text) in scene.legend.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text x="8" y="{}" font-family="monospace" font-size="12">{}</text>"#,
            fmt6(18.0 + 16.0 * i as f64),
            escape_xml(text)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn escape_xml(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
