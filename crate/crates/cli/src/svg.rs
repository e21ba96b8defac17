//! Static SVG 1.1 line charts.

use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 450.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            label: label.into(),
            points,
            dashed: false,
        }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }
}

#[derive(Debug, Clone, Default)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_log: bool,
    pub y_log: bool,
    pub series: Vec<Series>,
    /// Horizontal reference lines with labels.
    pub hlines: Vec<(f64, String)>,
    /// Highlighted points with labels.
    pub markers: Vec<(f64, f64, String)>,
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite() && (!log || *v > 0.0)) {
            let v = if log { v.log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 * hi.abs().max(1.0) {
            lo -= 0.5;
            hi += 0.5;
        } else if !log {
            let pad = 0.05 * (hi - lo);
            lo -= pad;
            hi += pad;
        }
        Self { lo, hi, log }
    }

    fn map(&self, v: f64, a: f64, b: f64) -> Option<f64> {
        if !v.is_finite() || (self.log && v <= 0.0) {
            return None;
        }
        let v = if self.log { v.log10() } else { v };
        Some(a + (v - self.lo) / (self.hi - self.lo) * (b - a))
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let first = self.lo.ceil() as i32;
            let last = self.hi.floor() as i32;
            return (first..=last)
                .map(|e| (10f64.powi(e), format!("1e{e}")))
                .collect();
        }
        let raw = (self.hi - self.lo) / 6.0;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0]
            .into_iter()
            .map(|m| m * mag)
            .find(|s| *s >= raw)
            .unwrap_or(10.0 * mag);
        let mut t = (self.lo / step).ceil() * step;
        let mut out = Vec::new();
        while t <= self.hi + 1e-9 * step {
            let v = if t.abs() < 1e-12 * step { 0.0 } else { t };
            out.push((v, format!("{}", (v * 1e6).round() / 1e6)));
            t += step;
        }
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

impl Chart {
    pub fn render(&self) -> String {
        let xs = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().map(|p| p.0))
            .chain(self.markers.iter().map(|m| m.0));
        let ys = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().map(|p| p.1))
            .chain(self.hlines.iter().map(|h| h.0))
            .chain(self.markers.iter().map(|m| m.1));
        let xa = Axis::fit(xs, self.x_log);
        let ya = Axis::fit(ys, self.y_log);
        let (x0, x1) = (LEFT, WIDTH - RIGHT);
        let (y0, y1) = (HEIGHT - BOTTOM, TOP);

        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">
<rect width="100%" height="100%" fill="white"/>
<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            (x0 + x1) / 2.0,
            escape(&self.title)
        );

        for (v, label) in xa.ticks() {
            if let Some(x) = xa.map(v, x0, x1) {
                let _ = writeln!(
                    out,
                    r##"<line x1="{x:.2}" y1="{y0}" x2="{x:.2}" y2="{y1}" stroke="#e0e0e0"/><text x="{x:.2}" y="{}" text-anchor="middle">{label}</text>"##,
                    y0 + 18.0
                );
            }
        }
        for (v, label) in ya.ticks() {
            if let Some(y) = ya.map(v, y0, y1) {
                let _ = writeln!(
                    out,
                    r##"<line x1="{x0}" y1="{y:.2}" x2="{x1}" y2="{y:.2}" stroke="#e0e0e0"/><text x="{}" y="{:.2}" text-anchor="end">{label}</text>"##,
                    x0 - 6.0,
                    y + 4.0
                );
            }
        }
        let _ = writeln!(
            out,
            r#"<rect x="{x0}" y="{y1}" width="{}" height="{}" fill="none" stroke="black"/>
<text x="{}" y="{}" text-anchor="middle">{}</text>
<text x="20" y="{}" text-anchor="middle" transform="rotate(-90 20 {})">{}</text>"#,
            x1 - x0,
            y0 - y1,
            (x0 + x1) / 2.0,
            HEIGHT - 15.0,
            escape(&self.x_label),
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0,
            escape(&self.y_label)
        );

        for (v, label) in &self.hlines {
            if let Some(y) = ya.map(*v, y0, y1) {
                let _ = writeln!(
                    out,
                    r#"<line x1="{x0}" y1="{y:.2}" x2="{x1}" y2="{y:.2}" stroke="gray" stroke-dasharray="2,3"/><text x="{}" y="{:.2}" fill="gray">{}</text>"#,
                    x1 + 4.0,
                    y + 4.0,
                    escape(label)
                );
            }
        }

        for (k, s) in self.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let mut path = String::new();
            let mut pen_down = false;
            for &(x, y) in &s.points {
                match (xa.map(x, x0, x1), ya.map(y, y0, y1)) {
                    (Some(px), Some(py)) => {
                        let _ =
                            write!(path, "{}{px:.2},{py:.2} ", if pen_down { "L" } else { "M" });
                        pen_down = true;
                    }
                    _ => pen_down = false,
                }
            }
            let dash = if s.dashed {
                r#" stroke-dasharray="6,4""#
            } else {
                ""
            };
            let _ = writeln!(
                out,
                r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.6"{dash}/>"#,
                path.trim_end()
            );
            let ly = TOP + 16.0 + 18.0 * k as f64;
            let _ = writeln!(
                out,
                r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="1.6"{dash}/><text x="{}" y="{}">{}</text>"#,
                x1 + 10.0,
                x1 + 34.0,
                x1 + 40.0,
                ly + 4.0,
                escape(&s.label)
            );
        }

        for (x, y, label) in &self.markers {
            if let (Some(px), Some(py)) = (xa.map(*x, x0, x1), ya.map(*y, y0, y1)) {
                let _ = writeln!(
                    out,
                    r#"<circle cx="{px:.2}" cy="{py:.2}" r="4" fill="black"/><text x="{:.2}" y="{:.2}">{}</text>"#,
                    px + 6.0,
                    py - 6.0,
                    escape(label)
                );
            }
        }
        out.push_str("</svg>\n");
        out
    }
}
