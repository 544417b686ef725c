//! Minimal SVG line and range-bar charts. Output depends only on the data,
//! so identical inputs give identical files.

use std::fmt::Write;

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const MAX_POINTS: usize = 2000;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

pub struct Series {
    pub label: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub dashed: bool,
}

impl Series {
    pub fn new(label: impl Into<String>, xs: Vec<f64>, ys: Vec<f64>) -> Self {
        Series {
            label: label.into(),
            xs,
            ys,
            dashed: false,
        }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }
}

pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Plot `log10(|y|)`; non-positive values are dropped.
    pub log_y: bool,
}

impl LinePlot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        LinePlot {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            series: Vec::new(),
            log_y: false,
        }
    }

    pub fn log_y(mut self) -> Self {
        self.log_y = true;
        self
    }

    pub fn with(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }

    fn points(&self, s: &Series) -> Vec<(f64, f64)> {
        let stride = s.xs.len().div_ceil(MAX_POINTS).max(1);
        s.xs.iter()
            .zip(&s.ys)
            .enumerate()
            .filter(|(i, _)| i % stride == 0 || *i + 1 == s.xs.len())
            .filter_map(|(_, (&x, &y))| {
                let y = if self.log_y {
                    if y > 0.0 {
                        y.log10()
                    } else {
                        return None;
                    }
                } else {
                    y
                };
                (x.is_finite() && y.is_finite()).then_some((x, y))
            })
            .collect()
    }

    pub fn to_svg(&self, stamp: &str) -> String {
        let pts: Vec<Vec<(f64, f64)>> = self.series.iter().map(|s| self.points(s)).collect();
        let all = pts.iter().flatten();
        let (xr, yr) = all.fold(
            ((f64::INFINITY, f64::NEG_INFINITY), (f64::INFINITY, f64::NEG_INFINITY)),
            |((x0, x1), (y0, y1)), &(x, y)| ((x0.min(x), x1.max(x)), (y0.min(y), y1.max(y))),
        );
        let xr = padded(xr, false);
        let yr = padded(yr, true);
        let mut svg = header(&self.title, stamp);
        let frame = Frame { xr, yr };
        frame.axes(&mut svg, &self.x_label, &self.y_label, self.log_y);
        for (k, (s, p)) in self.series.iter().zip(&pts).enumerate() {
            let colour = PALETTE[k % PALETTE.len()];
            let path: Vec<String> = p
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
                .collect();
            let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5"{dash} points="{}"/>"#,
                path.join(" ")
            );
            let ly = TOP + 16.0 + 18.0 * k as f64;
            let lx = WIDTH - RIGHT + 12.0;
            let _ = writeln!(
                svg,
                r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{colour}" stroke-width="2"{dash}/><text x="{:.1}" y="{:.1}" font-size="12">{}</text>"#,
                lx + 24.0,
                lx + 30.0,
                ly + 4.0,
                escape(&s.label)
            );
        }
        svg.push_str("</svg>\n");
        svg
    }
}

/// Horizontal bars `[lo, hi]` per label, with a marker at zero.
pub fn range_bars(title: &str, x_label: &str, rows: &[(String, f64, f64)], stamp: &str) -> String {
    let lo = rows.iter().map(|r| r.1).fold(0.0, f64::min);
    let hi = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    let frame = Frame {
        xr: padded((lo, hi), false),
        yr: (0.0, rows.len().max(1) as f64),
    };
    let mut svg = header(title, stamp);
    frame.x_axis(&mut svg, x_label);
    let zero = frame.px(0.0);
    let _ = writeln!(
        svg,
        r##"<line x1="{zero:.2}" y1="{TOP}" x2="{zero:.2}" y2="{:.2}" stroke="#444" stroke-dasharray="3 3"/>"##,
        HEIGHT - BOTTOM
    );
    for (k, (label, a, b)) in rows.iter().enumerate() {
        let y0 = frame.py(rows.len() as f64 - k as f64 - 0.2);
        let y1 = frame.py(rows.len() as f64 - k as f64 - 0.8);
        let _ = writeln!(
            svg,
            r#"<rect x="{:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="{}" fill-opacity="0.7"/><text x="{:.1}" y="{:.1}" font-size="12" text-anchor="end">{}</text>"#,
            frame.px(*a),
            (frame.px(*b) - frame.px(*a)).max(0.5),
            y1 - y0,
            PALETTE[k % PALETTE.len()],
            LEFT - 8.0,
            0.5 * (y0 + y1) + 4.0,
            escape(label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

struct Frame {
    xr: (f64, f64),
    yr: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.xr.0) / (self.xr.1 - self.xr.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.yr.0) / (self.yr.1 - self.yr.0) * (HEIGHT - TOP - BOTTOM)
    }

    fn x_axis(&self, svg: &mut String, label: &str) {
        let base = HEIGHT - BOTTOM;
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT}" y1="{base}" x2="{:.1}" y2="{base}" stroke="#000"/>"##,
            WIDTH - RIGHT
        );
        for t in ticks(self.xr) {
            let x = self.px(t);
            let _ = writeln!(
                svg,
                r##"<line x1="{x:.2}" y1="{base}" x2="{x:.2}" y2="{:.1}" stroke="#000"/><text x="{x:.2}" y="{:.1}" font-size="11" text-anchor="middle">{}</text>"##,
                base + 5.0,
                base + 18.0,
                tick_label(t)
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-size="13" text-anchor="middle">{}</text>"#,
            0.5 * (LEFT + WIDTH - RIGHT),
            HEIGHT - 15.0,
            escape(label)
        );
    }

    fn axes(&self, svg: &mut String, x_label: &str, y_label: &str, log_y: bool) {
        self.x_axis(svg, x_label);
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{:.1}" stroke="#000"/>"##,
            HEIGHT - BOTTOM
        );
        for t in ticks(self.yr) {
            let y = self.py(t);
            let text = if log_y { format!("1e{}", tick_label(t)) } else { tick_label(t) };
            let _ = writeln!(
                svg,
                r##"<line x1="{:.1}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="#000"/><line x1="{LEFT}" y1="{y:.2}" x2="{:.1}" y2="{y:.2}" stroke="#ddd"/><text x="{:.1}" y="{:.2}" font-size="11" text-anchor="end">{text}</text>"##,
                LEFT - 5.0,
                WIDTH - RIGHT,
                LEFT - 8.0,
                y + 4.0
            );
        }
        let cy = 0.5 * (TOP + HEIGHT - BOTTOM);
        let _ = writeln!(
            svg,
            r#"<text x="18" y="{cy:.1}" font-size="13" text-anchor="middle" transform="rotate(-90 18 {cy:.1})">{}</text>"#,
            escape(y_label)
        );
    }
}

fn header(title: &str, stamp: &str) -> String {
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">"#
    );
    let _ = writeln!(svg, "<!-- {} -->", escape(stamp));
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="24" font-size="15" text-anchor="middle">{}</text>"#,
        0.5 * (LEFT + WIDTH - RIGHT),
        escape(title)
    );
    svg
}

fn padded((lo, hi): (f64, f64), pad: bool) -> (f64, f64) {
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 * (1.0 + lo.abs()) {
        let d = 0.5 * lo.abs().max(1e-3);
        return (lo - d, hi + d);
    }
    if pad {
        let d = 0.05 * (hi - lo);
        (lo - d, hi + d)
    } else {
        (lo, hi)
    }
}

fn ticks((lo, hi): (f64, f64)) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if !(1e-3..1e5).contains(&a) {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_are_round_numbers() {
        assert_eq!(ticks((0.0, 10.0)), vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
        assert_eq!(tick_label(0.25), "0.25");
        assert_eq!(tick_label(2.0e-6), "2.0e-6");
    }

    #[test]
    fn svg_is_deterministic_and_escaped() {
        let p = LinePlot::new("a < b", "t", "y").with(Series::new("s", vec![0.0, 1.0], vec![1.0, 2.0]));
        let a = p.to_svg("hash 1");
        assert_eq!(a, p.to_svg("hash 1"));
        assert!(a.contains("a &lt; b") && a.contains("<!-- hash 1 -->"));
    }

    #[test]
    fn log_axis_drops_non_positive() {
        let p = LinePlot::new("e", "t", "e").log_y().with(Series::new("s", vec![0.0, 1.0, 2.0], vec![0.0, 1e-3, 1e-6]));
        assert_eq!(p.points(&p.series[0]).len(), 2);
    }
}
