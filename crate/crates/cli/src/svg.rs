//! Minimal self-contained SVG charts. Output is deterministic for equal
//! input, but the layout is not part of any contract; the CSVs are.

use std::fmt::Write as _;
use std::path::Path;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#7f7f7f"];

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn fmt_tick(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e5).contains(&a) {
        format!("{v:.1e}")
    } else if a >= 100.0 {
        format!("{v:.0}")
    } else {
        let s = format!("{v:.3}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        if s == "-0" { "0".to_string() } else { s.to_string() }
    }
}

/// About five round tick positions covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0) {
        return vec![lo];
    }
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * span {
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Style {
    Line,
    Points,
    Bars,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
}

impl Series {
    pub fn line(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self { name: name.into(), points, style: Style::Line }
    }

    pub fn points(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self { name: name.into(), points, style: Style::Points }
    }

    pub fn bars(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self { name: name.into(), points, style: Style::Bars }
    }
}

/// Shaded interval `(x, lo, hi)`.
#[derive(Debug, Clone)]
pub struct Ribbon {
    pub name: String,
    pub points: Vec<(f64, f64, f64)>,
}

#[derive(Debug, Clone, Default)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub ribbons: Vec<Ribbon>,
    /// Horizontal reference lines.
    pub rules: Vec<(f64, String)>,
}

impl Panel {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Self { title: title.into(), x_label: x_label.into(), y_label: y_label.into(), ..Self::default() }
    }

    fn bounds(&self) -> Option<(f64, f64, f64, f64)> {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for s in &self.series {
            for &(x, y) in &s.points {
                xs.push(x);
                ys.push(y);
                if s.style == Style::Bars {
                    ys.push(0.0);
                }
            }
        }
        for r in &self.ribbons {
            for &(x, lo, hi) in &r.points {
                xs.push(x);
                ys.extend([lo, hi]);
            }
        }
        ys.extend(self.rules.iter().map(|r| r.0));
        let finite = |v: &Vec<f64>| {
            let f: Vec<f64> = v.iter().copied().filter(|x| x.is_finite()).collect();
            (!f.is_empty()).then(|| {
                (f.iter().copied().fold(f64::INFINITY, f64::min), f.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            })
        };
        let (x0, x1) = finite(&xs)?;
        let (y0, y1) = finite(&ys)?;
        let pad = |a: f64, b: f64| if b > a { (a, b) } else { (a - 0.5, b + 0.5) };
        let (x0, x1) = pad(x0, x1);
        let (y0, y1) = pad(y0, y1);
        let m = 0.05 * (y1 - y0);
        Some((x0, x1, y0 - m, y1 + m))
    }

    fn render(&self, s: &mut String, ox: f64, oy: f64, w: f64, h: f64) {
        let (l, r, t, b) = (60.0, 15.0, 28.0, 40.0);
        let (pw, ph) = (w - l - r, h - t - b);
        let _ = writeln!(s, r#"<g transform="translate({ox:.1},{oy:.1})">"#);
        let _ = writeln!(s, r#"<text x="{:.1}" y="18" text-anchor="middle" font-size="13">{}</text>"#, w / 2.0, esc(&self.title));
        let Some((x0, x1, y0, y1)) = self.bounds() else {
            let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="11">no data</text></g>"#, w / 2.0, h / 2.0);
            return;
        };
        let px = |x: f64| l + (x - x0) / (x1 - x0) * pw;
        let py = |y: f64| t + (y1 - y) / (y1 - y0) * ph;
        let _ = writeln!(s, r##"<rect x="{l}" y="{t}" width="{pw:.1}" height="{ph:.1}" fill="none" stroke="#444"/>"##);
        for v in ticks(x0, x1) {
            let x = px(v);
            let _ = writeln!(s, r##"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="#444"/><text x="{x:.1}" y="{:.1}" text-anchor="middle" font-size="10">{}</text>"##, t + ph, t + ph + 4.0, t + ph + 15.0, fmt_tick(v));
        }
        for v in ticks(y0, y1) {
            let y = py(v);
            let _ = writeln!(s, r##"<line x1="{:.1}" y1="{y:.1}" x2="{l}" y2="{y:.1}" stroke="#444"/><text x="{:.1}" y="{:.1}" text-anchor="end" font-size="10">{}</text>"##, l - 4.0, l - 6.0, y + 3.0, fmt_tick(v));
        }
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="11">{}</text>"#, l + pw / 2.0, h - 6.0, esc(&self.x_label));
        let _ = writeln!(s, r#"<text transform="translate(14,{:.1}) rotate(-90)" text-anchor="middle" font-size="11">{}</text>"#, t + ph / 2.0, esc(&self.y_label));
        for (i, rb) in self.ribbons.iter().enumerate() {
            let pts: Vec<&(f64, f64, f64)> = rb.points.iter().filter(|p| p.1.is_finite() && p.2.is_finite()).collect();
            if pts.is_empty() {
                continue;
            }
            let mut d = String::new();
            for p in &pts {
                let _ = write!(d, "{:.1},{:.1} ", px(p.0), py(p.2));
            }
            for p in pts.iter().rev() {
                let _ = write!(d, "{:.1},{:.1} ", px(p.0), py(p.1));
            }
            let _ = writeln!(s, r#"<polygon points="{}" fill="{}" fill-opacity="0.2" stroke="none"/>"#, d.trim_end(), PALETTE[i % PALETTE.len()]);
        }
        for (v, label) in &self.rules {
            let y = py(*v);
            let _ = writeln!(s, r##"<line x1="{l}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#000" stroke-dasharray="4 3"/><text x="{:.1}" y="{:.1}" text-anchor="end" font-size="10">{}</text>"##, l + pw, l + pw - 3.0, y - 3.0, esc(label));
        }
        let zero = py(0.0f64.clamp(y0, y1));
        for (i, se) in self.series.iter().enumerate() {
            let c = PALETTE[i % PALETTE.len()];
            match se.style {
                Style::Line => {
                    // Non-finite values break the line.
                    let mut runs: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
                    for &(x, y) in &se.points {
                        if y.is_finite() {
                            runs.last_mut().unwrap().push((x, y));
                        } else if !runs.last().unwrap().is_empty() {
                            runs.push(Vec::new());
                        }
                    }
                    for run in runs.iter().filter(|r| !r.is_empty()) {
                        let d: Vec<String> = run.iter().map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y))).collect();
                        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{c}" stroke-width="1.2"/>"#, d.join(" "));
                    }
                }
                Style::Points => {
                    for &(x, y) in se.points.iter().filter(|p| p.1.is_finite()) {
                        let _ = writeln!(s, r#"<circle cx="{:.1}" cy="{:.1}" r="2" fill="{c}"/>"#, px(x), py(y));
                    }
                }
                Style::Bars => {
                    let n = se.points.len().max(1) as f64;
                    let bw = (pw / n * 0.8).max(1.0);
                    for &(x, y) in se.points.iter().filter(|p| p.1.is_finite()) {
                        let (top, ht) = if py(y) < zero { (py(y), zero - py(y)) } else { (zero, py(y) - zero) };
                        let _ = writeln!(s, r#"<rect x="{:.1}" y="{top:.1}" width="{bw:.1}" height="{ht:.1}" fill="{c}"/>"#, px(x) - bw / 2.0);
                    }
                }
            }
        }
        let names: Vec<(usize, &str)> = self
            .series
            .iter()
            .map(|s| s.name.as_str())
            .chain(self.ribbons.iter().map(|r| r.name.as_str()))
            .enumerate()
            .filter(|(_, n)| !n.is_empty())
            .collect();
        for (row, (i, name)) in names.iter().enumerate() {
            let color = if *i < self.series.len() { i % PALETTE.len() } else { (i - self.series.len()) % PALETTE.len() };
            let y = t + 12.0 + 13.0 * row as f64;
            let _ = writeln!(s, r#"<rect x="{:.1}" y="{:.1}" width="10" height="3" fill="{}"/><text x="{:.1}" y="{:.1}" font-size="10">{}</text>"#, l + 8.0, y - 4.0, PALETTE[color], l + 22.0, y, esc(name));
        }
        let _ = writeln!(s, "</g>");
    }
}

fn document(width: f64, height: f64, body: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{body}</svg>\n"
    )
}

/// Panels laid out row-major, `columns` per row.
pub fn panels(panels: &[Panel], columns: usize) -> String {
    let (w, h) = (460.0, 320.0);
    let cols = columns.max(1);
    let rows = panels.len().div_ceil(cols).max(1);
    let mut body = String::new();
    for (i, p) in panels.iter().enumerate() {
        p.render(&mut body, (i % cols) as f64 * w, (i / cols) as f64 * h, w, h);
    }
    document(cols.min(panels.len().max(1)) as f64 * w, rows as f64 * h, &body)
}

/// Colour grid with `rows x columns` cells; `None` cells are left blank.
pub fn heatmap(title: &str, row_labels: &[String], col_labels: &[String], values: &[Vec<Option<f64>>], note: &str) -> String {
    let (l, t, cw, ch) = (70.0, 50.0, 48.0, 22.0);
    let finite: Vec<f64> = values.iter().flatten().flatten().copied().filter(|v| v.is_finite()).collect();
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut body = String::new();
    let width = l + cw * col_labels.len() as f64 + 20.0;
    let _ = writeln!(body, r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="13">{}</text>"#, width / 2.0, esc(title));
    let _ = writeln!(body, r#"<text x="{:.1}" y="36" text-anchor="middle" font-size="10">{}</text>"#, width / 2.0, esc(note));
    for (j, c) in col_labels.iter().enumerate() {
        let _ = writeln!(body, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="10">{}</text>"#, l + cw * (j as f64 + 0.5), t - 3.0, esc(c));
    }
    for (i, r) in row_labels.iter().enumerate() {
        let y = t + ch * i as f64;
        let _ = writeln!(body, r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-size="10">{}</text>"#, l - 5.0, y + ch * 0.7, esc(r));
        for (j, v) in values.get(i).map(|r| r.as_slice()).unwrap_or(&[]).iter().enumerate() {
            let x = l + cw * j as f64;
            let Some(v) = v.filter(|v| v.is_finite()) else { continue };
            // Low values dark: for BIC the best cells stand out.
            let f = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
            let g = (40.0 + 200.0 * f) as u8;
            let _ = writeln!(body, r##"<rect x="{x:.1}" y="{y:.1}" width="{cw}" height="{ch}" fill="rgb({g},{g},255)" stroke="#fff"/><text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="9" fill="{}">{}</text>"##, x + cw / 2.0, y + ch * 0.68, if f < 0.5 { "#fff" } else { "#000" }, fmt_tick(v));
        }
    }
    document(width, t + ch * row_labels.len() as f64 + 20.0, &body)
}

pub fn write(path: &Path, svg: &str) -> anyhow::Result<()> {
    std::fs::write(path, svg).map_err(|e| anyhow::Error::new(nao_ssm::Error::Io { path: path.to_path_buf(), source: e }))
}
