//! Minimal static SVG rendering: line charts with optional log scale and
//! shaded bands, and heatmap panels. No binary image dependencies.

use std::fmt::Write as _;

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub color: String,
    /// Optional ± band around the points (same x grid).
    pub band: Option<Vec<f64>>,
    pub dashed: bool,
}

pub struct LineChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub series: Vec<Series>,
}

const W: f64 = 860.0;
const H: f64 = 520.0;
const ML: f64 = 80.0;
const MR: f64 = 30.0;
const MT: f64 = 46.0;
const MB: f64 = 60.0;

pub const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf", "#7f7f7f",
];

fn nice_ticks(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if !(hi > lo) {
        return vec![lo];
    }
    let span = hi - lo;
    let raw = span / n as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= n as f64)
        .unwrap_or(10.0 * mag);
    let start = (lo / step).ceil() * step;
    let mut t = start;
    let mut out = vec![];
    while t <= hi + 1e-12 * span {
        out.push(t);
        t += step;
    }
    out
}

impl LineChart {
    pub fn render(&self) -> String {
        let mut all_x: Vec<f64> = vec![];
        let mut all_y: Vec<f64> = vec![];
        for s in &self.series {
            for (i, &(x, y)) in s.points.iter().enumerate() {
                let mut ys = vec![y];
                if let Some(band) = &s.band {
                    ys.push(y - band[i]);
                    ys.push(y + band[i]);
                }
                for yy in ys {
                    if !self.log_y || yy > 0.0 {
                        all_y.push(if self.log_y { yy.log10() } else { yy });
                    }
                }
                all_x.push(x);
            }
        }
        let (x_lo, x_hi) = bounds(&all_x);
        let (y_lo, y_hi) = bounds(&all_y);
        let px = |x: f64| ML + (x - x_lo) / (x_hi - x_lo).max(1e-300) * (W - ML - MR);
        let py = |y: f64| {
            let v = if self.log_y { y.log10() } else { y };
            H - MB - (v - y_lo) / (y_hi - y_lo).max(1e-300) * (H - MT - MB)
        };

        let mut s = String::new();
        let _ = write!(
            s,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
             <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
             <text x=\"{}\" y=\"24\" font-size=\"16\" text-anchor=\"middle\" font-family=\"sans-serif\">{}</text>\n",
            W / 2.0,
            esc(&self.title)
        );

        // Axes.
        let _ = write!(
            s,
            "<line x1=\"{ML}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n\
             <line x1=\"{ML}\" y1=\"{MT}\" x2=\"{ML}\" y2=\"{}\" stroke=\"black\"/>\n",
            H - MB,
            W - MR,
            H - MB,
            H - MB
        );
        for t in nice_ticks(x_lo, x_hi, 8) {
            let x = px(t);
            let _ = write!(
                s,
                "<line x1=\"{x}\" y1=\"{}\" x2=\"{x}\" y2=\"{}\" stroke=\"black\"/>\n\
                 <text x=\"{x}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\" font-family=\"sans-serif\">{}</text>\n",
                H - MB,
                H - MB + 5.0,
                H - MB + 18.0,
                fmt_tick(t)
            );
        }
        for t in nice_ticks(y_lo, y_hi, 6) {
            let y = py(if self.log_y { 10f64.powf(t) } else { t });
            let label = if self.log_y { format!("1e{}", t.round() as i64) } else { fmt_tick(t) };
            let _ = write!(
                s,
                "<line x1=\"{}\" y1=\"{y}\" x2=\"{ML}\" y2=\"{y}\" stroke=\"black\"/>\n\
                 <text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\" font-family=\"sans-serif\">{label}</text>\n",
                ML - 5.0,
                ML - 8.0,
                y + 4.0
            );
        }
        let _ = write!(
            s,
            "<text x=\"{}\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\" font-family=\"sans-serif\">{}</text>\n\
             <text x=\"16\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\" font-family=\"sans-serif\" transform=\"rotate(-90 16 {})\">{}</text>\n",
            (ML + W - MR) / 2.0,
            H - 16.0,
            esc(&self.x_label),
            (MT + H - MB) / 2.0,
            (MT + H - MB) / 2.0,
            esc(&self.y_label)
        );

        // Bands first, lines on top.
        for sr in &self.series {
            if let Some(band) = &sr.band {
                let mut d = String::from("M");
                for (i, &(x, y)) in sr.points.iter().enumerate() {
                    let _ = write!(d, "{:.2},{:.2} L", px(x), py(y + band[i]));
                }
                for (i, &(x, y)) in sr.points.iter().enumerate().rev() {
                    let _ = write!(d, "{:.2},{:.2} L", px(x), py((y - band[i]).max(if self.log_y { 1e-300 } else { f64::NEG_INFINITY })));
                }
                d.pop();
                d.pop();
                let _ = write!(s, "<path d=\"{d}Z\" fill=\"{}\" opacity=\"0.18\"/>\n", sr.color);
            }
        }
        for sr in &self.series {
            let mut d = String::from("M");
            let mut first = true;
            for &(x, y) in &sr.points {
                if self.log_y && y <= 0.0 {
                    continue;
                }
                if first {
                    let _ = write!(d, "{:.2},{:.2}", px(x), py(y));
                    first = false;
                } else {
                    let _ = write!(d, " L{:.2},{:.2}", px(x), py(y));
                }
            }
            let dash = if sr.dashed { " stroke-dasharray=\"6 4\"" } else { "" };
            let _ = write!(
                s,
                "<path d=\"{d}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.6\"{dash}/>\n",
                sr.color
            );
        }
        // Legend.
        for (i, sr) in self.series.iter().enumerate() {
            let y = MT + 16.0 * i as f64 + 8.0;
            let _ = write!(
                s,
                "<line x1=\"{}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"{}\" stroke-width=\"2\"/>\n\
                 <text x=\"{}\" y=\"{}\" font-size=\"11\" font-family=\"sans-serif\">{}</text>\n",
                W - MR - 150.0,
                W - MR - 125.0,
                sr.color,
                W - MR - 120.0,
                y + 4.0,
                esc(&sr.label)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn bounds(values: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in values {
        if v.is_finite() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if lo == hi {
        return (lo - 0.5, hi + 0.5);
    }
    (lo, hi)
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-3 {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Blue → white → red colormap over [0, 1].
fn heat_color(v: f64) -> String {
    let v = v.clamp(0.0, 1.0);
    let (r, g, b) = if v < 0.5 {
        let t = v * 2.0;
        (59.0 + t * (255.0 - 59.0), 76.0 + t * (255.0 - 76.0), 192.0 + t * (255.0 - 192.0))
    } else {
        let t = (v - 0.5) * 2.0;
        (255.0 - t * (255.0 - 180.0), 255.0 - t * 255.0, 255.0 - t * 255.0)
    };
    format!("rgb({},{},{})", r as u8, g as u8, b as u8)
}

/// One heatmap panel per time step, laid out horizontally, sharing one
/// color scale.
pub struct HeatmapPanels {
    pub title: String,
    pub r_nd: Vec<f64>,
    pub z_nd: Vec<f64>,
    /// Per panel: (label, field values `[ir][iz]` flattened row-major).
    pub panels: Vec<(String, Vec<f64>)>,
    pub v_min: f64,
    pub v_max: f64,
}

impl HeatmapPanels {
    pub fn render(&self) -> String {
        let pw = 240.0;
        let ph = 300.0;
        let gap = 16.0;
        let n = self.panels.len() as f64;
        let total_w = 60.0 + n * (pw + gap) + 70.0;
        let total_h = ph + 90.0;
        let (nr, nz) = (self.r_nd.len(), self.z_nd.len());
        let mut s = String::new();
        let _ = write!(
            s,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{total_w}\" height=\"{total_h}\">\n\
             <rect width=\"{total_w}\" height=\"{total_h}\" fill=\"white\"/>\n\
             <text x=\"{}\" y=\"22\" font-size=\"15\" text-anchor=\"middle\" font-family=\"sans-serif\">{}</text>\n",
            total_w / 2.0,
            esc(&self.title)
        );
        for (pi, (label, field)) in self.panels.iter().enumerate() {
            let x0 = 60.0 + pi as f64 * (pw + gap);
            let y0 = 46.0;
            let cw = pw / nr as f64;
            let ch = ph / nz as f64;
            for ir in 0..nr {
                for iz in 0..nz {
                    let v = (field[ir * nz + iz] - self.v_min) / (self.v_max - self.v_min).max(1e-300);
                    let _ = write!(
                        s,
                        "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>\n",
                        x0 + ir as f64 * cw,
                        y0 + ph - (iz as f64 + 1.0) * ch,
                        cw + 0.3,
                        ch + 0.3,
                        heat_color(v)
                    );
                }
            }
            let _ = write!(
                s,
                "<rect x=\"{x0}\" y=\"{y0}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" stroke=\"black\"/>\n\
                 <text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\" font-family=\"sans-serif\">{}</text>\n",
                x0 + pw / 2.0,
                y0 + ph + 20.0,
                esc(label)
            );
        }
        // Color bar.
        let cb_x = total_w - 55.0;
        for i in 0..64 {
            let v = i as f64 / 63.0;
            let _ = write!(
                s,
                "<rect x=\"{cb_x}\" y=\"{:.1}\" width=\"16\" height=\"{:.2}\" fill=\"{}\"/>\n",
                46.0 + (1.0 - v) * ph - ph / 64.0,
                ph / 64.0 + 0.4,
                heat_color(v)
            );
        }
        let _ = write!(
            s,
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" font-family=\"sans-serif\">{}</text>\n\
             <text x=\"{}\" y=\"{}\" font-size=\"11\" font-family=\"sans-serif\">{}</text>\n",
            cb_x + 20.0,
            54.0,
            fmt_tick(self.v_max),
            cb_x + 20.0,
            46.0 + ph,
            fmt_tick(self.v_min)
        );
        s.push_str("</svg>\n");
        s
    }
}
