//! Static SVG charts rendered from the command records.

use svg::node::element::{Circle, Line, Polyline, Text};
use svg::Document;

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Clone, Copy, PartialEq, Eq)]
pub enum Mark {
    Line,
    Dots,
}

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

pub struct Chart<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub log_x: bool,
    pub log_y: bool,
    pub mark: Mark,
}

fn bounds(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), x| (l.min(x), h.max(x)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-300 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn label(x: f64, y: f64, text: &str, anchor: &str) -> Text {
    Text::new(text)
        .set("x", format!("{x:.1}"))
        .set("y", format!("{y:.1}"))
        .set("font-family", "sans-serif")
        .set("font-size", 12)
        .set("text-anchor", anchor)
}

pub fn render(chart: &Chart, series: &[Series]) -> Document {
    let tx = |x: f64| if chart.log_x { x.log10() } else { x };
    let ty = |y: f64| if chart.log_y { y.log10() } else { y };
    let keep = |&(x, y): &(f64, f64)| {
        let (a, b) = (tx(x), ty(y));
        a.is_finite() && b.is_finite()
    };
    let all: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().copied().filter(keep)).collect();
    let (x0, x1) = bounds(all.iter().map(|p| tx(p.0)));
    let (y0, y1) = bounds(all.iter().map(|p| ty(p.1)));
    let px = |x: f64| MARGIN + (tx(x) - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let py = |y: f64| H - MARGIN - (ty(y) - y0) / (y1 - y0) * (H - 2.0 * MARGIN);

    let mut doc = Document::new()
        .set("viewBox", (0, 0, W, H))
        .set("width", W)
        .set("height", H)
        .add(label(W / 2.0, 24.0, chart.title, "middle"))
        .add(label(W / 2.0, H - 14.0, chart.x_label, "middle"))
        .add(label(16.0, H / 2.0, chart.y_label, "middle").set("transform", format!("rotate(-90 16 {:.1})", H / 2.0)));
    let axis = |a: (f64, f64), b: (f64, f64)| {
        Line::new().set("x1", a.0).set("y1", a.1).set("x2", b.0).set("y2", b.1).set("stroke", "black")
    };
    doc = doc
        .add(axis((MARGIN, H - MARGIN), (W - MARGIN, H - MARGIN)))
        .add(axis((MARGIN, MARGIN), (MARGIN, H - MARGIN)));
    let tick = |v: f64, log: bool| if log { format!("1e{v:.1}") } else { format!("{v:.3}") };
    doc = doc
        .add(label(MARGIN, H - MARGIN + 16.0, &tick(x0, chart.log_x), "middle"))
        .add(label(W - MARGIN, H - MARGIN + 16.0, &tick(x1, chart.log_x), "middle"))
        .add(label(MARGIN - 4.0, H - MARGIN, &tick(y0, chart.log_y), "end"))
        .add(label(MARGIN - 4.0, MARGIN + 4.0, &tick(y1, chart.log_y), "end"));

    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<(f64, f64)> = s.points.iter().copied().filter(keep).collect();
        match chart.mark {
            Mark::Line => {
                let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
                doc = doc.add(
                    Polyline::new()
                        .set("points", coords.join(" "))
                        .set("fill", "none")
                        .set("stroke", color)
                        .set("stroke-width", 1.5),
                );
            }
            Mark::Dots => {
                for &(x, y) in &pts {
                    doc = doc.add(
                        Circle::new().set("cx", format!("{:.2}", px(x))).set("cy", format!("{:.2}", py(y))).set("r", 2.5).set("fill", color),
                    );
                }
            }
        }
        doc = doc.add(label(W - MARGIN, MARGIN + 16.0 * k as f64, &s.label, "end").set("fill", color));
    }
    doc
}
