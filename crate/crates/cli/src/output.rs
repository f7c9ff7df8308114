//! CSV tables and small SVG line plots.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use svg::node::element::{Line, Polyline, Rectangle, Text};
use svg::Document;

use crate::error::{CliError, CliResult};

pub const SVG_WIDTH: f64 = 800.0;
pub const SVG_HEIGHT: f64 = 600.0;

/// Shortest round-trip decimal; `NaN` for missing values.
pub fn fmt_num(x: f64) -> String {
    format!("{x}")
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn write_csv<R, I>(path: &Path, header: &[&str], rows: R) -> CliResult<PathBuf>
where
    R: IntoIterator<Item = I>,
    I: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))?;
    Ok(path.to_path_buf())
}

pub fn write_numeric_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> CliResult<PathBuf> {
    write_csv(path, header, rows.iter().map(|r| r.iter().map(|&x| fmt_num(x)).collect::<Vec<_>>()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stroke {
    Solid,
    Dashed,
    Dotted,
}

impl Stroke {
    fn dasharray(self) -> Option<&'static str> {
        match self {
            Self::Solid => None,
            Self::Dashed => Some("8 5"),
            Self::Dotted => Some("2 4"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub stroke: Stroke,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct Panel {
    pub title: String,
    pub series: Vec<Series>,
}

const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_Y: f64 = 35.0;

/// Stacks the panels vertically in a fixed 800×600 canvas with
/// independent autoscaled axes.
pub fn write_svg(path: &Path, panels: &[Panel]) -> CliResult<PathBuf> {
    let mut doc = Document::new()
        .set("width", SVG_WIDTH)
        .set("height", SVG_HEIGHT)
        .set("viewBox", (0, 0, SVG_WIDTH, SVG_HEIGHT))
        .add(Rectangle::new().set("width", SVG_WIDTH).set("height", SVG_HEIGHT).set("fill", "white"));
    let slot = SVG_HEIGHT / panels.len().max(1) as f64;
    for (k, panel) in panels.iter().enumerate() {
        let top = k as f64 * slot + MARGIN_Y;
        let height = slot - 2.0 * MARGIN_Y;
        let width = SVG_WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        doc = render_panel(doc, panel, MARGIN_LEFT, top, width, height);
    }
    svg::save(path, &doc).map_err(|e| CliError::io(path, e))?;
    Ok(path.to_path_buf())
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) =
        values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    // flat data still gets a visible band
    let pad =
        if hi - lo > 1e-12 * hi.abs().max(1.0) { 0.05 * (hi - lo) } else { 0.5 * hi.abs().max(1.0) * 0.01 + 1e-9 };
    (lo - pad, hi + pad)
}

fn render_panel(mut doc: Document, panel: &Panel, left: f64, top: f64, width: f64, height: f64) -> Document {
    let all = || panel.series.iter().flat_map(|s| s.points.iter().copied());
    let (x_lo, x_hi) = bounds(all().map(|p| p.0));
    let (y_lo, y_hi) = bounds(all().map(|p| p.1));
    let sx = |x: f64| left + (x - x_lo) / (x_hi - x_lo) * width;
    let sy = |y: f64| top + height - (y - y_lo) / (y_hi - y_lo) * height;

    doc = doc
        .add(
            Rectangle::new()
                .set("x", left)
                .set("y", top)
                .set("width", width)
                .set("height", height)
                .set("fill", "none")
                .set("stroke", "#444"),
        )
        .add(
            Text::new(panel.title.clone())
                .set("x", left)
                .set("y", top - 10.0)
                .set("font-size", 15)
                .set("font-family", "sans-serif"),
        );
    for (value, anchor_y) in [(y_hi, top + 4.0), (y_lo, top + height)] {
        doc = doc.add(label(&format!("{value:.4}"), left - 6.0, anchor_y, "end"));
    }
    for (value, anchor_x) in [(x_lo, left), (x_hi, left + width)] {
        doc = doc.add(label(&format!("{value:.3}"), anchor_x, top + height + 16.0, "middle"));
    }

    for (i, s) in panel.series.iter().enumerate() {
        let mut pts = String::new();
        for &(x, y) in s.points.iter().filter(|p| p.0.is_finite() && p.1.is_finite()) {
            let _ = write!(pts, "{:.2},{:.2} ", sx(x), sy(y));
        }
        let colour = ["#1f4e9c", "#b03a2e", "#1e8449", "#7d3c98"][i % 4];
        let mut line = Polyline::new()
            .set("points", pts.trim_end())
            .set("fill", "none")
            .set("stroke", colour)
            .set("stroke-width", 2);
        let mut key = Line::new()
            .set("x1", left + width + 12.0)
            .set("x2", left + width + 42.0)
            .set("y1", top + 12.0 + 20.0 * i as f64)
            .set("y2", top + 12.0 + 20.0 * i as f64)
            .set("stroke", colour)
            .set("stroke-width", 2);
        if let Some(d) = s.stroke.dasharray() {
            line = line.set("stroke-dasharray", d);
            key = key.set("stroke-dasharray", d);
        }
        doc = doc.add(line).add(key).add(label(&s.label, left + width + 48.0, top + 16.0 + 20.0 * i as f64, "start"));
    }
    doc
}

fn label(text: &str, x: f64, y: f64, anchor: &str) -> Text {
    Text::new(text)
        .set("x", x)
        .set("y", y)
        .set("font-size", 12)
        .set("font-family", "sans-serif")
        .set("text-anchor", anchor)
}
