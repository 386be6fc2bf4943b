//! Small self-contained SVG line charts.
//!
//! Enough plotting for the diagnostics this crate emits: one fixed-size
//! viewport, linear or log-scaled y axis, a handful of colored polylines
//! and a legend. The output is a standalone `.svg` file.

use std::fmt::Write as _;
use std::path::Path;

use crate::{AppError, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 72.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 42.0;
const MARGIN_BOTTOM: f64 = 52.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

/// One polyline.
#[derive(Debug, Clone)]
pub struct Series {
    /// Legend label.
    pub label: String,
    /// Abscissae.
    pub xs: Vec<f64>,
    /// Ordinates, same length as `xs`.
    pub ys: Vec<f64>,
}

impl Series {
    /// Convenience constructor.
    pub fn new(label: impl Into<String>, xs: Vec<f64>, ys: Vec<f64>) -> Self {
        Series {
            label: label.into(),
            xs,
            ys,
        }
    }
}

/// Chart frame text and axis mode.
#[derive(Debug, Clone)]
pub struct ChartSpec {
    /// Title above the plot.
    pub title: String,
    /// Horizontal axis label.
    pub x_label: String,
    /// Vertical axis label.
    pub y_label: String,
    /// Plot `log10(y)` instead of `y`; all ordinates must be positive.
    pub log_y: bool,
}

fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if (1e-3..1e5).contains(&a) {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.').to_string();
        if s.is_empty() || s == "-" {
            "0".to_string()
        } else {
            s
        }
    } else {
        format!("{v:.2e}")
    }
}

fn padded_range(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

/// Renders the chart to SVG text.
pub fn line_chart(spec: &ChartSpec, series: &[Series]) -> Result<String> {
    if series.is_empty() {
        return Err(AppError::Invalid("chart needs at least one series".into()));
    }
    let mut xmin = f64::INFINITY;
    let mut xmax = f64::NEG_INFINITY;
    let mut ymin = f64::INFINITY;
    let mut ymax = f64::NEG_INFINITY;
    for s in series {
        if s.xs.len() != s.ys.len() {
            return Err(AppError::Invalid(format!(
                "series {:?} has {} x values but {} y values",
                s.label,
                s.xs.len(),
                s.ys.len()
            )));
        }
        if s.xs.is_empty() {
            return Err(AppError::Invalid(format!("series {:?} is empty", s.label)));
        }
        for (&x, &y) in s.xs.iter().zip(s.ys.iter()) {
            if !x.is_finite() || !y.is_finite() {
                return Err(AppError::Invalid(format!(
                    "series {:?} contains a non-finite value",
                    s.label
                )));
            }
            if spec.log_y && y <= 0.0 {
                return Err(AppError::Invalid(format!(
                    "log-scale chart requires positive ordinates, got {y} in {:?}",
                    s.label
                )));
            }
            let yv = if spec.log_y { y.log10() } else { y };
            xmin = xmin.min(x);
            xmax = xmax.max(x);
            ymin = ymin.min(yv);
            ymax = ymax.max(yv);
        }
    }
    let (xmin, xmax) = padded_range(xmin, xmax);
    let (ymin, ymax) = padded_range(ymin, ymax);

    let px = |x: f64| MARGIN_LEFT + (x - xmin) / (xmax - xmin) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT);
    let py =
        |y: f64| HEIGHT - MARGIN_BOTTOM - (y - ymin) / (ymax - ymin) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM);

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(
        out,
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
    );
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\" text-anchor=\"middle\">{}</text>",
        WIDTH / 2.0,
        xml_escape(&spec.title)
    );

    // Frame.
    let _ = writeln!(
        out,
        "<rect x=\"{MARGIN_LEFT}\" y=\"{MARGIN_TOP}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#333\"/>",
        WIDTH - MARGIN_LEFT - MARGIN_RIGHT,
        HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
    );

    // Ticks: five per axis, labels in data units.
    for k in 0..5 {
        let t = k as f64 / 4.0;
        let xv = xmin + t * (xmax - xmin);
        let yv = ymin + t * (ymax - ymin);
        let xp = px(xv);
        let yp = py(yv);
        let ylabel = if spec.log_y {
            format!("1e{}", fmt_num(yv))
        } else {
            fmt_num(yv)
        };
        let _ = writeln!(
            out,
            "<line x1=\"{xp}\" y1=\"{}\" x2=\"{xp}\" y2=\"{}\" stroke=\"#333\"/>",
            HEIGHT - MARGIN_BOTTOM,
            HEIGHT - MARGIN_BOTTOM + 5.0
        );
        let _ = writeln!(
            out,
            "<text x=\"{xp}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>",
            HEIGHT - MARGIN_BOTTOM + 18.0,
            fmt_num(xv)
        );
        let _ = writeln!(
            out,
            "<line x1=\"{}\" y1=\"{yp}\" x2=\"{MARGIN_LEFT}\" y2=\"{yp}\" stroke=\"#333\"/>",
            MARGIN_LEFT - 5.0
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{ylabel}</text>",
            MARGIN_LEFT - 8.0,
            yp + 4.0
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{}</text>",
        (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0,
        HEIGHT - 12.0,
        xml_escape(&spec.x_label)
    );
    let _ = writeln!(
        out,
        "<text x=\"16\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>",
        (MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0,
        (MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0,
        xml_escape(&spec.y_label)
    );

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut pts = String::new();
        for (&x, &y) in s.xs.iter().zip(s.ys.iter()) {
            let yv = if spec.log_y { y.log10() } else { y };
            let _ = write!(pts, "{:.2},{:.2} ", px(x), py(yv));
        }
        let _ = writeln!(
            out,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.6\"/>",
            pts.trim_end()
        );
        // Legend row.
        let ly = MARGIN_TOP + 14.0 + 16.0 * i as f64;
        let lx = WIDTH - MARGIN_RIGHT - 150.0;
        let _ = writeln!(
            out,
            "<line x1=\"{lx}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/>",
            lx + 22.0
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>",
            lx + 28.0,
            ly + 4.0,
            xml_escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Writes SVG text to a file.
pub fn write_svg(path: &Path, svg: &str) -> Result<()> {
    std::fs::write(path, svg)?;
    Ok(())
}
