//! Self-contained SVG charts. Output depends only on the inputs, so charts
//! can be diffed between runs.

use std::fmt::Write;

use crate::dataset::DATE_FORMAT;
use crate::report::ForecastPoint;

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 56.0;

pub const ACTUAL_COLOR: &str = "#1f77b4";
pub const PREDICTED_COLOR: &str = "#d62728";

/// One line of a [`line_chart`].
#[derive(Debug, Clone, Copy)]
pub struct Series<'a> {
    pub name: &'a str,
    pub values: &'a [f64],
    pub color: &'a str,
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Axis {
    lo: f64,
    hi: f64,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>) -> Axis {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite()) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            return Axis { lo: 0.0, hi: 1.0 };
        }
        if hi == lo {
            let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.05 };
            return Axis {
                lo: lo - pad,
                hi: hi + pad,
            };
        }
        let pad = (hi - lo) * 0.05;
        Axis {
            lo: lo - pad,
            hi: hi + pad,
        }
    }

    /// Position in `[0, 1]` along the axis.
    fn unit(&self, v: f64) -> f64 {
        (v - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self, count: usize) -> Vec<f64> {
        (0..=count)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / count as f64)
            .collect()
    }
}

fn tick_label(v: f64, span: f64) -> String {
    if span >= 100.0 {
        format!("{v:.0}")
    } else if span >= 1.0 {
        format!("{v:.1}")
    } else {
        format!("{v:.3}")
    }
}

fn px(x: f64) -> f64 {
    LEFT + x * (WIDTH - LEFT - RIGHT)
}

fn py(y: f64) -> f64 {
    HEIGHT - BOTTOM - y * (HEIGHT - TOP - BOTTOM)
}

fn frame(out: &mut String, title: &str, x_label: &str, y_label: &str, y: &Axis) {
    let _ = write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">
<rect width="100%" height="100%" fill="white"/>
<text x="{:.1}" y="22" text-anchor="middle" font-size="15">{}</text>
"#,
        WIDTH / 2.0,
        escape(title)
    );
    for t in y.ticks(5) {
        let yy = py(y.unit(t));
        let _ = writeln!(
            out,
            r##"<line x1="{LEFT}" y1="{yy:.2}" x2="{:.2}" y2="{yy:.2}" stroke="#e5e5e5"/><text x="{:.1}" y="{:.2}" text-anchor="end">{}</text>"##,
            WIDTH - RIGHT,
            LEFT - 6.0,
            yy + 4.0,
            tick_label(t, y.hi - y.lo)
        );
    }
    let _ = writeln!(
        out,
        r##"<rect x="{LEFT}" y="{TOP}" width="{:.1}" height="{:.1}" fill="none" stroke="#444"/>"##,
        WIDTH - LEFT - RIGHT,
        HEIGHT - TOP - BOTTOM
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        px(0.5),
        HEIGHT - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        py(0.5),
        py(0.5),
        escape(y_label)
    );
}

/// Line chart of one or more equally long series against shared category labels.
pub fn line_chart(title: &str, x_labels: &[String], series: &[Series<'_>], y_label: &str) -> String {
    let n = series.iter().map(|s| s.values.len()).max().unwrap_or(0);
    let y = Axis::fit(series.iter().flat_map(|s| s.values.iter().copied()));
    let x_of = |i: usize| if n > 1 { i as f64 / (n - 1) as f64 } else { 0.5 };

    let mut out = String::new();
    frame(&mut out, title, "", y_label, &y);
    if n > 0 && !x_labels.is_empty() {
        let step = (n / 6).max(1);
        for i in (0..n.min(x_labels.len())).step_by(step) {
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.1}" text-anchor="middle">{}</text>"#,
                px(x_of(i)),
                HEIGHT - BOTTOM + 18.0,
                escape(&x_labels[i])
            );
        }
    }
    for s in series {
        let points: Vec<String> = s
            .values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .map(|(i, &v)| format!("{:.2},{:.2}", px(x_of(i)), py(y.unit(v))))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.6" points="{}"/>"#,
            s.color,
            points.join(" ")
        );
    }
    for (k, s) in series.iter().enumerate() {
        let lx = LEFT + 12.0 + 130.0 * k as f64;
        let ly = TOP + 16.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{}" stroke-width="3"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 20.0,
            s.color,
            lx + 26.0,
            ly + 4.0,
            escape(s.name)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Scatter plot of paired observations.
pub fn scatter_chart(title: &str, x_label: &str, y_label: &str, xs: &[f64], ys: &[f64]) -> String {
    let x = Axis::fit(xs.iter().copied());
    let y = Axis::fit(ys.iter().copied());
    let mut out = String::new();
    frame(&mut out, title, x_label, y_label, &y);
    for t in x.ticks(5) {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.1}" text-anchor="middle">{}</text>"#,
            px(x.unit(t)),
            HEIGHT - BOTTOM + 18.0,
            tick_label(t, x.hi - x.lo)
        );
    }
    for (a, b) in xs.iter().zip(ys).filter(|(a, b)| a.is_finite() && b.is_finite()) {
        let _ = writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="2.2" fill="{ACTUAL_COLOR}" fill-opacity="0.55"/>"#,
            px(x.unit(*a)),
            py(y.unit(*b))
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Actual against predicted daily energy.
pub fn forecast_chart(title: &str, points: &[ForecastPoint]) -> String {
    let labels: Vec<String> = points.iter().map(|p| p.date.format(DATE_FORMAT).to_string()).collect();
    let actual: Vec<f64> = points.iter().map(|p| p.actual_kwh).collect();
    let predicted: Vec<f64> = points.iter().map(|p| p.predicted_kwh).collect();
    line_chart(
        title,
        &labels,
        &[
            Series {
                name: "actual",
                values: &actual,
                color: ACTUAL_COLOR,
            },
            Series {
                name: "predicted",
                values: &predicted,
                color: PREDICTED_COLOR,
            },
        ],
        "energy (kWh)",
    )
}
