use std::fmt::Write as _;
use std::path::Path;

use super::write_atomic;
use crate::error::{Error, Result};
use crate::model::Trajectory;

const WIDTH: f64 = 800.0;
const PANE_HEIGHT: f64 = 260.0;
const TITLE_HEIGHT: f64 = 40.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const PANE_TOP: f64 = 30.0;
const PANE_BOTTOM: f64 = 50.0;
const TICKS: usize = 5;

#[derive(Clone, Debug)]
pub struct PlotLabels {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// One name per component; defaults to `x1..xn` when empty.
    pub series: Vec<String>,
    /// Step index of the first state.
    pub t0: i64,
}

impl Default for PlotLabels {
    fn default() -> Self {
        PlotLabels {
            title: "measured and predicted states".into(),
            x_label: "t".into(),
            y_label: "value".into(),
            series: Vec::new(),
            t0: 0,
        }
    }
}

/// Axis range with 5% padding; a zero-width range is widened to value ± 5%.
fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        let pad = if lo == 0.0 { 0.05 } else { 0.05 * lo.abs() };
        (lo - pad, hi + pad)
    }
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Renders one pane per component: measured values as a solid polyline,
/// predictions dashed, both on linear auto-scaled axes.
pub fn render_svg(
    real: &Trajectory,
    predicted: &Trajectory,
    labels: &PlotLabels,
) -> Result<String> {
    if real.len() != predicted.len() {
        return Err(Error::mismatch(
            "plot: predicted length",
            real.len(),
            predicted.len(),
        ));
    }
    if real.n() != predicted.n() {
        return Err(Error::mismatch(
            "plot: predicted dimension",
            real.n(),
            predicted.n(),
        ));
    }
    let n = real.n();
    let names: Vec<String> = if labels.series.is_empty() {
        (1..=n).map(|i| format!("x{i}")).collect()
    } else if labels.series.len() == n {
        labels.series.clone()
    } else {
        return Err(Error::mismatch(
            "plot: series labels",
            n,
            labels.series.len(),
        ));
    };

    let steps = real.len();
    let t_first = labels.t0 as f64;
    let t_last = (labels.t0 + steps as i64 - 1) as f64;
    let (x_lo, x_hi) = padded(t_first, t_last);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = PANE_HEIGHT - PANE_TOP - PANE_BOTTOM;
    let height = TITLE_HEIGHT + PANE_HEIGHT * n as f64;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#
    );
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{height}" fill="white"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text class="title" x="{:.2}" y="24" text-anchor="middle" font-size="16">{}</text>"#,
        WIDTH / 2.0,
        escape(&labels.title)
    );

    for (i, name) in names.iter().enumerate() {
        let measured: Vec<f64> = real.states().iter().map(|s| s[i]).collect();
        let fitted: Vec<f64> = predicted.states().iter().map(|s| s[i]).collect();
        let lo = measured
            .iter()
            .chain(&fitted)
            .copied()
            .fold(f64::INFINITY, f64::min);
        let hi = measured
            .iter()
            .chain(&fitted)
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let (y_lo, y_hi) = padded(lo, hi);

        let top = TITLE_HEIGHT + PANE_HEIGHT * i as f64 + PANE_TOP;
        let bottom = top + plot_h;
        let px = |t: f64| LEFT + (t - x_lo) / (x_hi - x_lo) * plot_w;
        let py = |v: f64| bottom - (v - y_lo) / (y_hi - y_lo) * plot_h;

        let _ = writeln!(svg, r#"<g class="pane" id="pane-{}">"#, i + 1);
        let _ = writeln!(
            svg,
            r#"<text class="pane-title" x="{:.2}" y="{:.2}" text-anchor="middle" font-size="14">{}</text>"#,
            LEFT + plot_w / 2.0,
            top - 10.0,
            escape(name)
        );
        // Axes.
        let _ = writeln!(
            svg,
            r#"<line class="axis" x1="{LEFT:.2}" y1="{bottom:.2}" x2="{:.2}" y2="{bottom:.2}" stroke="black"/>"#,
            LEFT + plot_w
        );
        let _ = writeln!(
            svg,
            r#"<line class="axis" x1="{LEFT:.2}" y1="{top:.2}" x2="{LEFT:.2}" y2="{bottom:.2}" stroke="black"/>"#
        );
        for k in 0..TICKS {
            let frac = k as f64 / (TICKS - 1) as f64;
            let yv = y_lo + frac * (y_hi - y_lo);
            let y = py(yv);
            let _ = writeln!(
                svg,
                r#"<line class="tick" x1="{:.2}" y1="{y:.2}" x2="{LEFT:.2}" y2="{y:.2}" stroke="black"/><text class="tick-label" x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                LEFT - 5.0,
                LEFT - 8.0,
                y + 4.0,
                tick_label(yv)
            );
            let xv = x_lo + frac * (x_hi - x_lo);
            let x = px(xv);
            let _ = writeln!(
                svg,
                r#"<line class="tick" x1="{x:.2}" y1="{bottom:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text class="tick-label" x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                bottom + 5.0,
                bottom + 18.0,
                tick_label(xv)
            );
        }
        let _ = writeln!(
            svg,
            r#"<text class="axis-label" x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + plot_w / 2.0,
            bottom + 38.0,
            escape(&labels.x_label)
        );
        let mid = (top + bottom) / 2.0;
        let _ = writeln!(
            svg,
            r#"<text class="axis-label" x="20" y="{mid:.2}" text-anchor="middle" transform="rotate(-90 20 {mid:.2})">{}</text>"#,
            escape(&labels.y_label)
        );

        for (values, class, dash) in [
            (&measured, "measured", ""),
            (&fitted, "predicted", r#" stroke-dasharray="6 4""#),
        ] {
            let points: Vec<String> = values
                .iter()
                .enumerate()
                .map(|(k, v)| format!("{:.2},{:.2}", px(t_first + k as f64), py(*v)))
                .collect();
            let color = if class == "measured" {
                "#1f77b4"
            } else {
                "#d62728"
            };
            let _ = writeln!(
                svg,
                r#"<polyline class="{class}" fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
                points.join(" ")
            );
        }

        // Legend.
        let lx = LEFT + plot_w - 130.0;
        for (row, (class, color, dash)) in [
            ("measured", "#1f77b4", ""),
            ("predicted", "#d62728", r#" stroke-dasharray="6 4""#),
        ]
        .into_iter()
        .enumerate()
        {
            let ly = top + 12.0 + 16.0 * row as f64;
            let _ = writeln!(
                svg,
                r#"<line class="legend" x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="1.5"{dash}/><text class="legend" x="{:.2}" y="{:.2}">{class}</text>"#,
                lx + 30.0,
                lx + 36.0,
                ly + 4.0
            );
        }
        let _ = writeln!(svg, "</g>");
    }
    let _ = writeln!(svg, "</svg>");
    Ok(svg)
}

pub fn emit_plot(
    path: &Path,
    real: &Trajectory,
    predicted: &Trajectory,
    labels: &PlotLabels,
) -> Result<()> {
    let svg = render_svg(real, predicted, labels)?;
    write_atomic(path, svg.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polyline_count() {
        let real = Trajectory::new((0..10).map(|t| vec![1.0 + t as f64, 2.0]).collect()).unwrap();
        let pred = Trajectory::new((0..10).map(|t| vec![1.5 + t as f64, 2.5]).collect()).unwrap();
        let svg = render_svg(&real, &pred, &PlotLabels::default()).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 4);
        assert_eq!(svg.matches(r#"class="measured""#).count(), 2);
        assert_eq!(svg.matches(r#"class="predicted""#).count(), 2);
    }

    #[test]
    fn constant_series_does_not_divide_by_zero() {
        let real = Trajectory::new(vec![vec![5.0]; 4]).unwrap();
        let svg = render_svg(&real, &real, &PlotLabels::default()).unwrap();
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
        // 5 ± 5%
        assert!(svg.contains(">4.75<") && svg.contains(">5.25<"), "{svg}");
        assert_eq!(padded(0.0, 0.0), (-0.05, 0.05));
    }

    #[test]
    fn mismatched_inputs() {
        let a = Trajectory::new(vec![vec![1.0]; 3]).unwrap();
        let b = Trajectory::new(vec![vec![1.0]; 4]).unwrap();
        assert!(render_svg(&a, &b, &PlotLabels::default()).is_err());
    }

    #[test]
    fn labels_are_escaped() {
        let a = Trajectory::new(vec![vec![1.0], vec![2.0]]).unwrap();
        let labels = PlotLabels {
            title: "a<b & c".into(),
            ..PlotLabels::default()
        };
        let svg = render_svg(&a, &a, &labels).unwrap();
        assert!(svg.contains("a&lt;b &amp; c"));
    }
}
