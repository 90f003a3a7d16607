//! Standalone SVG line charts, no plotting dependency. Each chart gets a
//! sibling CSV holding the plotted data.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlotError {
    #[error("no series to plot")]
    EmptySeries,
    #[error("series '{0}' has {1} x values but {2} y values")]
    LengthMismatch(String, usize, usize),
    #[error("series '{0}' has no points")]
    EmptySeriesData(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

pub struct Series {
    pub label: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 170.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

fn escape_xml(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
        .replace('\'', "&apos;")
}

fn ticks(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect()
}

fn validate(series: &[Series]) -> Result<(), PlotError> {
    if series.is_empty() {
        return Err(PlotError::EmptySeries);
    }
    for s in series {
        if s.xs.len() != s.ys.len() {
            return Err(PlotError::LengthMismatch(s.label.clone(), s.xs.len(), s.ys.len()));
        }
        if s.xs.is_empty() {
            return Err(PlotError::EmptySeriesData(s.label.clone()));
        }
    }
    Ok(())
}

/// Renders a line chart with axes, tick labels and a legend.
pub fn render_line_chart(
    series: &[Series],
    x_label: &str,
    y_label: &str,
) -> Result<String, PlotError> {
    validate(series)?;
    let all_x = series.iter().flat_map(|s| s.xs.iter().copied());
    let all_y = series.iter().flat_map(|s| s.ys.iter().copied());
    let (mut x_lo, mut x_hi) = all_x.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    let (mut y_lo, mut y_hi) = all_y.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if x_lo == x_hi {
        x_lo -= 1.0;
        x_hi += 1.0;
    }
    if y_lo == y_hi {
        y_lo -= 1.0;
        y_hi += 1.0;
    }
    let pad = 0.05 * (y_hi - y_lo);
    y_lo -= pad;
    y_hi += pad;

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |x: f64| MARGIN_LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = |y: f64| MARGIN_TOP + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);

    // axes
    let x0 = MARGIN_LEFT;
    let y0 = MARGIN_TOP + plot_h;
    let _ = writeln!(
        svg,
        r#"<line x1="{x0}" y1="{y0}" x2="{}" y2="{y0}" stroke="black" stroke-width="1"/>"#,
        MARGIN_LEFT + plot_w
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{MARGIN_TOP}" stroke="black" stroke-width="1"/>"#
    );
    for t in ticks(x_lo, x_hi, 5) {
        let px = sx(t);
        let _ = writeln!(
            svg,
            r#"<line x1="{px}" y1="{y0}" x2="{px}" y2="{}" stroke="black" stroke-width="1"/>"#,
            y0 + 5.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{px}" y="{}" font-size="12" text-anchor="middle">{}</text>"#,
            y0 + 20.0,
            format_tick(t)
        );
    }
    for t in ticks(y_lo, y_hi, 5) {
        let py = sy(t);
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{py}" x2="{x0}" y2="{py}" stroke="black" stroke-width="1"/>"#,
            x0 - 5.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="12" text-anchor="end">{}</text>"#,
            x0 - 8.0,
            py + 4.0,
            format_tick(t)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-size="14" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 15.0,
        escape_xml(x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="20" y="{}" font-size="14" text-anchor="middle" transform="rotate(-90 20 {})">{}</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0,
        escape_xml(y_label)
    );

    // one polyline per series plus a legend row
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> =
            s.xs.iter().zip(&s.ys).map(|(&x, &y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            points.join(" ")
        );
        let ly = MARGIN_TOP + 20.0 + 22.0 * i as f64;
        let lx = MARGIN_LEFT + plot_w + 15.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            lx + 25.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="12">{}</text>"#,
            lx + 32.0,
            ly + 4.0,
            escape_xml(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn format_tick(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e7 {
        format!("{}", v as i64)
    } else {
        format!("{v:.3}")
    }
}

/// Writes the chart and a sibling CSV ("<stem>.csv") of the plotted data.
pub fn emit_plot(series: &[Series], path: &Path, x_label: &str, y_label: &str) -> Result<(), PlotError> {
    let svg = render_line_chart(series, x_label, y_label)?;
    crate::write_atomic(path, &svg)?;
    let mut csv = String::from("series,x,y\n");
    for s in series {
        for (&x, &y) in s.xs.iter().zip(&s.ys) {
            let _ = writeln!(csv, "{},{x:.16e},{y:.16e}", s.label);
        }
    }
    crate::write_atomic(&path.with_extension("csv"), &csv)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_is_well_formed_xml() {
        let series = vec![
            Series { label: "a & b".into(), xs: vec![1.0, 2.0, 3.0], ys: vec![1.5, 1.2, 1.1] },
            Series { label: "<c>".into(), xs: vec![1.0, 2.0, 3.0], ys: vec![2.0, 1.9, 1.4] },
        ];
        let svg = render_line_chart(&series, "n", "C*").unwrap();
        let doc = roxmltree::Document::parse(&svg).unwrap();
        let polylines =
            doc.descendants().filter(|node| node.has_tag_name("polyline")).count();
        assert_eq!(polylines, 2);
    }

    #[test]
    fn single_point_series_renders() {
        let series =
            vec![Series { label: "only".into(), xs: vec![5.0], ys: vec![1.0] }];
        let svg = render_line_chart(&series, "n", "C*").unwrap();
        roxmltree::Document::parse(&svg).unwrap();
    }

    #[test]
    fn empty_inputs_are_rejected() {
        assert!(matches!(render_line_chart(&[], "n", "C*"), Err(PlotError::EmptySeries)));
        let bad = vec![Series { label: "x".into(), xs: vec![1.0], ys: vec![] }];
        assert!(matches!(
            render_line_chart(&bad, "n", "C*"),
            Err(PlotError::LengthMismatch(..))
        ));
    }
}
