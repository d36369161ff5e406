//! Sweep report serialization: a fixed-header CSV and a standalone SVG line
//! chart. Both are byte-deterministic for identical inputs.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// One (strategy, budget) cell of a sweep report. `auc`, `average_ecb` and
/// `p_value` are per-strategy aggregates repeated on each of its rows;
/// the reference strategy carries no p-value.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub strategy: String,
    pub budget_hours: u64,
    pub median_extra: f64,
    pub auc: f64,
    pub average_ecb: f64,
    pub p_value: Option<f64>,
}

/// A strategy's median-extra curve over the budget axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub label: String,
    pub points: Vec<(u64, f64)>,
}

pub const REPORT_HEADER: &str = "strategy,budget_hours,median_extra,auc,average_ecb,p_value";

pub fn write_report(rows: &[ReportRow], mut w: impl Write) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::EmptyReport);
    }
    let io = |e: std::io::Error| Error::io("<report>", e);
    writeln!(w, "{REPORT_HEADER}").map_err(io)?;
    for r in rows {
        let p = r.p_value.map(|p| p.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.strategy, r.budget_hours, r.median_extra, r.auc, r.average_ecb, p
        )
        .map_err(io)?;
    }
    Ok(())
}

pub fn save_report(rows: &[ReportRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_report(rows, &mut buf)?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

const SVG_WIDTH: f64 = 800.0;
const SVG_HEIGHT: f64 = 500.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 160.0;
const MARGIN_TOP: f64 = 20.0;
const MARGIN_BOTTOM: f64 = 50.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

/// Renders one polyline per curve into a fixed 800x500 SVG 1.1 document.
/// Coordinates are emitted with two decimals so output is byte-stable.
pub fn write_svg(curves: &[Curve], mut w: impl Write) -> Result<()> {
    if curves.is_empty() || curves.iter().any(|c| c.points.is_empty()) {
        return Err(Error::EmptyPlot);
    }
    let io = |e: std::io::Error| Error::io("<svg>", e);

    let x_min = curves
        .iter()
        .flat_map(|c| c.points.iter().map(|p| p.0))
        .min()
        .expect("non-empty");
    let x_max = curves
        .iter()
        .flat_map(|c| c.points.iter().map(|p| p.0))
        .max()
        .expect("non-empty");
    let y_max = curves
        .iter()
        .flat_map(|c| c.points.iter().map(|p| p.1))
        .fold(0.0f64, f64::max)
        .max(1e-9);

    let plot_w = SVG_WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = SVG_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let x_span = (x_max - x_min).max(1) as f64;
    let px = |x: u64| MARGIN_LEFT + (x - x_min) as f64 / x_span * plot_w;
    let py = |y: f64| MARGIN_TOP + (1.0 - y / y_max) * plot_h;

    writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" viewBox="0 0 {SVG_WIDTH} {SVG_HEIGHT}">"#
    )
    .map_err(io)?;
    writeln!(
        w,
        r#"<rect width="{SVG_WIDTH}" height="{SVG_HEIGHT}" fill="white"/>"#
    )
    .map_err(io)?;

    // axes
    let x0 = MARGIN_LEFT;
    let y0 = MARGIN_TOP + plot_h;
    writeln!(
        w,
        r#"<line x1="{x0:.2}" y1="{:.2}" x2="{x0:.2}" y2="{y0:.2}" stroke="black"/>"#,
        MARGIN_TOP
    )
    .map_err(io)?;
    writeln!(
        w,
        r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{:.2}" y2="{y0:.2}" stroke="black"/>"#,
        MARGIN_LEFT + plot_w
    )
    .map_err(io)?;

    // ticks: x at every distinct budget (thinned to at most 12), y in fifths
    let mut xs: Vec<u64> = curves
        .iter()
        .flat_map(|c| c.points.iter().map(|p| p.0))
        .collect();
    xs.sort_unstable();
    xs.dedup();
    let stride = xs.len().div_ceil(12).max(1);
    for x in xs.iter().step_by(stride) {
        let cx = px(*x);
        writeln!(
            w,
            r#"<line x1="{cx:.2}" y1="{y0:.2}" x2="{cx:.2}" y2="{:.2}" stroke="black"/>"#,
            y0 + 5.0
        )
        .map_err(io)?;
        writeln!(
            w,
            r#"<text x="{cx:.2}" y="{:.2}" font-size="12" text-anchor="middle">{x}</text>"#,
            y0 + 20.0
        )
        .map_err(io)?;
    }
    for i in 0..=5u32 {
        let v = y_max * f64::from(i) / 5.0;
        let cy = py(v);
        writeln!(
            w,
            r#"<line x1="{:.2}" y1="{cy:.2}" x2="{x0:.2}" y2="{cy:.2}" stroke="black"/>"#,
            x0 - 5.0
        )
        .map_err(io)?;
        writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="end">{v:.1}</text>"#,
            x0 - 8.0,
            cy + 4.0
        )
        .map_err(io)?;
    }

    // axis labels
    writeln!(
        w,
        r#"<text x="{:.2}" y="{:.2}" font-size="14" text-anchor="middle">budget (hours)</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        SVG_HEIGHT - 10.0
    )
    .map_err(io)?;
    writeln!(
        w,
        r#"<text x="18" y="{:.2}" font-size="14" text-anchor="middle" transform="rotate(-90 18 {:.2})">extra covered branches</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    )
    .map_err(io)?;

    // one polyline per curve plus a legend swatch
    for (i, curve) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = curve
            .points
            .iter()
            .map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y)))
            .collect();
        writeln!(
            w,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            pts.join(" ")
        )
        .map_err(io)?;
        let ly = MARGIN_TOP + 16.0 + i as f64 * 20.0;
        let lx = SVG_WIDTH - MARGIN_RIGHT + 14.0;
        writeln!(
            w,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            lx + 24.0
        )
        .map_err(io)?;
        writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}" font-size="12">{}</text>"#,
            lx + 30.0,
            ly + 4.0,
            curve.label
        )
        .map_err(io)?;
    }
    writeln!(w, "</svg>").map_err(io)?;
    Ok(())
}

pub fn save_svg(curves: &[Curve], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_svg(curves, &mut buf)?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_rows() -> Vec<ReportRow> {
        vec![
            ReportRow {
                strategy: "pri_mg".into(),
                budget_hours: 1,
                median_extra: 12.5,
                auc: 37.5,
                average_ecb: 18.75,
                p_value: None,
            },
            ReportRow {
                strategy: "pri_mg".into(),
                budget_hours: 2,
                median_extra: 25.0,
                auc: 37.5,
                average_ecb: 18.75,
                p_value: None,
            },
            ReportRow {
                strategy: "default".into(),
                budget_hours: 1,
                median_extra: 0.0,
                auc: 0.0,
                average_ecb: 0.0,
                p_value: Some(0.03125),
            },
            ReportRow {
                strategy: "default".into(),
                budget_hours: 2,
                median_extra: 0.0,
                auc: 0.0,
                average_ecb: 0.0,
                p_value: Some(0.03125),
            },
        ]
    }

    #[test]
    fn test_report_layout() {
        let mut buf = Vec::new();
        write_report(&sample_rows(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], REPORT_HEADER);
        assert_eq!(lines[1], "pri_mg,1,12.5,37.5,18.75,");
        assert_eq!(lines[3], "default,1,0,0,0,0.03125");
        assert_eq!(lines.len(), 5);
    }

    #[test]
    fn test_report_empty_rejected() {
        let mut buf = Vec::new();
        assert!(matches!(
            write_report(&[], &mut buf),
            Err(Error::EmptyReport)
        ));
    }

    fn sample_curves() -> Vec<Curve> {
        (0..2)
            .map(|s| Curve {
                label: format!("s{s}"),
                points: (1..=24).map(|b| (b, (s * 10 + b) as f64)).collect(),
            })
            .collect()
    }

    #[test]
    fn test_svg_structure() {
        let mut buf = Vec::new();
        write_svg(&sample_curves(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("<svg "));
        assert!(text.trim_end().ends_with("</svg>"));
        let polylines: Vec<&str> = text
            .lines()
            .filter(|l| l.starts_with("<polyline"))
            .collect();
        assert_eq!(polylines.len(), 2);
        for p in polylines {
            let points = p.split("points=\"").nth(1).unwrap();
            let n = points.split('"').next().unwrap().split(' ').count();
            assert_eq!(n, 24);
        }
        assert!(text.contains("budget (hours)"));
        assert!(text.contains(">s0<") && text.contains(">s1<"));
    }

    #[test]
    fn test_svg_byte_deterministic() {
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_svg(&sample_curves(), &mut a).unwrap();
        write_svg(&sample_curves(), &mut b).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn test_svg_empty_rejected() {
        let mut buf = Vec::new();
        assert!(matches!(write_svg(&[], &mut buf), Err(Error::EmptyPlot)));
        let hollow = vec![Curve {
            label: "x".into(),
            points: vec![],
        }];
        assert!(matches!(
            write_svg(&hollow, &mut buf),
            Err(Error::EmptyPlot)
        ));
    }

    #[test]
    fn test_svg_single_point_curves() {
        // degenerate x-span must not divide by zero
        let curves = vec![Curve {
            label: "one".into(),
            points: vec![(4, 7.0)],
        }];
        let mut buf = Vec::new();
        write_svg(&curves, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().contains("<polyline"));
    }

    #[test]
    fn test_svg_all_zero_curve() {
        let curves = vec![Curve {
            label: "flat".into(),
            points: vec![(1, 0.0), (2, 0.0)],
        }];
        let mut buf = Vec::new();
        write_svg(&curves, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(!text.contains("NaN") && !text.contains("inf"));
    }
}
