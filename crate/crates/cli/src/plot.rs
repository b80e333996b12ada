//! Schematic log2-log2 error plot: points, confidence bars and fitted lines.

use std::fmt::Write as _;

use semidiscrete::analysis::ConvergenceReport;
use semidiscrete::SchemeKind;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;

fn color(kind: SchemeKind) -> &'static str {
    match kind {
        SchemeKind::Sd => "#1f77b4",
        SchemeKind::Tamed => "#d62728",
        SchemeKind::Hms => "#2ca02c",
        SchemeKind::Em => "#9467bd",
    }
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        let y = y.clamp(self.y0, self.y1);
        HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }
}

pub fn error_plot_svg(report: &ConvergenceReport, title: &str) -> String {
    let points: Vec<_> = report
        .rows
        .iter()
        .filter(|r| r.error > 0.0 && r.error.is_finite())
        .collect();
    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(
        svg,
        r#"<text x="{}" y="18" text-anchor="middle">{title}</text>"#,
        (WIDTH - RIGHT + LEFT) / 2.0
    )
    .unwrap();

    if points.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }
    let xs = points.iter().map(|r| r.dt.log2());
    let ys = points.iter().flat_map(|r| {
        let hi = (r.error + r.ci_half_width).log2();
        let lo = r.error - r.ci_half_width;
        [
            r.error.log2(),
            hi,
            if lo > 0.0 { lo.log2() } else { r.error.log2() },
        ]
    });
    let (xmin, xmax) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| {
        (a.min(x), b.max(x))
    });
    let (ymin, ymax) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| {
        (a.min(y), b.max(y))
    });
    let frame = Frame {
        x0: xmin.floor() - 0.5,
        x1: xmax.ceil() + 0.5,
        y0: ymin.floor() - 0.5,
        y1: ymax.ceil() + 0.5,
    };

    // axes and integer ticks
    let (bx, by) = (frame.px(frame.x0), frame.py(frame.y0));
    writeln!(
        svg,
        r#"<path d="M{bx},{} V{by} H{}" stroke="black" fill="none"/>"#,
        frame.py(frame.y1),
        frame.px(frame.x1)
    )
    .unwrap();
    let xstep = ((frame.x1 - frame.x0) / 10.0).ceil().max(1.0);
    let mut x = frame.x0.ceil();
    while x <= frame.x1 {
        let px = frame.px(x);
        writeln!(
            svg,
            r#"<line x1="{px}" y1="{by}" x2="{px}" y2="{}" stroke="black"/>"#,
            by + 5.0
        )
        .unwrap();
        writeln!(
            svg,
            r#"<text x="{px}" y="{}" text-anchor="middle">{x}</text>"#,
            by + 18.0
        )
        .unwrap();
        x += xstep;
    }
    let ystep = ((frame.y1 - frame.y0) / 10.0).ceil().max(1.0);
    let mut y = frame.y0.ceil();
    while y <= frame.y1 {
        let py = frame.py(y);
        writeln!(
            svg,
            r#"<line x1="{}" y1="{py}" x2="{bx}" y2="{py}" stroke="black"/>"#,
            bx - 5.0
        )
        .unwrap();
        writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="end">{y}</text>"#,
            bx - 8.0,
            py + 4.0
        )
        .unwrap();
        y += ystep;
    }
    writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">log2 dt</text>"#,
        frame.px((frame.x0 + frame.x1) / 2.0),
        HEIGHT - 10.0
    )
    .unwrap();
    writeln!(
        svg,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">log2 error</text>"#,
        frame.py((frame.y0 + frame.y1) / 2.0)
    )
    .unwrap();

    let mut legend_y = TOP + 10.0;
    let legend_x = WIDTH - RIGHT + 15.0;
    let mut schemes: Vec<SchemeKind> = points.iter().map(|r| r.scheme).collect();
    schemes.dedup();
    for scheme in schemes {
        let c = color(scheme);
        let rows: Vec<_> = points.iter().filter(|r| r.scheme == scheme).collect();
        for r in &rows {
            let (px, py) = (frame.px(r.dt.log2()), frame.py(r.error.log2()));
            let lo = r.error - r.ci_half_width;
            let ylo = if lo > 0.0 {
                frame.py(lo.log2())
            } else {
                frame.py(frame.y0)
            };
            let yhi = frame.py((r.error + r.ci_half_width).log2());
            writeln!(
                svg,
                r#"<line x1="{px}" y1="{ylo}" x2="{px}" y2="{yhi}" stroke="{c}"/>"#
            )
            .unwrap();
            let fill = if r.usable { c } else { "white" };
            writeln!(
                svg,
                r#"<circle cx="{px}" cy="{py}" r="3.5" fill="{fill}" stroke="{c}"/>"#
            )
            .unwrap();
        }
        let span = rows.iter().map(|r| r.dt.log2());
        let (lo, hi) = span.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| {
            (a.min(x), b.max(x))
        });
        writeln!(
            svg,
            r#"<text x="{legend_x}" y="{legend_y}" fill="{c}">{scheme}</text>"#
        )
        .unwrap();
        legend_y += 16.0;
        for (i, fit) in report
            .fits
            .iter()
            .filter(|f| f.scheme == scheme)
            .enumerate()
        {
            let dash = if i == 0 {
                ""
            } else {
                r#" stroke-dasharray="6 4""#
            };
            let line = |x: f64| fit.slope * x + fit.intercept;
            writeln!(
                svg,
                r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{c}"{dash}/>"#,
                frame.px(lo),
                frame.py(line(lo)),
                frame.px(hi),
                frame.py(line(hi))
            )
            .unwrap();
            writeln!(
                svg,
                r#"<text x="{}" y="{legend_y}" fill="{c}">{} slope {:.3}</text>"#,
                legend_x + 8.0,
                fit.fit,
                fit.slope
            )
            .unwrap();
            legend_y += 16.0;
        }
        legend_y += 6.0;
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use semidiscrete::analysis::{OrderFit, ReportRow};

    #[test]
    fn plot_has_points_bars_and_fits() {
        let rows = (1..=3)
            .map(|e| ReportRow {
                scheme: SchemeKind::Sd,
                level_exponent: e,
                dt: 0.5f64.powi(e as i32),
                error: 0.5f64.powi(e as i32),
                ci_half_width: 0.01,
                usable: true,
            })
            .collect();
        let report = ConvergenceReport {
            rows,
            fits: vec![OrderFit {
                scheme: SchemeKind::Sd,
                fit: "all".into(),
                points_used: 3,
                slope: 1.0,
                intercept: 0.0,
            }],
        };
        let svg = error_plot_svg(&report, "test");
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<circle").count(), 3);
        assert!(svg.contains("all slope 1.000"));
    }

    #[test]
    fn empty_report_is_still_valid_svg() {
        let svg = error_plot_svg(&ConvergenceReport::default(), "empty");
        assert!(svg.trim_end().ends_with("</svg>"));
    }
}
