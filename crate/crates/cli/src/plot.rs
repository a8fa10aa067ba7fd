//! Static SVG plots with a logarithmic error axis.

use std::fmt::Write;

use crate::config::Study;
use crate::study::Row;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XScale {
    Linear,
    Log,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const W: f64 = 760.0;
const H: f64 = 460.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 220.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders the series; points with non-positive or non-finite `y` are dropped.
pub fn render(title: &str, x_label: &str, y_label: &str, xscale: XScale, series: &[Series]) -> String {
    let series: Vec<Series> = series
        .iter()
        .map(|s| Series {
            label: s.label.clone(),
            points: s
                .points
                .iter()
                .copied()
                .filter(|(x, y)| y.is_finite() && *y > 0.0 && x.is_finite() && (xscale == XScale::Linear || *x > 0.0))
                .collect(),
        })
        .filter(|s| !s.points.is_empty())
        .collect();
    let tx = |x: f64| if xscale == XScale::Log { x.log10() } else { x };
    let all: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().map(|&(x, y)| (tx(x), y.log10()))).collect();
    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
    writeln!(svg, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, (LEFT + W - RIGHT) / 2.0, escape(title)).unwrap();
    if all.is_empty() {
        writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">no data</text></svg>"#, W / 2.0, H / 2.0).unwrap();
        return svg;
    }
    let (mut x0, mut x1) = all.iter().fold((f64::MAX, f64::MIN), |(a, b), p| (a.min(p.0), b.max(p.0)));
    if x1 - x0 < 1e-12 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    let pad = 0.05 * (x1 - x0);
    let (x0, x1) = (x0 - pad, x1 + pad);
    let (ymin, ymax) = all.iter().fold((f64::MAX, f64::MIN), |(a, b), p| (a.min(p.1), b.max(p.1)));
    let (y0, mut y1) = (ymin.floor(), ymax.ceil());
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let py = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

    writeln!(svg, r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>"##).unwrap();
    let step = ((y1 - y0) / 10.0).ceil().max(1.0);
    let mut d = y0;
    while d <= y1 + 1e-9 {
        let y = py(d);
        writeln!(
            svg,
            r##"<line x1="{LEFT}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">1e{d}</text>"##,
            LEFT + pw,
            LEFT - 6.0,
            y + 4.0
        )
        .unwrap();
        d += step;
    }
    let mut xt: Vec<f64> = series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).collect();
    xt.sort_by(|a, b| a.total_cmp(b));
    xt.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));
    for x in xt {
        let label = if xscale == XScale::Log { format!("{x:.3}") } else { format!("{x}") };
        let sx = px(tx(x));
        writeln!(
            svg,
            r##"<line x1="{sx:.1}" y1="{:.1}" x2="{sx:.1}" y2="{:.1}" stroke="#333"/><text x="{sx:.1}" y="{:.1}" text-anchor="middle">{label}</text>"##,
            TOP + ph,
            TOP + ph + 5.0,
            TOP + ph + 20.0
        )
        .unwrap();
    }
    writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, H - 15.0, escape(x_label)).unwrap();
    writeln!(
        svg,
        r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(y_label)
    )
    .unwrap();
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.1},{:.1}", px(tx(x)), py(y.log10()))).collect();
        writeln!(svg, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, pts.join(" ")).unwrap();
        for &(x, y) in &s.points {
            writeln!(svg, r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{color}"/>"#, px(tx(x)), py(y.log10())).unwrap();
        }
        let ly = TOP + 10.0 + 18.0 * i as f64;
        writeln!(
            svg,
            r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            W - RIGHT + 12.0,
            W - RIGHT + 32.0,
            W - RIGHT + 38.0,
            ly + 4.0,
            escape(&s.label)
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    svg
}

fn group(rows: &[Row], key: impl Fn(&Row) -> String, x: impl Fn(&Row) -> Option<f64>, y: impl Fn(&Row) -> Option<f64>) -> Vec<Series> {
    let mut out: Vec<Series> = Vec::new();
    for r in rows.iter().filter(|r| r.is_ok()) {
        let (Some(xv), Some(yv)) = (x(r), y(r)) else { continue };
        let k = key(r);
        match out.iter_mut().find(|s| s.label == k) {
            Some(s) => s.points.push((xv, yv)),
            None => out.push(Series {
                label: k,
                points: vec![(xv, yv)],
            }),
        }
    }
    for s in &mut out {
        s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    out
}

/// File name and SVG text of each plot of a study.
pub fn study_plots(study: Study, rows: &[Row]) -> Vec<(String, String)> {
    type Metric = (&'static str, &'static str, fn(&Row) -> Option<f64>);
    let metrics: [Metric; 3] = [
        ("h1", "relative H1 error", |r| r.h1_rel),
        ("l2", "relative L2 error", |r| r.l2_rel),
        ("kappa", "condition number", |r| r.kappa),
    ];
    let mut out = Vec::new();
    for (tag, ylabel, metric) in metrics {
        if !rows.iter().any(|r| metric(r).is_some()) {
            continue;
        }
        let (xlabel, xscale, series) = match study {
            Study::Patch | Study::PStudy => (
                "p",
                XScale::Linear,
                group(rows, |r| format!("{} {} {}", r.mesh, r.choice, r.stab), |r| Some(f64::from(r.p)), metric),
            ),
            Study::HStudy => (
                "h",
                XScale::Log,
                group(rows, |r| format!("p={} {} {}", r.p, r.choice, r.stab), |r| r.h, metric),
            ),
            Study::Collapse => (
                "level",
                XScale::Linear,
                group(rows, |r| format!("p={} {} {}", r.p, r.choice, r.stab), |r| r.level.map(f64::from), metric),
            ),
        };
        let title = format!("{study}: {ylabel}");
        out.push((format!("{study}_{tag}.svg"), render(&title, xlabel, ylabel, xscale, &series)));
    }
    out
}
