//! Log-log SVG chart of sweep rows: realized error and each bound versus `n`.

use std::fmt::Write;

use crate::error::{Error, Result};
use crate::experiments::SweepRow;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 64.0;

struct Series {
    name: &'static str,
    color: &'static str,
    get: fn(&SweepRow) -> f64,
}

const SERIES: [Series; 4] = [
    Series {
        name: "true error",
        color: "#000000",
        get: |r| r.true_rel_err,
    },
    Series {
        name: "deterministic",
        color: "#d62728",
        get: |r| r.det_bound,
    },
    Series {
        name: "azuma",
        color: "#1f77b4",
        get: |r| r.azuma_bound,
    },
    Series {
        name: "martingale",
        color: "#2ca02c",
        get: |r| r.martingale_bound,
    },
];

fn usable(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

/// Renders `rows` as a standalone SVG document.
///
/// Points with non-positive or non-finite values cannot sit on a log axis
/// and are dropped. Fails if nothing remains to draw.
pub fn render_svg(rows: &[SweepRow]) -> Result<String> {
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for r in rows {
        for s in &SERIES {
            let y = (s.get)(r);
            if r.n > 0 && usable(y) {
                pts.push((r.n as f64, y));
            }
        }
    }
    if pts.is_empty() {
        return Err(Error::Config("no plottable points".into()));
    }
    let bounds = |f: fn(&(f64, f64)) -> f64| {
        let lo = pts
            .iter()
            .map(f)
            .fold(f64::INFINITY, f64::min)
            .log10()
            .floor();
        let hi = pts
            .iter()
            .map(f)
            .fold(f64::NEG_INFINITY, f64::max)
            .log10()
            .ceil();
        (lo, if hi > lo { hi } else { lo + 1.0 })
    };
    let (x0, x1) = bounds(|p| p.0);
    let (y0, y1) = bounds(|p| p.1);
    let sx = |x: f64| MARGIN + (x.log10() - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y.log10() - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        svg,
        r#"<rect x="{left}" y="{top}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        right - left,
        bottom - top
    );
    for e in x0 as i32..=x1 as i32 {
        let x = sx(10f64.powi(e));
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.1}" y1="{top}" x2="{x:.1}" y2="{bottom}" stroke="#dddddd"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">1e{e}</text>"##,
            bottom + 16.0
        );
    }
    for e in y0 as i32..=y1 as i32 {
        let y = sy(10f64.powi(e));
        let _ = writeln!(
            svg,
            r##"<line x1="{left}" y1="{y:.1}" x2="{right}" y2="{y:.1}" stroke="#dddddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">1e{e}</text>"##,
            left - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">n</text>"#,
        WIDTH / 2.0,
        HEIGHT - 20.0
    );

    for (i, s) in SERIES.iter().enumerate() {
        let mut line: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.n > 0 && usable((s.get)(r)))
            .map(|r| (r.n as f64, (s.get)(r)))
            .collect();
        line.sort_by(|a, b| a.0.total_cmp(&b.0));
        if !line.is_empty() {
            let path: Vec<String> = line
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
                s.color,
                path.join(" ")
            );
        }
        let ly = top + 16.0 + 16.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            left + 10.0,
            left + 30.0,
            s.color,
            left + 36.0,
            ly + 4.0,
            s.name
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
