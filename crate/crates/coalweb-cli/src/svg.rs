//! Deterministic, dependency-free SVG rendering: a space-time picture of a
//! path family, and stacked charts of estimator curves with error bars.
//!
//! Every string is built in a fixed order from the input data alone, so
//! identical inputs give byte-identical files.

use coalweb::{Path, PathFamily};
use std::collections::HashSet;
use std::fmt::Write;

const FAM_W: f64 = 800.0;
const FAM_H: f64 = 600.0;
const MARGIN: f64 = 48.0;

const PALETTE: [&str; 6] = [
    "#2a6f97", "#c44536", "#3a7d44", "#8248a8", "#b07d2b", "#3b3b3b",
];

fn px(v: f64) -> String {
    format!("{v:.2}")
}

/// Shortest decimal form for labels (round-trip formatting of the value).
fn label(v: f64) -> String {
    format!("{v}")
}

/// Space-time picture of a family: space horizontal, time vertical
/// (increasing upward). Paths with identical start and knots are drawn
/// once; one polyline per distinct path.
pub fn family_svg(fam: &PathFamily) -> String {
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    let mut kept: Vec<&Path> = Vec::new();
    for p in fam.non_sentinel() {
        let key: Vec<u64> = std::iter::once(p.start_time().to_bits())
            .chain(p.knots().iter().flat_map(|&(t, x)| [t.to_bits(), x.to_bits()]))
            .collect();
        if seen.insert(key) {
            kept.push(p);
        }
    }

    let mut s = String::new();
    let _ = write!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{FAM_W}\" height=\"{FAM_H}\" \
         viewBox=\"0 0 {FAM_W} {FAM_H}\">\n<rect width=\"{FAM_W}\" height=\"{FAM_H}\" \
         fill=\"#ffffff\"/>\n"
    );
    if kept.is_empty() {
        s.push_str("<text x=\"24\" y=\"40\" font-family=\"monospace\" font-size=\"14\">empty family</text>\n</svg>\n");
        return s;
    }

    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut t0, mut t1) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in &kept {
        for &(t, x) in p.knots() {
            x0 = x0.min(x);
            x1 = x1.max(x);
            t0 = t0.min(t);
            t1 = t1.max(t);
        }
    }
    if x1 - x0 < 1e-12 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if t1 - t0 < 1e-12 {
        t0 -= 0.5;
        t1 += 0.5;
    }
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (FAM_W - 2.0 * MARGIN);
    let sy = |t: f64| FAM_H - MARGIN - (t - t0) / (t1 - t0) * (FAM_H - 2.0 * MARGIN);

    // frame and axis labels
    let _ = writeln!(
        s,
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#999999\"/>",
        px(MARGIN),
        px(MARGIN),
        px(FAM_W - 2.0 * MARGIN),
        px(FAM_H - 2.0 * MARGIN)
    );
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\">x = {}</text>",
        px(MARGIN),
        px(FAM_H - MARGIN + 16.0),
        label(x0)
    );
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"end\">x = {}</text>",
        px(FAM_W - MARGIN),
        px(FAM_H - MARGIN + 16.0),
        label(x1)
    );
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\">t = {}</text>",
        px(4.0),
        px(FAM_H - MARGIN),
        label(t0)
    );
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\">t = {}</text>",
        px(4.0),
        px(MARGIN + 4.0),
        label(t1)
    );

    for p in &kept {
        s.push_str("<polyline fill=\"none\" stroke=\"#2a6f97\" stroke-width=\"1\" stroke-opacity=\"0.75\" points=\"");
        for (k, &(t, x)) in p.knots().iter().enumerate() {
            if k > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{},{}", px(sx(x)), px(sy(t)));
        }
        s.push_str("\"/>\n");
    }
    s.push_str("</svg>\n");
    s
}

/// One chart series: points are `(x, y, std_error)`; a positive error draws
/// a vertical bar `y - se .. y + se`.
pub struct Series {
    pub name: String,
    pub log_x: bool,
    pub points: Vec<(f64, f64, f64)>,
}

const PANEL_W: f64 = 720.0;
const PANEL_H: f64 = 240.0;
const PANEL_GAP: f64 = 24.0;
const PM: f64 = 46.0; // panel margin

/// Stacked panels, one per series, in input order.
pub fn chart_svg(series: &[Series]) -> String {
    let total_h = PANEL_GAP + series.len() as f64 * (PANEL_H + PANEL_GAP);
    let mut s = String::new();
    let _ = write!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{PANEL_W}\" height=\"{total_h}\" \
         viewBox=\"0 0 {PANEL_W} {total_h}\">\n<rect width=\"{PANEL_W}\" height=\"{total_h}\" \
         fill=\"#ffffff\"/>\n"
    );
    for (idx, sr) in series.iter().enumerate() {
        let oy = PANEL_GAP + idx as f64 * (PANEL_H + PANEL_GAP);
        panel(&mut s, sr, oy, PALETTE[idx % PALETTE.len()]);
    }
    s.push_str("</svg>\n");
    s
}

fn panel(s: &mut String, sr: &Series, oy: f64, color: &str) {
    let tx = |x: f64| if sr.log_x { x.log10() } else { x };
    let (mut u0, mut u1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y, se) in &sr.points {
        let u = tx(x);
        u0 = u0.min(u);
        u1 = u1.max(u);
        y0 = y0.min(y - se.max(0.0));
        y1 = y1.max(y + se.max(0.0));
    }
    if u1 - u0 < 1e-12 {
        u0 -= 0.5;
        u1 += 0.5;
    }
    if y1 - y0 < 1e-12 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let pad = 0.06 * (y1 - y0);
    y0 -= pad;
    y1 += pad;

    let sx = |x: f64| PM + (tx(x) - u0) / (u1 - u0) * (PANEL_W - 2.0 * PM);
    let sy = |y: f64| oy + PANEL_H - PM + (y0 - y) / (y1 - y0) * (PANEL_H - 2.0 * PM) + 0.0;

    let _ = write!(
        s,
        "<g class=\"panel\">\n<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#999999\"/>\n",
        px(PM),
        px(oy + PM),
        px(PANEL_W - 2.0 * PM),
        px(PANEL_H - 2.0 * PM)
    );
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"13\">{}</text>",
        px(PM),
        px(oy + PM - 8.0),
        sr.name
    );
    if sr.log_x {
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"end\">log scale</text>",
            px(PANEL_W - PM),
            px(oy + PM - 8.0)
        );
    }
    // end-of-range tick labels, in data units
    let (xlo, xhi) = sr
        .points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &(x, _, _)| {
            (a.min(x), b.max(x))
        });
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"11\">{}</text>",
        px(PM),
        px(oy + PANEL_H - PM + 16.0),
        label(xlo)
    );
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"end\">{}</text>",
        px(PANEL_W - PM),
        px(oy + PANEL_H - PM + 16.0),
        label(xhi)
    );
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"11\">{}</text>",
        px(4.0),
        px(oy + PANEL_H - PM),
        label(y0)
    );
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"11\">{}</text>",
        px(4.0),
        px(oy + PM + 4.0),
        label(y1)
    );

    // error bars first, so markers sit on top
    for &(x, y, se) in &sr.points {
        if se > 0.0 {
            let (cx, ya, yb) = (sx(x), sy(y - se), sy(y + se));
            let _ = writeln!(
                s,
                "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"{3}\" stroke-width=\"1\"/>",
                px(cx),
                px(ya),
                px(yb),
                color
            );
            for ye in [ya, yb] {
                let _ = writeln!(
                    s,
                    "<line x1=\"{}\" y1=\"{2}\" x2=\"{}\" y2=\"{2}\" stroke=\"{3}\" stroke-width=\"1\"/>",
                    px(cx - 3.0),
                    px(cx + 3.0),
                    px(ye),
                    color
                );
            }
        }
    }
    if sr.points.len() >= 2 {
        s.push_str("<polyline fill=\"none\" stroke=\"");
        s.push_str(color);
        s.push_str("\" stroke-width=\"1.5\" points=\"");
        for (k, &(x, y, _)) in sr.points.iter().enumerate() {
            if k > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{},{}", px(sx(x)), px(sy(y)));
        }
        s.push_str("\"/>\n");
    }
    for &(x, y, _) in &sr.points {
        let _ = writeln!(
            s,
            "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{}\"/>",
            px(sx(x)),
            px(sy(y)),
            color
        );
    }
    s.push_str("</g>\n");
}

#[cfg(test)]
mod tests {
    use super::*;
    use coalweb::Path;

    fn path(start: f64, knots: &[(f64, f64)]) -> Path {
        Path::new(start, knots.to_vec()).unwrap()
    }

    #[test]
    fn family_picture_draws_each_distinct_path_once() {
        let a = path(0.0, &[(0.0, 0.0), (1.0, 1.0)]);
        let b = path(0.0, &[(0.0, 2.0), (1.0, 1.0)]);
        let fam = PathFamily::from_paths_exact(vec![a.clone(), b, a]);
        let svg = family_svg(&fam);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.starts_with("<svg "));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn empty_family_renders_a_placeholder() {
        let svg = family_svg(&PathFamily::from_paths_exact(vec![]));
        assert!(svg.contains("empty family"));
    }

    #[test]
    fn charts_stack_one_panel_per_series_and_mark_log_axes() {
        let series = vec![
            Series {
                name: "b1_eps".into(),
                log_x: true,
                points: vec![(0.1, 0.06, 0.01), (0.2, 0.11, 0.01), (0.4, 0.22, 0.02)],
            },
            Series {
                name: "flat".into(),
                log_x: false,
                points: vec![(0.0, 1.0, 0.0)],
            },
        ];
        let svg = chart_svg(&series);
        assert_eq!(svg.matches("<g class=\"panel\">").count(), 2);
        assert_eq!(svg.matches("log scale").count(), 1);
        assert!(svg.contains("b1_eps"));
        // a second render is byte-identical
        assert_eq!(svg, chart_svg(&series));
    }
}
