//! Minimal SVG emitters: per-scale bar charts, heatmaps, and the planar
//! reconstruction picture.

use std::fmt::Write;

use multibeta::beta::CarlesonReport;
use multibeta::geometry::{AxisBox, Hyperplane};
use multibeta::reconstruct::ReconstructionReport;

const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN: f64 = 50.0;

fn header(out: &mut String, w: f64, h: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
}

/// Bars of `log10(contribution)` per depth.
pub fn level_bars(report: &CarlesonReport, title: &str) -> String {
    let mut out = String::new();
    header(&mut out, W, H);
    let _ = writeln!(out, r#"<text x="{MARGIN}" y="24">{title}</text>"#);
    let logs: Vec<Option<f64>> =
        report.levels.iter().map(|l| (l.contribution > 0.0).then(|| l.contribution.log10())).collect();
    let present: Vec<f64> = logs.iter().flatten().copied().collect();
    let (lo, hi) = if present.is_empty() {
        (-1.0, 0.0)
    } else {
        let lo = present.iter().copied().fold(f64::INFINITY, f64::min).floor();
        let hi = present.iter().copied().fold(f64::NEG_INFINITY, f64::max).ceil();
        (lo - 1.0, hi.max(lo))
    };
    let plot_h = H - 2.0 * MARGIN;
    let slot = (W - 2.0 * MARGIN) / logs.len().max(1) as f64;
    let y_of = |v: f64| MARGIN + plot_h * (hi - v) / (hi - lo);
    let base = H - MARGIN;
    let _ = writeln!(out, r#"<line x1="{MARGIN}" y1="{base}" x2="{}" y2="{base}" stroke="black"/>"#, W - MARGIN);
    let _ = writeln!(out, r#"<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{base}" stroke="black"/>"#);
    let mut tick = lo;
    while tick <= hi + 1e-9 {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{:.2}" text-anchor="end">1e{tick}</text>"#,
            MARGIN - 4.0,
            y_of(tick) + 4.0
        );
        tick += 1.0;
    }
    for (i, (l, v)) in report.levels.iter().zip(&logs).enumerate() {
        let x = MARGIN + slot * (i as f64 + 0.15);
        if let Some(v) = v {
            let y = y_of(*v);
            let _ = writeln!(
                out,
                r##"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="#4477aa"/>"##,
                slot * 0.7,
                base - y
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            x + slot * 0.35,
            base + 16.0,
            l.depth
        );
    }
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">depth</text>"#, W / 2.0, H - 10.0);
    out.push_str("</svg>\n");
    out
}

fn ramp(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let r = (255.0 * t).round() as u8;
    let g = (255.0 * (1.0 - (2.0 * t - 1.0).abs())).round() as u8 / 2 + 64;
    let b = (255.0 * (1.0 - t)).round() as u8;
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// Cells `(x, y, width, height, value)` in data coordinates, coloured on a
/// linear ramp over `[0, max]`, with a legend.
pub fn heatmap(cells: &[(f64, f64, f64, f64, f64)], title: &str, x_label: &str, y_label: &str) -> String {
    let mut out = String::new();
    header(&mut out, W, H + 40.0);
    let _ = writeln!(out, r#"<text x="{MARGIN}" y="24">{title}</text>"#);
    let x0 = cells.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
    let x1 = cells.iter().map(|c| c.0 + c.2).fold(f64::NEG_INFINITY, f64::max);
    let y0 = cells.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    let y1 = cells.iter().map(|c| c.1 + c.3).fold(f64::NEG_INFINITY, f64::max);
    let max = cells.iter().map(|c| c.4).fold(0.0, f64::max);
    let size = H - 2.0 * MARGIN;
    let sx = size / (x1 - x0);
    let sy = size / (y1 - y0);
    for &(x, y, w, h, v) in cells {
        let t = if max > 0.0 { v / max } else { 0.0 };
        let _ = writeln!(
            out,
            r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="{}"/>"#,
            MARGIN + (x - x0) * sx,
            MARGIN + (y1 - y - h) * sy,
            w * sx,
            h * sy,
            ramp(t)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{x_label}</text>"#,
        MARGIN + size / 2.0,
        H - MARGIN + 20.0
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.2}" transform="rotate(-90 16 {:.2})" text-anchor="middle">{y_label}</text>"#,
        MARGIN + size / 2.0,
        MARGIN + size / 2.0
    );
    let lx = MARGIN + size + 40.0;
    for k in 0..50 {
        let t = k as f64 / 49.0;
        let _ = writeln!(
            out,
            r#"<rect x="{lx}" y="{:.2}" width="20" height="{:.2}" fill="{}"/>"#,
            MARGIN + size * (1.0 - t) - size / 50.0,
            size / 50.0 + 0.5,
            ramp(t)
        );
    }
    let _ = writeln!(out, r#"<text x="{}" y="{MARGIN}">{max:.3e}</text>"#, lx + 26.0);
    let _ = writeln!(out, r#"<text x="{}" y="{:.2}">0</text>"#, lx + 26.0, MARGIN + size);
    out.push_str("</svg>\n");
    out
}

fn line_through_view(h: &Hyperplane, view: &AxisBox) -> Option<((f64, f64), (f64, f64))> {
    let base = [h.normal[0] * h.offset, h.normal[1] * h.offset];
    let dir = [-h.normal[1], h.normal[0]];
    let (s0, s1) = view.clip_line(&base, &dir)?;
    Some(((base[0] + s0 * dir[0], base[1] + s0 * dir[1]), (base[0] + s1 * dir[0], base[1] + s1 * dir[1])))
}

/// Planes, simplex, `Q` and `cQ` in the unit-cube coordinates of a planar
/// reconstruction.
pub fn reconstruction(report: &ReconstructionReport) -> String {
    let mut out = String::new();
    let size = 520.0;
    header(&mut out, size, size);
    let view = AxisBox::cube(vec![-0.75, -0.75], 2.5).expect("view box");
    let s = size / 2.5;
    let px = |x: f64, y: f64| (((x + 0.75) * s), (size - (y + 0.75) * s));
    let rect = |out: &mut String, b: &AxisBox, style: &str| {
        let (x, y) = px(b.min[0], b.min[1] + b.sides[1]);
        let _ = writeln!(
            out,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" {style}/>"#,
            b.sides[0] * s,
            b.sides[1] * s
        );
    };
    let unit = AxisBox::cube(vec![0.0, 0.0], 1.0).expect("unit");
    rect(&mut out, &unit, r#"fill="none" stroke="black""#);
    rect(&mut out, &unit.dilate(report.params.inner), r##"fill="#dd8844" stroke="none""##);
    for (h, style) in report
        .selection
        .base
        .iter()
        .map(|h| (h, r##"stroke="#999999" stroke-dasharray="4 3""##))
        .chain(report.selection.perturbed.iter().map(|h| (h, r##"stroke="#4477aa""##)))
    {
        if let Some((a, b)) = line_through_view(h, &view) {
            let (x1, y1) = px(a.0, a.1);
            let (x2, y2) = px(b.0, b.1);
            let _ = writeln!(out, r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" {style}/>"#);
        }
    }
    let pts: Vec<String> = report
        .selection
        .corners
        .iter()
        .map(|c| {
            let (x, y) = px(c[0], c[1]);
            format!("{x:.2},{y:.2}")
        })
        .collect();
    let _ =
        writeln!(out, r##"<polygon points="{}" fill="#4477aa" fill-opacity="0.15" stroke="#4477aa"/>"##, pts.join(" "));
    out.push_str("</svg>\n");
    out
}
