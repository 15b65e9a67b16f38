//! Minimal static SVG figures: loss curves and 2-D scatter plots.

use std::fmt::Write;

use crate::hull::{phi_loss, LossParams};
use crate::svm::SvmDataset;

const W: f64 = 480.0;
const H: f64 = 360.0;
const PAD: f64 = 40.0;

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        let fix = |a: f64, b: f64| if b - a > 1e-12 { (a, b) } else { (a - 1.0, b + 1.0) };
        let (x0, x1) = fix(x0, x1);
        let (y0, y1) = fix(y0, y1);
        Self { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        PAD + (x - self.x0) / (self.x1 - self.x0) * (W - 2.0 * PAD)
    }

    fn py(&self, y: f64) -> f64 {
        H - PAD - (y - self.y0) / (self.y1 - self.y0) * (H - 2.0 * PAD)
    }
}

fn open(out: &mut String, title: &str, f: &Frame) {
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="20" text-anchor="middle" font-family="sans-serif" font-size="14">{title}</text>"#, W / 2.0);
    let _ = writeln!(
        out,
        r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    for (v, x, y, anchor) in [
        (f.x0, PAD, H - PAD + 15.0, "start"),
        (f.x1, W - PAD, H - PAD + 15.0, "end"),
        (f.y0, PAD - 4.0, H - PAD, "end"),
        (f.y1, PAD - 4.0, PAD + 10.0, "end"),
    ] {
        let _ = writeln!(out, r#"<text x="{x}" y="{y}" text-anchor="{anchor}" font-family="sans-serif" font-size="10">{v:.3}</text>"#);
    }
}

/// Polylines `(label, points)` on shared axes.
pub fn line_chart_svg(title: &str, series: &[(&str, Vec<(f64, f64)>)]) -> String {
    let pts = series.iter().flat_map(|(_, s)| s.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    let f = Frame::new(x0, x1, y0, y1);
    let mut out = String::new();
    open(&mut out, title, &f);
    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
    for (k, (label, s)) in series.iter().enumerate() {
        let c = colors[k % colors.len()];
        let path: Vec<String> = s.iter().map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y))).collect();
        let _ = writeln!(out, r#"<polyline fill="none" stroke="{c}" stroke-width="2" points="{}"/>"#, path.join(" "));
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" fill="{c}" font-family="sans-serif" font-size="11">{label}</text>"#,
            W - PAD - 80.0,
            PAD + 15.0 + 14.0 * k as f64
        );
    }
    out.push_str("</svg>\n");
    out
}

/// φ together with the 0–1 and hinge losses on `[lo, hi]`, as functions
/// of the margin `x = y aᵀw`.
pub fn loss_curve_svg(params: &LossParams, lo: f64, hi: f64, samples: usize) -> String {
    let samples = samples.max(2);
    let xs: Vec<f64> = (0..samples).map(|i| lo + (hi - lo) * i as f64 / (samples - 1) as f64).collect();
    // φ is written in terms of the margin slack 1 − x.
    let phi: Vec<(f64, f64)> = xs.iter().map(|&x| (x, phi_loss(1.0 - x, params).unwrap_or(f64::NAN))).collect();
    let zero_one: Vec<(f64, f64)> = xs.iter().map(|&x| (x, if x <= 0.0 { params.lambda } else { 0.0 })).collect();
    let hinge: Vec<(f64, f64)> = xs.iter().map(|&x| (x, params.lambda * (1.0 - x).max(0.0))).collect();
    line_chart_svg("loss vs margin", &[("phi", phi), ("0-1", zero_one), ("hinge", hinge)])
}

/// Scatter of the first two raw features, coloured by label, with the
/// separating lines of the given weight vectors (intercept first).
pub fn scatter_svg(title: &str, ds: &SvmDataset, lines: &[(&str, Vec<f64>)]) -> String {
    let pick = |f: &Vec<f64>, j: usize| f.get(j).copied().unwrap_or(0.0);
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for f in &ds.features {
        x0 = x0.min(pick(f, 0));
        x1 = x1.max(pick(f, 0));
        y0 = y0.min(pick(f, 1));
        y1 = y1.max(pick(f, 1));
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (-1.0, 1.0, -1.0, 1.0);
    }
    let f = Frame::new(x0, x1, y0, y1);
    let mut out = String::new();
    open(&mut out, title, &f);
    for (feat, &y) in ds.features.iter().zip(&ds.labels) {
        let c = if y > 0.0 { "#1f77b4" } else { "#d62728" };
        let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{c}"/>"#, f.px(pick(feat, 0)), f.py(pick(feat, 1)));
    }
    let off = usize::from(ds.intercept);
    for (label, w) in lines {
        let b = if ds.intercept { w.first().copied().unwrap_or(0.0) } else { 0.0 };
        let (w1, w2) = (w.get(off).copied().unwrap_or(0.0), w.get(off + 1).copied().unwrap_or(0.0));
        // b + w1 x + w2 y = 0 clipped to the frame.
        let seg = if w2.abs() > 1e-12 {
            let y = |x: f64| -(b + w1 * x) / w2;
            Some(((f.x0, y(f.x0)), (f.x1, y(f.x1))))
        } else if w1.abs() > 1e-12 {
            let x = -b / w1;
            Some(((x, f.y0), (x, f.y1)))
        } else {
            None
        };
        if let Some(((ax, ay), (bx, by))) = seg {
            let _ = writeln!(
                out,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-dasharray="4 2"><title>{label}</title></line>"#,
                f.px(ax),
                f.py(ay),
                f.px(bx),
                f.py(by)
            );
        }
    }
    out.push_str("</svg>\n");
    out
}
