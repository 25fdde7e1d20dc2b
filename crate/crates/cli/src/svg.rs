//! Hand-written SVG plot of `l_m¹` against `m`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

const W: f64 = 720.0;
const H: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// A named horizontal line.
pub struct Reference<'a> {
    pub label: &'a str,
    pub value: f64,
}

fn nice_step(span: f64) -> f64 {
    let raw = span / 6.0;
    let p = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0].iter().map(|s| s * p).find(|&s| s >= raw).unwrap_or(10.0 * p)
}

/// Plot of each series (sorted points `(m, l)`), plus reference lines.
pub fn convergence_svg(series: &BTreeMap<String, Vec<(usize, f64)>>, refs: &[Reference]) -> String {
    let xs = series.values().flatten().map(|p| p.0 as f64);
    let x_max = xs.fold(1.0f64, f64::max).max(2.0);
    let ys: Vec<f64> = series.values().flatten().map(|p| p.1).chain(refs.iter().map(|r| r.value)).collect();
    let (mut y_min, mut y_max) = ys.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &y| (a.min(y), b.max(y)));
    if !y_min.is_finite() {
        (y_min, y_max) = (17.0, 21.0);
    }
    let pad = ((y_max - y_min) * 0.08).max(0.25);
    let (y_lo, y_hi) = (y_min - pad, y_max + pad);
    let px = |x: f64| LEFT + (x / x_max) * (W - LEFT - RIGHT);
    let py = |y: f64| TOP + (y_hi - y) / (y_hi - y_lo) * (H - TOP - BOTTOM);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    // axes
    let (x0, x1, y0, y1) = (px(0.0), px(x_max), py(y_lo), py(y_hi));
    let _ = writeln!(s, r#"<path d="M{x0:.2} {y1:.2} V{y0:.2} H{x1:.2}" stroke="black" fill="none"/>"#);
    let ystep = nice_step(y_hi - y_lo);
    let mut t = (y_lo / ystep).ceil() * ystep;
    while t <= y_hi {
        let y = py(t);
        let _ = writeln!(s, r#"<path d="M{:.2} {y:.2} H{x0:.2}" stroke="black"/>"#, x0 - 5.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{t:.1}</text>"#, x0 - 8.0, y + 4.0);
        t += ystep;
    }
    let xstep = nice_step(x_max).max(1.0);
    let mut t = 0.0;
    while t <= x_max + 1e-9 {
        let x = px(t);
        let _ = writeln!(s, r#"<path d="M{x:.2} {y0:.2} V{:.2}" stroke="black"/>"#, y0 + 5.0);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{t}</text>"#, y0 + 20.0);
        t += xstep;
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">m</text>"#, (x0 + x1) / 2.0, H - 8.0);
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">l_m = sum lambda_1 / m^2</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );
    for r in refs {
        let y = py(r.value);
        let _ = writeln!(s, r##"<path d="M{x0:.2} {y:.2} H{x1:.2}" stroke="#777" stroke-dasharray="6 4"/>"##);
        let _ = writeln!(s, r##"<text x="{:.2}" y="{:.2}" fill="#555">{} = {:.3}</text>"##, x1 + 6.0, y + 4.0, r.label, r.value);
    }
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        if pts.len() > 1 {
            let d: Vec<String> = pts
                .iter()
                .enumerate()
                .map(|(k, &(m, l))| format!("{}{:.2} {:.2}", if k == 0 { 'M' } else { 'L' }, px(m as f64), py(l)))
                .collect();
            let _ = writeln!(s, r#"<path d="{}" stroke="{color}" fill="none" stroke-width="1.5"/>"#, d.join(" "));
        }
        for &(m, l) in pts {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, px(m as f64), py(l));
        }
        let ly = TOP + 8.0 + 16.0 * i as f64;
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{ly:.2}" r="4" fill="{color}"/>"#, x1 + 10.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, x1 + 20.0, ly + 4.0, escape(name));
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
