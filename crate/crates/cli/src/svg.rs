//! Self-contained SVG of a trajectory band on a log-scaled `N_e` axis.

use std::fmt::Write;

use phylocoal::diagnostics::TrajectorySummary;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 50.0;

struct Axes {
    t0: f64,
    t1: f64,
    y0: f64,
    y1: f64,
}

impl Axes {
    fn x(&self, t: f64) -> f64 {
        LEFT + (t - self.t0) / (self.t1 - self.t0) * (WIDTH - LEFT - RIGHT)
    }

    /// `y` in log10 units.
    fn y(&self, ly: f64) -> f64 {
        HEIGHT - BOTTOM - (ly - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn polyline(ax: &Axes, t: &[f64], v: &[f64]) -> String {
    t.iter()
        .zip(v)
        .map(|(&t, &v)| format!("{:.2},{:.2}", ax.x(t), ax.y(v.log10())))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn render(s: &TrajectorySummary) -> String {
    let mut values: Vec<f64> = s.lower.iter().chain(&s.upper).copied().collect();
    if let Some(tr) = &s.truth {
        values.extend(tr.iter().copied().filter(|v| *v > 0.0));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min).log10();
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max).log10();
    let pad = ((hi - lo) * 0.05).max(0.15);
    let (t0, t1) = (s.times[0], *s.times.last().unwrap());
    let ax = Axes {
        t0,
        t1: if t1 > t0 { t1 } else { t0 + 1.0 },
        y0: lo - pad,
        y1: hi + pad,
    };

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);

    let mut band = polyline(&ax, &s.times, &s.upper);
    let rev_t: Vec<f64> = s.times.iter().rev().copied().collect();
    let rev_lo: Vec<f64> = s.lower.iter().rev().copied().collect();
    band.push(' ');
    band.push_str(&polyline(&ax, &rev_t, &rev_lo));
    let _ = writeln!(out, r##"<polygon points="{band}" fill="#9ecae1" fill-opacity="0.6" stroke="none"/>"##);
    let _ = writeln!(
        out,
        r##"<polyline points="{}" fill="none" stroke="#08519c" stroke-width="2"/>"##,
        polyline(&ax, &s.times, &s.median)
    );
    if let Some(tr) = &s.truth {
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="black" stroke-width="1.5" stroke-dasharray="6 4"/>"#,
            polyline(&ax, &s.times, tr)
        );
    }

    // axes
    let (xa, xb, ya, yb) = (LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM, TOP);
    let _ = writeln!(
        out,
        r#"<path d="M{xa},{yb} L{xa},{ya} L{xb},{ya}" fill="none" stroke="black"/>"#
    );
    for i in 0..=5 {
        let t = ax.t0 + (ax.t1 - ax.t0) * i as f64 / 5.0;
        let x = ax.x(t);
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{ya}" x2="{x:.2}" y2="{}" stroke="black"/><text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#,
            ya + 5.0,
            ya + 18.0,
            trim(t)
        );
    }
    let mut ticks: Vec<f64> = (ax.y0.ceil() as i32..=ax.y1.floor() as i32).map(f64::from).collect();
    if ticks.len() < 2 {
        ticks = vec![lo, hi];
        ticks.dedup();
    }
    for ly in ticks {
        let y = ax.y(ly);
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{y:.2}" x2="{xa}" y2="{y:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            xa - 5.0,
            xa - 8.0,
            y + 4.0,
            trim(10f64.powf(ly))
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">time before present</text>"#,
        (xa + xb) / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">effective population size</text>"#,
        (ya + yb) / 2.0,
        (ya + yb) / 2.0
    );
    out.push_str("</svg>\n");
    out
}

fn trim(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".into()
    } else {
        s.to_string()
    }
}
