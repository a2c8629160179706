//! Standalone SVG line charts. Output bytes depend only on the input.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const TICKS: usize = 5;

pub struct Chart<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub points: &'a [(f64, f64)],
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn span(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

pub fn line_chart(c: &Chart) -> String {
    let xs = c.points.iter().map(|p| p.0);
    let ys = c.points.iter().map(|p| p.1);
    let (x0, x1) = span(xs.clone().fold(f64::INFINITY, f64::min), xs.fold(f64::NEG_INFINITY, f64::max));
    let (y_min, y_max) = ys.clone().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| (a.min(y), b.max(y)));
    // Distances are nonnegative; anchor the axis at 0 so reductions read true.
    let (y0, y1) = span(y_min.min(0.0), y_max);
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(c.title)
    );
    let _ = writeln!(
        s,
        r#"<path d="M{LEFT:.1},{TOP:.1} V{:.1} H{:.1}" fill="none" stroke="black"/>"#,
        TOP + ph,
        LEFT + pw
    );
    for i in 0..=TICKS {
        let t = i as f64 / TICKS as f64;
        let yv = y0 + t * (y1 - y0);
        let y = sy(yv);
        let _ = writeln!(
            s,
            r##"<line x1="{:.1}" y1="{y:.1}" x2="{LEFT:.1}" y2="{y:.1}" stroke="black"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"##,
            LEFT - 5.0,
            LEFT - 8.0,
            y + 4.0,
            tick_label(yv)
        );
    }
    // Integer x values (iterations) get one tick each when there are few.
    let integral = c.points.iter().all(|p| p.0.fract() == 0.0) && x1 - x0 <= 20.0;
    let xticks: Vec<f64> = if integral {
        (x0 as i64..=x1 as i64).map(|v| v as f64).collect()
    } else {
        (0..=TICKS).map(|i| x0 + i as f64 / TICKS as f64 * (x1 - x0)).collect()
    };
    for xv in xticks {
        let x = sx(xv);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="black"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            TOP + ph,
            TOP + ph + 5.0,
            TOP + ph + 20.0,
            tick_label(xv)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 12.0,
        escape(c.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(c.y_label)
    );
    let path: Vec<String> = c
        .points
        .iter()
        .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
        .collect();
    let _ = writeln!(
        s,
        r##"<polyline points="{}" fill="none" stroke="#1f4e9c" stroke-width="2"/>"##,
        path.join(" ")
    );
    for &(x, y) in c.points {
        let _ = writeln!(
            s,
            r##"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="#1f4e9c"/>"##,
            sx(x),
            sy(y)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e5).contains(&a) {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.2e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chart(points: &[(f64, f64)]) -> String {
        line_chart(&Chart {
            title: "t",
            x_label: "iteration",
            y_label: "mean distance",
            points,
        })
    }

    #[test]
    fn one_marker_per_point() {
        let pts: Vec<(f64, f64)> = (0..6).map(|i| (i as f64, 6.0 - i as f64)).collect();
        let svg = chart(&pts);
        assert_eq!(svg.matches("<circle").count(), 6);
        assert!(svg.contains(">iteration<"));
        assert!(svg.contains(">mean distance<"));
    }

    #[test]
    fn deterministic_bytes() {
        let pts = [(0.0, 3.1), (1.0, 2.0), (2.0, 1.5)];
        assert_eq!(chart(&pts), chart(&pts));
    }

    #[test]
    fn flat_series_stays_finite() {
        let svg = chart(&[(0.0, 1.0), (1.0, 1.0)]);
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
        let single = chart(&[(0.0, 2.0)]);
        assert!(!single.contains("NaN"));
    }

    #[test]
    fn labels_are_escaped() {
        let svg = line_chart(&Chart {
            title: "a<b & c",
            x_label: "x",
            y_label: "y",
            points: &[(0.0, 1.0)],
        });
        assert!(svg.contains("a&lt;b &amp; c"));
    }

    #[test]
    fn tick_labels_trim() {
        assert_eq!(tick_label(2.5), "2.5");
        assert_eq!(tick_label(3.0), "3");
        assert_eq!(tick_label(0.0), "0");
    }
}
