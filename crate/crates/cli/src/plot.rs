//! SVG line charts of marginal distributions.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const TICKS: usize = 5;

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Line chart of `line` (count, probability) with optional `points` drawn as
/// dots.
pub fn marginal_svg(species: &str, line: &[(u32, f64)], points: &[(u32, f64)]) -> String {
    let all = line.iter().chain(points);
    let x_min = all.clone().map(|p| p.0).min().unwrap_or(0) as f64;
    let x_max = all.clone().map(|p| p.0).max().unwrap_or(1) as f64;
    let x_max = if x_max > x_min { x_max } else { x_min + 1.0 };
    let y_max = all.map(|p| p.1).fold(0.0, f64::max);
    let y_max = if y_max > 0.0 { y_max * 1.05 } else { 1.0 };
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x_min) / (x_max - x_min) * plot_w;
    let sy = |y: f64| TOP + (1.0 - y / y_max) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">Marginal of {}</text>"#,
        WIDTH / 2.0,
        escape(species)
    );
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    let _ = writeln!(
        s,
        r#"<path d="M{x0} {y0} L{x0} {y1} L{x1} {y1}" fill="none" stroke="black"/>"#
    );
    for k in 0..=TICKS {
        let xv = x_min + (x_max - x_min) * k as f64 / TICKS as f64;
        let yv = y_max * k as f64 / TICKS as f64;
        let (px, py) = (sx(xv), sy(yv));
        let _ = writeln!(
            s,
            r#"<line x1="{px:.2}" y1="{y1}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            y1 + 5.0,
            y1 + 20.0,
            xv.round()
        );
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{x0}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{yv:.3}</text>"#,
            x0 - 5.0,
            x0 - 8.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 10.0,
        escape(species)
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">probability</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );
    if !line.is_empty() {
        let pts: Vec<String> = line
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(f64::from(x)), sy(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#,
            pts.join(" ")
        );
    }
    for &(x, y) in points {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="firebrick"/>"#,
            sx(f64::from(x)),
            sy(y)
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_line_and_points() {
        let line = [(0, 0.2), (1, 0.5), (2, 0.3)];
        let svg = marginal_svg("S:E<1>", &line, &[(1, 0.45)]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert_eq!(svg.matches("<circle").count(), 1);
        assert!(svg.contains("S:E&lt;1&gt;"));
    }

    #[test]
    fn degenerate_input() {
        let svg = marginal_svg("X", &[(3, 0.0)], &[]);
        assert!(!svg.contains("NaN"));
    }
}
