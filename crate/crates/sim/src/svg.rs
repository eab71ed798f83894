//! Minimal SVG charts for run summaries. The CSV files are the data of
//! record; these are for a quick look.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

struct Axis {
    lo: f64,
    hi: f64,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite()) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            return Self { lo: 0.0, hi: 1.0 };
        }
        if hi - lo <= 1e-12 * hi.abs().max(1.0) {
            let pad = 0.5 * hi.abs().max(1.0);
            return Self { lo: lo - pad, hi: hi + pad };
        }
        let pad = 0.05 * (hi - lo);
        Self { lo: lo - pad, hi: hi + pad }
    }

    fn map(&self, v: f64, from: f64, to: f64) -> f64 {
        from + (v - self.lo) / (self.hi - self.lo) * (to - from)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn frame(svg: &mut String, title: &str, xlabel: &str, ylabel: &str, xa: &Axis, ya: &Axis) {
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let (x0, x1, y0, y1) = (MARGIN, W - MARGIN / 2.0, H - MARGIN, MARGIN / 2.0);
    let _ = writeln!(svg, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#);
    let _ = writeln!(svg, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#);
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let xv = xa.lo + f * (xa.hi - xa.lo);
        let yv = ya.lo + f * (ya.hi - ya.lo);
        let px = x0 + f * (x1 - x0);
        let py = y0 + f * (y1 - y0);
        let _ = writeln!(svg, r#"<text x="{px:.1}" y="{:.1}" text-anchor="middle">{xv:.3e}</text>"#, y0 + 16.0);
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{py:.1}" text-anchor="end">{yv:.3e}</text>"#, x0 - 4.0);
    }
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, H - 12.0, escape(xlabel));
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(ylabel)
    );
}

/// Line chart of named `(x, y)` series.
pub fn line_plot(title: &str, xlabel: &str, ylabel: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let xa = Axis::fit(series.iter().flat_map(|s| s.1.iter().map(|p| p.0)));
    let ya = Axis::fit(series.iter().flat_map(|s| s.1.iter().map(|p| p.1)));
    let mut svg = String::new();
    frame(&mut svg, title, xlabel, ylabel, &xa, &ya);
    for (k, (name, pts)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let path: Vec<String> = pts
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(x, y)| format!("{:.2},{:.2}", xa.map(*x, MARGIN, W - MARGIN / 2.0), ya.map(*y, H - MARGIN, MARGIN / 2.0)))
            .collect();
        let _ = writeln!(svg, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
            W - MARGIN - 80.0,
            MARGIN / 2.0 + 16.0 * (k as f64 + 1.0),
            escape(name)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// One sweep point for [`regime_scatter`]: `Some(true)` = bounded,
/// `Some(false)` = blow-up, `None` = no prediction / failed.
#[derive(Clone, Copy, Debug)]
pub struct RegimePoint {
    pub value: f64,
    pub predicted: Option<bool>,
    pub observed: Option<bool>,
}

/// Two-row scatter: predicted regime (top row) and observed outcome (bottom
/// row) against the swept value. Green = bounded, red = blow-up, grey = none.
pub fn regime_scatter(axis: &str, points: &[RegimePoint]) -> String {
    let xa = Axis::fit(points.iter().map(|p| p.value));
    let ya = Axis { lo: 0.0, hi: 3.0 };
    let mut svg = String::new();
    frame(&mut svg, "predicted vs observed regime", axis, "", &xa, &ya);
    let color = |o: Option<bool>| match o {
        Some(true) => "#2ca02c",
        Some(false) => "#d62728",
        None => "#7f7f7f",
    };
    for (row, label) in [(2.0, "predicted"), (1.0, "observed")] {
        let py = ya.map(row, H - MARGIN, MARGIN / 2.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{py:.1}" text-anchor="start">{label}</text>"#, MARGIN + 4.0);
        for p in points {
            let px = xa.map(p.value, MARGIN, W - MARGIN / 2.0);
            let c = color(if row == 2.0 { p.predicted } else { p.observed });
            let _ = writeln!(svg, r#"<circle cx="{px:.2}" cy="{:.1}" r="6" fill="{c}"/>"#, py + 14.0);
        }
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_plot_is_well_formed() {
        let s = line_plot("E", "t", "E_2", &[("E_2".into(), vec![(0.0, 1.0), (1.0, 0.5), (2.0, f64::NAN)])]);
        assert!(s.starts_with("<svg"));
        assert!(s.trim_end().ends_with("</svg>"));
        assert_eq!(s.matches("<polyline").count(), 1);
    }

    #[test]
    fn scatter_has_two_markers_per_point() {
        let pts = [
            RegimePoint { value: 1.0, predicted: Some(true), observed: Some(true) },
            RegimePoint { value: 2.0, predicted: Some(false), observed: None },
        ];
        let s = regime_scatter("mass", &pts);
        assert_eq!(s.matches("<circle").count(), 4);
        assert!(s.contains("#d62728"));
    }
}
