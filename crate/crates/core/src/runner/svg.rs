//! Minimal SVG line plots: axes, labelled curves and an optional error band.

use std::fmt::Write as _;

pub struct Curve<'a> {
    pub label: &'a str,
    pub y: &'a [f64],
    pub color: &'a str,
}

pub struct Plot<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub x: &'a [f64],
    pub curves: Vec<Curve<'a>>,
    /// `(lower, upper)` drawn around the first curve.
    pub band: Option<(&'a [f64], &'a [f64])>,
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 50.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Plot<'_> {
    pub fn render(&self) -> String {
        let finite = |v: &&f64| v.is_finite();
        let xs = self.x.iter().filter(finite);
        let (x0, x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let mut ys: Vec<f64> = self.curves.iter().flat_map(|c| c.y.iter().copied()).collect();
        if let Some((lo, hi)) = self.band {
            ys.extend(lo.iter().chain(hi));
        }
        let (mut y0, mut y1) = ys.iter().filter(finite).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        if !(y1 > y0) {
            y0 -= 0.5;
            y1 += 0.5;
        }
        let (x0, x1) = if x1 > x0 { (x0, x1) } else { (x0 - 0.5, x0 + 0.5) };
        let px = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
        let py = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
        let path = |y: &[f64]| {
            let pts: Vec<String> = self
                .x
                .iter()
                .zip(y)
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .map(|(&x, &y)| format!("{:.2},{:.2}", px(x), py(y)))
                .collect();
            pts.join(" ")
        };

        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#);
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle">{}</text>"#, W / 2.0, escape(self.title));
        let _ = writeln!(
            s,
            r#"<path d="M{PAD},{PAD} L{PAD},{b} L{r},{b}" fill="none" stroke="black"/>"#,
            b = H - PAD,
            r = W - PAD
        );
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 10.0, escape(self.x_label));
        for (v, anchor, x, y) in [
            (x0, "middle", px(x0), H - PAD + 15.0),
            (x1, "middle", px(x1), H - PAD + 15.0),
            (y0, "end", PAD - 5.0, py(y0)),
            (y1, "end", PAD - 5.0, py(y1)),
        ] {
            let _ = writeln!(s, r#"<text x="{x:.2}" y="{y:.2}" text-anchor="{anchor}">{v:.3}</text>"#);
        }
        if let (Some((lo, hi)), Some(first)) = (self.band, self.curves.first()) {
            let mut pts = path(hi);
            let lower: Vec<f64> = lo.to_vec();
            let rev: Vec<String> = self
                .x
                .iter()
                .zip(&lower)
                .rev()
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .map(|(&x, &y)| format!("{:.2},{:.2}", px(x), py(y)))
                .collect();
            pts.push(' ');
            pts.push_str(&rev.join(" "));
            let _ = writeln!(s, r#"<polygon points="{pts}" fill="{}" fill-opacity="0.2" stroke="none"/>"#, first.color);
        }
        for (k, c) in self.curves.iter().enumerate() {
            let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#, path(c.y), c.color);
            let ly = PAD + 15.0 * k as f64;
            let _ = writeln!(s, r#"<text x="{}" y="{ly}" fill="{}">{}</text>"#, W - PAD - 150.0, c.color, escape(c.label));
        }
        s.push_str("</svg>\n");
        s
    }
}
