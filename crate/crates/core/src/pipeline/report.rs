//! Self-contained HTML report: one panel per cluster, every member drawn as a
//! thin polyline and the cluster center as a heavy black one.

use std::fmt::Write;

use crate::clustering::ClusterAssignment;
use crate::representation::RepresentedMatrix;
use crate::validity::ValidityReport;

const WIDTH: f64 = 360.0;
const HEIGHT: f64 = 200.0;
const PAD: f64 = 8.0;

/// What the report shows.
pub struct ReportInput<'a> {
    pub run_id: &'a str,
    pub title: &'a str,
    /// Curves drawn in the panels, one row per series, in assignment row order.
    pub curves: &'a RepresentedMatrix,
    pub assignment: &'a ClusterAssignment,
    pub validity: &'a ValidityReport,
    /// Use the assignment's centers as the heavy curve. When false, or when the
    /// centers do not live in the curves' space, the member mean is drawn.
    pub use_centers: bool,
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

fn fmt_score(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:.4}"),
        Some(_) => "inf".into(),
        None => "n/a".into(),
    }
}

fn points(curve: &[f64], lo: f64, hi: f64) -> String {
    let d = curve.len();
    let span = if hi > lo { hi - lo } else { 1.0 };
    let dx = if d > 1 {
        (WIDTH - 2.0 * PAD) / (d - 1) as f64
    } else {
        0.0
    };
    let mut s = String::with_capacity(d * 14);
    for (j, &v) in curve.iter().enumerate() {
        let x = PAD + j as f64 * dx;
        let y = HEIGHT - PAD - (v - lo) / span * (HEIGHT - 2.0 * PAD);
        if j > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{x:.2},{y:.2}");
    }
    s
}

pub fn render_report(input: &ReportInput<'_>) -> String {
    let a = input.assignment;
    let curves = input.curves;
    let d = curves.dim();
    let members = {
        let mut m = vec![Vec::new(); a.k()];
        for (i, &c) in a.clusters().iter().enumerate() {
            m[c].push(i);
        }
        m
    };
    let centers_fit = input.use_centers && a.centers.ncols() == d;

    let mut html = String::new();
    html.push_str("<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n");
    let _ = writeln!(html, "<title>{}</title>", escape(input.title));
    html.push_str(
        "<style>\n\
         body{font-family:sans-serif;margin:1.5em;color:#222}\n\
         .grid{display:flex;flex-wrap:wrap;gap:1em}\n\
         .panel{border:1px solid #ccc;padding:.5em}\n\
         .panel h2{font-size:1em;margin:.2em 0}\n\
         .member{fill:none;stroke:#8fb3d9;stroke-width:.7;stroke-opacity:.45}\n\
         .center{fill:none;stroke:#000;stroke-width:2.5}\n\
         table{border-collapse:collapse}td,th{padding:.2em .8em;text-align:left}\n\
         </style>\n</head>\n<body>\n",
    );
    let v = input.validity;
    let _ = writeln!(html, "<header>\n<h1>{}</h1>", escape(input.title));
    let _ = writeln!(
        html,
        "<p>run <code>{}</code>, k = {}, n = {}</p>",
        escape(input.run_id),
        a.k(),
        a.clusters().len()
    );
    let _ = writeln!(
        html,
        "<table class=\"scores\">\n<tr><th>silhouette</th><th>davies_bouldin</th><th>calinski_harabasz</th><th>inertia</th></tr>\n\
         <tr><td>{}</td><td>{}</td><td>{}</td><td>{:.4}</td></tr>\n</table>\n</header>",
        fmt_score(v.silhouette),
        fmt_score(v.davies_bouldin),
        fmt_score(v.calinski_harabasz),
        v.inertia
    );
    html.push_str("<main class=\"grid\">\n");

    for (c, idx) in members.iter().enumerate() {
        let center: Vec<f64> = if centers_fit {
            a.centers.row(c).to_vec()
        } else {
            let mut mean = vec![0.0; d];
            for &i in idx {
                for (m, x) in mean.iter_mut().zip(curves.row(i)) {
                    *m += x;
                }
            }
            mean.iter().map(|m| m / idx.len().max(1) as f64).collect()
        };
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for row in idx
            .iter()
            .map(|&i| curves.row(i))
            .chain(std::iter::once(center.as_slice()))
        {
            for &x in row {
                lo = lo.min(x);
                hi = hi.max(x);
            }
        }
        let _ = writeln!(
            html,
            "<section class=\"panel\" data-cluster=\"{c}\" data-members=\"{}\">\n<h2>Cluster {c}: {} members</h2>",
            idx.len(),
            idx.len()
        );
        let _ = writeln!(
            html,
            "<svg viewBox=\"0 0 {WIDTH} {HEIGHT}\" width=\"{WIDTH}\" height=\"{HEIGHT}\" role=\"img\">"
        );
        for &i in idx {
            let _ = writeln!(
                html,
                "<polyline class=\"member\" points=\"{}\"><title>{}</title></polyline>",
                points(curves.row(i), lo, hi),
                escape(&curves.labels()[i])
            );
        }
        let _ = writeln!(
            html,
            "<polyline class=\"center\" points=\"{}\"></polyline>",
            points(&center, lo, hi)
        );
        html.push_str("</svg>\n</section>\n");
    }
    html.push_str("</main>\n</body>\n</html>\n");
    html
}
