//! Static log-log SVG plots of the computed eigenvalue range against `eps`
//! with the theoretical bounds overlaid. The output depends only on the
//! report rows, and all coordinates are printed with a fixed precision.

use std::fmt::Write as _;

use log::warn;
use pstokes_core::precond::SchurChoice;
use pstokes_core::spectral::SpectralReport;

use crate::experiments::RunReport;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const MARKER: f64 = 6.0;

/// One plot per Schur approximation present in the report, as
/// `(file name, svg text)`. An empty report yields no plots.
pub fn emit_plots(report: &RunReport) -> Vec<(String, String)> {
    if report.rows.is_empty() {
        warn!("report has no spectral rows; no plots written");
        return Vec::new();
    }
    let exp = report.config.experiment;
    SchurChoice::ALL
        .iter()
        .filter_map(|&schur| {
            let rows: Vec<&SpectralReport> = report.rows.iter().filter(|r| r.schur == schur).collect();
            if rows.is_empty() {
                return None;
            }
            let title = format!(
                "{exp}: eigenvalues of {}^-1 S ({}, {})",
                match schur {
                    SchurChoice::Mass => "M",
                    SchurChoice::ScaledMass => "M_nu",
                },
                report.config.element,
                report.config.method
            );
            Some((format!("{exp}_{schur}.svg"), eigenvalue_plot(&title, &rows)))
        })
        .collect()
}

/// Decade range `[lo, hi]` (in log10) covering the positive finite values.
fn decades(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.filter(|v| v.is_finite() && *v > 0.0) {
        lo = lo.min(v.log10());
        hi = hi.max(v.log10());
    }
    if !lo.is_finite() {
        return (-1.0, 1.0);
    }
    let (lo, hi) = (lo.floor(), hi.ceil());
    if hi - lo < 1.0 {
        (lo - 1.0, hi + 1.0)
    } else {
        (lo, hi)
    }
}

struct Axes {
    x: (f64, f64),
    y: (f64, f64),
}

impl Axes {
    fn px(&self, v: f64) -> f64 {
        LEFT + (v.log10() - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, v: f64) -> f64 {
        HEIGHT - BOTTOM - (v.log10() - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn usable(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

/// Renders one eigenvalue-versus-eps plot.
pub fn eigenvalue_plot(title: &str, rows: &[&SpectralReport]) -> String {
    let mut rows: Vec<&SpectralReport> = rows.to_vec();
    rows.sort_by(|a, b| a.eps.total_cmp(&b.eps));
    let axes = Axes {
        x: decades(rows.iter().map(|r| r.eps)),
        y: decades(
            rows.iter()
                .flat_map(|r| [r.lambda_min, r.lambda_max, r.bound_lower, r.bound_upper]),
        ),
    };
    let (x0, x1) = (LEFT, WIDTH - RIGHT);
    let (y0, y1) = (TOP, HEIGHT - BOTTOM);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        0.5 * (x0 + x1),
        escape(title)
    );

    // decade grid and tick labels
    for d in (axes.x.0 as i32)..=(axes.x.1 as i32) {
        let x = axes.px(10f64.powi(d));
        let _ = writeln!(s, r##"<line class="grid" x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{y1:.2}" stroke="#dddddd"/>"##);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">1e{d}</text>"#, y1 + 18.0);
    }
    for d in (axes.y.0 as i32)..=(axes.y.1 as i32) {
        let y = axes.py(10f64.powi(d));
        let _ = writeln!(s, r##"<line class="grid" x1="{x0:.2}" y1="{y:.2}" x2="{x1:.2}" y2="{y:.2}" stroke="#dddddd"/>"##);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{d}</text>"#, x0 - 6.0, y + 4.0);
    }
    let _ = writeln!(
        s,
        r#"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y1 - y0
    );
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">eps</text>"#, 0.5 * (x0 + x1), HEIGHT - 16.0);
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">eigenvalue</text>"#,
        0.5 * (y0 + y1),
        0.5 * (y0 + y1)
    );

    // bound lines; a single sweep point gives a horizontal segment across the
    // plot
    let bound_line = |class: &str, dash: &str, colour: &str, value: fn(&SpectralReport) -> f64| -> String {
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| usable(value(r)))
            .map(|r| (axes.px(r.eps), axes.py(value(r))))
            .collect();
        let pts = match pts.as_slice() {
            [] => return String::new(),
            [(_, y)] => vec![(x0, *y), (x1, *y)],
            _ => pts,
        };
        let coords: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        format!(
            "<polyline class=\"{class}\" points=\"{}\" fill=\"none\" stroke=\"{colour}\" stroke-width=\"1.5\" stroke-dasharray=\"{dash}\"/>\n",
            coords.join(" ")
        )
    };
    s.push_str(&bound_line("bound-upper", "8,4", "#b22222", |r| r.bound_upper));
    s.push_str(&bound_line("bound-lower", "2,3", "#2e8b57", |r| r.bound_lower));

    for r in &rows {
        if usable(r.lambda_max) {
            let (x, y) = (axes.px(r.eps), axes.py(r.lambda_max));
            let _ = writeln!(
                s,
                r##"<path class="marker-max" d="M{:.2},{:.2} L{:.2},{:.2} L{:.2},{:.2} Z" fill="#b22222"/>"##,
                x,
                y - MARKER,
                x - MARKER,
                y + MARKER,
                x + MARKER,
                y + MARKER
            );
        }
        if usable(r.lambda_min) {
            let (x, y) = (axes.px(r.eps), axes.py(r.lambda_min));
            let _ = writeln!(
                s,
                r##"<path class="marker-min" d="M{:.2},{:.2} L{:.2},{:.2} L{:.2},{:.2} Z" fill="#2e8b57"/>"##,
                x,
                y + MARKER,
                x - MARKER,
                y - MARKER,
                x + MARKER,
                y - MARKER
            );
        }
    }

    // legend
    let lx = x1 + 14.0;
    let legend = [
        ("lambda_max", "M0,-6 L-6,6 L6,6 Z", "#b22222", None),
        ("lambda_min", "M0,6 L-6,-6 L6,-6 Z", "#2e8b57", None),
        ("upper bound", "", "#b22222", Some("8,4")),
        ("lower bound", "", "#2e8b57", Some("2,3")),
    ];
    for (i, (label, shape, colour, dash)) in legend.iter().enumerate() {
        let y = y0 + 14.0 + 22.0 * i as f64;
        match dash {
            None => {
                let _ = writeln!(
                    s,
                    r#"<path d="{shape}" transform="translate({:.2} {y:.2})" fill="{colour}"/>"#,
                    lx + 12.0
                );
            }
            Some(d) => {
                let _ = writeln!(
                    s,
                    r#"<line x1="{lx:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{colour}" stroke-width="1.5" stroke-dasharray="{d}"/>"#,
                    lx + 24.0
                );
            }
        }
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{label}</text>"#, lx + 32.0, y + 4.0);
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
