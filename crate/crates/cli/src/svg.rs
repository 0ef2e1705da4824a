//! Minimal SVG charts built from table columns.

use std::fmt::Write;

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 460.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const PALETTE: [&str; 8] = [
    "#c0392b", "#2471a3", "#229954", "#7d3c98", "#d68910", "#17202a", "#566573", "#a04000",
];

pub struct Series<'a> {
    pub name: &'a str,
    pub values: Vec<f64>,
    pub dashed: bool,
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite() && (!log || *v > 0.0)) {
            let v = if log { v.log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-300 {
            let pad = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
            (lo, hi) = (lo - pad, hi + pad);
        }
        Self { lo, hi, log }
    }

    fn unit(&self, v: f64) -> Option<f64> {
        let v = if self.log {
            if v <= 0.0 {
                return None;
            }
            v.log10()
        } else {
            v
        };
        v.is_finite().then(|| (v - self.lo) / (self.hi - self.lo))
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        (0..=4)
            .map(|k| {
                let u = k as f64 / 4.0;
                let v = self.lo + u * (self.hi - self.lo);
                let label = if self.log {
                    format!("1e{v:.1}")
                } else {
                    format!("{v:.3}")
                };
                (u, label)
            })
            .collect()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn frame(out: &mut String, title: &str, x_label: &str, y_label: &str) {
    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        out,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + pw / 2.0,
        escape(title)
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(y_label)
    );
}

fn px(u: f64) -> f64 {
    LEFT + u * (WIDTH - LEFT - RIGHT)
}

fn py(u: f64) -> f64 {
    HEIGHT - BOTTOM - u * (HEIGHT - TOP - BOTTOM)
}

fn draw_axes(out: &mut String, x: &Axis, y: &Axis) {
    let _ = writeln!(
        out,
        r#"<rect x="{LEFT}" y="{TOP}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
        WIDTH - LEFT - RIGHT,
        HEIGHT - TOP - BOTTOM
    );
    for (u, label) in x.ticks() {
        let _ = writeln!(
            out,
            r#"<line x1="{0:.1}" y1="{1:.1}" x2="{0:.1}" y2="{2:.1}" stroke="black"/>"#,
            px(u),
            py(0.0),
            py(0.0) + 5.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{label}</text>"#,
            px(u),
            py(0.0) + 18.0
        );
    }
    for (u, label) in y.ticks() {
        let _ = writeln!(
            out,
            r#"<line x1="{:.1}" y1="{1:.1}" x2="{2:.1}" y2="{1:.1}" stroke="black"/>"#,
            px(0.0) - 5.0,
            py(u),
            px(0.0)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{label}</text>"#,
            px(0.0) - 8.0,
            py(u) + 4.0
        );
    }
    if !y.log && y.lo < 0.0 && y.hi > 0.0 {
        let u = y.unit(0.0).unwrap();
        let _ = writeln!(
            out,
            r##"<line x1="{:.1}" y1="{1:.1}" x2="{2:.1}" y2="{1:.1}" stroke="#999" stroke-dasharray="2 3"/>"##,
            px(0.0),
            py(u),
            px(1.0)
        );
    }
}

fn legend(out: &mut String, entries: &[(&str, &str, bool)]) {
    for (k, (name, color, dashed)) in entries.iter().enumerate() {
        let y = TOP + 12.0 + 18.0 * k as f64;
        let x = WIDTH - RIGHT + 14.0;
        let dash = if *dashed {
            r#" stroke-dasharray="6 4""#
        } else {
            ""
        };
        let _ = writeln!(
            out,
            r#"<line x1="{x:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="{color}" stroke-width="2"{dash}/>"#,
            x + 24.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
            x + 30.0,
            y + 4.0,
            escape(name)
        );
    }
}

/// Line chart of several series against a shared abscissa. Non-finite points break the line.
pub fn line_chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    xs: &[f64],
    series: &[Series],
    log_log: bool,
) -> String {
    let x_axis = Axis::fit(xs.iter().copied(), log_log);
    let y_axis = Axis::fit(
        series.iter().flat_map(|s| s.values.iter().copied()),
        log_log,
    );
    let mut out = String::new();
    frame(&mut out, title, x_label, y_label);
    draw_axes(&mut out, &x_axis, &y_axis);
    let mut entries = Vec::new();
    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let dash = if s.dashed {
            r#" stroke-dasharray="6 4""#
        } else {
            ""
        };
        let mut segment: Vec<String> = Vec::new();
        let flush = |segment: &mut Vec<String>, out: &mut String| {
            if segment.len() > 1 {
                let _ = writeln!(
                    out,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
                    segment.join(" ")
                );
            } else if let Some(p) = segment.first() {
                let (x, y) = p.split_once(',').unwrap();
                let _ = writeln!(out, r#"<circle cx="{x}" cy="{y}" r="2.5" fill="{color}"/>"#);
            }
            segment.clear();
        };
        for (&x, &y) in xs.iter().zip(&s.values) {
            match (x_axis.unit(x), y_axis.unit(y)) {
                (Some(u), Some(v)) => segment.push(format!("{:.2},{:.2}", px(u), py(v))),
                _ => flush(&mut segment, &mut out),
            }
        }
        flush(&mut segment, &mut out);
        entries.push((s.name, color, s.dashed));
    }
    legend(&mut out, &entries);
    out.push_str("</svg>\n");
    out
}

/// Colour-cell grid; `classes[i * xs.len() + k]` is the class of cell `(ys[i], xs[k])`.
pub fn cell_grid(
    title: &str,
    x_label: &str,
    y_label: &str,
    xs: &[f64],
    ys: &[f64],
    classes: &[usize],
    names: &[&str],
) -> String {
    const CELL_COLORS: [&str; 4] = ["#c0392b", "#f5b041", "#5dade2", "#aaaaaa"];
    let (xe, ye) = (cell_edges(xs), cell_edges(ys));
    let x_axis = Axis::fit(xe.iter().flat_map(|&(a, b)| [a, b]), false);
    let y_axis = Axis::fit(ye.iter().flat_map(|&(a, b)| [a, b]), false);
    let unit = |axis: &Axis, (a, b): (f64, f64)| {
        (axis.unit(a).unwrap_or(0.0), axis.unit(b).unwrap_or(0.0))
    };
    let xe: Vec<(f64, f64)> = xe.into_iter().map(|e| unit(&x_axis, e)).collect();
    let ye: Vec<(f64, f64)> = ye.into_iter().map(|e| unit(&y_axis, e)).collect();
    let mut out = String::new();
    frame(&mut out, title, x_label, y_label);
    for (i, &(y0, y1)) in ye.iter().enumerate() {
        for (k, &(x0, x1)) in xe.iter().enumerate() {
            let class = classes[i * xs.len() + k].min(CELL_COLORS.len() - 1);
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                px(x0),
                py(y1),
                (px(x1) - px(x0)).max(0.0),
                (py(y0) - py(y1)).max(0.0),
                CELL_COLORS[class]
            );
        }
    }
    draw_axes(&mut out, &x_axis, &y_axis);
    for (k, name) in names.iter().enumerate() {
        let y = TOP + 12.0 + 18.0 * k as f64;
        let x = WIDTH - RIGHT + 14.0;
        let _ = writeln!(
            out,
            r#"<rect x="{x:.1}" y="{:.1}" width="14" height="12" fill="{}"/>"#,
            y - 6.0,
            CELL_COLORS[k.min(CELL_COLORS.len() - 1)]
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
            x + 22.0,
            y + 4.0,
            escape(name)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Cell extents around sorted centres, halfway to each neighbour.
fn cell_edges(centres: &[f64]) -> Vec<(f64, f64)> {
    let n = centres.len();
    (0..n)
        .map(|k| {
            let half_left = if k > 0 {
                (centres[k] - centres[k - 1]) / 2.0
            } else if n > 1 {
                (centres[1] - centres[0]) / 2.0
            } else {
                0.5
            };
            let half_right = if k + 1 < n {
                (centres[k + 1] - centres[k]) / 2.0
            } else {
                half_left
            };
            (centres[k] - half_left, centres[k] + half_right)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nan_breaks_polyline() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let s = Series {
            name: "y",
            values: vec![0.0, 1.0, f64::NAN, 3.0, 4.0],
            dashed: false,
        };
        let svg = line_chart("t", "x", "y", &xs, &[s], false);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }

    #[test]
    fn log_axes_drop_non_positive_points() {
        let xs = [1e-4, 1e-3, 1e-2];
        let s = Series {
            name: "r",
            values: vec![1e-8, 0.0, 1e-4],
            dashed: false,
        };
        let svg = line_chart("t", "x", "y", &xs, &[s], true);
        assert_eq!(svg.matches("<circle").count(), 2);
    }

    #[test]
    fn grid_draws_one_rect_per_cell() {
        let svg = cell_grid(
            "g",
            "x",
            "y",
            &[0.1, 0.2, 0.3],
            &[0.0, 1.0],
            &[0, 1, 2, 2, 2, 2],
            &["A", "B", "C"],
        );
        // cells + frame + legend swatches + background
        assert_eq!(svg.matches("<rect").count(), 6 + 1 + 3 + 1);
    }
}
