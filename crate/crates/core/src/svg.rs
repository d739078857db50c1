//! Minimal SVG line charts of RB and RMSE against n.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::experiment::MetricsRow;

const PANEL_W: f64 = 420.0;
const PANEL_H: f64 = 300.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 50.0;
const MARGIN_B: f64 = 55.0;
const LEGEND_H: f64 = 22.0;

const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];
const DASHES: [&str; 4] = ["", "6,4", "2,3", "8,3,2,3"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// One panel per (title, y label, series) entry, side by side.
pub fn line_chart(title: &str, x_label: &str, panels: &[(&str, &str, &[Series])]) -> String {
    let longest = panels.iter().map(|p| p.2.len()).max().unwrap_or(0);
    let legend_rows = longest.div_ceil(2);
    let width = PANEL_W * panels.len().max(1) as f64;
    let height = PANEL_H + legend_rows as f64 * LEGEND_H + 10.0;
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="{width}" height="{height}" fill="white"/>"#).unwrap();
    writeln!(out, r#"<text x="{}" y="20" text-anchor="middle" font-size="15">{}</text>"#, width / 2.0, escape(title)).unwrap();
    for (k, (panel_title, y_label, series)) in panels.iter().enumerate() {
        panel(&mut out, k as f64 * PANEL_W, panel_title, x_label, y_label, series);
    }
    out.push_str("</svg>\n");
    out
}

fn panel(out: &mut String, x0: f64, title: &str, x_label: &str, y_label: &str, series: &[Series]) {
    let left = x0 + MARGIN_L;
    let right = x0 + PANEL_W - MARGIN_R;
    let top = MARGIN_T;
    let bottom = PANEL_H - MARGIN_B;
    let finite = || series.iter().flat_map(|s| s.points.iter()).filter(|(x, y)| x.is_finite() && y.is_finite());
    let (mut xmin, mut xmax) = finite().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &(x, _)| (a.min(x), b.max(x)));
    let mut ymax = finite().fold(0.0f64, |a, &(_, y)| a.max(y));
    if !xmin.is_finite() {
        (xmin, xmax) = (0.0, 1.0);
    }
    if xmax == xmin {
        xmax = xmin + 1.0;
    }
    if ymax <= 0.0 {
        ymax = 1.0;
    }
    let y_ticks = nice_ticks(0.0, ymax, 5);
    let ymax = *y_ticks.last().unwrap_or(&ymax);
    let sx = |x: f64| left + (x - xmin) / (xmax - xmin) * (right - left);
    let sy = |y: f64| bottom - y / ymax * (bottom - top);

    writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">{}</text>"#, (left + right) / 2.0, top - 12.0, escape(title)).unwrap();
    writeln!(out, r#"<rect x="{left}" y="{top}" width="{}" height="{}" fill="none" stroke="black"/>"#, right - left, bottom - top).unwrap();
    for t in &y_ticks {
        let y = sy(*t);
        writeln!(out, r##"<line x1="{left}" y1="{y:.2}" x2="{right}" y2="{y:.2}" stroke="#dddddd"/>"##).unwrap();
        writeln!(out, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, left - 6.0, y + 4.0, tick_label(*t)).unwrap();
    }
    let mut xs: Vec<f64> = finite().map(|&(x, _)| x).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    for x in xs {
        let px = sx(x);
        writeln!(out, r#"<line x1="{px:.2}" y1="{bottom}" x2="{px:.2}" y2="{}" stroke="black"/>"#, bottom + 5.0).unwrap();
        writeln!(out, r#"<text x="{px:.2}" y="{}" text-anchor="middle">{}</text>"#, bottom + 18.0, tick_label(x)).unwrap();
    }
    writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (left + right) / 2.0, bottom + 38.0, escape(x_label)).unwrap();
    let ymid = (top + bottom) / 2.0;
    writeln!(
        out,
        r#"<text x="{}" y="{ymid}" text-anchor="middle" transform="rotate(-90 {} {ymid})">{}</text>"#,
        x0 + 18.0,
        x0 + 18.0,
        escape(y_label)
    )
    .unwrap();

    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let dash = DASHES[(i / COLORS.len()) % DASHES.len()];
        let dash_attr = if dash.is_empty() { String::new() } else { format!(r#" stroke-dasharray="{dash}""#) };
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        writeln!(out, r#"<polyline fill="none" stroke="{color}" stroke-width="1.8"{dash_attr} points="{}"/>"#, pts.join(" ")).unwrap();
        for p in &pts {
            let (cx, cy) = p.split_once(',').unwrap();
            writeln!(out, r#"<circle cx="{cx}" cy="{cy}" r="2.5" fill="{color}"/>"#).unwrap();
        }
        let lx = x0 + MARGIN_L + (i % 2) as f64 * 170.0;
        let ly = PANEL_H + (i / 2) as f64 * LEGEND_H;
        writeln!(out, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"{dash_attr}/>"#, lx + 24.0).unwrap();
        writeln!(out, r#"<text x="{}" y="{}">{}</text>"#, lx + 30.0, ly + 4.0, escape(&s.label)).unwrap();
    }
}

fn nice_ticks(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let raw = (hi - lo) / count as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let steps = (hi / step).ceil() as usize;
    (0..=steps).map(|k| lo + k as f64 * step).collect()
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e5).contains(&a) {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.1e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// One figure per true-parameter cell: RB and RMSE against n with a line for
/// every (parameter, estimator) pair. Returns (file stem, svg) in the order
/// cells first appear.
pub fn experiment_figures(rows: &[MetricsRow]) -> Vec<(String, String)> {
    // a cell is a run of rows in which each (param, estimator) appears once
    let mut cells: Vec<Vec<&MetricsRow>> = Vec::new();
    for row in rows {
        let start_new = match cells.last() {
            None => true,
            Some(cell) => cell.iter().any(|r| {
                (r.param_name == row.param_name && r.estimator == row.estimator)
                    || r.n != row.n
                    || r.generator != row.generator
            }),
        };
        if start_new {
            cells.push(Vec::new());
        }
        cells.last_mut().unwrap().push(row);
    }
    let mut groups: Vec<(String, String, Vec<&MetricsRow>)> = Vec::new();
    for cell in cells {
        let mut truth: BTreeMap<&str, f64> = BTreeMap::new();
        let mut order: Vec<&str> = Vec::new();
        for r in &cell {
            if truth.insert(&r.param_name, r.theta_true).is_none() {
                order.push(&r.param_name);
            }
        }
        let label = order.iter().map(|p| format!("{p}={}", truth[p])).collect::<Vec<_>>().join(", ");
        let generator = cell[0].generator.clone();
        match groups.iter_mut().find(|g| g.0 == generator && g.1 == label) {
            Some(g) => g.2.extend(cell),
            None => groups.push((generator, label, cell)),
        }
    }
    groups
        .into_iter()
        .map(|(generator, label, rows)| {
            let mut keys: Vec<(String, String)> = Vec::new();
            for r in &rows {
                let k = (r.param_name.clone(), r.estimator.clone());
                if !keys.contains(&k) {
                    keys.push(k);
                }
            }
            let series = |metric: fn(&MetricsRow) -> f64| -> Vec<Series> {
                keys.iter()
                    .map(|(p, e)| {
                        let mut points: Vec<(f64, f64)> = rows
                            .iter()
                            .filter(|r| &r.param_name == p && &r.estimator == e)
                            .map(|r| (r.n as f64, metric(r)))
                            .collect();
                        points.sort_by(|a, b| a.0.total_cmp(&b.0));
                        Series { label: format!("{p} ({e})"), points }
                    })
                    .collect()
            };
            let rb = series(|r| r.rb);
            let err = series(|r| r.rmse);
            let svg = line_chart(&format!("{generator}: {label}"), "n", &[("Relative bias", "RB", &rb), ("Root mean square error", "RMSE", &err)]);
            (file_stem(&label), svg)
        })
        .collect()
}

fn file_stem(label: &str) -> String {
    label
        .chars()
        .filter_map(|c| match c {
            'a'..='z' | 'A'..='Z' | '0'..='9' | '.' | '-' => Some(c),
            '=' => Some('-'),
            ',' => Some('_'),
            _ => None,
        })
        .collect()
}
