//! Static SVG charts of campaign reports: one panel per discount factor, trial
//! index on the x axis, ground truth and every bound as separate series.

use std::fmt::Write as _;

use gbsm_core::bounds::BoundReport;

use crate::error::{AppError, Result};

const WIDTH: f64 = 720.0;
const PANEL_HEIGHT: f64 = 320.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 170.0;
const MARGIN_TOP: f64 = 36.0;
const MARGIN_BOTTOM: f64 = 40.0;
const PALETTE: [&str; 8] = [
    "#000000", "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2",
];
const GAMMA_MATCH: f64 = 1e-9;

struct Panel<'a> {
    gamma: Option<f64>,
    rows: Vec<&'a BoundReport>,
}

fn series_names(reports: &[BoundReport]) -> Vec<String> {
    let mut names = vec!["ground_truth".to_string()];
    for r in reports {
        for (n, _) in r.bounds() {
            if !names.contains(n) {
                names.push(n.clone());
            }
        }
    }
    names
}

fn value(r: &BoundReport, name: &str) -> Option<f64> {
    if name == "ground_truth" {
        Some(r.ground_truth)
    } else {
        r.bound(name)
    }
}

/// Renders the chart. `gamma_filter` restricts the panels; a filter value
/// that matches no report is an error.
pub fn render_svg(reports: &[BoundReport], gamma_filter: Option<&[f64]>) -> Result<String> {
    let mut gammas: Vec<f64> = Vec::new();
    for r in reports {
        if !gammas.iter().any(|g| (g - r.gamma).abs() <= GAMMA_MATCH) {
            gammas.push(r.gamma);
        }
    }
    gammas.sort_by(f64::total_cmp);
    if let Some(filter) = gamma_filter {
        if let Some(bad) = filter
            .iter()
            .find(|f| !gammas.iter().any(|g| (*g - **f).abs() <= GAMMA_MATCH))
        {
            return Err(AppError::Config(format!("no rows with gamma {bad}")));
        }
        gammas.retain(|g| filter.iter().any(|f| (g - f).abs() <= GAMMA_MATCH));
    }
    let mut panels: Vec<Panel> = gammas
        .iter()
        .map(|&g| Panel {
            gamma: Some(g),
            rows: reports.iter().filter(|r| (r.gamma - g).abs() <= GAMMA_MATCH).collect(),
        })
        .collect();
    if panels.is_empty() {
        panels.push(Panel {
            gamma: None,
            rows: Vec::new(),
        });
    }
    let names = series_names(reports);

    let height = PANEL_HEIGHT * panels.len() as f64;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{height}" fill="white"/>"#);
    for (i, panel) in panels.iter().enumerate() {
        draw_panel(&mut svg, panel, &names, i as f64 * PANEL_HEIGHT);
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn draw_panel(svg: &mut String, panel: &Panel, names: &[String], top: f64) {
    let (x0, x1) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
    let (y0, y1) = (top + PANEL_HEIGHT - MARGIN_BOTTOM, top + MARGIN_TOP);
    let max_trial = panel.rows.iter().map(|r| r.trial).max().unwrap_or(0).max(1) as f64;
    let max_y = panel
        .rows
        .iter()
        .flat_map(|r| names.iter().filter_map(move |n| value(r, n)))
        .fold(0.0f64, f64::max);
    let max_y = if max_y > 0.0 { max_y * 1.05 } else { 1.0 };
    let px = |t: f64| x0 + (x1 - x0) * t / max_trial;
    let py = |v: f64| y0 - (y0 - y1) * v / max_y;

    let title = match panel.gamma {
        Some(g) => format!("gamma = {}", fmt_short(g)),
        None => "no data".to_string(),
    };
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-size="13">{title}</text>"#,
        x0,
        top + 22.0
    );
    let _ = writeln!(
        svg,
        r##"<path d="M{x0:.2},{y1:.2} L{x0:.2},{y0:.2} L{x1:.2},{y0:.2}" fill="none" stroke="#444"/>"##
    );
    for k in 0..=4 {
        let v = max_y * k as f64 / 4.0;
        let y = py(v);
        let _ = writeln!(
            svg,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{x0:.2}" y2="{y:.2}" stroke="#444"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            x0 - 4.0,
            x0 - 6.0,
            y + 4.0,
            fmt_short(v)
        );
    }
    for k in 0..=4 {
        let t = max_trial * k as f64 / 4.0;
        let x = px(t);
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{:.2}" stroke="#444"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            y0 + 4.0,
            y0 + 16.0,
            fmt_short(t)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">trial</text>"#,
        (x0 + x1) / 2.0,
        y0 + 32.0
    );

    for (i, name) in names.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<(f64, f64)> = panel
            .rows
            .iter()
            .filter_map(|r| value(r, name).map(|v| (px(r.trial as f64), py(v))))
            .collect();
        if points.len() > 1 {
            let path: Vec<String> = points.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
            let _ = writeln!(
                svg,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1"/>"#,
                path.join(" ")
            );
        }
        for (x, y) in &points {
            let _ = writeln!(svg, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2" fill="{color}"/>"#);
        }
        let ly = y1 + 14.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<rect x="{:.2}" y="{:.2}" width="10" height="10" fill="{color}"/><text x="{:.2}" y="{:.2}">{name}</text>"#,
            x1 + 16.0,
            ly - 9.0,
            x1 + 30.0,
            ly
        );
    }
}

fn fmt_short(x: f64) -> String {
    let s = format!("{x:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".into()
    } else {
        s.to_string()
    }
}
