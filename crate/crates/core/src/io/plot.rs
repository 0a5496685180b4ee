use std::fmt::Write as _;
use std::path::Path;

use crate::error::{HgfError, Result};
use crate::network::Trajectory;

const WIDTH: f64 = 900.0;
const PANEL_HEIGHT: f64 = 150.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const GAP: f64 = 30.0;
const COLOURS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const SURPRISE_COLOUR: &str = "#7f7f7f";

struct Panel {
    top: f64,
    lo: f64,
    hi: f64,
    steps: usize,
}

impl Panel {
    fn new(top: f64, values: impl Iterator<Item = f64>, steps: usize) -> Self {
        let (mut lo, mut hi) = values
            .filter(|v| v.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-9 {
            lo -= 0.5;
            hi += 0.5;
        }
        let pad = 0.05 * (hi - lo);
        Self {
            top,
            lo: lo - pad,
            hi: hi + pad,
            steps,
        }
    }

    fn x(&self, i: usize) -> f64 {
        let span = (self.steps.max(2) - 1) as f64;
        LEFT + (WIDTH - LEFT - RIGHT) * i as f64 / span
    }

    fn y(&self, v: f64) -> f64 {
        let v = v.clamp(self.lo, self.hi);
        self.top + PANEL_HEIGHT * (self.hi - v) / (self.hi - self.lo)
    }

    fn frame(&self, svg: &mut String, title: &str) {
        let _ = writeln!(
            svg,
            r##"<rect x="{LEFT}" y="{:.2}" width="{:.2}" height="{PANEL_HEIGHT}" fill="none" stroke="#444" stroke-width="0.8"/>"##,
            self.top,
            WIDTH - LEFT - RIGHT
        );
        let _ = writeln!(svg, r#"<text x="{LEFT}" y="{:.2}" font-size="12">{}</text>"#, self.top - 6.0, escape(title));
        for v in [self.lo, self.hi] {
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{:.3}</text>"#,
                LEFT - 4.0,
                self.y(v) + 3.0,
                v
            );
        }
    }

    fn polyline(&self, values: &[f64]) -> String {
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| format!("{:.2},{:.2}", self.x(i), self.y(v)))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Closed polygon between `upper` and `lower`.
    fn band(&self, upper: &[f64], lower: &[f64]) -> String {
        let mut points: Vec<String> = upper
            .iter()
            .enumerate()
            .map(|(i, &v)| format!("{:.2},{:.2}", self.x(i), self.y(v)))
            .collect();
        points.extend(
            lower
                .iter()
                .enumerate()
                .rev()
                .map(|(i, &v)| format!("{:.2},{:.2}", self.x(i), self.y(v))),
        );
        points.join(" ")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Static SVG of a trajectory: one panel per node with the expected mean and
/// a ±1 sd band from the expected precision. Surprise gets its own panel
/// when there are several nodes, and a band along the bottom of the single
/// panel otherwise.
pub fn render_trajectory_svg(traj: &Trajectory) -> Result<String> {
    if traj.is_empty() || traj.node_count() == 0 {
        return Err(HgfError::Validation("cannot plot an empty trajectory".into()));
    }
    let nodes = traj.node_count();
    if traj.rows.iter().any(|r| r.nodes.len() != nodes) {
        return Err(HgfError::Validation("node count changes within the trajectory".into()));
    }
    let steps = traj.len();
    let panels = if nodes > 1 { nodes + 1 } else { 1 };
    let height = TOP + panels as f64 * (PANEL_HEIGHT + GAP);
    let surprise: Vec<f64> = traj.rows.iter().map(|r| r.surprise()).collect();

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);

    // highest node on top, as in a hierarchy
    for (slot, node) in (0..nodes).rev().enumerate() {
        let colour = COLOURS[node % COLOURS.len()];
        let mean = traj.series(node, |n| n.expected_mean);
        let sd = traj.series(node, |n| n.expected_precision.recip().sqrt());
        let upper: Vec<f64> = mean.iter().zip(&sd).map(|(m, s)| m + s).collect();
        let lower: Vec<f64> = mean.iter().zip(&sd).map(|(m, s)| m - s).collect();
        let observed: Vec<(usize, f64)> = traj
            .rows
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.nodes[node].observation.map(|u| (i, u)))
            .collect();
        let top = TOP + slot as f64 * (PANEL_HEIGHT + GAP);
        let range = upper
            .iter()
            .chain(&lower)
            .copied()
            .chain(observed.iter().map(|&(_, u)| u));
        let panel = Panel::new(top, range, steps);
        let kind = traj.rows[0].nodes[node].kind.as_str();
        panel.frame(&mut svg, &format!("node {node} ({kind})"));

        if nodes == 1 {
            let peak = surprise.iter().copied().filter(|s| s.is_finite()).fold(0.0, f64::max);
            if peak > 0.0 {
                let scale = 0.25 * (panel.hi - panel.lo) / peak;
                let base = vec![panel.lo; steps];
                let top: Vec<f64> = surprise.iter().map(|s| panel.lo + s * scale).collect();
                let _ = writeln!(
                    svg,
                    r#"<polygon class="surprise" points="{}" fill="{SURPRISE_COLOUR}" fill-opacity="0.35" stroke="none"/>"#,
                    panel.band(&top, &base)
                );
            }
        }
        let _ = writeln!(
            svg,
            r#"<polygon class="band" points="{}" fill="{colour}" fill-opacity="0.2" stroke="none"/>"#,
            panel.band(&upper, &lower)
        );
        let _ = writeln!(
            svg,
            r#"<polyline class="mean" points="{}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#,
            panel.polyline(&mean)
        );
        for (i, u) in observed {
            let _ = writeln!(
                svg,
                r##"<circle cx="{:.2}" cy="{:.2}" r="1.5" fill="#222"/>"##,
                panel.x(i),
                panel.y(u)
            );
        }
    }

    if nodes > 1 {
        let top = TOP + nodes as f64 * (PANEL_HEIGHT + GAP);
        let panel = Panel::new(top, surprise.iter().copied().chain([0.0]), steps);
        panel.frame(&mut svg, "surprise");
        let base = vec![0.0; steps];
        let _ = writeln!(
            svg,
            r#"<polygon class="surprise" points="{}" fill="{SURPRISE_COLOUR}" fill-opacity="0.35" stroke="none"/>"#,
            panel.band(&surprise, &base)
        );
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{SURPRISE_COLOUR}" stroke-width="1"/>"#,
            panel.polyline(&surprise)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn plot_trajectory_svg(traj: &Trajectory, path: impl AsRef<Path>) -> Result<()> {
    let svg = render_trajectory_svg(traj)?;
    std::fs::write(path, svg)?;
    Ok(())
}
