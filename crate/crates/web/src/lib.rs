//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each exported function returns a JSON string or an SVG document. The `*_impl` functions
//! hold the logic so it can be tested natively.

use std::f64::consts::PI;
use std::fmt::Write;

use ballistic_core::anti_ou::{default_grid, escape_ensemble, tail_fit, SdeConfig};
use ballistic_core::cluster::{classify_hull, run_cluster, ClusterConfig, GrowthMode, DEFAULT_F_MACRO};
use ballistic_core::geometry::Vec2;
use ballistic_core::polygon_flow::{evolve_steps, PolygonState};
use ballistic_core::render::{render_svg, RenderOptions};
use ballistic_core::stats::{survival_curve, SurvivalSample};
use serde::Serialize;
use wasm_bindgen::prelude::*;

pub const MAX_DISCS: u32 = 200_000;
pub const MAX_REPLICAS: u32 = 200_000;
pub const MAX_FLOW_STEPS: u32 = 200_000;

#[derive(Serialize)]
struct ClusterView {
    svg: String,
    extremal_count: usize,
    diameter: f64,
    shape: &'static str,
}

/// Grow `n` discs; `theta > 0` restricts growth to the wedge `π/2 ± theta`.
pub fn grow_cluster_impl(n: u32, seed: u32, theta: f64) -> Result<String, String> {
    if n == 0 || n > MAX_DISCS {
        return Err(format!("n must be in 1..={MAX_DISCS}"));
    }
    let mode = if theta > 0.0 {
        GrowthMode::Wedge { theta }
    } else {
        GrowthMode::Full
    };
    let mut cfg = ClusterConfig::new(n as u64, seed as u64).with_mode(mode);
    cfg.record_events = false;
    let (_, cluster) = run_cluster(&cfg).map_err(|e| e.to_string())?;
    let metrics = cluster.hull().metrics();
    let shape = match classify_hull(cluster.hull(), DEFAULT_F_MACRO).class {
        ballistic_core::cluster::Shape::Triangle => "triangle",
        ballistic_core::cluster::Shape::Quadrangle => "quadrangle",
        ballistic_core::cluster::Shape::Other => "other",
    };
    let view = ClusterView {
        svg: render_svg(cluster.discs(), cluster.hull(), RenderOptions::default()),
        extremal_count: metrics.extremal_count,
        diameter: metrics.diameter,
        shape,
    };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

fn parse_vertices(text: &str) -> Result<Vec<Vec2>, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let v: Vec<f64> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .map(|f| f.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| format!("line {}: expected two numbers", i + 1))?;
        if v.len() != 2 {
            return Err(format!("line {}: expected two numbers", i + 1));
        }
        out.push(Vec2::new(v[0], v[1]));
    }
    Ok(out)
}

#[derive(Serialize)]
struct FlowView {
    svg: String,
    merges: usize,
    n_final: f64,
    /// Sorted interior angles of the final polygon, in degrees.
    final_angles_deg: Vec<f64>,
}

/// Run the polygon flow for `steps` adaptive steps and draw snapshots, each rescaled to a
/// common size so the change of shape is visible.
pub fn polygon_flow_impl(vertices: &str, steps: u32) -> Result<String, String> {
    if steps == 0 || steps > MAX_FLOW_STEPS {
        return Err(format!("steps must be in 1..={MAX_FLOW_STEPS}"));
    }
    let state = PolygonState::new(parse_vertices(vertices)?).map_err(|e| e.to_string())?;
    let every = (steps as usize / 8).max(1);
    let mut snapshots = vec![state.vertices.clone()];
    let mut current = state;
    let mut merges = 0;
    let mut done = 0usize;
    while done < steps as usize {
        let chunk = every.min(steps as usize - done);
        let rec = evolve_steps(&current, chunk, None, chunk).map_err(|e| e.to_string())?;
        merges += rec.merges.len();
        current = rec.final_state;
        snapshots.push(current.vertices.clone());
        done += chunk;
    }
    let mut svg = String::from(
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="-1.1 -1.1 2.2 2.2" width="480" height="480">"#,
    );
    let last = snapshots.len() - 1;
    for (k, poly) in snapshots.iter().enumerate() {
        let c = poly.iter().fold(Vec2::ZERO, |acc, &p| acc + p) * (1.0 / poly.len() as f64);
        let scale = poly.iter().map(|p| p.dist(c)).fold(0.0, f64::max).max(1e-12);
        let pts: Vec<String> = poly
            .iter()
            .map(|&p| {
                let q = (p - c) * (1.0 / scale);
                format!("{:.5},{:.5}", q.x, -q.y)
            })
            .collect();
        let shade = 200 - (200 * k / last.max(1));
        let _ = write!(
            svg,
            r#"<polygon points="{}" fill="none" stroke="rgb({shade},{shade},{shade})" stroke-width="0.01"/>"#,
            pts.join(" ")
        );
    }
    svg.push_str("</svg>");
    let mut angles: Vec<f64> = current
        .interior_angles()
        .iter()
        .map(|a| a * 180.0 / PI)
        .collect();
    angles.sort_by(f64::total_cmp);
    serde_json::to_string(&FlowView {
        svg,
        merges,
        n_final: current.n,
        final_angles_deg: angles,
    })
    .map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct EscapeView {
    mu: f64,
    sigma: f64,
    a: f64,
    exponent_hat: Option<f64>,
    stderr: Option<f64>,
    error: Option<String>,
    svg: String,
}

/// Escape times for the wedge half-angle `theta` with barrier `2 sqrt(c*)`, plotted as a
/// log-log survival curve against the slope `-μ(θ)`.
pub fn escape_tail_impl(theta: f64, replicas: u32, seed: u32) -> Result<String, String> {
    if !(100..=MAX_REPLICAS).contains(&replicas) {
        return Err(format!("replicas must be in 100..={MAX_REPLICAS}"));
    }
    let base = SdeConfig::from_theta(theta, 1.0).map_err(|e| e.to_string())?;
    let cfg = SdeConfig {
        a: 2.0 * base.c_star().sqrt(),
        ..base
    };
    let samples = escape_ensemble(&cfg, replicas as usize, seed as u64).map_err(|e| e.to_string())?;
    let grid = default_grid(&cfg);
    let surv: Vec<SurvivalSample> = samples.clone();
    let curve: Vec<(f64, f64)> = survival_curve(&surv, &grid)
        .into_iter()
        .filter(|p| p.1 > 0.0)
        .collect();
    let fit = tail_fit(&samples, &grid);

    // axes: log10 t in [0, 6], log10 P in [lo, 0]
    let lo = curve.last().map(|p| p.1.log10().floor()).unwrap_or(-6.0).min(-1.0);
    let (w, h) = (480.0, 320.0);
    let px = |t: f64| 40.0 + (w - 60.0) * t.log10() / 6.0;
    let py = |p: f64| 20.0 + (h - 50.0) * (p.log10() / lo);
    let mut svg = format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {w} {h}" width="{w}" height="{h}" font-size="11">"#
    );
    let _ = write!(
        svg,
        r#"<rect x="40" y="20" width="{}" height="{}" fill="none" stroke="black"/>"#,
        w - 60.0,
        h - 50.0
    );
    for d in 0..=6 {
        let _ = write!(svg, r#"<text x="{:.1}" y="{}" text-anchor="middle">1e{d}</text>"#, px(10f64.powi(d)), h - 15.0);
    }
    let mut e = 0;
    while e as f64 >= lo {
        let _ = write!(svg, r#"<text x="36" y="{:.1}" text-anchor="end">1e{e}</text>"#, py(10f64.powi(e)) + 4.0);
        e -= 1;
    }
    let pts: Vec<String> = curve.iter().map(|&(t, p)| format!("{:.2},{:.2}", px(t), py(p))).collect();
    let _ = write!(svg, r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#, pts.join(" "));
    if let Ok(f) = &fit {
        // reference slope -μ through the first fitted point
        let (t0, p0) = f.points[0];
        let t1 = 1e6;
        let p1 = p0 * (t1 / t0).powf(-cfg.mu);
        let _ = write!(
            svg,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="crimson" stroke-dasharray="4 3"/>"#,
            px(t0),
            py(p0),
            px(t1),
            py(p1.max(10f64.powf(lo)))
        );
    }
    svg.push_str("</svg>");
    serde_json::to_string(&EscapeView {
        mu: cfg.mu,
        sigma: cfg.sigma,
        a: cfg.a,
        exponent_hat: fit.as_ref().ok().map(|f| f.exponent_hat),
        stderr: fit.as_ref().ok().map(|f| f.stderr),
        error: fit.err().map(|e| e.to_string()),
        svg,
    })
    .map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn grow_cluster(n: u32, seed: u32, theta: f64) -> Result<String, JsError> {
    grow_cluster_impl(n, seed, theta).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn polygon_flow(vertices: &str, steps: u32) -> Result<String, JsError> {
    polygon_flow_impl(vertices, steps).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn escape_tail(theta: f64, replicas: u32, seed: u32) -> Result<String, JsError> {
    escape_tail_impl(theta, replicas, seed).map_err(|e| JsError::new(&e))
}
