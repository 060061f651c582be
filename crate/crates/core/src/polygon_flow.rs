//! Mean-flow dynamics of a polygonal hull.
//!
//! A vertex whose normal cone has width `2θ` moves along the bisector of the cone at speed
//! `(1/π) sin θ` per attachment step. All vertices move at once. A vertex whose exterior angle
//! drops below [`EPS_MERGE`] is removed.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{wrap_angle, Vec2};

pub const EPS_MERGE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("degenerate polygon: {vertices} vertices remain (need at least 3)")]
    DegeneratePolygon { vertices: usize },
    #[error("polygon is not strictly convex and counterclockwise at vertex {index}")]
    NotConvex { index: usize },
    #[error("step dn must be positive, got {0}")]
    BadStep(f64),
    #[error("configuration error: {0}")]
    Configuration(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolygonState {
    /// Counterclockwise.
    pub vertices: Vec<Vec2>,
    pub n: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MergeEvent {
    pub n: f64,
    /// Index of the removed vertex in the polygon just before removal.
    pub index: usize,
    pub position: Vec2,
    pub exterior_angle: f64,
    pub remaining: usize,
}

fn turning_angles(v: &[Vec2]) -> Vec<f64> {
    let k = v.len();
    (0..k)
        .map(|i| {
            let a = v[i] - v[(i + k - 1) % k];
            let b = v[(i + 1) % k] - v[i];
            a.cross(b).atan2(a.dot(b))
        })
        .collect()
}

impl PolygonState {
    pub fn new(vertices: Vec<Vec2>) -> Result<Self, FlowError> {
        let s = PolygonState { vertices, n: 0.0 };
        s.validate()?;
        Ok(s)
    }

    pub fn regular(k: usize, radius: f64) -> Result<Self, FlowError> {
        let vertices = (0..k)
            .map(|i| Vec2::from_angle(2.0 * PI * i as f64 / k as f64) * radius)
            .collect();
        PolygonState::new(vertices)
    }

    fn validate(&self) -> Result<(), FlowError> {
        if self.vertices.len() < 3 {
            return Err(FlowError::DegeneratePolygon {
                vertices: self.vertices.len(),
            });
        }
        if let Some(index) = self.exterior_angles().iter().position(|&e| e <= 0.0) {
            return Err(FlowError::NotConvex { index });
        }
        Ok(())
    }

    /// Signed turning angle at each vertex (negative at a reflex vertex).
    pub fn exterior_angles(&self) -> Vec<f64> {
        turning_angles(&self.vertices)
    }

    pub fn interior_angles(&self) -> Vec<f64> {
        self.exterior_angles().iter().map(|e| PI - e).collect()
    }

    pub fn edge_lengths(&self) -> Vec<f64> {
        let k = self.vertices.len();
        (0..k)
            .map(|i| self.vertices[i].dist(self.vertices[(i + 1) % k]))
            .collect()
    }

    /// `min(0.01 · shortest edge, 0.1)`.
    pub fn default_step(&self) -> f64 {
        let r_min = self.edge_lengths().into_iter().fold(f64::INFINITY, f64::min);
        (0.01 * r_min).min(0.1)
    }
}

/// Velocity of every vertex of a convex CCW polygon.
pub fn vertex_velocities(vertices: &[Vec2]) -> Vec<Vec2> {
    let k = vertices.len();
    (0..k)
        .map(|i| {
            let prev = vertices[(i + k - 1) % k];
            let next = vertices[(i + 1) % k];
            // outward normal of an edge of a CCW polygon is its direction turned clockwise
            let n_in = (vertices[i] - prev).perp_cw().normalized();
            let n_out = (next - vertices[i]).perp_cw().normalized();
            let a = n_in.angle();
            let half = 0.5 * wrap_angle(n_out.angle() - a);
            Vec2::from_angle(a + half) * (half.sin() / PI)
        })
        .collect()
}

fn rk4(vertices: &[Vec2], dn: f64) -> Vec<Vec2> {
    let shift = |base: &[Vec2], k: &[Vec2], c: f64| -> Vec<Vec2> {
        base.iter().zip(k).map(|(&p, &v)| p + v * c).collect()
    };
    let k1 = vertex_velocities(vertices);
    let k2 = vertex_velocities(&shift(vertices, &k1, 0.5 * dn));
    let k3 = vertex_velocities(&shift(vertices, &k2, 0.5 * dn));
    let k4 = vertex_velocities(&shift(vertices, &k3, dn));
    vertices
        .iter()
        .enumerate()
        .map(|(i, &p)| p + (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (dn / 6.0))
        .collect()
}

/// One RK4 step of size `dn`, followed by removal of vertices whose exterior angle fell below
/// [`EPS_MERGE`].
pub fn flow_step(state: &PolygonState, dn: f64) -> Result<(PolygonState, Vec<MergeEvent>), FlowError> {
    if !(dn > 0.0) {
        return Err(FlowError::BadStep(dn));
    }
    state.validate()?;
    let mut vertices = rk4(&state.vertices, dn);
    let n = state.n + dn;
    let mut merges = Vec::new();
    loop {
        if vertices.len() < 3 {
            return Err(FlowError::DegeneratePolygon {
                vertices: vertices.len(),
            });
        }
        let ext = turning_angles(&vertices);
        let worst = ext
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, &e)| (i, e))
            .expect("non-empty");
        if worst.1 >= EPS_MERGE {
            break;
        }
        let position = vertices.remove(worst.0);
        merges.push(MergeEvent {
            n,
            index: worst.0,
            position,
            exterior_angle: worst.1,
            remaining: vertices.len(),
        });
    }
    Ok((PolygonState { vertices, n }, merges))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowSample {
    pub n: f64,
    pub vertex_count: usize,
    /// Sorted ascending.
    pub interior_angles: Vec<f64>,
}

impl FlowSample {
    fn of(state: &PolygonState) -> Self {
        let mut interior_angles = state.interior_angles();
        interior_angles.sort_by(f64::total_cmp);
        FlowSample {
            n: state.n,
            vertex_count: state.vertices.len(),
            interior_angles,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowRecord {
    pub samples: Vec<FlowSample>,
    pub merges: Vec<MergeEvent>,
    pub final_state: PolygonState,
}

/// Integrate until `n_end` with the default adaptive step (or a fixed `dn`), sampling the
/// angles every `sample_every` steps and after every merge.
pub fn evolve(
    initial: &PolygonState,
    n_end: f64,
    dn: Option<f64>,
    sample_every: usize,
) -> Result<FlowRecord, FlowError> {
    run_flow(initial, dn, sample_every, |state, _| {
        (state.n < n_end).then_some(n_end - state.n)
    })
}

/// Take exactly `steps` steps of size `dn` (the default adaptive step when `None`).
pub fn evolve_steps(
    initial: &PolygonState,
    steps: usize,
    dn: Option<f64>,
    sample_every: usize,
) -> Result<FlowRecord, FlowError> {
    run_flow(initial, dn, sample_every, |_, taken| {
        (taken < steps).then_some(f64::INFINITY)
    })
}

/// `remaining(state, steps_taken)` returns `None` to stop, or an upper bound on the next step.
fn run_flow(
    initial: &PolygonState,
    dn: Option<f64>,
    sample_every: usize,
    remaining: impl Fn(&PolygonState, usize) -> Option<f64>,
) -> Result<FlowRecord, FlowError> {
    initial.validate()?;
    let mut state = initial.clone();
    let mut samples = vec![FlowSample::of(&state)];
    let mut merges = Vec::new();
    let mut steps = 0usize;
    let mut last_sampled = 0usize;
    while let Some(limit) = remaining(&state, steps) {
        let step = dn.unwrap_or_else(|| state.default_step()).min(limit);
        let (next, m) = flow_step(&state, step)?;
        state = next;
        let merged = !m.is_empty();
        merges.extend(m);
        steps += 1;
        if merged || steps.is_multiple_of(sample_every.max(1)) {
            samples.push(FlowSample::of(&state));
            last_sampled = steps;
        }
    }
    if last_sampled != steps {
        samples.push(FlowSample::of(&state));
    }
    Ok(FlowRecord {
        samples,
        merges,
        final_state: state,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaRate {
    pub fd_rate: f64,
    pub formula_rate: f64,
}

/// Two consecutive vertices `x1`, `x2` at distance `r` with normal-cone widths
/// `2θ1 = π/2 - β - γ` and `2θ2 = π/2 + β - γ`. Each vertex is moved along its bisector at its
/// mean-flow speed for `±h`; the rotation rate of the edge `x1 x2` is measured by a central
/// difference and returned with `(1/(π r)) sin β sin γ`.
pub fn beta_rate_check(
    r: f64,
    beta: f64,
    gamma: f64,
    theta1: f64,
    theta2: f64,
    h: f64,
) -> Result<BetaRate, FlowError> {
    let tol = 1e-12;
    if (2.0 * theta1 - (PI / 2.0 - beta - gamma)).abs() > tol
        || (2.0 * theta2 - (PI / 2.0 + beta - gamma)).abs() > tol
    {
        return Err(FlowError::Configuration(format!(
            "need 2θ1 = π/2 - β - γ and 2θ2 = π/2 + β - γ (θ1 = {theta1}, θ2 = {theta2}, β = {beta}, γ = {gamma})"
        )));
    }
    if !(r > 0.0 && h > 0.0 && theta1 > 0.0 && theta2 > 0.0) {
        return Err(FlowError::Configuration(format!(
            "need r > 0, h > 0 and positive cone widths (r = {r}, h = {h}, θ1 = {theta1}, θ2 = {theta2})"
        )));
    }
    // edge x1 -> x2 along +x; its outward normal points to -y
    let normal = -PI / 2.0;
    let x1 = Vec2::new(0.0, 0.0);
    let x2 = Vec2::new(r, 0.0);
    let v1 = Vec2::from_angle(normal - theta1) * (theta1.sin() / PI);
    let v2 = Vec2::from_angle(normal + theta2) * (theta2.sin() / PI);
    // β grows as the edge turns clockwise
    let tilt = |dn: f64| {
        let d = (x2 + v2 * dn) - (x1 + v1 * dn);
        -d.y.atan2(d.x)
    };
    Ok(BetaRate {
        fd_rate: (tilt(h) - tilt(-h)) / (2.0 * h),
        formula_rate: beta.sin() * gamma.sin() / (PI * r),
    })
}

/// `beta_rate_check` with the cone widths implied by `β` and `γ`.
pub fn beta_rate(r: f64, beta: f64, gamma: f64, h: f64) -> Result<BetaRate, FlowError> {
    let theta1 = 0.5 * (PI / 2.0 - beta - gamma);
    let theta2 = 0.5 * (PI / 2.0 + beta - gamma);
    beta_rate_check(r, beta, gamma, theta1, theta2, h)
}
