//! Full-cluster growth runs: the attachment loop, its event log, and the shape metrics
//! tracked at checkpoints.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{GeometryError, StatsError};
use crate::geometry::{max_pairwise_distance, wrap_angle, Vec2};
use crate::hull::{DiscStore, HullState};
use crate::rng::seeded_rng;
use crate::stats::linear_fit;

/// Edges at least this fraction of the diameter count as macroscopic.
pub const DEFAULT_F_MACRO: f64 = 0.2;
pub const DEFAULT_CHECKPOINT_START: u64 = 10;
pub const DEFAULT_CHECKPOINT_RATIO: f64 = 1.1;
/// Number of trailing events kept in a geometry failure report.
pub const FAILURE_DUMP_EVENTS: usize = 100;

/// Which part of the boundary receives new discs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GrowthMode {
    /// Arc-measure sampling over the whole boundary.
    Full,
    /// Directions restricted to `π/2 ± theta`: growth at a single vertex whose two flanking
    /// edges stay at angle `π/2 - theta` from the growth axis.
    Wedge { theta: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub n_steps: u64,
    pub seed: u64,
    pub mode: GrowthMode,
    pub initial: Vec<Vec2>,
    pub checkpoint_start: u64,
    pub checkpoint_ratio: f64,
    /// Keep the full event log. Off for long ensemble runs that only need metrics.
    pub record_events: bool,
    /// Check convexity and the angle sum after every attachment.
    pub audit: bool,
}

impl ClusterConfig {
    pub fn new(n_steps: u64, seed: u64) -> Self {
        ClusterConfig {
            n_steps,
            seed,
            mode: GrowthMode::Full,
            initial: vec![Vec2::ZERO],
            checkpoint_start: DEFAULT_CHECKPOINT_START,
            checkpoint_ratio: DEFAULT_CHECKPOINT_RATIO,
            record_events: true,
            audit: false,
        }
    }

    pub fn with_mode(mut self, mode: GrowthMode) -> Self {
        self.mode = mode;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttachmentEvent {
    pub step: u64,
    pub new_disc: usize,
    pub parent: usize,
    pub phi: f64,
    pub evicted: Vec<usize>,
    pub extremal_count_after: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub step: u64,
    pub diameter: f64,
    pub extremal_count: usize,
    /// Hull vertices (extremal centers), counterclockwise.
    pub vertices: Vec<Vec2>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub mode: GrowthMode,
    pub n_steps: u64,
    pub initial: Vec<Vec2>,
    pub events: Vec<AttachmentEvent>,
    pub checkpoints: Vec<Checkpoint>,
    /// Extremal disc ids after the last step.
    pub final_ring: Vec<usize>,
    /// Parent of every disc, indexed by id; `None` for initial discs.
    pub parents: Vec<Option<usize>>,
}

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("n_steps must be at least 1")]
    NoSteps,
    #[error("invalid growth mode: {0}")]
    Mode(String),
    #[error("geometry failure at step {step}: {source}")]
    Geometry {
        step: u64,
        #[source]
        source: GeometryError,
        /// The last events before the failure, oldest first.
        recent: Vec<AttachmentEvent>,
    },
    #[error("initial cluster: {0}")]
    Initial(#[source] GeometryError),
}

/// A growing cluster: all discs plus the extremal ring.
#[derive(Clone, Debug)]
pub struct Cluster {
    discs: DiscStore,
    hull: HullState,
    step: u64,
}

impl Cluster {
    pub fn new(initial: &[Vec2]) -> Result<Self, GeometryError> {
        let discs = DiscStore::from_centers(initial)?;
        let hull = HullState::from_discs(&discs)?;
        Ok(Cluster {
            discs,
            hull,
            step: 0,
        })
    }

    pub fn single() -> Self {
        Cluster::new(&[Vec2::ZERO]).expect("a single disc is a valid cluster")
    }

    pub fn discs(&self) -> &DiscStore {
        &self.discs
    }

    pub fn hull(&self) -> &HullState {
        &self.hull
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Sample and perform one attachment.
    pub fn grow<R: Rng + ?Sized>(
        &mut self,
        rng: &mut R,
        mode: GrowthMode,
    ) -> Result<AttachmentEvent, GeometryError> {
        let (parent, phi) = match mode {
            GrowthMode::Full => self.hull.sample_attachment(rng),
            GrowthMode::Wedge { theta } => self.hull.sample_attachment_in(rng, FRAC_PI_2, theta),
        };
        self.apply(parent, phi)
    }

    /// Attach a disc to extremal disc `parent` in direction `phi`.
    pub fn apply(&mut self, parent: usize, phi: f64) -> Result<AttachmentEvent, GeometryError> {
        let step = self.step + 1;
        let out = self.hull.attach(&mut self.discs, parent, phi, step)?;
        self.step = step;
        Ok(AttachmentEvent {
            step,
            new_disc: out.new_disc,
            parent: out.parent,
            phi: out.phi,
            evicted: out.evicted,
            extremal_count_after: self.hull.len(),
        })
    }

    pub fn checkpoint(&self) -> Checkpoint {
        let vertices = self.hull.vertices().to_vec();
        Checkpoint {
            step: self.step,
            diameter: max_pairwise_distance(&vertices) + 1.0,
            extremal_count: vertices.len(),
            vertices,
        }
    }
}

/// Checkpoint steps: `start`, then geometric spacing by `ratio`, always ending at `n_steps`.
pub fn checkpoint_steps(n_steps: u64, start: u64, ratio: f64) -> Vec<u64> {
    let mut steps = Vec::new();
    let mut s = start.max(1) as f64;
    let mut last = 0u64;
    while (s.round() as u64) < n_steps {
        let k = s.round() as u64;
        if k > last {
            steps.push(k);
            last = k;
        }
        s *= ratio;
    }
    steps.push(n_steps);
    steps
}

fn validate_mode(mode: GrowthMode) -> Result<(), ClusterError> {
    if let GrowthMode::Wedge { theta } = mode {
        if !(theta > 0.0 && theta <= FRAC_PI_2) {
            return Err(ClusterError::Mode(format!(
                "wedge half-angle {theta} outside (0, π/2]"
            )));
        }
    }
    Ok(())
}

/// Grow a cluster for `config.n_steps` attachments.
pub fn run_cluster(config: &ClusterConfig) -> Result<(RunRecord, Cluster), ClusterError> {
    if config.n_steps == 0 {
        return Err(ClusterError::NoSteps);
    }
    validate_mode(config.mode)?;
    let mut cluster = Cluster::new(&config.initial).map_err(ClusterError::Initial)?;
    let mut rng = seeded_rng(config.seed);
    let marks = checkpoint_steps(
        config.n_steps,
        config.checkpoint_start,
        config.checkpoint_ratio,
    );
    let mut next_mark = 0;
    let mut events = Vec::with_capacity(if config.record_events {
        config.n_steps as usize
    } else {
        0
    });
    let mut recent: std::collections::VecDeque<AttachmentEvent> =
        std::collections::VecDeque::with_capacity(FAILURE_DUMP_EVENTS);
    let mut checkpoints = Vec::with_capacity(marks.len());

    for step in 1..=config.n_steps {
        let result = cluster.grow(&mut rng, config.mode).and_then(|ev| {
            if config.audit {
                cluster.hull.check_invariants()?;
            }
            Ok(ev)
        });
        let ev = match result {
            Ok(ev) => ev,
            Err(source) => {
                let recent = if config.record_events {
                    let from = events.len().saturating_sub(FAILURE_DUMP_EVENTS);
                    events[from..].to_vec()
                } else {
                    recent.into_iter().collect()
                };
                return Err(ClusterError::Geometry {
                    step,
                    source,
                    recent,
                });
            }
        };
        if next_mark < marks.len() && marks[next_mark] == step {
            checkpoints.push(cluster.checkpoint());
            next_mark += 1;
        }
        if config.record_events {
            events.push(ev);
        } else {
            if recent.len() == FAILURE_DUMP_EVENTS {
                recent.pop_front();
            }
            recent.push_back(ev);
        }
    }

    let record = RunRecord {
        seed: config.seed,
        mode: config.mode,
        n_steps: config.n_steps,
        initial: config.initial.clone(),
        events,
        checkpoints,
        final_ring: cluster.hull.ring().to_vec(),
        parents: cluster.discs.parents(),
    };
    Ok((record, cluster))
}

/// Rebuild a cluster by re-applying the recorded events.
pub fn replay(record: &RunRecord) -> Result<Cluster, ClusterError> {
    let mut cluster = Cluster::new(&record.initial).map_err(ClusterError::Initial)?;
    for ev in &record.events {
        cluster
            .apply(ev.parent, ev.phi)
            .map_err(|source| ClusterError::Geometry {
                step: ev.step,
                source,
                recent: Vec::new(),
            })?;
    }
    Ok(cluster)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Triangle,
    Quadrangle,
    Other,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeClass {
    pub class: Shape,
    pub macroscopic_edges: usize,
    /// Edge length over hull diameter, per ring edge.
    pub edge_fractions: Vec<f64>,
}

/// Count macroscopic hull edges (length ≥ `f_macro` × diameter) and classify the outline.
pub fn classify_shape(vertices: &[Vec2], f_macro: f64) -> ShapeClass {
    let k = vertices.len();
    if k < 3 {
        return ShapeClass {
            class: Shape::Other,
            macroscopic_edges: 0,
            edge_fractions: Vec::new(),
        };
    }
    let diameter = max_pairwise_distance(vertices) + 1.0;
    let edge_fractions: Vec<f64> = (0..k)
        .map(|i| vertices[i].dist(vertices[(i + 1) % k]) / diameter)
        .collect();
    let macroscopic_edges = edge_fractions.iter().filter(|&&f| f >= f_macro).count();
    let class = match macroscopic_edges {
        3 => Shape::Triangle,
        4 => Shape::Quadrangle,
        _ => Shape::Other,
    };
    ShapeClass {
        class,
        macroscopic_edges,
        edge_fractions,
    }
}

pub fn classify_hull(hull: &HullState, f_macro: f64) -> ShapeClass {
    classify_shape(hull.vertices(), f_macro)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Least-squares fit of diameter against step over the second half of the checkpoints.
pub fn diameter_growth_rate(record: &RunRecord) -> Result<GrowthFit, StatsError> {
    let cps = &record.checkpoints;
    if cps.len() < 10 {
        return Err(StatsError::InsufficientData {
            needed: 10,
            got: cps.len(),
        });
    }
    let half = &cps[cps.len() / 2..];
    let xs: Vec<f64> = half.iter().map(|c| c.step as f64).collect();
    let ys: Vec<f64> = half.iter().map(|c| c.diameter).collect();
    let fit = linear_fit(&xs, &ys)?;
    Ok(GrowthFit {
        slope: fit.slope,
        intercept: fit.intercept,
        r2: fit.r2,
    })
}

/// Turning angles at the corners between consecutive macroscopic edges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CornerAngles {
    pub step: u64,
    pub class: Shape,
    /// Exterior angle of each macroscopic corner; interior angle is `π - exterior`.
    pub exterior: Vec<f64>,
}

impl CornerAngles {
    pub fn interior(&self) -> Vec<f64> {
        self.exterior.iter().map(|e| PI - e).collect()
    }

    pub fn max_interior(&self) -> Option<f64> {
        self.interior().into_iter().reduce(f64::max)
    }
}

/// Exterior angle of each macroscopic corner of an outline. The small residual edges at a
/// rounded corner are absorbed into that corner.
pub fn corner_angles(vertices: &[Vec2], f_macro: f64) -> Vec<f64> {
    let shape = classify_shape(vertices, f_macro);
    let k = vertices.len();
    let macro_edges: Vec<usize> = (0..shape.edge_fractions.len())
        .filter(|&i| shape.edge_fractions[i] >= f_macro)
        .collect();
    if macro_edges.len() < 2 {
        return Vec::new();
    }
    let dir = |i: usize| (vertices[(i + 1) % k] - vertices[i]).angle();
    let m = macro_edges.len();
    (0..m)
        .map(|j| {
            let a = macro_edges[j];
            let b = macro_edges[(j + 1) % m];
            let turn = wrap_angle(dir(b) - dir(a));
            if turn == 0.0 {
                TAU
            } else {
                turn
            }
        })
        .collect()
}

pub fn vertex_angle_series(record: &RunRecord, f_macro: f64) -> Vec<CornerAngles> {
    record
        .checkpoints
        .iter()
        .map(|c| CornerAngles {
            step: c.step,
            class: classify_shape(&c.vertices, f_macro).class,
            exterior: corner_angles(&c.vertices, f_macro),
        })
        .collect()
}
