//! Convex hull of equal-radius discs.
//!
//! Because all discs share radius 1/2, the hull of the discs is the convex polygon of their
//! centers dilated by a disc of radius 1/2. We therefore keep only the polygon of centers: a
//! counterclockwise ring of extremal disc ids. The boundary arc around vertex `i` spans the
//! outward normals between its incoming and outgoing edges, so its arc measure equals the
//! exterior angle of the polygon at that vertex, and attaching a tangent disc in direction
//! `phi` is insertion of the point `center + (cos phi, sin phi)`.
//!
//! Insertion walks from the parent vertex over the edges visible from the new point in both
//! directions and evicts the vertices in between. Every disc enters the ring once and leaves
//! it at most once, so insertion is amortized O(1) in the number of attachments.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::GeometryError;
use crate::geometry::{max_pairwise_distance, signed_distance, wrap_angle, Vec2, EPS_GEOM};

/// An attached particle. The radius is always [`crate::geometry::DISC_RADIUS`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Disc {
    pub id: usize,
    pub center: Vec2,
    pub birth: u64,
    /// `None` only for the discs of the initial cluster.
    pub parent: Option<usize>,
}

/// All discs of a cluster, indexed by id. Ids are dense and assigned in attachment order,
/// so a child always has a larger id than its parent.
#[derive(Clone, Debug, Default)]
pub struct DiscStore {
    discs: Vec<Disc>,
}

impl DiscStore {
    /// Initial cluster. Fails if two centers are closer than `1 - EPS_GEOM`.
    pub fn from_centers(centers: &[Vec2]) -> Result<Self, GeometryError> {
        if centers.is_empty() {
            return Err(GeometryError::EmptyInput);
        }
        check_disjoint(centers)?;
        let discs = centers
            .iter()
            .enumerate()
            .map(|(id, &center)| Disc {
                id,
                center,
                birth: 0,
                parent: None,
            })
            .collect();
        Ok(DiscStore { discs })
    }

    pub fn single() -> Self {
        DiscStore::from_centers(&[Vec2::ZERO]).expect("one disc cannot overlap")
    }

    fn push_child(&mut self, parent: usize, center: Vec2, birth: u64) -> usize {
        let id = self.discs.len();
        self.discs.push(Disc {
            id,
            center,
            birth,
            parent: Some(parent),
        });
        id
    }

    #[inline]
    pub fn get(&self, id: usize) -> &Disc {
        &self.discs[id]
    }

    #[inline]
    pub fn center(&self, id: usize) -> Vec2 {
        self.discs[id].center
    }

    pub fn len(&self) -> usize {
        self.discs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.discs.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Disc> {
        self.discs.iter()
    }

    pub fn centers(&self) -> Vec<Vec2> {
        self.discs.iter().map(|d| d.center).collect()
    }

    pub fn parents(&self) -> Vec<Option<usize>> {
        self.discs.iter().map(|d| d.parent).collect()
    }
}

fn check_disjoint(centers: &[Vec2]) -> Result<(), GeometryError> {
    for (i, p) in centers.iter().enumerate() {
        for (j, q) in centers.iter().enumerate().skip(i + 1) {
            let distance = p.dist(*q);
            if distance < 1.0 - EPS_GEOM {
                return Err(GeometryError::Overlap { i, j, distance });
            }
        }
    }
    Ok(())
}

/// Result of one attachment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttachmentOutcome {
    pub new_disc: usize,
    pub parent: usize,
    pub phi: f64,
    /// Disc ids that stopped being extremal, in ring order.
    pub evicted: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HullMetrics {
    /// Diameter of the disc hull: largest center distance plus one diameter.
    pub diameter: f64,
    pub extremal_count: usize,
    /// Edge `i` joins ring vertex `i` to vertex `i + 1`.
    pub edge_lengths: Vec<f64>,
    /// Arc measure per ring vertex.
    pub exterior_angles: Vec<f64>,
}

/// The polygon of extremal disc centers with its normal-cone bookkeeping.
#[derive(Clone, Debug, PartialEq)]
pub struct HullState {
    ring: Vec<usize>,
    pts: Vec<Vec2>,
    /// `out_normal[i]` is the direction of the outward normal of edge `i -> i+1`. Vertex `i`
    /// owns the directions `[out_normal[i-1], out_normal[i])`.
    out_normal: Vec<f64>,
}

impl HullState {
    /// Hull of an initial cluster.
    pub fn from_discs(discs: &DiscStore) -> Result<Self, GeometryError> {
        if discs.is_empty() {
            return Err(GeometryError::EmptyInput);
        }
        let centers = discs.centers();
        let ring = batch_hull(&centers);
        let pts = ring.iter().map(|&i| centers[i]).collect();
        Ok(HullState::from_ring(ring, pts))
    }

    fn from_ring(ring: Vec<usize>, pts: Vec<Vec2>) -> Self {
        let k = pts.len();
        let out_normal = if k == 1 {
            vec![0.0]
        } else {
            (0..k).map(|i| edge_normal(pts[i], pts[(i + 1) % k])).collect()
        };
        HullState {
            ring,
            pts,
            out_normal,
        }
    }

    /// Extremal disc ids, counterclockwise.
    pub fn ring(&self) -> &[usize] {
        &self.ring
    }

    /// Extremal disc centers, aligned with [`HullState::ring`].
    pub fn vertices(&self) -> &[Vec2] {
        &self.pts
    }

    pub fn len(&self) -> usize {
        self.ring.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ring.is_empty()
    }

    pub fn position_of(&self, id: usize) -> Option<usize> {
        self.ring.iter().position(|&r| r == id)
    }

    /// Arc measure of ring position `i`.
    #[inline]
    pub fn arc_measure(&self, i: usize) -> f64 {
        let k = self.ring.len();
        if k == 1 {
            return TAU;
        }
        wrap_angle(self.out_normal[i] - self.out_normal[(i + k - 1) % k])
    }

    /// Half-open interval `[lo, hi)` of outward directions owned by ring position `i`.
    pub fn interval(&self, i: usize) -> (f64, f64) {
        let k = self.ring.len();
        let lo = self.out_normal[(i + k - 1) % k];
        (lo, lo + self.arc_measure(i))
    }

    pub fn angle_sum(&self) -> f64 {
        (0..self.ring.len()).map(|i| self.arc_measure(i)).sum()
    }

    /// Ring position whose normal cone contains direction `phi`.
    pub fn vertex_for_direction(&self, phi: f64) -> usize {
        let k = self.ring.len();
        let mut best = (0, f64::INFINITY);
        for i in 0..k {
            let (lo, _) = self.interval(i);
            let w = self.arc_measure(i);
            let offset = wrap_angle(phi - lo);
            if offset < w {
                return i;
            }
            // rounding fallback: the cone whose end is nearest
            let miss = offset - w;
            if miss < best.1 {
                best = (i, miss);
            }
        }
        best.0
    }

    /// Choose an extremal disc with probability proportional to its arc measure and a
    /// direction uniformly on its arc. Returns `(disc id, phi)` with `phi` in the vertex's
    /// `[lo, hi)` interval.
    pub fn sample_attachment<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, f64) {
        let u = rng.random::<f64>() * TAU;
        let k = self.ring.len();
        let mut cum = 0.0;
        for i in 0..k {
            let w = self.arc_measure(i);
            if u < cum + w || i + 1 == k {
                let (lo, _) = self.interval(i);
                let phi = lo + (u - cum).min(w * (1.0 - f64::EPSILON)).max(0.0);
                return (self.ring[i], phi);
            }
            cum += w;
        }
        unreachable!("ring is never empty")
    }

    /// Like [`HullState::sample_attachment`] but with directions restricted to the window
    /// `center ± half_width`: the arc measure outside the window is ignored. This is growth
    /// at a vertex whose two flanking edges are fixed at infinity.
    pub fn sample_attachment_in<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        center: f64,
        half_width: f64,
    ) -> (usize, f64) {
        let phi = center + (2.0 * rng.random::<f64>() - 1.0) * half_width;
        let i = self.vertex_for_direction(phi);
        let (lo, _) = self.interval(i);
        let w = self.arc_measure(i);
        let phi = lo + wrap_angle(phi - lo).min(w * (1.0 - f64::EPSILON));
        (self.ring[i], phi)
    }

    /// Attach a new disc tangent to extremal disc `vertex_id` in outward direction `phi` and
    /// update the ring.
    pub fn attach(
        &mut self,
        discs: &mut DiscStore,
        vertex_id: usize,
        phi: f64,
        birth: u64,
    ) -> Result<AttachmentOutcome, GeometryError> {
        let pos = self.position_of(vertex_id).ok_or_else(|| {
            GeometryError::InternalInvariant(format!("disc {vertex_id} is not extremal"))
        })?;
        let q = self.pts[pos] + Vec2::from_angle(phi);
        let k = self.ring.len();

        if k <= 2 {
            let evicted = self.insert_small(q, discs.len())?;
            let new_disc = discs.push_child(vertex_id, q, birth);
            return Ok(AttachmentOutcome {
                new_disc,
                parent: vertex_id,
                phi,
                evicted,
            });
        }

        let pts = &self.pts;
        let visible = |i: usize, j: usize| signed_distance(pts[i], pts[j], q) <= EPS_GEOM;
        let mut hi = pos;
        let mut walked = 0;
        while visible(hi, (hi + 1) % k) {
            hi = (hi + 1) % k;
            walked += 1;
            if walked >= k {
                return Err(not_outside(q));
            }
        }
        let mut lo = pos;
        while visible((lo + k - 1) % k, lo) {
            lo = (lo + k - 1) % k;
            walked += 1;
            if walked >= k {
                return Err(not_outside(q));
            }
        }
        if lo == hi {
            return Err(not_outside(q));
        }

        let new_id = discs.push_child(vertex_id, q, birth);

        let mut evicted = Vec::new();
        let mut j = (lo + 1) % k;
        while j != hi {
            evicted.push(self.ring[j]);
            j = (j + 1) % k;
        }

        // rebuild as hi, hi+1, ..., lo, q
        let kept = (lo + k - hi) % k + 1;
        let mut ring = Vec::with_capacity(kept + 1);
        let mut new_pts = Vec::with_capacity(kept + 1);
        let mut out = Vec::with_capacity(kept + 1);
        let mut j = hi;
        for _ in 0..kept {
            ring.push(self.ring[j]);
            new_pts.push(self.pts[j]);
            out.push(self.out_normal[j]);
            j = (j + 1) % k;
        }
        let lo_pt = self.pts[lo];
        let hi_pt = self.pts[hi];
        *out.last_mut().expect("kept >= 2") = edge_normal(lo_pt, q);
        ring.push(new_id);
        new_pts.push(q);
        out.push(edge_normal(q, hi_pt));

        self.ring = ring;
        self.pts = new_pts;
        self.out_normal = out;

        Ok(AttachmentOutcome {
            new_disc: new_id,
            parent: vertex_id,
            phi,
            evicted,
        })
    }

    /// Insertion into a ring of one or two vertices. `new_id` is the id the new disc will get.
    fn insert_small(&mut self, q: Vec2, new_id: usize) -> Result<Vec<usize>, GeometryError> {
        let (ring, pts, evicted) = match self.ring.len() {
            1 => (
                vec![self.ring[0], new_id],
                vec![self.pts[0], q],
                Vec::new(),
            ),
            2 => {
                let (a, b) = (self.pts[0], self.pts[1]);
                let (ia, ib) = (self.ring[0], self.ring[1]);
                let d = signed_distance(a, b, q);
                if d > EPS_GEOM {
                    (vec![ia, ib, new_id], vec![a, b, q], Vec::new())
                } else if d < -EPS_GEOM {
                    (vec![ia, new_id, ib], vec![a, q, b], Vec::new())
                } else {
                    let dir = (b - a).normalized();
                    let tq = dir.dot(q - a);
                    let tb = dir.dot(b - a);
                    if tq < 0.0 {
                        (vec![new_id, ib], vec![q, b], vec![ia])
                    } else if tq > tb {
                        (vec![ia, new_id], vec![a, q], vec![ib])
                    } else {
                        return Err(not_outside(q));
                    }
                }
            }
            _ => unreachable!("insert_small handles rings of size 1 or 2"),
        };
        *self = HullState::from_ring(ring, pts);
        Ok(evicted)
    }

    pub fn metrics(&self) -> HullMetrics {
        let k = self.pts.len();
        let edge_lengths = if k < 2 {
            Vec::new()
        } else {
            (0..k).map(|i| self.pts[i].dist(self.pts[(i + 1) % k])).collect()
        };
        HullMetrics {
            diameter: max_pairwise_distance(&self.pts) + 1.0,
            extremal_count: k,
            edge_lengths,
            exterior_angles: (0..k).map(|i| self.arc_measure(i)).collect(),
        }
    }

    /// Strict convexity of the ring and the 2π angle sum.
    pub fn check_invariants(&self) -> Result<(), GeometryError> {
        let k = self.pts.len();
        let sum = self.angle_sum();
        if (sum - TAU).abs() > 1e-9 {
            return Err(GeometryError::InternalInvariant(format!(
                "arc measures sum to {sum}, expected 2π"
            )));
        }
        if k >= 3 {
            for i in 0..k {
                let a = self.pts[(i + k - 1) % k];
                let b = self.pts[i];
                let c = self.pts[(i + 1) % k];
                if (b - a).cross(c - b) <= 0.0 {
                    return Err(GeometryError::InternalInvariant(format!(
                        "ring is not strictly convex at position {i}"
                    )));
                }
            }
        }
        if k == 2 && (self.arc_measure(0) - PI).abs() > 1e-9 {
            return Err(GeometryError::InternalInvariant(
                "two-vertex ring must split the circle evenly".into(),
            ));
        }
        Ok(())
    }
}

fn not_outside(q: Vec2) -> GeometryError {
    GeometryError::InternalInvariant(format!(
        "new center ({}, {}) is not strictly outside the hull",
        q.x, q.y
    ))
}

#[inline]
fn edge_normal(a: Vec2, b: Vec2) -> f64 {
    (b - a).perp_cw().angle()
}

/// Hull of `centers` as a [`HullState`] whose ring ids are indices into `centers`.
pub fn build_hull(centers: &[Vec2]) -> Result<HullState, GeometryError> {
    if centers.is_empty() {
        return Err(GeometryError::EmptyInput);
    }
    check_disjoint(centers)?;
    let ring = batch_hull(centers);
    let pts = ring.iter().map(|&i| centers[i]).collect();
    Ok(HullState::from_ring(ring, pts))
}

/// Monotone-chain convex hull. Returns indices in counterclockwise order starting from the
/// lowest-leftmost point; points within `EPS_GEOM` of a hull edge line are dropped.
pub fn batch_hull(points: &[Vec2]) -> Vec<usize> {
    let n = points.len();
    if n <= 1 {
        return (0..n).collect();
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| {
        let (p, q) = (points[a], points[b]);
        p.x.total_cmp(&q.x).then(p.y.total_cmp(&q.y))
    });
    let keeps_turn =
        |h: &[usize], p: usize| signed_distance(points[h[h.len() - 2]], points[h[h.len() - 1]], points[p]) > EPS_GEOM;

    let mut lower: Vec<usize> = Vec::with_capacity(n);
    for &i in &idx {
        while lower.len() >= 2 && !keeps_turn(&lower, i) {
            lower.pop();
        }
        lower.push(i);
    }
    let mut upper: Vec<usize> = Vec::with_capacity(n);
    for &i in idx.iter().rev() {
        while upper.len() >= 2 && !keeps_turn(&upper, i) {
            upper.pop();
        }
        upper.push(i);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.len() == 2 && lower[0] == lower[1] {
        lower.pop();
    }
    lower
}
