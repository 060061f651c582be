use std::collections::HashSet;
use std::f64::consts::{PI, TAU};

use ballistic_core::cluster::{run_cluster, ClusterConfig};
use ballistic_core::geometry::Vec2;
use ballistic_core::hull::{batch_hull, build_hull, DiscStore, HullState};
use ballistic_core::rng::seeded_rng;
use ballistic_core::stats::ks_distance;
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Exact hull vertices of integer points: a point is a vertex unless it lies in a closed
/// triangle or on a closed segment spanned by other points.
fn exact_vertices(p: &[(i64, i64)]) -> HashSet<usize> {
    let cross = |o: (i64, i64), a: (i64, i64), b: (i64, i64)| -> i128 {
        (a.0 - o.0) as i128 * (b.1 - o.1) as i128 - (a.1 - o.1) as i128 * (b.0 - o.0) as i128
    };
    let on_segment = |a: (i64, i64), b: (i64, i64), q: (i64, i64)| {
        cross(a, b, q) == 0
            && q.0 >= a.0.min(b.0)
            && q.0 <= a.0.max(b.0)
            && q.1 >= a.1.min(b.1)
            && q.1 <= a.1.max(b.1)
    };
    let in_triangle = |a, b, c, q| {
        let (d1, d2, d3) = (cross(a, b, q), cross(b, c, q), cross(c, a, q));
        let neg = d1 < 0 || d2 < 0 || d3 < 0;
        let pos = d1 > 0 || d2 > 0 || d3 > 0;
        !(neg && pos)
    };
    let n = p.len();
    (0..n)
        .filter(|&q| {
            let others: Vec<usize> = (0..n).filter(|&i| i != q).collect();
            for (x, &i) in others.iter().enumerate() {
                for (y, &j) in others.iter().enumerate().skip(x + 1) {
                    if on_segment(p[i], p[j], p[q]) {
                        return false;
                    }
                    for &k in &others[y + 1..] {
                        if cross(p[i], p[j], p[k]) != 0 && in_triangle(p[i], p[j], p[k], p[q]) {
                            return false;
                        }
                    }
                }
            }
            true
        })
        .collect()
}

fn ring_positions(hull: &HullState, centers: &[Vec2]) -> HashSet<usize> {
    hull.vertices()
        .iter()
        .map(|v| centers.iter().position(|c| c == v).unwrap())
        .collect()
}

#[test]
fn near_collinear_middle_center_is_dropped() {
    let centers = [Vec2::new(0.0, 0.0), Vec2::new(2.0, 0.0), Vec2::new(1.0, 1e-15)];
    let hull = build_hull(&centers).unwrap();
    assert_eq!(ring_positions(&hull, &centers), HashSet::from([0, 1]));
    // the same configuration in exact arithmetic, with the perturbation rounded away
    assert_eq!(exact_vertices(&[(0, 0), (2, 0), (1, 0)]), HashSet::from([0, 1]));
    assert!((hull.angle_sum() - TAU).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn build_hull_matches_exact_integer_oracle(
        raw in prop::collection::hash_set((-6i64..=6, -6i64..=6), 1..10)
    ) {
        // distinct integer points are at least one diameter apart
        let pts: Vec<(i64, i64)> = raw.into_iter().collect();
        let centers: Vec<Vec2> = pts.iter().map(|&(x, y)| Vec2::new(x as f64, y as f64)).collect();
        let hull = build_hull(&centers).unwrap();
        prop_assert_eq!(ring_positions(&hull, &centers), exact_vertices(&pts));
        prop_assert!((hull.angle_sum() - TAU).abs() < 1e-9);
        hull.check_invariants().unwrap();
    }

    #[test]
    fn incremental_ring_equals_batch_hull(seed in any::<u64>(), n in 1u64..2000) {
        let (record, cluster) = run_cluster(&ClusterConfig::new(n, seed)).unwrap();
        let centers = cluster.discs().centers();
        let batch: HashSet<usize> = batch_hull(&centers).into_iter().collect();
        let ring: HashSet<usize> = cluster.hull().ring().iter().copied().collect();
        prop_assert_eq!(ring, batch);
        prop_assert_eq!(record.final_ring.len(), cluster.hull().len());
    }
}

#[test]
fn angle_sum_and_convexity_after_every_attachment() {
    let mut cfg = ClusterConfig::new(5000, 17);
    cfg.audit = true;
    run_cluster(&cfg).unwrap();
}

#[test]
fn discs_never_overlap() {
    let (_, cluster) = run_cluster(&ClusterConfig::new(1000, 5)).unwrap();
    let c = cluster.discs().centers();
    for i in 0..c.len() {
        for j in i + 1..c.len() {
            assert!(c[i].dist(c[j]) >= 1.0 - 1e-9, "discs {i} and {j} overlap");
        }
    }
    for d in cluster.discs().iter() {
        if let Some(p) = d.parent {
            assert!((d.center.dist(c[p]) - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn evictions_are_final_and_bounded_by_insertions() {
    let (record, _) = run_cluster(&ClusterConfig::new(20_000, 8)).unwrap();
    let mut gone = HashSet::new();
    let mut total = 0usize;
    for ev in &record.events {
        assert!(!gone.contains(&ev.parent), "evicted disc {} reused", ev.parent);
        for &e in &ev.evicted {
            assert!(gone.insert(e), "disc {e} evicted twice");
            total += 1;
        }
    }
    assert!(total <= record.events.len());
}

#[test]
fn two_disc_hull_splits_draws_evenly() {
    let hull = build_hull(&[Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)]).unwrap();
    let mut rng = seeded_rng(21);
    let n = 100_000;
    let first = hull.ring()[0];
    let hits = (0..n).filter(|_| hull.sample_attachment(&mut rng).0 == first).count() as f64;
    let sd = (n as f64 * 0.25).sqrt();
    assert!((hits - n as f64 / 2.0).abs() < 3.0 * sd);
}

#[test]
fn equilateral_hull_samples_uniformly_per_vertex() {
    let h = 3f64.sqrt() / 2.0;
    let centers = [Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.5, h)];
    let hull = build_hull(&centers).unwrap();
    let mut rng = seeded_rng(4);
    let mut phis: Vec<Vec<f64>> = vec![Vec::new(); 3];
    for _ in 0..60_000 {
        let (id, phi) = hull.sample_attachment(&mut rng);
        let i = hull.position_of(id).unwrap();
        let (lo, hi) = hull.interval(i);
        assert!(phi >= lo && phi < hi);
        phis[i].push((phi - lo) / (hi - lo));
    }
    for (i, p) in phis.iter().enumerate() {
        assert!((hull.arc_measure(i) - 2.0 * PI / 3.0).abs() < 1e-12);
        let frac = p.len() as f64 / 60_000.0;
        assert!((frac - 1.0 / 3.0).abs() < 3.0 * (2.0 / 9.0 / 60_000f64).sqrt());
        // critical value of the one-sample KS statistic at level 0.001
        let d = ks_distance(p, |u| u.clamp(0.0, 1.0));
        assert!(d < 1.95 / (p.len() as f64).sqrt(), "vertex {i}: D = {d}");
    }
}

#[test]
fn vertex_frequencies_follow_exterior_angles() {
    let centers = [
        Vec2::new(0.0, 0.0),
        Vec2::new(5.0, -1.0),
        Vec2::new(8.0, 3.0),
        Vec2::new(4.0, 7.0),
        Vec2::new(-2.0, 4.0),
    ];
    let hull = build_hull(&centers).unwrap();
    assert_eq!(hull.len(), 5);
    let n = 100_000;
    let mut counts = [0f64; 5];
    let mut rng = seeded_rng(99);
    for _ in 0..n {
        let (id, _) = hull.sample_attachment(&mut rng);
        counts[hull.position_of(id).unwrap()] += 1.0;
    }
    let chi2: f64 = (0..5)
        .map(|i| {
            let e = n as f64 * hull.arc_measure(i) / TAU;
            (counts[i] - e).powi(2) / e
        })
        .sum();
    let p = 1.0 - ChiSquared::new(4.0).unwrap().cdf(chi2);
    assert!(p > 0.001, "chi2 = {chi2}, p = {p}");
}

#[test]
fn wedge_draws_stay_inside_the_wedge() {
    let (_, cluster) = run_cluster(&ClusterConfig::new(3000, 2)).unwrap();
    let hull = cluster.hull();
    let mut rng = seeded_rng(8);
    for _ in 0..10_000 {
        let (id, phi) = hull.sample_attachment_in(&mut rng, PI / 2.0, 0.3);
        let (lo, hi) = hull.interval(hull.position_of(id).unwrap());
        assert!(phi >= lo && phi < hi);
        let off = (phi - PI / 2.0).rem_euclid(TAU);
        let off = off.min(TAU - off);
        assert!(off <= 0.3 + 1e-12);
    }
}

#[test]
fn extremal_counts_stay_small() {
    let seeds = 50;
    let small = (0..seeds)
        .filter(|&s| {
            let mut cfg = ClusterConfig::new(10_000, s);
            cfg.record_events = false;
            run_cluster(&cfg).unwrap().1.hull().len() <= 20
        })
        .count();
    assert!(small as f64 >= 0.95 * seeds as f64, "{small} of {seeds}");
}

#[test]
fn overlapping_initial_discs_rejected() {
    assert!(DiscStore::from_centers(&[Vec2::new(0.0, 0.0), Vec2::new(0.5, 0.0)]).is_err());
    assert!(build_hull(&[]).is_err());
}
