use std::f64::consts::PI;

use ballistic_core::cluster::{
    diameter_growth_rate, replay, run_cluster, vertex_angle_series, ClusterConfig, ClusterError,
    GrowthMode, RunRecord, Shape,
};
use ballistic_core::geometry::{max_pairwise_distance, Vec2};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn replay_is_bit_exact(seed in any::<u64>(), n in 1u64..3000) {
        let (record, cluster) = run_cluster(&ClusterConfig::new(n, seed)).unwrap();
        let again = replay(&record).unwrap();
        prop_assert_eq!(again.hull(), cluster.hull());
        prop_assert_eq!(again.discs().centers(), cluster.discs().centers());
    }
}

#[test]
fn json_round_trip_replays() {
    let (record, cluster) = run_cluster(&ClusterConfig::new(1500, 77)).unwrap();
    let text = serde_json::to_string(&record).unwrap();
    let back: RunRecord = serde_json::from_str(&text).unwrap();
    assert_eq!(back, record);
    assert_eq!(replay(&back).unwrap().hull(), cluster.hull());
}

#[test]
fn seeds_give_different_clusters() {
    let (a, _) = run_cluster(&ClusterConfig::new(200, 1)).unwrap();
    let (b, _) = run_cluster(&ClusterConfig::new(200, 2)).unwrap();
    assert_ne!(a.events, b.events);
}

#[test]
fn first_step_touches_the_seed_disc() {
    let (record, cluster) = run_cluster(&ClusterConfig::new(1, 0)).unwrap();
    let ev = &record.events[0];
    assert_eq!((ev.new_disc, ev.parent), (1, 0));
    assert!(ev.evicted.is_empty());
    let c = cluster.discs().centers();
    assert!((c[1] - Vec2::from_angle(ev.phi)).norm() < 1e-15);
    assert_eq!(record.parents, vec![None, Some(0)]);
}

#[test]
fn checkpoint_diameter_is_center_span_plus_one() {
    let (record, cluster) = run_cluster(&ClusterConfig::new(4000, 12)).unwrap();
    let last = record.checkpoints.last().unwrap();
    assert_eq!(last.step, 4000);
    let span = max_pairwise_distance(&cluster.discs().centers());
    assert!((last.diameter - (span + 1.0)).abs() < 1e-9);
    assert!(record
        .checkpoints
        .windows(2)
        .all(|w| w[0].diameter <= w[1].diameter + 1e-12));
}

#[test]
fn diameter_grows_linearly() {
    let (record, _) = run_cluster(&ClusterConfig::new(20_000, 3)).unwrap();
    let fit = diameter_growth_rate(&record).unwrap();
    assert!(fit.slope > 0.0);
    assert!(fit.r2 > 0.95, "r2 = {}", fit.r2);
}

#[test]
fn wedge_growth_moves_up() {
    let cfg = ClusterConfig::new(5000, 4).with_mode(GrowthMode::Wedge { theta: 0.35 * PI });
    let (_, cluster) = run_cluster(&cfg).unwrap();
    let top = cluster
        .discs()
        .centers()
        .iter()
        .map(|c| c.y)
        .fold(f64::MIN, f64::max);
    // every attachment direction has a positive vertical component
    assert!(top > 500.0);
    assert!(cluster.discs().centers().iter().all(|c| c.y >= -1e-12));
}

#[test]
fn bad_configs_rejected() {
    assert!(matches!(run_cluster(&ClusterConfig::new(0, 1)), Err(ClusterError::NoSteps)));
    let wide = ClusterConfig::new(10, 1).with_mode(GrowthMode::Wedge { theta: 2.0 });
    assert!(matches!(run_cluster(&wide), Err(ClusterError::Mode(_))));
    let mut overlap = ClusterConfig::new(10, 1);
    overlap.initial = vec![Vec2::ZERO, Vec2::new(0.3, 0.0)];
    assert!(matches!(run_cluster(&overlap), Err(ClusterError::Initial(_))));
}

#[test]
fn corner_series_sums_to_full_turn() {
    let (record, _) = run_cluster(&ClusterConfig::new(20_000, 9)).unwrap();
    for c in vertex_angle_series(&record, 0.2) {
        if matches!(c.class, Shape::Triangle | Shape::Quadrangle) {
            let total: f64 = c.exterior.iter().sum();
            assert!((total - 2.0 * PI).abs() < 1e-9, "step {}: {total}", c.step);
        }
    }
}
