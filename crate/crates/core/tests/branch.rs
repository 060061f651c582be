use std::collections::{BTreeMap, HashSet};
use std::f64::consts::PI;

use ballistic_core::branch::{
    binned_ccdf_exponent, extract_branches, extract_branches_from_tree, fit_power_law,
    s_min_sensitivity,
};
use ballistic_core::cluster::{run_cluster, ClusterConfig, GrowthMode};
use ballistic_core::rng::seeded_rng;
use proptest::prelude::*;
use rand::Rng;

/// Sizes `round(x)` with `x` continuous Pareto of density exponent `alpha` above
/// `s_min - 1/2`.
fn discrete_pareto(alpha: f64, s_min: u64, n: usize, seed: u64) -> Vec<u64> {
    let mut rng = seeded_rng(seed);
    let x_min = s_min as f64 - 0.5;
    (0..n)
        .map(|_| {
            let u: f64 = 1.0 - rng.random::<f64>();
            (x_min * u.powf(-1.0 / (alpha - 1.0))).round() as u64
        })
        .collect()
}

#[test]
fn mle_recovers_synthetic_exponents() {
    for (k, &alpha) in [1.5, 2.0, 2.5, 3.0].iter().enumerate() {
        let sizes = discrete_pareto(alpha, 5, 10_000, 100 + k as u64);
        let fit = fit_power_law(&sizes, 5).unwrap();
        assert_eq!(fit.n_tail, 10_000);
        assert!((fit.alpha_hat - alpha).abs() < 0.1, "alpha {alpha}: {}", fit.alpha_hat);
        assert!((fit.ccdf_exponent - (alpha - 1.0)).abs() < 0.1);
        assert!(fit.ks_distance < 0.03, "ks {}", fit.ks_distance);
    }
}

#[test]
fn binned_slope_agrees_with_mle() {
    let sizes = discrete_pareto(2.5, 5, 20_000, 9);
    let fit = fit_power_law(&sizes, 5).unwrap();
    let slope = binned_ccdf_exponent(&sizes, 5).unwrap();
    assert!((slope - fit.alpha_hat).abs() < 0.15, "{slope} vs {}", fit.alpha_hat);
}

#[test]
fn sensitivity_is_stable_for_exact_power_laws() {
    let sizes = discrete_pareto(2.0, 5, 50_000, 4);
    let fits = s_min_sensitivity(&sizes, &[5, 10, 20, 40]);
    assert_eq!(fits.len(), 4);
    for f in fits {
        assert!((f.alpha_hat - 2.0).abs() < 0.1, "s_min {}: {}", f.s_min, f.alpha_hat);
    }
}

#[test]
fn short_tails_rejected() {
    assert!(fit_power_law(&[5; 100], 5).is_err());
    assert!(fit_power_law(&[1, 2, 3, 7, 9], 5).is_err());
}

/// Reference decomposition: backbone = ancestors of the extremal set, branches found by
/// walking each off-backbone disc up to its first backbone ancestor.
fn reference(parents: &[Option<usize>], extremal: &[usize]) -> (HashSet<usize>, BTreeMap<usize, u64>) {
    let mut backbone = HashSet::new();
    for &e in extremal {
        let mut c = Some(e);
        while let Some(i) = c {
            backbone.insert(i);
            c = parents[i];
        }
    }
    let mut sizes = BTreeMap::new();
    for id in 0..parents.len() {
        if backbone.contains(&id) {
            continue;
        }
        let mut root = id;
        while let Some(p) = parents[root] {
            if backbone.contains(&p) {
                break;
            }
            root = p;
        }
        *sizes.entry(root).or_insert(0) += 1;
    }
    (backbone, sizes)
}

proptest! {
    #[test]
    fn decomposition_matches_reference(
        links in prop::collection::vec(any::<prop::sample::Index>(), 1..300),
        picks in prop::collection::vec(any::<prop::sample::Index>(), 1..6),
    ) {
        let mut parents = vec![None];
        for (i, l) in links.iter().enumerate() {
            parents.push(Some(l.index(i + 1)));
        }
        let n = parents.len();
        let extremal: Vec<usize> = picks.iter().map(|p| p.index(n)).collect();
        let d = extract_branches_from_tree(&parents, &extremal, |id| id as u64);
        let (backbone, sizes) = reference(&parents, &extremal);
        prop_assert!(d.partition_holds());
        prop_assert_eq!(d.backbone.iter().copied().collect::<HashSet<_>>(), backbone);
        let got: BTreeMap<usize, u64> = d.branches.iter().map(|b| (b.root, b.size)).collect();
        prop_assert_eq!(got, sizes);
    }
}

#[test]
fn partition_holds_on_real_runs() {
    for seed in 0..5 {
        let (record, _) = run_cluster(&ClusterConfig::new(20_000, seed)).unwrap();
        let d = extract_branches(&record);
        assert!(d.partition_holds());
        assert_eq!(d.total_discs, 20_001);
        for b in &d.branches {
            assert_eq!(b.birth, b.root as u64);
        }
    }
    let cfg = ClusterConfig::new(20_000, 3).with_mode(GrowthMode::Wedge { theta: 0.35 * PI });
    let (record, _) = run_cluster(&cfg).unwrap();
    assert!(extract_branches(&record).partition_holds());
}
