//! Side branches of the aggregation tree and power-law fits of their sizes.
//!
//! The backbone is the set of ancestors (inclusive) of the final extremal discs. Every
//! maximal subtree hanging off the backbone is one side branch.

use serde::{Deserialize, Serialize};

use crate::cluster::RunRecord;
use crate::error::StatsError;
use crate::stats::linear_fit;

pub const DEFAULT_S_MIN: u64 = 5;
pub const MIN_TAIL: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchRecord {
    /// First disc off the backbone.
    pub root: usize,
    pub birth: u64,
    pub size: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchDecomposition {
    pub backbone: Vec<usize>,
    pub branches: Vec<BranchRecord>,
    pub total_discs: usize,
}

impl BranchDecomposition {
    pub fn sizes(&self) -> Vec<u64> {
        self.branches.iter().map(|b| b.size).collect()
    }

    /// `Σ sizes + |backbone| == total`.
    pub fn partition_holds(&self) -> bool {
        self.branches.iter().map(|b| b.size).sum::<u64>() + self.backbone.len() as u64
            == self.total_discs as u64
    }
}

/// Decompose a parent forest. Parents must precede children in id order.
pub fn extract_branches_from_tree(
    parents: &[Option<usize>],
    extremal: &[usize],
    birth: impl Fn(usize) -> u64,
) -> BranchDecomposition {
    let n = parents.len();
    let mut on_backbone = vec![false; n];
    for &e in extremal {
        let mut cur = Some(e);
        while let Some(c) = cur {
            if on_backbone[c] {
                break;
            }
            on_backbone[c] = true;
            cur = parents[c];
        }
    }
    let mut size = vec![1u64; n];
    for id in (0..n).rev() {
        if let Some(p) = parents[id] {
            debug_assert!(p < id, "parent ids must precede children");
            size[p] += size[id];
        }
    }
    let branches = (0..n)
        .filter(|&id| !on_backbone[id])
        .filter(|&id| parents[id].is_none_or(|p| on_backbone[p]))
        .map(|id| BranchRecord {
            root: id,
            birth: birth(id),
            size: size[id],
        })
        .collect();
    BranchDecomposition {
        backbone: (0..n).filter(|&id| on_backbone[id]).collect(),
        branches,
        total_discs: n,
    }
}

/// Branches of a finished run. Disc `id` is born at step `id - n_initial + 1`.
pub fn extract_branches(record: &RunRecord) -> BranchDecomposition {
    let n0 = record.initial.len();
    extract_branches_from_tree(&record.parents, &record.final_ring, |id| {
        (id + 1).saturating_sub(n0) as u64
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    /// Exponent of the size distribution, `P(S = s) ∝ s^{-alpha}`.
    pub alpha_hat: f64,
    /// `alpha_hat - 1`, the decay exponent of `P(S ≥ s)`.
    pub ccdf_exponent: f64,
    /// Standard error `(alpha_hat - 1) / sqrt(n_tail)`.
    pub stderr: f64,
    pub s_min: u64,
    pub n_tail: usize,
    /// Largest gap between the empirical and fitted tail distribution functions.
    pub ks_distance: f64,
}

/// Fitted `P(S ≥ s | S ≥ s_min)` under the continuity-corrected power law.
fn fitted_ccdf(s: u64, s_min: u64, alpha: f64) -> f64 {
    ((s as f64 - 0.5) / (s_min as f64 - 0.5)).powf(1.0 - alpha)
}

/// Discrete maximum-likelihood exponent `1 + n / Σ ln(s_i / (s_min - 1/2))` over sizes
/// `≥ s_min`.
pub fn fit_power_law(sizes: &[u64], s_min: u64) -> Result<PowerLawFit, StatsError> {
    let s_min = s_min.max(1);
    let mut tail: Vec<u64> = sizes.iter().copied().filter(|&s| s >= s_min).collect();
    let n_tail = tail.len();
    tail.sort_unstable();
    if n_tail < MIN_TAIL || tail[0] == tail[n_tail - 1] {
        return Err(StatsError::InsufficientTail {
            n_tail,
            needed: MIN_TAIL,
        });
    }
    let shift = s_min as f64 - 0.5;
    let log_sum: f64 = tail.iter().map(|&s| (s as f64 / shift).ln()).sum();
    let alpha = 1.0 + n_tail as f64 / log_sum;

    // both tail functions are step functions on the integers, so comparing at each distinct
    // observed size (and just past the largest) gives the supremum
    let n = n_tail as f64;
    let mut ks: f64 = 0.0;
    let mut i = 0;
    while i < n_tail {
        let s = tail[i];
        let empirical = (n_tail - i) as f64 / n;
        ks = ks.max((empirical - fitted_ccdf(s, s_min, alpha)).abs());
        let mut j = i;
        while j < n_tail && tail[j] == s {
            j += 1;
        }
        let next_empirical = (n_tail - j) as f64 / n;
        ks = ks.max((next_empirical - fitted_ccdf(s + 1, s_min, alpha)).abs());
        i = j;
    }
    Ok(PowerLawFit {
        alpha_hat: alpha,
        ccdf_exponent: alpha - 1.0,
        stderr: (alpha - 1.0) / n.sqrt(),
        s_min,
        n_tail,
        ks_distance: ks,
    })
}

/// Fits at several cutoffs; cutoffs with too small a tail are skipped.
pub fn s_min_sensitivity(sizes: &[u64], cutoffs: &[u64]) -> Vec<PowerLawFit> {
    cutoffs
        .iter()
        .filter_map(|&c| fit_power_law(sizes, c).ok())
        .collect()
}

/// Empirical `P(S ≥ s)` at every distinct size.
pub fn ccdf(sizes: &[u64]) -> Vec<(u64, f64)> {
    let mut v = sizes.to_vec();
    v.sort_unstable();
    let n = v.len() as f64;
    let mut out = Vec::new();
    let mut i = 0;
    while i < v.len() {
        out.push((v[i], (v.len() - i) as f64 / n));
        let s = v[i];
        while i < v.len() && v[i] == s {
            i += 1;
        }
    }
    out
}

/// Least-squares estimate of the density exponent from the log-log slope of the tail CCDF,
/// sampled at logarithmically spaced sizes (4 per octave). Kept as a cross-check on the MLE.
pub fn binned_ccdf_exponent(sizes: &[u64], s_min: u64) -> Result<f64, StatsError> {
    let tail: Vec<u64> = sizes.iter().copied().filter(|&s| s >= s_min).collect();
    if tail.len() < MIN_TAIL {
        return Err(StatsError::InsufficientTail {
            n_tail: tail.len(),
            needed: MIN_TAIL,
        });
    }
    let n = tail.len() as f64;
    let max = *tail.iter().max().expect("non-empty");
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut edge = s_min as f64;
    let mut last = 0u64;
    while edge <= max as f64 {
        let s = edge.round() as u64;
        if s != last {
            let count = tail.iter().filter(|&&v| v >= s).count();
            if count >= 10 {
                xs.push((s as f64 - 0.5).ln());
                ys.push((count as f64 / n).ln());
            }
            last = s;
        }
        edge *= 2f64.powf(0.25);
    }
    if xs.len() < 3 {
        return Err(StatsError::InsufficientTail {
            n_tail: tail.len(),
            needed: MIN_TAIL,
        });
    }
    Ok(1.0 - linear_fit(&xs, &ys)?.slope)
}
