//! Directional growth at a single hull vertex.
//!
//! Two extremal discs sit at the tip of a wedge whose flanking edges make angle `π/2 - θ`
//! with the growth axis. `(Z, Y)` is the vector from the left center to the right center and
//! `X = Y / Z` is the tangent of the inclination of the short edge between them. A new disc
//! is tangent to one of the two discs at an angle `α` from the growth axis; each disc owns
//! the directions of its exposed arc inside the wedge, so with `x = |X|` the right disc gets
//! `α ∈ [-atan x, θ]` and the left disc `α ∈ [atan x, θ]`, out of a total measure `2θ`.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{ParamError, QuadratureError, StatsError};
use crate::quadrature::{integrate, Tolerance};
use crate::rng::map_replicas;
use crate::stats::{fit_tail, survival_curve, SurvivalSample, TailFit, TailFitOptions};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VertexChainState {
    /// Vertical offset of the right center above the left one.
    pub y: f64,
    /// Horizontal gap between the two centers.
    pub z: f64,
    pub n: u64,
    pub theta: f64,
}

impl VertexChainState {
    /// A fresh fork: two discs at horizontal distance `z0`.
    pub fn new(theta: f64, z0: f64) -> Self {
        VertexChainState {
            y: 0.0,
            z: z0,
            n: 0,
            theta,
        }
    }

    #[inline]
    pub fn x(&self) -> f64 {
        self.y / self.z
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// The disc that is higher (or level); after reflection this is the right disc.
    Leading,
    Trailing,
}

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum ChainError {
    /// `atan|X| >= θ`: the lower disc has no exposed arc left inside the wedge.
    #[error("arc collapse: atan|X| = {} >= theta = {theta}", x.abs().atan())]
    ArcCollapse { x: f64, theta: f64 },
}

/// Place a disc on `side` at angle `alpha`. Works in the reflected frame `Y >= 0` and maps
/// back, so the two sides are measured the same way for either sign of `Y`.
#[inline]
pub fn apply_attachment(s: &VertexChainState, side: Side, alpha: f64) -> VertexChainState {
    let sign = if s.y < 0.0 { -1.0 } else { 1.0 };
    let (sin_a, cos_a) = alpha.sin_cos();
    let y = sign * s.y
        + match side {
            Side::Leading => cos_a,
            Side::Trailing => -cos_a,
        };
    VertexChainState {
        y: sign * y,
        z: s.z + sin_a,
        n: s.n + 1,
        theta: s.theta,
    }
}

/// One step driven by a uniform `u ∈ [0, 1)`.
#[inline]
pub fn chain_step_from_uniform(
    s: &VertexChainState,
    u: f64,
) -> Result<VertexChainState, ChainError> {
    let x = s.x().abs();
    let b = x.atan();
    let theta = s.theta;
    if b >= theta {
        return Err(ChainError::ArcCollapse { x: s.x(), theta });
    }
    let w = 2.0 * theta * u;
    let lead = theta + b;
    Ok(if w < lead {
        apply_attachment(s, Side::Leading, w - b)
    } else {
        apply_attachment(s, Side::Trailing, b + (w - lead))
    })
}

pub fn chain_step<R: Rng + ?Sized>(
    s: &VertexChainState,
    rng: &mut R,
) -> Result<VertexChainState, ChainError> {
    chain_step_from_uniform(s, rng.random::<f64>())
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MomentError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Exact one-step moments of `ΔX` given `X = x ≥ 0`, `Z = z`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OneStepMoments {
    pub drift: f64,
    pub second_moment: f64,
    pub variance: f64,
    /// `z * drift`
    pub scaled_drift: f64,
    /// `z² * variance`
    pub scaled_variance: f64,
}

fn moment_tolerance() -> Tolerance {
    Tolerance {
        abs: 1e-12,
        rel: 1e-13,
        max_intervals: 2000,
    }
}

fn check_theta(theta: f64) -> Result<(), ParamError> {
    if theta > 0.0 && theta <= FRAC_PI_2 {
        Ok(())
    } else {
        Err(ParamError::domain("theta", theta, "(0, π/2]"))
    }
}

/// One-step moments by adaptive quadrature of the exact increment over both arcs.
///
/// The integrands are scaled by `z` (drift) and `z²` (second moment), and on the common range
/// `[atan x, θ]` the two sides are summed before integrating, so the result keeps its
/// relative accuracy when `x` or `1/z` is tiny.
pub fn one_step_moments_quadrature(
    x: f64,
    z: f64,
    theta: f64,
) -> Result<OneStepMoments, MomentError> {
    check_theta(theta)?;
    if !(x >= 0.0) {
        return Err(ParamError::domain("x", x, "x >= 0").into());
    }
    if !(z > 1.0) {
        return Err(ParamError::domain("z", z, "z > 1").into());
    }
    let b = x.atan();
    if b >= theta {
        return Err(ParamError::domain("x", x, "atan(x) < theta").into());
    }
    let tol = moment_tolerance();
    let norm = 1.0 / (2.0 * theta);

    // z * (increment) on each side: (±cos α - x sin α) / (1 + sin α / z)
    let lead = |a: f64| {
        let (s, c) = a.sin_cos();
        (c - x * s) / (1.0 + s / z)
    };
    let trail = |a: f64| {
        let (s, c) = a.sin_cos();
        -(c + x * s) / (1.0 + s / z)
    };

    let lead_only = integrate(lead, -b, b, tol)?.value;
    let both = integrate(|a| lead(a) + trail(a), b, theta, tol)?.value;
    let scaled_drift = norm * (lead_only + both);

    let lead_sq = integrate(|a| lead(a).powi(2), -b, theta, tol)?.value;
    let trail_sq = integrate(|a| trail(a).powi(2), b, theta, tol)?.value;
    let scaled_second = norm * (lead_sq + trail_sq);

    let scaled_variance = scaled_second - scaled_drift * scaled_drift;
    Ok(OneStepMoments {
        drift: scaled_drift / z,
        second_moment: scaled_second / (z * z),
        variance: scaled_variance / (z * z),
        scaled_drift,
        scaled_variance,
    })
}

/// `E[ΔZ | X = x]` by quadrature.
pub fn dz_mean_quadrature(x: f64, theta: f64) -> Result<f64, MomentError> {
    check_theta(theta)?;
    let b = x.abs().atan();
    if b >= theta {
        return Err(ParamError::domain("x", x, "atan|x| < theta").into());
    }
    let tol = moment_tolerance();
    let lead = integrate(f64::sin, -b, theta, tol)?.value;
    let trail = integrate(f64::sin, b, theta, tol)?.value;
    Ok((lead + trail) / (2.0 * theta))
}

/// Large-`z` limits of the one-step moments and the diffusion parameters they imply.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticParams {
    pub theta: f64,
    /// `lim z E[ΔX] / x`
    pub drift_coef: f64,
    /// `lim z² Var[ΔX]` at `x = 0`
    pub var_coef_at_0: f64,
    /// `E[ΔZ]` at `x = 0`
    pub dz_mean: f64,
    pub mu: f64,
    pub sigma: f64,
}

impl AsymptoticParams {
    /// `lim z² Var[ΔX | X = x]`.
    pub fn var_coef(&self, x: f64) -> f64 {
        let t = self.theta;
        let (s, c) = t.sin_cos();
        let x2 = x * x;
        ((x2 + 1.0) * t * t - 2.0 * x2 * c * c - (x2 - 1.0) * t * s * c) / (2.0 * t * t)
    }

    /// `lim z E[ΔX | X = x]`.
    pub fn drift_limit(&self, x: f64) -> f64 {
        x * self.drift_coef
    }
}

pub fn asymptotic_params(theta: f64) -> Result<AsymptoticParams, ParamError> {
    check_theta(theta)?;
    let (s, c) = theta.sin_cos();
    let t2 = theta * theta;
    Ok(AsymptoticParams {
        theta,
        drift_coef: c / theta,
        var_coef_at_0: (t2 + theta * s * c) / (2.0 * t2),
        dz_mean: (1.0 - c) / theta,
        mu: c / (1.0 - c),
        sigma: ((t2 + theta * s * c) / 2.0).sqrt() / (1.0 - c),
    })
}

/// Tail exponent `μ(θ) = cos θ / (1 - cos θ)`.
pub fn mu_of_theta(theta: f64) -> f64 {
    let c = theta.cos();
    c / (1.0 - c)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeathCause {
    Threshold,
    ArcCollapse,
    Censored,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForkLifetimeSample {
    pub theta: f64,
    pub a: f64,
    #[serde(rename = "T")]
    pub t: u64,
    pub cause: DeathCause,
}

impl ForkLifetimeSample {
    pub fn survival(&self) -> SurvivalSample {
        SurvivalSample {
            t: self.t as f64,
            censored: self.cause == DeathCause::Censored,
        }
    }
}

pub const DEFAULT_FORK_THRESHOLD: f64 = 0.5;
pub const DEFAULT_FORK_CAP: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForkConfig {
    pub theta: f64,
    /// The fork dies when `|X|` reaches `a`.
    pub a: f64,
    pub z0: f64,
    pub step_cap: u64,
}

impl ForkConfig {
    pub fn new(theta: f64) -> Self {
        ForkConfig {
            theta,
            a: DEFAULT_FORK_THRESHOLD,
            z0: 1.0,
            step_cap: DEFAULT_FORK_CAP,
        }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if !(self.theta > 0.0 && self.theta < FRAC_PI_2) {
            return Err(ParamError::domain("theta", self.theta, "(0, π/2)"));
        }
        if !(self.a > 0.0 && self.a < self.theta.tan()) {
            return Err(ParamError::domain("a", self.a, "0 < a < tan(theta)"));
        }
        if !(self.z0 >= 1.0) {
            return Err(ParamError::domain("z0", self.z0, "z0 >= 1"));
        }
        if self.step_cap == 0 {
            return Err(ParamError::domain("step_cap", 0.0, "step_cap >= 1"));
        }
        Ok(())
    }
}

/// Run one fork from `(Y, Z) = (0, z0)` until `|X| >= a`, arc collapse, or the step cap.
pub fn fork_lifetime<R: Rng + ?Sized>(
    cfg: &ForkConfig,
    rng: &mut R,
) -> Result<ForkLifetimeSample, ParamError> {
    cfg.validate()?;
    let mut s = VertexChainState::new(cfg.theta, cfg.z0);
    let done = |t, cause| ForkLifetimeSample {
        theta: cfg.theta,
        a: cfg.a,
        t,
        cause,
    };
    for t in 1..=cfg.step_cap {
        s = match chain_step(&s, rng) {
            Ok(next) => next,
            Err(ChainError::ArcCollapse { .. }) => return Ok(done(t, DeathCause::ArcCollapse)),
        };
        if s.x().abs() >= cfg.a {
            return Ok(done(t, DeathCause::Threshold));
        }
    }
    Ok(done(cfg.step_cap, DeathCause::Censored))
}

/// Independent fork lifetimes, one stream per replica.
pub fn fork_lifetime_ensemble(
    cfg: &ForkConfig,
    replicas: usize,
    base_seed: u64,
) -> Result<Vec<ForkLifetimeSample>, ParamError> {
    cfg.validate()?;
    Ok(map_replicas(base_seed, replicas, |_, rng| {
        fork_lifetime(cfg, rng).expect("validated")
    }))
}

pub const MIN_LIFETIME_SAMPLES: usize = 1000;

/// `P(T > n)` on `grid`; censored lifetimes count as surviving to the cap.
pub fn lifetime_tail_curve(
    samples: &[ForkLifetimeSample],
    grid: &[f64],
) -> Result<Vec<(f64, f64)>, StatsError> {
    if samples.len() < MIN_LIFETIME_SAMPLES {
        return Err(StatsError::InsufficientData {
            needed: MIN_LIFETIME_SAMPLES,
            got: samples.len(),
        });
    }
    let s: Vec<SurvivalSample> = samples.iter().map(|s| s.survival()).collect();
    Ok(survival_curve(&s, grid))
}

pub fn lifetime_tail_fit(
    samples: &[ForkLifetimeSample],
    grid: &[f64],
    opts: TailFitOptions,
) -> Result<TailFit, StatsError> {
    let s: Vec<SurvivalSample> = samples.iter().map(|s| s.survival()).collect();
    fit_tail(&s, grid, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_rng;
    use std::f64::consts::PI;

    #[test]
    fn forced_right_attachment() {
        let s = VertexChainState {
            y: 0.0,
            z: 10.0,
            n: 0,
            theta: PI / 3.0,
        };
        let t = apply_attachment(&s, Side::Leading, PI / 3.0);
        assert!((t.y - 0.5).abs() < 1e-15);
        assert!((t.z - (10.0 + 3f64.sqrt() / 2.0)).abs() < 1e-14);
        assert_eq!(t.n, 1);
    }

    #[test]
    fn uniform_maps_onto_arcs() {
        let s = VertexChainState {
            y: 1.0,
            z: 10.0,
            n: 0,
            theta: PI / 3.0,
        };
        let b = 0.1f64.atan();
        // u = 0 is the lowest direction of the leading arc
        let t = chain_step_from_uniform(&s, 0.0).unwrap();
        assert!((t.z - (10.0 - b.sin())).abs() < 1e-14);
        // the split point between arcs sits at (θ + b) / 2θ
        let split = (PI / 3.0 + b) / (2.0 * PI / 3.0);
        let t = chain_step_from_uniform(&s, split).unwrap();
        assert!((t.y - (1.0 - b.cos())).abs() < 1e-12);
    }

    #[test]
    fn arc_collapse_detected() {
        let s = VertexChainState {
            y: 20.0,
            z: 10.0,
            n: 0,
            theta: PI / 3.0,
        };
        assert!(matches!(
            chain_step_from_uniform(&s, 0.5),
            Err(ChainError::ArcCollapse { .. })
        ));
    }

    #[test]
    fn mirrored_states_step_to_mirrored_states() {
        let mut rng = seeded_rng(4);
        for _ in 0..1000 {
            let y = rng.random::<f64>() * 5.0 - 2.5;
            let s = VertexChainState {
                y,
                z: 10.0,
                n: 0,
                theta: 1.1,
            };
            let m = VertexChainState { y: -y, ..s };
            let u = rng.random::<f64>();
            let a = chain_step_from_uniform(&s, u).unwrap();
            let b = chain_step_from_uniform(&m, u).unwrap();
            assert_eq!(a.y, -b.y);
            assert_eq!(a.z, b.z);
        }
    }

    #[test]
    fn z_step_bounded_below_by_lowest_arc_direction() {
        // the leading arc reaches down to -atan|X|, so Z can shrink by at most sin(atan|X|)
        let mut rng = seeded_rng(8);
        let mut s = VertexChainState::new(0.45 * PI, 1.0);
        let mut net = 0.0;
        for _ in 0..10_000 {
            let t = match chain_step(&s, &mut rng) {
                Ok(t) => t,
                Err(_) => break,
            };
            let floor = -(s.x().abs().atan()).sin();
            assert!(t.z - s.z >= floor - 1e-12);
            assert!(t.z > 0.0);
            net += t.z - s.z;
            s = t;
        }
        assert!(net > 0.0);
    }

    #[test]
    fn symmetric_drift_vanishes() {
        for &theta in &[0.3 * PI, PI / 3.0, 0.45 * PI] {
            let m = one_step_moments_quadrature(0.0, 50.0, theta).unwrap();
            assert!(m.drift.abs() < 1e-15);
        }
    }

    #[test]
    fn moment_domain_errors() {
        assert!(one_step_moments_quadrature(2.0, 10.0, 0.3 * PI).is_err());
        assert!(one_step_moments_quadrature(0.1, 0.5, 0.3 * PI).is_err());
        assert!(asymptotic_params(0.0).is_err());
        assert!(asymptotic_params(2.0).is_err());
    }

    #[test]
    fn critical_angle_has_unit_exponent() {
        let p = asymptotic_params(PI / 3.0).unwrap();
        assert!((p.mu - 1.0).abs() < 1e-12);
        let q = asymptotic_params(FRAC_PI_2).unwrap();
        assert!(q.drift_coef.abs() < 1e-16);
        assert!(q.mu.abs() < 1e-16);
    }

    #[test]
    fn var_coef_specializes_at_zero() {
        let mut rng = seeded_rng(20);
        for _ in 0..20 {
            let theta = rng.random::<f64>() * FRAC_PI_2 * 0.999 + 1e-3;
            let p = asymptotic_params(theta).unwrap();
            assert!((p.var_coef(0.0) - p.var_coef_at_0).abs() < 1e-14);
        }
    }

    #[test]
    fn fork_parameter_validation() {
        let mut rng = seeded_rng(1);
        let mut cfg = ForkConfig::new(0.4 * PI);
        cfg.a = 0.0;
        assert!(fork_lifetime(&cfg, &mut rng).is_err());
        cfg.a = 10.0;
        assert!(fork_lifetime(&cfg, &mut rng).is_err());
        cfg.a = 0.5;
        cfg.z0 = 0.5;
        assert!(fork_lifetime(&cfg, &mut rng).is_err());
    }

    #[test]
    fn censored_at_cap() {
        let mut rng = seeded_rng(1);
        let cfg = ForkConfig {
            step_cap: 3,
            ..ForkConfig::new(0.45 * PI)
        };
        let s = fork_lifetime(&cfg, &mut rng).unwrap();
        assert!(s.t >= 1 && s.t <= 3);
        if s.cause == DeathCause::Censored {
            assert_eq!(s.t, 3);
        }
    }

    #[test]
    fn tail_curve_needs_samples() {
        let one = [ForkLifetimeSample {
            theta: 1.0,
            a: 0.5,
            t: 5,
            cause: DeathCause::Threshold,
        }];
        assert!(matches!(
            lifetime_tail_curve(&one, &[1.0]),
            Err(StatsError::InsufficientData { .. })
        ));
        let many = vec![one[0]; 1000];
        let c = lifetime_tail_curve(&many, &[1.0, 2.0, 4.0, 8.0]).unwrap();
        assert_eq!(
            c.iter().map(|p| p.1).collect::<Vec<_>>(),
            vec![1.0, 1.0, 1.0, 0.0]
        );
    }
}
