//! First passage of the time-inhomogeneous anti-Ornstein-Uhlenbeck diffusion
//!
//! ```text
//! dX_t = (σ / t) dW_t + (μ X_t / t) dt,    X_{t0} = 0,
//! ```
//!
//! out of `(-a, a)`. Two independent simulators are provided. The Euler scheme steps the SDE
//! on the geometric grid `t_k = t0 (1 + h)^k`. The bridge scheme uses the exact Gaussian
//! representation: with `s = ln(t / t0)` and `κ = 2μ + 1`, the process `e^{-μ s} X` is a
//! Brownian motion `B` run on the clock `c* (1 - e^{-κ s})`, `c* = σ² / κ`, so escape is the
//! first `s` with `|B(c* (1 - e^{-κ s}))| ≥ a e^{-μ s}`. Its increments on a uniform `s` grid
//! are independent centered normals, sampled without discretization error.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{ParamError, StatsError};
use crate::rng::{map_replica_range, map_replicas, SimRng};
use crate::stats::{
    fit_tail, geometric_grid, ks_distance, ks_two_sample, linear_fit, KsResult, SurvivalSample,
    TailFit, TailFitOptions,
};
use crate::vertex::asymptotic_params;

pub const DEFAULT_H: f64 = 1e-3;
pub const DEFAULT_HORIZON: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EscapeMethod {
    Euler,
    ExactBridge,
}

impl EscapeMethod {
    pub fn name(&self) -> &'static str {
        match self {
            EscapeMethod::Euler => "euler",
            EscapeMethod::ExactBridge => "exact_bridge",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdeConfig {
    pub mu: f64,
    pub sigma: f64,
    /// Barrier half-width.
    pub a: f64,
    pub t0: f64,
    pub t_max: f64,
    pub method: EscapeMethod,
    /// Step in log-time.
    pub h: f64,
}

/// An escape time, censored at the horizon when the barrier was never reached.
pub type EscapeSample = SurvivalSample;

impl SdeConfig {
    pub fn new(mu: f64, sigma: f64, a: f64) -> Self {
        SdeConfig {
            mu,
            sigma,
            a,
            t0: 1.0,
            t_max: DEFAULT_HORIZON,
            method: EscapeMethod::ExactBridge,
            h: DEFAULT_H,
        }
    }

    /// Drift and diffusion coefficients implied by the wedge half-angle `theta`.
    pub fn from_theta(theta: f64, a: f64) -> Result<Self, ParamError> {
        let p = asymptotic_params(theta)?;
        Ok(SdeConfig::new(p.mu, p.sigma, a))
    }

    /// Limiting variance `σ² / (2μ + 1)` of `e^{-μ s} X`.
    pub fn c_star(&self) -> f64 {
        self.sigma * self.sigma / (2.0 * self.mu + 1.0)
    }

    pub fn with_method(mut self, method: EscapeMethod) -> Self {
        self.method = method;
        self
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(ParamError::domain("mu", self.mu, "mu >= 0"));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(ParamError::domain("sigma", self.sigma, "sigma >= 0"));
        }
        if !(self.a > 0.0) {
            return Err(ParamError::domain("a", self.a, "a > 0"));
        }
        if !(self.t0 > 0.0) {
            return Err(ParamError::domain("t0", self.t0, "t0 > 0"));
        }
        if !(self.t_max > self.t0) {
            return Err(ParamError::domain("t_max", self.t_max, "t_max > t0"));
        }
        if !(self.h > 0.0 && self.h <= 1e-2) {
            return Err(ParamError::domain("h", self.h, "0 < h <= 1e-2"));
        }
        Ok(())
    }
}

/// Euler-Maruyama on `t_k = t0 (1 + h)^k`; escape is detected at grid points.
pub fn simulate_escape_euler<R: Rng + ?Sized>(cfg: &SdeConfig, rng: &mut R) -> EscapeSample {
    let growth = 1.0 + cfg.h;
    let sd_decay = 1.0 / growth.sqrt();
    // σ/t · sqrt(Δt) with Δt = h t
    let mut noise_sd = cfg.sigma * (cfg.h / cfg.t0).sqrt();
    let drift = cfg.mu * cfg.h;
    let mut x = 0.0f64;
    let mut t = cfg.t0;
    loop {
        let n: f64 = rng.sample(StandardNormal);
        x += drift * x + noise_sd * n;
        t *= growth;
        noise_sd *= sd_decay;
        if t > cfg.t_max {
            return EscapeSample {
                t: cfg.t_max,
                censored: true,
            };
        }
        if x.abs() >= cfg.a {
            return EscapeSample { t, censored: false };
        }
    }
}

/// Parameters of the transformed problem shared by the bridge simulator and diagnostics.
struct BridgeClock {
    /// sd of the first increment of `B(c* (1 - e^{-κ s}))`
    sd0: f64,
    sd_decay: f64,
    barrier_decay: f64,
    growth: f64,
    steps: u64,
}

impl BridgeClock {
    fn new(cfg: &SdeConfig) -> Self {
        let kappa = 2.0 * cfg.mu + 1.0;
        // t0 != 1 rescales the noise: σ_eff = σ / sqrt(t0)
        let c_star = cfg.sigma * cfg.sigma / cfg.t0 / kappa;
        let s_max = (cfg.t_max / cfg.t0).ln();
        BridgeClock {
            sd0: (c_star * -(-kappa * cfg.h).exp_m1()).sqrt(),
            sd_decay: (-0.5 * kappa * cfg.h).exp(),
            barrier_decay: (-cfg.mu * cfg.h).exp(),
            growth: cfg.h.exp(),
            steps: (s_max / cfg.h).floor() as u64,
        }
    }
}

/// Exact-increment simulation of the time-changed Brownian motion against the moving barrier.
pub fn simulate_escape_bridge<R: Rng + ?Sized>(cfg: &SdeConfig, rng: &mut R) -> EscapeSample {
    let clock = BridgeClock::new(cfg);
    let mut y = 0.0f64;
    let mut sd = clock.sd0;
    let mut barrier = cfg.a;
    let mut t = cfg.t0;
    for _ in 0..clock.steps {
        let n: f64 = rng.sample(StandardNormal);
        y += sd * n;
        sd *= clock.sd_decay;
        barrier *= clock.barrier_decay;
        t *= clock.growth;
        if y.abs() >= barrier {
            return EscapeSample { t, censored: false };
        }
    }
    EscapeSample {
        t: cfg.t_max,
        censored: true,
    }
}

pub fn simulate_escape<R: Rng + ?Sized>(cfg: &SdeConfig, rng: &mut R) -> EscapeSample {
    match cfg.method {
        EscapeMethod::Euler => simulate_escape_euler(cfg, rng),
        EscapeMethod::ExactBridge => simulate_escape_bridge(cfg, rng),
    }
}

/// `replicas` independent escape times; replica `r` uses stream `splitmix64(seed ^ r)`.
pub fn escape_ensemble(
    cfg: &SdeConfig,
    replicas: usize,
    base_seed: u64,
) -> Result<Vec<EscapeSample>, ParamError> {
    cfg.validate()?;
    Ok(map_replicas(base_seed, replicas, |_, rng| {
        simulate_escape(cfg, rng)
    }))
}

/// Default fit grid: 20 points per decade from `t0` to the horizon.
pub fn default_grid(cfg: &SdeConfig) -> Vec<f64> {
    geometric_grid(cfg.t0, cfg.t_max, 20)
}

/// Power-law fit of `P(T > t)` over `t ≥ 100` where at least 30 paths survive.
pub fn tail_fit(samples: &[EscapeSample], grid: &[f64]) -> Result<TailFit, StatsError> {
    fit_tail(samples, grid, TailFitOptions::default())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodComparison {
    pub euler: TailFit,
    pub bridge: TailFit,
    /// Two-sample KS on `ln T` (censored samples sit at `ln t_max`).
    pub ks: KsResult,
}

/// Run both simulators on the same parameters and compare their escape-time laws.
pub fn compare_methods(
    cfg: &SdeConfig,
    replicas: usize,
    base_seed: u64,
) -> Result<(Vec<EscapeSample>, Vec<EscapeSample>, MethodComparison), CompareError> {
    let euler = escape_ensemble(&cfg.with_method(EscapeMethod::Euler), replicas, base_seed)?;
    let bridge = escape_ensemble(
        &cfg.with_method(EscapeMethod::ExactBridge),
        replicas,
        base_seed ^ 0x5EED_B21D_6E00_0000,
    )?;
    let grid = default_grid(cfg);
    let log_t = |s: &[EscapeSample]| s.iter().map(|e| e.t.ln()).collect::<Vec<_>>();
    let ks = ks_two_sample(&log_t(&euler), &log_t(&bridge));
    let cmp = MethodComparison {
        euler: tail_fit(&euler, &grid)?,
        bridge: tail_fit(&bridge, &grid)?,
        ks,
    };
    Ok((euler, bridge, cmp))
}

/// One bridge path monitored on the grid with step `h` and on its refinement `h / 2`,
/// returned as `(coarse, fine)`. The coarse path is the fine one read at every other point,
/// so the two differ only through where the barrier is checked.
pub fn simulate_escape_bridge_refined<R: Rng + ?Sized>(
    cfg: &SdeConfig,
    rng: &mut R,
) -> (EscapeSample, EscapeSample) {
    let coarse_steps = BridgeClock::new(cfg).steps;
    let clock = BridgeClock::new(&SdeConfig {
        h: cfg.h / 2.0,
        ..*cfg
    });
    let censored = EscapeSample {
        t: cfg.t_max,
        censored: true,
    };
    let (mut coarse, mut fine) = (None, None);
    let mut y = 0.0f64;
    let mut sd = clock.sd0;
    let mut barrier = cfg.a;
    let mut t = cfg.t0;
    for k in 1..=clock.steps {
        let n: f64 = rng.sample(StandardNormal);
        y += sd * n;
        sd *= clock.sd_decay;
        barrier *= clock.barrier_decay;
        t *= clock.growth;
        let out = y.abs() >= barrier;
        if out && fine.is_none() {
            fine = Some(EscapeSample { t, censored: false });
        }
        if out && k % 2 == 0 && k / 2 <= coarse_steps {
            coarse = Some(EscapeSample { t, censored: false });
            break;
        }
    }
    (coarse.unwrap_or(censored), fine.unwrap_or(censored))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridRefinement {
    pub coarse: TailFit,
    pub fine: TailFit,
}

/// Tail fits of coupled bridge ensembles at steps `h` and `h / 2`.
pub fn grid_refinement(
    cfg: &SdeConfig,
    replicas: usize,
    base_seed: u64,
) -> Result<GridRefinement, CompareError> {
    cfg.validate()?;
    let pairs = map_replicas(base_seed, replicas, |_, rng| {
        simulate_escape_bridge_refined(cfg, rng)
    });
    let (coarse, fine): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    let grid = default_grid(cfg);
    Ok(GridRefinement {
        coarse: tail_fit(&coarse, &grid)?,
        fine: tail_fit(&fine, &grid)?,
    })
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum CompareError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

pub const MIN_SURVIVORS: usize = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurvivorDiagnostics {
    pub t_condition: f64,
    pub paths: usize,
    pub survivors: usize,
    /// `X(t_condition) / a` for every surviving path.
    pub conditional_final: Vec<f64>,
    /// Density histogram of `conditional_final` on `[-1, 1]`: `(bin center, density)`.
    pub conditional_histogram: Vec<(f64, f64)>,
    /// KS distance of `conditional_final` from Uniform[-1, 1].
    pub ks_uniform: f64,
    pub t_probes: Vec<f64>,
    /// Standard deviation of `X(t_probe)` among survivors, per probe.
    pub conditional_std: Vec<f64>,
    /// Log-log slope of `conditional_std` against `t_probe`.
    pub std_slope: f64,
    pub std_slope_stderr: f64,
}

/// Values of `X` at the probe grid points and at `t_condition`, or `None` if the path escapes
/// before `t_condition`.
fn surviving_path(
    cfg: &SdeConfig,
    clock: &BridgeClock,
    probe_steps: &[u64],
    end_step: u64,
    rng: &mut SimRng,
) -> Option<(Vec<f64>, f64)> {
    let mut y = 0.0f64;
    let mut sd = clock.sd0;
    let mut barrier = cfg.a;
    // e^{μ s} maps the transformed value back to X
    let mut unscale = 1.0f64;
    let unscale_growth = 1.0 / clock.barrier_decay;
    let mut probes = Vec::with_capacity(probe_steps.len());
    let mut next = 0;
    for k in 1..=end_step {
        let n: f64 = rng.sample(StandardNormal);
        y += sd * n;
        sd *= clock.sd_decay;
        barrier *= clock.barrier_decay;
        unscale *= unscale_growth;
        if y.abs() >= barrier {
            return None;
        }
        while next < probe_steps.len() && probe_steps[next] == k {
            probes.push(y * unscale);
            next += 1;
        }
    }
    Some((probes, y * unscale))
}

/// Statistics of paths conditioned to survive until `t_condition`: the distribution of
/// `X(t_condition) / a` and the spread of `X` at earlier probe times. Paths are simulated with
/// the bridge scheme in batches until `target_survivors` survive or `max_paths` are used.
pub fn survivor_diagnostics(
    cfg: &SdeConfig,
    t_probes: &[f64],
    t_condition: f64,
    target_survivors: usize,
    max_paths: usize,
    base_seed: u64,
) -> Result<SurvivorDiagnostics, DiagnosticsError> {
    cfg.validate()?;
    if !(t_condition > cfg.t0 && t_condition <= cfg.t_max) {
        return Err(ParamError::domain("t_condition", t_condition, "t0 < t_condition <= t_max").into());
    }
    if t_probes.iter().any(|&t| !(t > cfg.t0 && t < t_condition)) {
        return Err(ParamError::domain("t_probe", f64::NAN, "t0 < t_probe < t_condition").into());
    }
    let clock = BridgeClock::new(cfg);
    let step_of = |t: f64| ((t / cfg.t0).ln() / cfg.h).round().max(1.0) as u64;
    let mut probe_steps: Vec<u64> = t_probes.iter().map(|&t| step_of(t)).collect();
    probe_steps.sort_unstable();
    let end_step = step_of(t_condition);

    let batch = 20_000u64;
    let mut start = 0u64;
    let mut survivors: Vec<(Vec<f64>, f64)> = Vec::new();
    while survivors.len() < target_survivors && (start as usize) < max_paths {
        let end = (start + batch).min(max_paths as u64);
        let got = map_replica_range(base_seed, start, end, |_, rng| {
            surviving_path(cfg, &clock, &probe_steps, end_step, rng)
        });
        survivors.extend(got.into_iter().flatten());
        start = end;
    }
    if survivors.len() < MIN_SURVIVORS {
        return Err(StatsError::InsufficientSurvivors {
            got: survivors.len(),
            needed: MIN_SURVIVORS,
        }
        .into());
    }

    let conditional_final: Vec<f64> = survivors.iter().map(|s| s.1 / cfg.a).collect();
    let ks_uniform = ks_distance(&conditional_final, |u| ((u + 1.0) / 2.0).clamp(0.0, 1.0));
    let bins = 20;
    let mut counts = vec![0usize; bins];
    for &u in &conditional_final {
        let b = (((u + 1.0) / 2.0) * bins as f64).floor().clamp(0.0, (bins - 1) as f64) as usize;
        counts[b] += 1;
    }
    let width = 2.0 / bins as f64;
    let n = conditional_final.len() as f64;
    let conditional_histogram = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| (-1.0 + (i as f64 + 0.5) * width, c as f64 / (n * width)))
        .collect();

    let conditional_std: Vec<f64> = (0..probe_steps.len())
        .map(|j| {
            let xs: Vec<f64> = survivors.iter().map(|s| s.0[j]).collect();
            let m = xs.iter().sum::<f64>() / n;
            (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)).sqrt()
        })
        .collect();
    let probe_times: Vec<f64> = probe_steps
        .iter()
        .map(|&k| cfg.t0 * (k as f64 * cfg.h).exp())
        .collect();
    let (std_slope, std_slope_stderr) = if probe_times.len() >= 2 {
        let lx: Vec<f64> = probe_times.iter().map(|t| t.ln()).collect();
        let ly: Vec<f64> = conditional_std.iter().map(|s| s.ln()).collect();
        let fit = linear_fit(&lx, &ly)?;
        (fit.slope, fit.slope_stderr)
    } else {
        (f64::NAN, f64::NAN)
    };

    Ok(SurvivorDiagnostics {
        t_condition,
        paths: start as usize,
        survivors: survivors.len(),
        conditional_final,
        conditional_histogram,
        ks_uniform,
        t_probes: probe_times,
        conditional_std,
        std_slope,
        std_slope_stderr,
    })
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}
