//! Small statistics toolkit: least squares, survival curves, log-log tail fits and
//! Kolmogorov-Smirnov distances.

use serde::{Deserialize, Serialize};

use crate::error::StatsError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Standard error of the slope from the residual variance (0 when `n == 2`).
    pub slope_stderr: f64,
    pub n: usize,
}

/// Ordinary least squares `y = intercept + slope * x`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit, StatsError> {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return Err(StatsError::InsufficientData { needed: 2, got: n });
    }
    let nf = n as f64;
    let mx = xs[..n].iter().sum::<f64>() / nf;
    let my = ys[..n].iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(StatsError::InsufficientData { needed: 2, got: 1 });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse = (syy - slope * sxy).max(0.0);
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    let slope_stderr = if n > 2 {
        (sse / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LinearFit {
        slope,
        intercept,
        r2,
        slope_stderr,
        n,
    })
}

/// `per_decade` points per factor of ten from `lo` to `hi` inclusive.
pub fn geometric_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let n = ((hi / lo).log10() * per_decade as f64).round() as usize;
    (0..=n)
        .map(|i| lo * 10f64.powf(i as f64 / per_decade as f64))
        .collect()
}

/// A possibly right-censored duration: when `censored`, the true value exceeds `t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurvivalSample {
    pub t: f64,
    pub censored: bool,
}

impl SurvivalSample {
    #[inline]
    pub fn survives(&self, g: f64) -> bool {
        self.t > g || (self.censored && self.t >= g)
    }
}

/// Number of samples surviving past each grid point.
pub fn survivor_counts(samples: &[SurvivalSample], grid: &[f64]) -> Vec<usize> {
    let mut ts: Vec<(f64, bool)> = samples.iter().map(|s| (s.t, s.censored)).collect();
    ts.sort_by(|a, b| a.0.total_cmp(&b.0));
    grid.iter()
        .map(|&g| {
            // strictly greater, plus censored samples sitting exactly on g
            let above = ts.len() - ts.partition_point(|x| x.0 <= g);
            let lo = ts.partition_point(|x| x.0 < g);
            let hi = ts.partition_point(|x| x.0 <= g);
            above + ts[lo..hi].iter().filter(|x| x.1).count()
        })
        .collect()
}

/// Empirical `P(T > g)` at each grid point.
pub fn survival_curve(samples: &[SurvivalSample], grid: &[f64]) -> Vec<(f64, f64)> {
    let n = samples.len() as f64;
    grid.iter()
        .zip(survivor_counts(samples, grid))
        .map(|(&g, c)| (g, c as f64 / n))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailFitOptions {
    /// Smallest grid time admitted to the fit window.
    pub t_min: f64,
    /// Grid points with fewer survivors are excluded.
    pub min_survivors: usize,
    pub min_samples: usize,
}

impl Default for TailFitOptions {
    fn default() -> Self {
        TailFitOptions {
            t_min: 100.0,
            min_survivors: 30,
            min_samples: 10_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    /// Minus the log-log slope of the survival curve.
    pub exponent_hat: f64,
    /// Standard error reported by the regression. The survival points are cumulative and
    /// strongly correlated, so this understates the sampling spread.
    pub stderr: f64,
    /// Delete-one-group jackknife standard error of `exponent_hat` over
    /// [`JACKKNIFE_GROUPS`] contiguous groups of samples, on the same window.
    pub jackknife_stderr: f64,
    pub window: (f64, f64),
    pub n_samples: usize,
    /// Fraction of samples censored at the horizon.
    pub censored_fraction: f64,
    /// The `(t, P(T > t))` points used in the regression.
    pub points: Vec<(f64, f64)>,
}

pub const JACKKNIFE_GROUPS: usize = 20;

fn window_slope(grid: &[f64], counts: &[usize], n: f64) -> Result<f64, StatsError> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = grid
        .iter()
        .zip(counts)
        .filter(|(_, &c)| c > 0)
        .map(|(g, &c)| (g.ln(), (c as f64 / n).ln()))
        .unzip();
    Ok(linear_fit(&xs, &ys)?.slope)
}

/// Fit `P(T > t) ∝ t^{-exponent}` by least squares of log survival on log t over the grid
/// points with `t ≥ t_min` and at least `min_survivors` survivors.
pub fn fit_tail(
    samples: &[SurvivalSample],
    grid: &[f64],
    opts: TailFitOptions,
) -> Result<TailFit, StatsError> {
    if samples.len() < opts.min_samples {
        return Err(StatsError::InsufficientData {
            needed: opts.min_samples,
            got: samples.len(),
        });
    }
    let n = samples.len() as f64;
    let counts = survivor_counts(samples, grid);
    let points: Vec<(f64, f64)> = grid
        .iter()
        .zip(counts)
        .filter(|&(&g, c)| g >= opts.t_min && c >= opts.min_survivors)
        .map(|(&g, c)| (g, c as f64 / n))
        .collect();
    if points.len() < 3 {
        return Err(StatsError::WindowEmpty {
            needed: 3,
            t_min: opts.t_min,
            min_survivors: opts.min_survivors,
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let fit = linear_fit(&xs, &ys)?;

    let window: Vec<f64> = points.iter().map(|p| p.0).collect();
    let total = survivor_counts(samples, &window);
    let groups = JACKKNIFE_GROUPS;
    let chunk = samples.len().div_ceil(groups);
    let mut slopes = Vec::with_capacity(groups);
    for part in samples.chunks(chunk) {
        let left_out = survivor_counts(part, &window);
        let kept: Vec<usize> = total.iter().zip(&left_out).map(|(t, l)| t - l).collect();
        slopes.push(window_slope(&window, &kept, n - part.len() as f64)?);
    }
    let g = slopes.len() as f64;
    let mean = slopes.iter().sum::<f64>() / g;
    let jackknife_stderr =
        ((g - 1.0) / g * slopes.iter().map(|s| (s - mean).powi(2)).sum::<f64>()).sqrt();

    Ok(TailFit {
        exponent_hat: -fit.slope,
        stderr: fit.slope_stderr,
        jackknife_stderr,
        window: (points[0].0, points[points.len() - 1].0),
        n_samples: samples.len(),
        censored_fraction: samples.iter().filter(|s| s.censored).count() as f64 / n,
        points,
    })
}

/// Kolmogorov distribution tail `Q(λ) = P(K > λ)`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // small-λ series of the CDF
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        let mut s = 0.0;
        for k in 1..=20 {
            let m = (2 * k - 1) as f64;
            s += (-m * m * pi2 / (8.0 * lambda * lambda)).exp();
        }
        (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s).clamp(0.0, 1.0)
    } else {
        let mut s = 0.0;
        for k in 1..=100 {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * lambda * lambda).exp();
            s += if k % 2 == 1 { term } else { -term };
            if term < 1e-17 {
                break;
            }
        }
        (2.0 * s).clamp(0.0, 1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub d: f64,
    pub p: f64,
}

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value. Ties are handled by
/// evaluating both empirical CDFs at every distinct value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < na && j < nb {
        let v = a[i].min(b[j]);
        while i < na && a[i] <= v {
            i += 1;
        }
        while j < nb && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let en = ((na * nb) as f64 / (na + nb) as f64).sqrt();
    let p = kolmogorov_q((en + 0.12 + 0.11 / en) * d);
    KsResult { d, p }
}

/// One-sample KS distance against a continuous CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
