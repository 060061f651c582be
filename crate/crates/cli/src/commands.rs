//! Subcommand definitions and drivers.

use std::fs;
use std::path::{Path, PathBuf};

use ballistic_core::anti_ou::{
    self, default_grid, escape_ensemble, survivor_diagnostics, EscapeMethod, EscapeSample,
    SdeConfig, SurvivorDiagnostics,
};
use ballistic_core::branch::{
    binned_ccdf_exponent, ccdf, extract_branches, fit_power_law, s_min_sensitivity,
    PowerLawFit,
};
use ballistic_core::cluster::{
    classify_hull, corner_angles, diameter_growth_rate, run_cluster, ClusterConfig,
    ClusterError, GrowthFit, GrowthMode, Shape, ShapeClass, DEFAULT_F_MACRO,
};
use ballistic_core::error::ParamError;
use ballistic_core::polygon_flow::{evolve_steps, FlowError, PolygonState};
use ballistic_core::render::{render_svg, RenderOptions};
use ballistic_core::rng::{map_replica_range, stream_seed};
use ballistic_core::stats::{
    geometric_grid, ks_two_sample, median, survival_curve, SurvivalSample, TailFit,
    TailFitOptions,
};
use ballistic_core::vertex::{
    fork_lifetime_ensemble, lifetime_tail_fit, mu_of_theta, DeathCause, ForkConfig,
    MIN_LIFETIME_SAMPLES,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::args::{parse_angle, parse_count, parse_float};
use crate::io::{self, IoError};

#[derive(Debug, Parser)]
#[command(
    name = "ballistic",
    version,
    about = "Ballistic disc aggregation: cluster growth, vertex forks, escape tails and polygon flow"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Grow full clusters; write events, summary and an SVG per replica.
    SimulateCluster(ClusterArgs),
    /// Fork lifetimes of the directional-growth chain and their tail fit.
    SimulateVertex(VertexArgs),
    /// Escape times of the anti-Ornstein-Uhlenbeck diffusion and their tail fit.
    EscapeTail(EscapeArgs),
    /// Integrate the mean-flow polygon dynamics from a vertex file.
    PolygonFlow(FlowArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct ClusterArgs {
    /// Number of attachments (accepts 1e5 style).
    #[arg(long, value_parser = parse_count)]
    pub n: u64,
    /// Seed of a single run; replica r of an ensemble uses splitmix64(seed ^ r).
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_parser = parse_count, default_value = "1")]
    pub replicas: u64,
    /// Restrict growth to directions pi/2 +- theta (radians, or e.g. 0.35pi).
    #[arg(long, value_parser = parse_angle)]
    pub theta: Option<f64>,
    /// Edge fraction of the diameter that counts as macroscopic.
    #[arg(long, value_parser = parse_float, default_value_t = DEFAULT_F_MACRO)]
    pub f_macro: f64,
    /// Smallest branch size in the power-law fit.
    #[arg(long, value_parser = parse_count, default_value = "5")]
    pub s_min: u64,
    /// Skip events.jsonl.
    #[arg(long)]
    pub no_events: bool,
    /// Skip cluster.svg.
    #[arg(long)]
    pub no_svg: bool,
    /// Check hull invariants after every attachment.
    #[arg(long)]
    pub audit: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct VertexArgs {
    /// Half-angle(s) of the growth wedge, comma-separated (radians, or e.g. 0.3pi).
    #[arg(long, value_parser = parse_angle, value_delimiter = ',', required = true)]
    pub theta: Vec<f64>,
    /// The fork dies when |X| reaches a.
    #[arg(long, value_parser = parse_float, default_value_t = 0.5)]
    pub a: f64,
    #[arg(long, value_parser = parse_count, default_value = "1e4")]
    pub replicas: u64,
    /// Steps after which a fork is censored.
    #[arg(long, value_parser = parse_count, default_value = "1e6")]
    pub cap: u64,
    #[arg(long, value_parser = parse_float, default_value_t = 1.0)]
    pub z0: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodChoice {
    Euler,
    ExactBridge,
    Both,
}

#[derive(Debug, Args, Serialize)]
pub struct EscapeArgs {
    /// Derive mu and sigma from the wedge half-angle.
    #[arg(long, value_parser = parse_angle, required_unless_present_all = ["mu", "sigma"], conflicts_with_all = ["mu", "sigma"])]
    pub theta: Option<f64>,
    #[arg(long, value_parser = parse_float, requires = "sigma")]
    pub mu: Option<f64>,
    #[arg(long, value_parser = parse_float, requires = "mu")]
    pub sigma: Option<f64>,
    /// Barrier half-width. Defaults to 2 sqrt(sigma^2 / (2 mu + 1)).
    #[arg(long, value_parser = parse_float)]
    pub a: Option<f64>,
    #[arg(long, value_enum, default_value_t = MethodChoice::ExactBridge)]
    pub method: MethodChoice,
    #[arg(long, value_parser = parse_count, default_value = "1e5")]
    pub replicas: u64,
    #[arg(long, value_parser = parse_float, default_value_t = anti_ou::DEFAULT_HORIZON)]
    pub t_max: f64,
    /// Step in log-time.
    #[arg(long, value_parser = parse_float, default_value_t = anti_ou::DEFAULT_H)]
    pub h: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Also write diagnostics.json for paths surviving to --condition-time.
    #[arg(long)]
    pub diagnostics: bool,
    /// Survivors must outlive the probes (100 to 1000) by many decades for their spread to
    /// show the t^{-1/2} law; 1e15 suffices for mu near 0.2.
    #[arg(long, value_parser = parse_float, default_value_t = 1e15)]
    pub condition_time: f64,
    #[arg(long, value_parser = parse_count, default_value = "3000")]
    pub survivors: u64,
    #[arg(long, value_parser = parse_count, default_value = "1e8")]
    pub max_paths: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct FlowArgs {
    /// One `x y` vertex per line, counterclockwise.
    #[arg(long)]
    pub vertices_file: PathBuf,
    /// Fixed step; by default min(0.01 * shortest edge, 0.1) per step.
    #[arg(long, value_parser = parse_float)]
    pub dn: Option<f64>,
    #[arg(long, value_parser = parse_count, default_value = "1000")]
    pub steps: u64,
    #[arg(long, value_parser = parse_count, default_value = "1")]
    pub sample_every: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{0}")]
    Param(#[from] ParamError),
    #[error("invalid arguments: {0}")]
    Usage(String),
    #[error("invariant violation: {0}")]
    Invariant(String),
    #[error("{0}")]
    Flow(#[from] FlowError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Param(_) => 2,
            CliError::Invariant(_) => 3,
            CliError::Io(_) | CliError::Flow(_) => 1,
        }
    }
}

impl From<ClusterError> for CliError {
    fn from(e: ClusterError) -> Self {
        match e {
            ClusterError::NoSteps | ClusterError::Mode(_) | ClusterError::Initial(_) => {
                CliError::Usage(e.to_string())
            }
            ClusterError::Geometry { .. } => CliError::Invariant(e.to_string()),
        }
    }
}

#[derive(Serialize)]
struct Provenance<'a, T: Serialize> {
    command: &'a str,
    version: &'a str,
    args: &'a T,
}

fn prepare_out<T: Serialize>(dir: &Path, command: &str, args: &T) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|source| IoError::File {
        path: dir.display().to_string(),
        source,
    })?;
    io::write_json(
        &dir.join("config.json"),
        &Provenance {
            command,
            version: env!("CARGO_PKG_VERSION"),
            args,
        },
    )?;
    Ok(())
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::SimulateCluster(a) => simulate_cluster(&a),
        Command::SimulateVertex(a) => simulate_vertex(&a),
        Command::EscapeTail(a) => escape_tail(&a),
        Command::PolygonFlow(a) => polygon_flow(&a),
    }
}

#[derive(Serialize)]
struct BranchSummary {
    branches: usize,
    backbone: usize,
    partition_holds: bool,
    fit: Option<PowerLawFit>,
    fit_error: Option<String>,
    /// Fits at s_min in {3, 5, 10}.
    s_min_sensitivity: Vec<PowerLawFit>,
    binned_alpha: Option<f64>,
}

#[derive(Serialize)]
struct ClusterSummary {
    seed: u64,
    n_steps: u64,
    mode: GrowthMode,
    discs: usize,
    diameter: f64,
    extremal_count: usize,
    shape: ShapeClass,
    /// Interior angles between consecutive macroscopic edges.
    corner_angles: Vec<f64>,
    diameter_growth: Option<GrowthFit>,
    diameter_growth_error: Option<String>,
    branches: BranchSummary,
}

#[derive(Serialize)]
struct ShapeCounts {
    triangle: usize,
    quadrangle: usize,
    other: usize,
}

#[derive(Serialize)]
struct ClusterEnsemble {
    replicas: usize,
    n_steps: u64,
    median_extremal_count: f64,
    shape_counts: ShapeCounts,
    /// Fraction of replicas with diameter-vs-n r² ≥ 0.99.
    linear_growth_fraction: f64,
    replica_seeds: Vec<u64>,
}

fn simulate_cluster(args: &ClusterArgs) -> Result<(), CliError> {
    if !(args.f_macro > 0.0 && args.f_macro < 1.0) {
        return Err(CliError::Usage(format!(
            "--f-macro must lie in (0, 1), got {}",
            args.f_macro
        )));
    }
    prepare_out(&args.out, "simulate-cluster", args)?;
    let mode = match args.theta {
        Some(theta) => GrowthMode::Wedge { theta },
        None => GrowthMode::Full,
    };
    let replicas = args.replicas;
    let seed_of = |r: u64| {
        if replicas == 1 {
            args.seed
        } else {
            stream_seed(args.seed, r)
        }
    };
    let dir_of = |r: u64| {
        if replicas == 1 {
            args.out.clone()
        } else {
            args.out.join(format!("replica_{r:04}"))
        }
    };

    let mut summaries = Vec::new();
    // bounded batches keep at most a few event logs in memory
    let batch = 8u64;
    let mut start = 0;
    while start < replicas {
        let end = (start + batch).min(replicas);
        let runs = map_replica_range(args.seed, start, end, |r, _| {
            let mut cfg = ClusterConfig::new(args.n, seed_of(r)).with_mode(mode);
            cfg.record_events = !args.no_events;
            cfg.audit = args.audit;
            run_cluster(&cfg)
        });
        for (offset, run) in runs.into_iter().enumerate() {
            let r = start + offset as u64;
            let (record, cluster) = run?;
            let dir = dir_of(r);
            fs::create_dir_all(&dir).map_err(|source| IoError::File {
                path: dir.display().to_string(),
                source,
            })?;
            if !args.no_events {
                io::write_events(&dir.join("events.jsonl"), &record.events)?;
            }
            if !args.no_svg {
                let svg = render_svg(cluster.discs(), cluster.hull(), RenderOptions::default());
                io::write_text(&dir.join("cluster.svg"), &svg)?;
            }
            let decomposition = extract_branches(&record);
            let sizes = decomposition.sizes();
            io::write_branches(&dir.join("branches.csv"), &decomposition.branches)?;
            io::write_ccdf(&dir.join("branch_ccdf.csv"), &ccdf(&sizes))?;
            let fit = fit_power_law(&sizes, args.s_min);
            let metrics = cluster.hull().metrics();
            let growth = diameter_growth_rate(&record);
            let summary = ClusterSummary {
                seed: record.seed,
                n_steps: record.n_steps,
                mode,
                discs: cluster.discs().len(),
                diameter: metrics.diameter,
                extremal_count: metrics.extremal_count,
                shape: classify_hull(cluster.hull(), args.f_macro),
                corner_angles: corner_angles(cluster.hull().vertices(), args.f_macro)
                    .iter()
                    .map(|e| std::f64::consts::PI - e)
                    .collect(),
                diameter_growth: growth.as_ref().ok().copied(),
                diameter_growth_error: growth.err().map(|e| e.to_string()),
                branches: BranchSummary {
                    branches: decomposition.branches.len(),
                    backbone: decomposition.backbone.len(),
                    partition_holds: decomposition.partition_holds(),
                    fit: fit.as_ref().ok().copied(),
                    fit_error: fit.err().map(|e| e.to_string()),
                    s_min_sensitivity: s_min_sensitivity(&sizes, &[3, 5, 10]),
                    binned_alpha: binned_ccdf_exponent(&sizes, args.s_min).ok(),
                },
            };
            io::write_json(&dir.join("summary.json"), &summary)?;
            summaries.push(summary);
        }
        start = end;
    }

    if replicas > 1 {
        let counts: Vec<f64> = summaries.iter().map(|s| s.extremal_count as f64).collect();
        let count = |c: Shape| summaries.iter().filter(|s| s.shape.class == c).count();
        let linear = summaries
            .iter()
            .filter(|s| s.diameter_growth.is_some_and(|g| g.r2 >= 0.99))
            .count();
        let ensemble = ClusterEnsemble {
            replicas: summaries.len(),
            n_steps: args.n,
            median_extremal_count: median(&counts),
            shape_counts: ShapeCounts {
                triangle: count(Shape::Triangle),
                quadrangle: count(Shape::Quadrangle),
                other: count(Shape::Other),
            },
            linear_growth_fraction: linear as f64 / summaries.len() as f64,
            replica_seeds: summaries.iter().map(|s| s.seed).collect(),
        };
        io::write_json(&args.out.join("ensemble.json"), &ensemble)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct VertexFit {
    theta: f64,
    theta_over_pi: f64,
    /// cos θ / (1 - cos θ)
    mu: f64,
    a: f64,
    replicas: usize,
    cap: u64,
    censored_fraction: f64,
    arc_collapse_fraction: f64,
    tail_fit: Option<TailFit>,
    tail_fit_error: Option<String>,
    /// Power-law fit of the uncensored lifetimes as event sizes.
    lifetime_power_law: Option<PowerLawFit>,
    survival_file: String,
}

#[derive(Serialize)]
struct VertexReport {
    fits: Vec<VertexFit>,
    /// Whether the fitted exponents decrease along the given θ order (sweeps only).
    exponents_decreasing: Option<bool>,
}

fn simulate_vertex(args: &VertexArgs) -> Result<(), CliError> {
    for &theta in &args.theta {
        ForkConfig {
            theta,
            a: args.a,
            z0: args.z0,
            step_cap: args.cap,
        }
        .validate()?;
    }
    prepare_out(&args.out, "simulate-vertex", args)?;
    let grid = geometric_grid(1.0, args.cap as f64, 20);
    let mut all = Vec::new();
    let mut fits = Vec::new();
    for (k, &theta) in args.theta.iter().enumerate() {
        let cfg = ForkConfig {
            theta,
            a: args.a,
            z0: args.z0,
            step_cap: args.cap,
        };
        let samples = fork_lifetime_ensemble(&cfg, args.replicas as usize, stream_seed(args.seed, k as u64))?;
        let survival: Vec<SurvivalSample> = samples.iter().map(|s| s.survival()).collect();
        let survival_file = if args.theta.len() == 1 {
            "survival.csv".to_string()
        } else {
            format!("survival_{k}.csv")
        };
        io::write_survival(&args.out.join(&survival_file), &survival_curve(&survival, &grid))?;
        let opts = TailFitOptions {
            min_samples: MIN_LIFETIME_SAMPLES,
            ..TailFitOptions::default()
        };
        let fit = lifetime_tail_fit(&samples, &grid, opts);
        let n = samples.len() as f64;
        let frac = |c: DeathCause| samples.iter().filter(|s| s.cause == c).count() as f64 / n;
        let uncensored: Vec<u64> = samples
            .iter()
            .filter(|s| s.cause != DeathCause::Censored)
            .map(|s| s.t)
            .collect();
        fits.push(VertexFit {
            theta,
            theta_over_pi: theta / std::f64::consts::PI,
            mu: mu_of_theta(theta),
            a: args.a,
            replicas: samples.len(),
            cap: args.cap,
            censored_fraction: frac(DeathCause::Censored),
            arc_collapse_fraction: frac(DeathCause::ArcCollapse),
            tail_fit: fit.as_ref().ok().cloned(),
            tail_fit_error: fit.err().map(|e| e.to_string()),
            lifetime_power_law: fit_power_law(&uncensored, 5).ok(),
            survival_file,
        });
        all.extend(samples);
    }
    io::write_lifetimes(&args.out.join("lifetimes.csv"), &all)?;
    let exponents_decreasing = (fits.len() > 1).then(|| {
        fits.windows(2).all(|w| match (&w[0].tail_fit, &w[1].tail_fit) {
            (Some(x), Some(y)) => x.exponent_hat > y.exponent_hat,
            _ => false,
        })
    });
    io::write_json(
        &args.out.join("fit.json"),
        &VertexReport {
            fits,
            exponents_decreasing,
        },
    )?;
    Ok(())
}

#[derive(Serialize)]
struct MethodFit {
    method: &'static str,
    exponent_hat: Option<f64>,
    stderr: Option<f64>,
    /// Delete-one-group jackknife; the regression stderr is much smaller than the real spread.
    jackknife_stderr: Option<f64>,
    window: Option<(f64, f64)>,
    n: usize,
    censored_fraction: f64,
    error: Option<String>,
}

impl MethodFit {
    fn new(method: EscapeMethod, samples: &[EscapeSample], fit: Result<TailFit, String>) -> Self {
        let n = samples.len();
        let censored = samples.iter().filter(|s| s.censored).count() as f64 / n.max(1) as f64;
        match fit {
            Ok(f) => MethodFit {
                method: method.name(),
                exponent_hat: Some(f.exponent_hat),
                stderr: Some(f.stderr),
                jackknife_stderr: Some(f.jackknife_stderr),
                window: Some(f.window),
                n,
                censored_fraction: censored,
                error: None,
            },
            Err(e) => MethodFit {
                method: method.name(),
                exponent_hat: None,
                stderr: None,
                jackknife_stderr: None,
                window: None,
                n,
                censored_fraction: censored,
                error: Some(e),
            },
        }
    }
}

#[derive(Serialize)]
struct EscapeReport {
    mu: f64,
    sigma: f64,
    a: f64,
    t_max: f64,
    h: f64,
    fits: Vec<MethodFit>,
    /// Two-sample KS on ln T between the methods (`--method both`).
    ks_d: Option<f64>,
    ks_p: Option<f64>,
}

fn escape_tail(args: &EscapeArgs) -> Result<(), CliError> {
    let base = match (args.theta, args.mu, args.sigma) {
        (Some(theta), _, _) => SdeConfig::from_theta(theta, 1.0)?,
        (None, Some(mu), Some(sigma)) => SdeConfig::new(mu, sigma, 1.0),
        _ => return Err(CliError::Usage("give --theta or both --mu and --sigma".into())),
    };
    let a = args.a.unwrap_or_else(|| 2.0 * base.c_star().sqrt());
    let cfg = SdeConfig {
        a,
        t_max: args.t_max,
        h: args.h,
        ..base
    };
    cfg.validate()?;
    prepare_out(&args.out, "escape-tail", args)?;

    let methods: &[EscapeMethod] = match args.method {
        MethodChoice::Euler => &[EscapeMethod::Euler],
        MethodChoice::ExactBridge => &[EscapeMethod::ExactBridge],
        MethodChoice::Both => &[EscapeMethod::Euler, EscapeMethod::ExactBridge],
    };
    let grid = default_grid(&cfg);
    let mut runs = Vec::new();
    for (k, &m) in methods.iter().enumerate() {
        let samples = escape_ensemble(
            &cfg.with_method(m),
            args.replicas as usize,
            stream_seed(args.seed, k as u64),
        )?;
        runs.push((m, samples));
    }
    let batches: Vec<(EscapeMethod, &[EscapeSample])> =
        runs.iter().map(|(m, s)| (*m, s.as_slice())).collect();
    io::write_escape_samples(&args.out.join("samples.csv"), cfg.mu, cfg.sigma, cfg.a, &batches)?;

    let fits = runs
        .iter()
        .map(|(m, s)| MethodFit::new(*m, s, anti_ou::tail_fit(s, &grid).map_err(|e| e.to_string())))
        .collect();
    let ks = (runs.len() == 2).then(|| {
        let log_t = |s: &[EscapeSample]| s.iter().map(|e| e.t.ln()).collect::<Vec<_>>();
        ks_two_sample(&log_t(&runs[0].1), &log_t(&runs[1].1))
    });
    io::write_json(
        &args.out.join("fit.json"),
        &EscapeReport {
            mu: cfg.mu,
            sigma: cfg.sigma,
            a: cfg.a,
            t_max: cfg.t_max,
            h: cfg.h,
            fits,
            ks_d: ks.map(|k| k.d),
            ks_p: ks.map(|k| k.p),
        },
    )?;

    if args.diagnostics {
        let probes = geometric_grid(100.0, 1000.0, 10);
        let d: Result<SurvivorDiagnostics, _> = survivor_diagnostics(
            &SdeConfig {
                t_max: cfg.t_max.max(args.condition_time),
                ..cfg
            },
            &probes,
            args.condition_time,
            args.survivors as usize,
            args.max_paths as usize,
            stream_seed(args.seed, 0xD1A6),
        );
        match d {
            Ok(d) => io::write_json(&args.out.join("diagnostics.json"), &d)?,
            Err(e) => io::write_json(
                &args.out.join("diagnostics.json"),
                &serde_json::json!({ "error": e.to_string() }),
            )?,
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct FlowSummary {
    steps: u64,
    n_final: f64,
    initial_vertices: usize,
    final_vertices: Vec<ballistic_core::geometry::Vec2>,
    merges: usize,
}

fn polygon_flow(args: &FlowArgs) -> Result<(), CliError> {
    if let Some(dn) = args.dn {
        if !(dn > 0.0) {
            return Err(CliError::Usage(format!("--dn must be positive, got {dn}")));
        }
    }
    let vertices = io::read_vertices(&args.vertices_file)?;
    let initial = PolygonState::new(vertices)?;
    prepare_out(&args.out, "polygon-flow", args)?;
    let record = evolve_steps(&initial, args.steps as usize, args.dn, args.sample_every as usize)?;
    io::write_trajectory(&args.out.join("trajectory.csv"), &record.samples)?;
    io::write_merges(&args.out.join("merges.jsonl"), &record.merges)?;
    io::write_json(
        &args.out.join("summary.json"),
        &FlowSummary {
            steps: args.steps,
            n_final: record.final_state.n,
            initial_vertices: initial.vertices.len(),
            final_vertices: record.final_state.vertices.clone(),
            merges: record.merges.len(),
        },
    )?;
    Ok(())
}
