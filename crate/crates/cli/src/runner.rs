//! Config-to-solver dispatch, output writing, and the two batch reports
//! (epsilon sweep and distribution-shift benchmark).

use crate::bundle::{export_csv, export_sidecar, ResultBundle};
use crate::config::{
    ConfigError, DensityName, DistributionSpec, ExperimentConfig, Mode, ShiftSpec,
};
use crate::render::render_svg;
use serde::Serialize;
use sha2::{Digest, Sha256};
use starreg_core::closed_form::{
    convergence_study, expected_gauge_pc, optimal_critic, optimal_star_eps0, ClosedFormError,
};
use starreg_core::convex::{
    hull_gauge_weights, robustness_bound_check, solve_convex_regularizer, union_w1, ConvexError,
    ConvexOptions,
};
use starreg_core::dro::{
    epsilon_sweep, solve_dro, solve_dro_critic, CriticDroProblem, DroError, DroOptions,
    DroProblem,
};
use starreg_core::geometry::{
    lipschitz_pc, lipschitz_polytope, make_uniform_grid, sup_norm_diff, volume_pc,
    volume_polytope, GeometryError, SphereGrid, StarBody, TAU,
};
use starreg_core::measures::{
    sector_summary_atomic, sector_summary_density, AtomicDistribution, DensityOracle, FnDensity,
    MeasureError, Normalization, QuadratureParams, SectorSummary,
};
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    ClosedForm(#[from] ClosedFormError),
    #[error(transparent)]
    Dro(#[from] DroError),
    #[error(transparent)]
    Convex(#[from] ConvexError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("cannot write {path}: {source}")]
    Output { path: String, source: std::io::Error },
}

impl RunError {
    /// Stable exit-code contract: 2 config error, 3 the configured problem
    /// has no solution (nonexistence or infeasibility), 4 solver failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::ClosedForm(e) => match e {
                ClosedFormError::EmptySector { .. } | ClosedFormError::InfeasibleFloor { .. } => 3,
                _ => 2,
            },
            RunError::Dro(e) => match e {
                DroError::InfeasibleCap { .. } => 3,
                DroError::NotConverged { .. }
                | DroError::CriticNotConverged { .. }
                | DroError::InnerSolveFailed(_)
                | DroError::Lp(_) => 4,
                _ => 2,
            },
            RunError::Convex(e) => match e {
                ConvexError::DegenerateSupport { .. } => 3,
                ConvexError::NotConverged { .. } => 4,
                _ => 2,
            },
            RunError::Geometry(_) | RunError::Measure(_) => 2,
            RunError::Output { .. } => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Run,
    Render,
    Export,
    Sweep,
    Bench,
}

#[derive(Debug)]
pub struct Invocation {
    pub action: Action,
    pub config: PathBuf,
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub quiet: bool,
}

fn write_file(path: &Path, write: impl FnOnce(&Path) -> std::io::Result<()>) -> Result<(), RunError> {
    write(path).map_err(|source| RunError::Output { path: path.display().to_string(), source })
}

fn invalid(msg: impl Into<String>) -> RunError {
    RunError::Config(ConfigError::Invalid(msg.into()))
}

pub fn execute(inv: &Invocation) -> Result<(), RunError> {
    let (mut cfg, raw) = ExperimentConfig::from_path(&inv.config)?;
    if let Some(seed) = inv.seed {
        cfg.solver.seed = seed;
    }
    if let Some(tol) = inv.tol {
        cfg.solver.gap_tol = tol;
    }
    if let Some(iters) = inv.max_iters {
        cfg.solver.max_iters = iters;
    }
    let hash: String = Sha256::digest(&raw).iter().map(|b| format!("{b:02x}")).collect();

    let stem = cfg.output.clone().unwrap_or_else(|| {
        inv.config
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "result".into())
    });
    let out_dir = inv
        .out_dir
        .clone()
        .unwrap_or_else(|| inv.config.parent().unwrap_or(Path::new(".")).to_path_buf());
    if !out_dir.as_os_str().is_empty() {
        std::fs::create_dir_all(&out_dir).map_err(|source| RunError::Output {
            path: out_dir.display().to_string(),
            source,
        })?;
    }

    match cfg.mode {
        Mode::Sweep => {
            if inv.action == Action::Render || inv.action == Action::Export {
                return Err(invalid("sweep configs produce a file per budget; use `run` or `sweep`"));
            }
            run_sweep(&cfg, &hash, &out_dir, &stem, inv.quiet)
        }
        Mode::ShiftBench => {
            if inv.action != Action::Run && inv.action != Action::Bench {
                return Err(invalid("shift-bench configs produce a report; use `run` or `bench`"));
            }
            run_bench(&cfg, &out_dir, &stem, inv.quiet)
        }
        Mode::Convergence => {
            if inv.action != Action::Run {
                return Err(invalid("convergence configs produce a report; use `run`"));
            }
            run_convergence(&cfg, &out_dir, &stem, inv.quiet)
        }
        _ => {
            if inv.action == Action::Sweep || inv.action == Action::Bench {
                return Err(invalid(format!(
                    "the `{}` subcommand does not accept mode {}",
                    if inv.action == Action::Sweep { "sweep" } else { "bench" },
                    cfg.mode.as_str()
                )));
            }
            let bundle = solve_single(&cfg, &hash)?;
            if inv.action == Action::Run || inv.action == Action::Export {
                write_file(&out_dir.join(format!("{stem}.csv")), |p| export_csv(&bundle, p))?;
                write_file(&out_dir.join(format!("{stem}.json")), |p| export_sidecar(&bundle, p))?;
            }
            if inv.action == Action::Run || inv.action == Action::Render {
                write_file(&out_dir.join(format!("{stem}.svg")), |p| render_svg(&bundle, p))?;
            }
            if !inv.quiet {
                println!(
                    "{}: objective {:.9}, volume {:.9}, outputs {}/{stem}.*",
                    cfg.mode.as_str(),
                    bundle.objective,
                    bundle.volume,
                    out_dir.display()
                );
            }
            Ok(())
        }
    }
}

fn atomic(spec: &DistributionSpec) -> Result<AtomicDistribution, RunError> {
    let atoms = spec
        .atoms
        .as_ref()
        .ok_or_else(|| invalid("this mode needs an atomic distribution"))?;
    let mut points = Vec::with_capacity(atoms.len());
    for (i, atom) in atoms.iter().enumerate() {
        points.push((atom.cartesian(i).map_err(RunError::Config)?, atom.mass));
    }
    Ok(AtomicDistribution::from_weighted_points(&points)?)
}

fn density_oracle(spec: &DistributionSpec) -> Result<Box<dyn DensityOracle>, RunError> {
    let name = spec
        .density
        .ok_or_else(|| invalid("expected a named density"))?;
    let sigma = spec.sigma.unwrap_or(1.0);
    let mean = spec.mean.unwrap_or([0.0, 0.0]);
    let radius = spec.radius.unwrap_or(1.0);
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(invalid(format!("sigma must be positive, got {sigma}")));
    }
    if !radius.is_finite() || radius <= 0.0 {
        return Err(invalid(format!("radius must be positive, got {radius}")));
    }
    let boxed: Box<dyn Fn([f64; 2]) -> f64> = match name {
        DensityName::LaplaceL1 => Box::new(|x: [f64; 2]| (-(x[0].abs() + x[1].abs())).exp()),
        DensityName::Gaussian => Box::new(move |x: [f64; 2]| {
            let dx = x[0] - mean[0];
            let dy = x[1] - mean[1];
            (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp()
        }),
        DensityName::UniformDisk => {
            Box::new(move |x: [f64; 2]| if x[0].hypot(x[1]) <= radius { 1.0 } else { 0.0 })
        }
        DensityName::UniformCircle => {
            return Err(invalid(
                "uniform-circle is a singular measure; it has a closed-form summary but no density",
            ))
        }
    };
    let oracle = match name {
        DensityName::UniformDisk => {
            FnDensity::new(boxed, Normalization::Unnormalized).with_envelope(radius)
        }
        _ => FnDensity::new(boxed, Normalization::Unnormalized),
    };
    Ok(Box::new(oracle))
}

fn summary(spec: &DistributionSpec, grid: &SphereGrid) -> Result<SectorSummary, RunError> {
    if spec.atoms.is_some() {
        return Ok(sector_summary_atomic(&atomic(spec)?, grid));
    }
    if spec.density == Some(DensityName::UniformCircle) {
        // uniform mass on a circle of the given radius: each sector holds
        // w/tau of the mass at constant distance
        let radius = spec.radius.unwrap_or(1.0);
        if !radius.is_finite() || radius <= 0.0 {
            return Err(invalid(format!("radius must be positive, got {radius}")));
        }
        let alpha = grid.weights().iter().map(|w| w * radius / TAU).collect();
        return Ok(SectorSummary { grid: grid.clone(), alpha });
    }
    let oracle = density_oracle(spec)?;
    Ok(sector_summary_density(oracle.as_ref(), grid, &QuadratureParams::default())?.summary)
}

fn dro_options(cfg: &ExperimentConfig) -> DroOptions {
    DroOptions {
        max_iters: cfg.solver.max_iters,
        gap_tol: cfg.solver.gap_tol,
        ..DroOptions::default()
    }
}

fn pc_bundle(body: &StarBody) -> Result<ResultBundle, RunError> {
    let mut bundle = ResultBundle::from_body(body);
    bundle.volume = volume_pc(body)?;
    bundle.lipschitz = lipschitz_pc(body)?;
    Ok(bundle)
}

fn solve_single(cfg: &ExperimentConfig, hash: &str) -> Result<ResultBundle, RunError> {
    let grid = make_uniform_grid(cfg.grid_n)?;
    let started = Instant::now();
    let mut bundle = match cfg.mode {
        Mode::Star0 => {
            let spec = cfg.distribution.as_ref().expect("validated");
            let summary = summary(spec, &grid)?;
            let body = optimal_star_eps0(&summary)?;
            let mut bundle = pc_bundle(&body)?;
            bundle.objective = expected_gauge_pc(&summary.alpha, &body)?;
            bundle
        }
        Mode::Dro => {
            let spec = cfg.distribution.as_ref().expect("validated");
            let eps = cfg.eps.expect("validated");
            let problem = DroProblem::new(
                grid.clone(),
                &atomic(spec)?,
                cfg.cost.expect("validated").into(),
                eps,
            )?;
            let sol = solve_dro(&problem, &dro_options(cfg))?;
            let mut bundle = pc_bundle(&sol.body)?;
            bundle.objective = sol.objective;
            bundle.s = Some(sol.s);
            bundle.gap = Some(sol.certificate_gap);
            bundle.iterations = sol.iterations;
            bundle.eps = Some(eps);
            bundle
        }
        Mode::Convex => {
            let spec = cfg.distribution.as_ref().expect("validated");
            let weights = hull_gauge_weights(&atomic(spec)?, &grid)?;
            let sol = solve_convex_regularizer(&weights, &grid, &ConvexOptions::default())?;
            let mut bundle = ResultBundle::from_body(&sol.body);
            bundle.objective =
                weights.iter().zip(sol.body.gauges()).map(|(a, t)| a * t).sum();
            bundle.gap = Some(sol.kkt_residual);
            bundle.volume = volume_polytope(&sol.body)?;
            bundle.lipschitz = lipschitz_polytope(&sol.body)?;
            bundle.iterations = sol.newton_steps;
            bundle
        }
        Mode::Critic => {
            let p = summary(cfg.distribution.as_ref().expect("validated"), &grid)?;
            let q = summary(cfg.contrast.as_ref().expect("validated"), &grid)?;
            let signed = starreg_core::measures::signed_summary(&p, &q)?;
            let sol = optimal_critic(&signed, cfg.eps_ball.expect("validated"))?;
            let mut bundle = pc_bundle(&sol.body)?;
            bundle.objective = expected_gauge_pc(&signed.sigma, &sol.body)?;
            bundle.gap = Some(sol.volume_residual);
            bundle
        }
        Mode::DroCritic => {
            let p = atomic(cfg.distribution.as_ref().expect("validated"))?;
            let q = match &cfg.contrast {
                Some(spec) => Some(atomic(spec)?),
                None => None,
            };
            let eps_p = cfg.eps_p.expect("validated");
            let problem = CriticDroProblem::new(
                grid.clone(),
                &p,
                q.as_ref(),
                cfg.cost.expect("validated").into(),
                eps_p,
                cfg.eps_q.unwrap_or(0.0),
                cfg.eps_ball.expect("validated"),
            )?;
            let sol = solve_dro_critic(&problem, &dro_options(cfg))?;
            let mut bundle = pc_bundle(&sol.body)?;
            bundle.objective = sol.objective;
            bundle.s = Some(sol.p_side.s);
            bundle.gap = Some(sol.certificate_gap);
            bundle.iterations = sol.iterations;
            bundle.eps = Some(eps_p);
            bundle
        }
        Mode::Sweep | Mode::ShiftBench | Mode::Convergence => unreachable!("batch modes"),
    };
    bundle.wall_ms = started.elapsed().as_millis() as u64;
    bundle.config_hash = hash.to_string();
    Ok(bundle)
}

#[derive(Serialize)]
struct SweepIndexRow {
    eps: f64,
    anisotropy: f64,
    objective: f64,
    s: f64,
    gap: f64,
    csv: String,
}

fn run_sweep(
    cfg: &ExperimentConfig,
    hash: &str,
    out_dir: &Path,
    stem: &str,
    quiet: bool,
) -> Result<(), RunError> {
    let grid = make_uniform_grid(cfg.grid_n)?;
    let spec = cfg.distribution.as_ref().expect("validated");
    let eps_list = cfg.eps_list.as_ref().expect("validated");
    let problem = DroProblem::new(
        grid,
        &atomic(spec)?,
        cfg.cost.expect("validated").into(),
        eps_list.first().copied().unwrap_or(0.0),
    )?;
    let started = Instant::now();
    let entries = epsilon_sweep(&problem, eps_list, &dro_options(cfg))?;
    let wall_ms = started.elapsed().as_millis() as u64;

    let mut index = Vec::with_capacity(entries.len());
    for (k, entry) in entries.iter().enumerate() {
        let csv_name = format!("{stem}_eps{k:02}.csv");
        let mut bundle = pc_bundle(&entry.solution.body)?;
        bundle.objective = entry.solution.objective;
        bundle.s = Some(entry.solution.s);
        bundle.gap = Some(entry.solution.certificate_gap);
        bundle.iterations = entry.solution.iterations;
        bundle.config_hash = hash.to_string();
        bundle.eps = Some(entry.eps);
        write_file(&out_dir.join(&csv_name), |p| export_csv(&bundle, p))?;
        index.push(SweepIndexRow {
            eps: entry.eps,
            anisotropy: entry.anisotropy,
            objective: entry.solution.objective,
            s: entry.solution.s,
            gap: entry.solution.certificate_gap,
            csv: csv_name,
        });
    }

    #[derive(Serialize)]
    struct SweepIndex<'a> {
        config_hash: &'a str,
        wall_ms: u64,
        entries: &'a [SweepIndexRow],
    }
    let text = serde_json::to_string_pretty(&SweepIndex { config_hash: hash, wall_ms, entries: &index })
        .expect("report serializes");
    write_file(&out_dir.join(format!("{stem}_index.json")), |p| {
        std::fs::write(p, format!("{text}\n"))
    })?;
    if !quiet {
        for row in &index {
            println!("eps {:>8.4}: anisotropy {:>10.4}, objective {:.9}", row.eps, row.anisotropy, row.objective);
        }
        println!("sweep outputs in {}/{stem}_*.csv", out_dir.display());
    }
    Ok(())
}

#[derive(Serialize)]
struct ShiftRow {
    k: usize,
    shift_rad: f64,
    sup_gauge_diff: f64,
    w1: f64,
    lhs: f64,
    rhs: f64,
    margin: f64,
    holds: bool,
}

fn rotate_atom(spec: &DistributionSpec, shift: &ShiftSpec, by: f64) -> Result<AtomicDistribution, RunError> {
    let atoms = spec.atoms.as_ref().expect("validated");
    let mut points = Vec::with_capacity(atoms.len());
    for (i, atom) in atoms.iter().enumerate() {
        let mut p = atom.cartesian(i).map_err(RunError::Config)?;
        if i == shift.atom {
            let (sin, cos) = by.sin_cos();
            p = [p[0] * cos - p[1] * sin, p[0] * sin + p[1] * cos];
        }
        points.push((p, atom.mass));
    }
    Ok(AtomicDistribution::from_weighted_points(&points)?)
}

fn run_bench(cfg: &ExperimentConfig, out_dir: &Path, stem: &str, quiet: bool) -> Result<(), RunError> {
    let grid = make_uniform_grid(cfg.grid_n)?;
    let spec = cfg.distribution.as_ref().expect("validated");
    let shift = cfg.shift.as_ref().expect("validated");
    let p = rotate_atom(spec, shift, 0.0)?;
    let base = solve_convex_regularizer(
        &hull_gauge_weights(&p, &grid)?,
        &grid,
        &ConvexOptions::default(),
    )?;

    let mut rows = Vec::with_capacity(shift.steps + 1);
    for k in 0..=shift.steps {
        let by = shift.step * k as f64;
        let q = rotate_atom(spec, shift, by)?;
        let shifted = solve_convex_regularizer(
            &hull_gauge_weights(&q, &grid)?,
            &grid,
            &ConvexOptions::default(),
        )?;
        let report = robustness_bound_check(&p, &q, &grid)?;
        rows.push(ShiftRow {
            k,
            shift_rad: by,
            sup_gauge_diff: sup_norm_diff(base.body.gauges(), shifted.body.gauges())?,
            w1: union_w1(&p, &q)?,
            lhs: report.lhs,
            rhs: report.rhs,
            margin: report.margin,
            holds: report.holds,
        });
    }

    let text = serde_json::to_string_pretty(&rows).expect("report serializes");
    write_file(&out_dir.join(format!("{stem}_shift.json")), |p| {
        std::fs::write(p, format!("{text}\n"))
    })?;
    if !quiet {
        println!("{:>3} {:>10} {:>12} {:>10} {:>12} {:>12} {:>10}", "k", "shift", "sup|dt|", "W1", "lhs", "rhs", "margin");
        for r in &rows {
            println!(
                "{:>3} {:>10.6} {:>12.3e} {:>10.6} {:>12.6} {:>12.6} {:>10.6}",
                r.k, r.shift_rad, r.sup_gauge_diff, r.w1, r.lhs, r.rhs, r.margin
            );
        }
    }
    Ok(())
}

fn run_convergence(cfg: &ExperimentConfig, out_dir: &Path, stem: &str, quiet: bool) -> Result<(), RunError> {
    let spec = cfg.distribution.as_ref().expect("validated");
    let sizes = cfg.grid_sizes.as_ref().expect("validated");
    let oracle = density_oracle(spec)?;
    let points = convergence_study(oracle.as_ref(), sizes, &QuadratureParams::default())?;

    #[derive(Serialize)]
    struct ConvergenceRow {
        n: usize,
        sup_error: f64,
    }
    let rows: Vec<ConvergenceRow> =
        points.iter().map(|p| ConvergenceRow { n: p.n, sup_error: p.sup_error }).collect();
    let text = serde_json::to_string_pretty(&rows).expect("report serializes");
    write_file(&out_dir.join(format!("{stem}_convergence.json")), |p| {
        std::fs::write(p, format!("{text}\n"))
    })?;
    if !quiet {
        println!("{:>6} {:>14}", "n", "sup error");
        for r in &rows {
            println!("{:>6} {:>14.6e}", r.n, r.sup_error);
        }
    }
    Ok(())
}
