use std::f64::consts::PI;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{parse_epsilon_list, ExperimentConfig, Subcommand};
use super::criteria::{self, CriterionOutcome};
use super::manifest::{ArtifactWriter, RunManifest};
use super::{exit_code, EXIT_NUMERICAL, EXIT_OK};
use crate::central::rotation_speed;
use crate::error::Result;
use crate::grid::{csv_float as f, ScalarGrid};
use crate::kmd::{kmd_residual, KmdSystem};
use crate::lift::{
    core_symmetry_defect, helical_symmetry_defect, max_divergence, stream_vorticity_field, weak_convergence_gap_with, BumpField, CoreSamples,
    VectorField3,
};
use crate::numerics::fit_slope;
use crate::stream::residual::{residual_row, ResidualRow};
use crate::stream::{solve_alpha, AlphaSolution, StreamContext, StreamParams};

pub const DEFAULT_OUT: &str = "helix-kmd-out";

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    /// Comma-separated `ε` list replacing the configured sweep.
    pub epsilon_override: Option<String>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub manifest: RunManifest,
    /// Human-readable lines for stdout.
    pub lines: Vec<String>,
}

/// The configuration file, or the defaults, with the `ε` override applied.
pub fn load_config(opts: &RunOptions) -> Result<ExperimentConfig> {
    let mut cfg = match &opts.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(list) = &opts.epsilon_override {
        cfg.override_epsilons(parse_epsilon_list(list)?)?;
    }
    Ok(cfg)
}

/// Validates the configuration, runs `sub` and writes its artifacts and
/// `manifest.json`. A numerical failure still leaves a manifest behind.
pub fn run(sub: Subcommand, opts: &RunOptions) -> Result<RunSummary> {
    let cfg = load_config(opts)?;
    cfg.validate_for(sub)?;
    let out = opts
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let mut w = ArtifactWriter::new(&out)?;
    let mut lines = Vec::new();
    let res = match sub {
        Subcommand::SimulateKmd => simulate_kmd(&cfg, &mut w, &mut lines),
        Subcommand::BuildStream => build_stream(&cfg, &mut w, &mut lines),
        Subcommand::ResidualScan => residual_scan(&cfg, &mut w, &mut lines),
        Subcommand::AlphaSolve => alpha_solve(&cfg, &mut w, &mut lines),
        Subcommand::Lift3d => lift_3d(&cfg, &mut w, &mut lines),
        Subcommand::Verify => verify(&mut w, &mut lines),
    };
    match res {
        Ok(code) => {
            let manifest = w.finish(sub.name(), cfg.hash(), code)?;
            Ok(RunSummary { manifest, lines })
        }
        Err(e) => {
            let _ = w.finish(sub.name(), cfg.hash(), exit_code(&e));
            Err(e)
        }
    }
}

/// Maps over the sweep points, concurrently when `[sweep].parallel` is set.
/// Results keep the input order either way.
fn sweep_map<T: Send>(
    cfg: &ExperimentConfig,
    params: &[StreamParams],
    f: impl Fn(&StreamParams) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    if cfg.sweep.parallel {
        params.par_iter().map(&f).collect()
    } else {
        params.iter().map(f).collect()
    }
}

#[derive(Serialize)]
struct KmdSummary {
    n_filaments: usize,
    modes: usize,
    dt: f64,
    t_final: f64,
    snapshots: usize,
    predicted_speed: f64,
    angular_speeds: Vec<f64>,
    center_drift_rate: f64,
    initial_min_separation: f64,
    final_min_separation: f64,
    /// Centered-difference residual of the recorded snapshots.
    snapshot_residual: Option<f64>,
}

fn simulate_kmd(cfg: &ExperimentConfig, w: &mut ArtifactWriter, lines: &mut Vec<String>) -> Result<i32> {
    let k = cfg.kmd_section()?;
    let (fam, state) = cfg.initial_state()?;
    let threshold = if state.n_filaments() > 1 {
        k.collision_fraction * state.min_separation()
    } else {
        0.0
    };
    let sys = KmdSystem::with_threshold(&state, threshold);
    let traj = w.timed("simulate", || sys.simulate(&state, k.t_final, k.dt, k.stride))?;
    w.write("trajectory.csv", |out| traj.write_csv(out))?;
    let speeds: Vec<f64> = (0..state.n_filaments()).map(|j| traj.angular_speed(j)).collect();
    let summary = KmdSummary {
        n_filaments: state.n_filaments(),
        modes: state.n_samples(),
        dt: traj.dt,
        t_final: k.t_final,
        snapshots: traj.snapshots.len(),
        predicted_speed: rotation_speed(&fam),
        angular_speeds: speeds.clone(),
        center_drift_rate: traj.center_drift_rate(),
        initial_min_separation: state.min_separation(),
        final_min_separation: traj.last().min_separation(),
        snapshot_residual: if traj.snapshots.len() >= 3 {
            Some(kmd_residual(&traj)?)
        } else {
            None
        },
    };
    w.write_json("summary.json", &summary)?;
    lines.push(format!(
        "angular speed {:.9} (predicted {:.9}), center drift rate {:.2e}",
        speeds[fam.first_outer()],
        summary.predicted_speed,
        summary.center_drift_rate
    ));
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct ContextSummary {
    epsilon: f64,
    log_eps: f64,
    mu: f64,
    em: f64,
    alpha: f64,
    alpha_leading: f64,
    big_r: f64,
    c1: f64,
    c2: f64,
    k1: f64,
    k2: f64,
    mu_iterations: usize,
    mu_defect: f64,
    mu_excess: f64,
    mu_in_range: bool,
    vertices: Vec<[f64; 2]>,
}

fn context_summary(ctx: &StreamContext) -> ContextSummary {
    ContextSummary {
        epsilon: ctx.epsilon,
        log_eps: ctx.log_eps,
        mu: ctx.mu,
        em: ctx.em,
        alpha: ctx.alpha,
        alpha_leading: ctx.params.alpha_leading(),
        big_r: ctx.big_r,
        c1: ctx.c1,
        c2: ctx.c2,
        k1: ctx.k1,
        k2: ctx.k2,
        mu_iterations: ctx.mu_iterations,
        mu_defect: ctx.mu_defect(),
        mu_excess: ctx.mu_excess(),
        mu_in_range: ctx.mu_in_range(),
        vertices: ctx.frames.iter().map(|f| f.p).collect(),
    }
}

fn build_stream(cfg: &ExperimentConfig, w: &mut ArtifactWriter, lines: &mut Vec<String>) -> Result<i32> {
    let params = cfg.stream_params()?;
    let g = &cfg.grid;
    let (hw, n) = (g.sample_half_width, g.sample_n);
    let dx = 2.0 * hw / (n - 1) as f64;
    let geom = ScalarGrid::cartesian(-hw, -hw, dx, dx, n, n);
    let built = w.timed("build", || {
        sweep_map(cfg, &params, |p| {
            let ctx = StreamContext::build(p)?;
            let psi = ScalarGrid::sample(geom.clone(), |x| crate::stream::psi_star(x, &ctx))?;
            let h2 = ScalarGrid::sample(geom.clone(), |x| ctx.h2.eval(x))?;
            Ok((context_summary(&ctx), psi, h2))
        })
    })?;
    for (k, (summary, psi, h2)) in built.iter().enumerate() {
        w.write(&format!("psi_star_{k}.csv"), |out| psi.write_csv(out, "psi_star"))?;
        w.write(&format!("h2_{k}.csv"), |out| h2.write_csv(out, "h2"))?;
        w.write_json(&format!("context_{k}.json"), summary)?;
        lines.push(format!(
            "eps = e^-{}: mu = {:.6e}, mu iterations {}",
            summary.log_eps, summary.mu, summary.mu_iterations
        ));
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct ResidualJson<'a> {
    rows: &'a [ResidualRow],
    /// Least-squares slope of `log outer_norm` against `log ε`.
    outer_slope: f64,
    /// Inner norm at the largest `ε`, times three.
    inner_limit: f64,
}

fn residual_scan(cfg: &ExperimentConfig, w: &mut ArtifactWriter, lines: &mut Vec<String>) -> Result<i32> {
    let params = cfg.stream_params()?;
    let mut rows = w.timed("residual", || {
        sweep_map(cfg, &params, |p| Ok(residual_row(&StreamContext::build(p)?)))
    })?;
    rows.sort_by(|a, b| b.epsilon.total_cmp(&a.epsilon));
    let x: Vec<f64> = rows.iter().map(|r| r.epsilon.ln()).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.outer_norm.ln()).collect();
    let report = ResidualJson {
        rows: &rows,
        outer_slope: fit_slope(&x, &y),
        inner_limit: 3.0 * rows[0].inner_norm,
    };
    w.write("residual.csv", |out| {
        writeln!(out, "epsilon,log_eps,mu,alpha,outer_norm,inner_norm,mu_defect")?;
        for r in &rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                f(r.epsilon),
                f(r.log_eps),
                f(r.mu),
                f(r.alpha),
                f(r.outer_norm),
                f(r.inner_norm),
                f(r.mu_defect)
            )?;
        }
        Ok(())
    })?;
    w.write_json("residual.json", &report)?;
    for r in &rows {
        lines.push(format!(
            "eps = e^-{}: outer {:.3e}, inner {:.3}",
            r.log_eps, r.outer_norm, r.inner_norm
        ));
    }
    lines.push(format!("outer slope {:.3}", report.outer_slope));
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct AlphaPoint {
    epsilon: f64,
    log_eps: f64,
    #[serde(flatten)]
    solution: AlphaSolution,
}

#[derive(Serialize)]
struct AlphaJson<'a> {
    alpha_leading: f64,
    points: &'a [AlphaPoint],
}

fn solve_point(p: &StreamParams) -> Result<AlphaPoint> {
    let ctx = StreamContext::build(p)?;
    Ok(AlphaPoint {
        epsilon: ctx.epsilon,
        log_eps: ctx.log_eps,
        solution: solve_alpha(&ctx)?,
    })
}

fn alpha_solve(cfg: &ExperimentConfig, w: &mut ArtifactWriter, lines: &mut Vec<String>) -> Result<i32> {
    let params = cfg.stream_params()?;
    let points = w.timed("solve_alpha", || sweep_map(cfg, &params, solve_point))?;
    w.write("alpha.csv", |out| {
        writeln!(
            out,
            "epsilon,log_eps,alpha,alpha_leading,correction,correction_ratio,cal_a_at_leading,mu,iterations"
        )?;
        for p in &points {
            let s = &p.solution;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                f(p.epsilon),
                f(p.log_eps),
                f(s.alpha),
                f(s.alpha_leading),
                f(s.correction),
                f(s.correction_ratio),
                f(s.cal_a_at_leading),
                f(s.mu),
                s.iterations
            )?;
        }
        Ok(())
    })?;
    w.write_json(
        "alpha.json",
        &AlphaJson {
            alpha_leading: params[0].alpha_leading(),
            points: &points,
        },
    )?;
    for p in &points {
        lines.push(format!(
            "eps = e^-{}: alpha {:.6} (leading {}), correction ratio {:.3}",
            p.log_eps, p.solution.alpha, p.solution.alpha_leading, p.solution.correction_ratio
        ));
    }
    Ok(EXIT_OK)
}

/// Screw angles at which the symmetry identity is sampled.
const SYMMETRY_ANGLES: [f64; 3] = [0.37, -1.9, 2.0 * PI];

#[derive(Serialize)]
struct LiftPoint {
    epsilon: f64,
    log_eps: f64,
    alpha: f64,
    symmetry_defect: f64,
    /// Symmetry defect next to the first core, relative to `max |ω|` there.
    core_symmetry_defect: f64,
    max_divergence: f64,
    weak_volume: f64,
    weak_lines: f64,
    weak_gap: f64,
    /// `∫ω·(0,0,χ)` over `8π∫χ(γ₁)ds` for a bump around the first filament.
    mass_ratio: f64,
}

/// `(x, ω⃗(x))` on the lift box.
type LiftSamples = Vec<([f64; 3], [f64; 3])>;

fn lift_point(p: &StreamParams, lift_box: &crate::lift::SampleBox) -> Result<(LiftPoint, LiftSamples)> {
    let ctx = StreamContext::build(p)?;
    let sol = solve_alpha(&ctx)?;
    let ctx = ctx.with_alpha(sol.alpha)?;
    let h = ctx.params.h;
    let cores = CoreSamples::new(&ctx, 64)?;
    let weak = weak_convergence_gap_with(&ctx, &cores, &BumpField::generic())?;
    let p1 = ctx.frames[0].p;
    let bump = weak_convergence_gap_with(&ctx, &cores, &BumpField::axial([p1[0], p1[1], 0.0], 0.3))?;
    let core_symmetry_defect = SYMMETRY_ANGLES
        .iter()
        .map(|&rho| core_symmetry_defect(&ctx, rho))
        .fold(0.0, f64::max);
    let (epsilon, log_eps, alpha) = (ctx.epsilon, ctx.log_eps, ctx.alpha);
    let field: VectorField3 = stream_vorticity_field(ctx);
    let symmetry_defect = SYMMETRY_ANGLES
        .iter()
        .map(|&rho| helical_symmetry_defect(&field, rho, h, lift_box))
        .fold(0.0, f64::max);
    let samples: Vec<_> = lift_box.points().into_iter().map(|x| (x, field.eval(x))).collect();
    Ok((
        LiftPoint {
            epsilon,
            log_eps,
            alpha,
            symmetry_defect,
            core_symmetry_defect,
            max_divergence: max_divergence(&field, lift_box, 1e-3),
            weak_volume: weak.volume,
            weak_lines: weak.lines,
            weak_gap: weak.gap,
            mass_ratio: bump.volume / bump.lines,
        },
        samples,
    ))
}

fn lift_3d(cfg: &ExperimentConfig, w: &mut ArtifactWriter, lines: &mut Vec<String>) -> Result<i32> {
    let params = cfg.stream_params()?;
    let lift_box = cfg.grid.lift_box();
    let results = w.timed("lift", || sweep_map(cfg, &params, |p| lift_point(p, &lift_box)))?;
    let mut report = Vec::with_capacity(results.len());
    for (k, (point, samples)) in results.into_iter().enumerate() {
        w.write(&format!("lift_{k}.csv"), |out| {
            writeln!(out, "x,y,z,w1,w2,w3")?;
            for (x, v) in &samples {
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    f(x[0]),
                    f(x[1]),
                    f(x[2]),
                    f(v[0]),
                    f(v[1]),
                    f(v[2])
                )?;
            }
            Ok(())
        })?;
        lines.push(format!(
            "eps = e^-{}: symmetry {:.1e} (core, relative {:.1e}), weak gap {:.4}, mass ratio {:.4}",
            point.log_eps, point.symmetry_defect, point.core_symmetry_defect, point.weak_gap, point.mass_ratio
        ));
        report.push(point);
    }
    w.write_json("lift_report.json", &report)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct VerifyJson<'a> {
    passed: usize,
    total: usize,
    criteria: &'a [CriterionOutcome],
}

fn verify(w: &mut ArtifactWriter, lines: &mut Vec<String>) -> Result<i32> {
    let outcomes = w.timed("criteria", criteria::run_all);
    let passed = outcomes.iter().filter(|o| o.passed).count();
    lines.extend(outcomes.iter().map(CriterionOutcome::line));
    lines.push(format!("{passed}/{} criteria passed", outcomes.len()));
    w.write_json(
        "verify.json",
        &VerifyJson {
            passed,
            total: outcomes.len(),
            criteria: &outcomes,
        },
    )?;
    Ok(if passed == outcomes.len() { EXIT_OK } else { EXIT_NUMERICAL })
}
