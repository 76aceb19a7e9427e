//! The twelve acceptance checks, shared by `verify` and the test suite.
//!
//! Expensive pieces (the filament simulations and the α sweeps) are computed
//! once per process and reused by every check that needs them.

use std::f64::consts::PI;
use std::sync::OnceLock;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::central::{self, rotation_speed, stationary_radius, AxialGrid, HelixConfig};
use crate::error::{Error, Result};
use crate::helical::Matrix2;
use crate::kmd::{kmd_residual, KmdSystem, Trajectory};
use crate::lift::{
    core_symmetry_defect, helical_symmetry_defect, max_divergence, weak_convergence_gap_with, BumpField, CoreSamples,
    SampleBox, VectorField3,
};
use crate::linear::{gamma_constants, kernel_z, phi2o, projected_solve, ProjectedOptions};
use crate::numerics::quad::Adaptive;
use crate::stream::profile::bubble;
use crate::stream::psi::{error_e, error_g, psi0_sum, psi_local, psi_star};
use crate::stream::residual_scan;
use crate::stream::{solve_alpha, AlphaSolution, StreamContext, StreamParams};

pub const COUNT: usize = 12;

pub const TITLES: [&str; COUNT] = [
    "polygon rotation speed",
    "helix family solves KMD",
    "stationary helix",
    "polygon with center",
    "center of vorticity conservation",
    "Liouville identities",
    "projection constants",
    "symmetry suite",
    "mu asymptotics",
    "residual scaling",
    "rotation-speed asymptotics",
    "vorticity lift",
];

/// `|log ε|` values of the stream sweeps.
pub const SWEEP: [f64; 4] = [10.0, 20.0, 40.0, 80.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: usize,
    pub title: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionOutcome {
    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2}. {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.detail
        )
    }
}

/// Runs criterion `id` (1-based).
pub fn run_criterion(id: usize) -> CriterionOutcome {
    assert!((1..=COUNT).contains(&id), "criterion {id} out of range");
    let t = Instant::now();
    let r = match id {
        1 => polygon_rotation(),
        2 => helix_residual(),
        3 => stationary_helix(),
        4 => polygon_with_center(),
        5 => center_conservation(),
        6 => liouville_identities(),
        7 => projection_constants(),
        8 => symmetry_suite(),
        9 => mu_asymptotics(),
        10 => residual_scaling(),
        11 => rotation_speed_asymptotics(),
        _ => vorticity_lift(),
    };
    let (passed, detail) = r.unwrap_or_else(|e| (false, format!("error: {e}")));
    CriterionOutcome {
        id,
        title: TITLES[id - 1].to_string(),
        passed,
        detail,
        seconds: t.elapsed().as_secs_f64(),
    }
}

pub fn run_all() -> Vec<CriterionOutcome> {
    (1..=COUNT).map(run_criterion).collect()
}

type Check = Result<(bool, String)>;

// ---- filament dynamics ----

struct Simulations {
    polygon: Trajectory,
    polygon_seconds: f64,
    stationary: Vec<(usize, Trajectory)>,
    with_center: (HelixConfig, Trajectory),
}

fn simulations() -> Result<&'static Simulations> {
    static SIMS: OnceLock<std::result::Result<Simulations, String>> = OnceLock::new();
    SIMS.get_or_init(|| run_simulations().map_err(|e| e.to_string()))
        .as_ref()
        .map_err(|e| Error::InvalidState(e.clone()))
}

fn simulate_family(c: &HelixConfig, m: usize, dt: f64, stride: usize) -> Result<Trajectory> {
    let state = central::sample(c, 0.0, AxialGrid::pitches(m, c.h, 1))?;
    KmdSystem::for_state(&state).simulate(&state, 1.0, dt, stride)
}

fn run_simulations() -> Result<Simulations> {
    let t = Instant::now();
    let polygon = simulate_family(&HelixConfig::straight_polygon(1.0, 3)?, 64, 1e-4, 100)?;
    let polygon_seconds = t.elapsed().as_secs_f64();
    let stationary = (2..=4)
        .map(|n| Ok((n, simulate_family(&HelixConfig::stationary_helix(1.0, n)?, 64, 1e-3, 10)?)))
        .collect::<Result<_>>()?;
    let c = HelixConfig::polygon_with_center(2.0, 1.0, 3)?;
    let with_center = (c, simulate_family(&c, 64, 1e-3, 10)?);
    Ok(Simulations {
        polygon,
        polygon_seconds,
        stationary,
        with_center,
    })
}

fn polygon_rotation() -> Check {
    let s = simulations()?;
    let speed = s.polygon.angular_speed(0);
    let ok = (speed - 4.0).abs() <= 1e-5 && s.polygon_seconds < 10.0;
    Ok((ok, format!("speed {speed:.9} (want 4 +- 1e-5), runtime {:.2} s", s.polygon_seconds)))
}

fn helix_residual() -> Check {
    // below this the residual is round-off and its dt-dependence meaningless
    const FLOOR: f64 = 1e-10;
    let mut ok = true;
    let mut parts = Vec::new();
    for n in 2..=5 {
        let c = HelixConfig::polygon_helix(1.0, 1.0, n)?;
        let grid = AxialGrid::pitches(128, 1.0, 1);
        let r1 = kmd_residual(&central::sample_trajectory(&c, 1e-4, 4, grid)?)?;
        let r2 = kmd_residual(&central::sample_trajectory(&c, 5e-5, 4, grid)?)?;
        let ratio = r1 / r2;
        let pass = r1 <= 1e-6 && (r1 < FLOOR || ratio >= 3.6);
        ok &= pass;
        if r1 < FLOOR {
            parts.push(format!("N={n}: {r1:.1e} (round-off)"));
        } else {
            parts.push(format!("N={n}: {r1:.1e}, ratio {ratio:.2}"));
        }
    }
    Ok((ok, parts.join("; ")))
}

fn stationary_helix() -> Check {
    let s = simulations()?;
    let mut worst: f64 = 0.0;
    for (_, tr) in &s.stationary {
        for snap in &tr.snapshots {
            worst = worst.max(snap.max_distance(&tr.snapshots[0]));
        }
    }
    Ok((worst <= 1e-6, format!("sup drift {worst:.2e} over N = 2..4 (limit 1e-6)")))
}

fn polygon_with_center() -> Check {
    let s = simulations()?;
    let (c, tr) = &s.with_center;
    let want = rotation_speed(c);
    let speed = tr.angular_speed(c.first_outer());
    let ok = (speed - want).abs() <= 1e-5 && want.abs() <= 1e-5;
    Ok((ok, format!("speed {speed:.2e}, predicted {want:.2e}")))
}

fn center_conservation() -> Check {
    let s = simulations()?;
    let mut all = vec![s.polygon.center_drift_rate(), s.with_center.1.center_drift_rate()];
    all.extend(s.stationary.iter().map(|(_, t)| t.center_drift_rate()));
    let worst = all.iter().cloned().fold(0.0, f64::max);
    Ok((worst <= 1e-10, format!("largest relative drift rate {worst:.2e} over {} runs", all.len())))
}

// ---- Liouville profile and linear theory ----

/// Fourth-order five-point-per-axis Laplacian.
fn fd_laplacian(f: impl Fn([f64; 2]) -> f64, y: [f64; 2], s: f64) -> f64 {
    let axis = |e: [f64; 2]| {
        let g = |k: f64| f([y[0] + k * s * e[0], y[1] + k * s * e[1]]);
        (-g(2.0) + 16.0 * g(1.0) - 30.0 * g(0.0) + 16.0 * g(-1.0) - g(-2.0)) / (12.0 * s * s)
    };
    axis([1.0, 0.0]) + axis([0.0, 1.0])
}

fn liouville_identities() -> Check {
    // ρ = t/(1−t)
    let mass = 2.0
        * PI
        * Adaptive::default().integrate(
            |t| {
                let r = t / (1.0 - t);
                bubble([r, 0.0]) * r / ((1.0 - t) * (1.0 - t))
            },
            0.0,
            1.0,
        )?;
    let pts = [[0.3, 0.4], [-1.2, 0.7], [2.0, 2.0], [0.05, -0.9], [4.0, -3.0]];
    let mut worst: f64 = 0.0;
    for y in pts {
        for j in 0..3 {
            worst = worst.max((fd_laplacian(|p| kernel_z(j, p), y, 1e-3) + bubble(y) * kernel_z(j, y)).abs());
        }
        worst = worst.max((fd_laplacian(phi2o, y, 1e-3) + bubble(y) * (phi2o(y) + kernel_z(0, y))).abs());
    }
    let ok = (mass - 8.0 * PI).abs() <= 1e-6 && worst <= 1e-6;
    Ok((ok, format!("mass - 8pi = {:.1e}, FD residual {worst:.1e}", mass - 8.0 * PI)))
}

fn projection_constants() -> Check {
    let (g0, g1) = gamma_constants()?;
    let want = 3.0 / (32.0 * PI);
    let sol = projected_solve(|y| bubble(y) * kernel_z(1, y), &ProjectedOptions::default())?;
    let d = sol.d;
    let ok = (g0 - want).abs() <= 1e-8
        && (g1 - want).abs() <= 1e-8
        && (d[1] - 1.0).abs() <= 1e-6
        && d[0].abs() <= 1e-6
        && d[2].abs() <= 1e-6;
    Ok((
        ok,
        format!(
            "gamma0 - 3/(32pi) = {:.1e}, gamma1 - 3/(32pi) = {:.1e}, d = ({:.1e}, {:.8}, {:.1e})",
            g0 - want,
            g1 - want,
            d[0],
            d[1],
            d[2]
        ),
    ))
}

// ---- stream function ----

fn stream_context(log_eps: f64, r: f64) -> Result<StreamContext> {
    StreamContext::build(&StreamParams::new((-log_eps).exp(), r, 1.0, 3))
}

fn symmetry_suite() -> Check {
    let ctx = stream_context(20.0, 1.0)?;
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1.0);
    let q = Matrix2::rotation(2.0 * PI / 3.0);
    let pts = [[0.11, 0.07], [0.6, -0.2], [-0.3, 0.45], [0.2, 0.0], [0.81, 0.33], [1.02, 0.01]];
    let mut dihedral: f64 = 0.0;
    for x in pts {
        for y in [q.apply(x), q.apply(q.apply(x)), [x[0], -x[1]]] {
            dihedral = dihedral
                .max(rel(psi0_sum(y, &ctx), psi0_sum(x, &ctx)))
                .max(rel(error_g(y, &ctx), error_g(x, &ctx)))
                .max(rel(psi_star(y, &ctx), psi_star(x, &ctx)));
        }
    }
    let mut even: f64 = 0.0;
    for z in [[0.01, 0.02], [-0.03, 0.005], [1e-6, 3e-7], [0.2, -0.1]] {
        let m = [z[0], -z[1]];
        even = even
            .max(rel(psi_local(z, &ctx), psi_local(m, &ctx)))
            .max(rel(error_e(z, &ctx), error_e(m, &ctx)));
    }
    let rhs0 = ctx.mu_relation_rhs(0);
    let mu_rel = (1..3).map(|i| rel(ctx.mu_relation_rhs(i), rhs0)).fold(0.0, f64::max);
    let ok = dihedral <= 1e-12 && even <= 1e-12 && mu_rel <= 1e-12;
    Ok((ok, format!("dihedral {dihedral:.1e}, evenness {even:.1e}, mu relation {mu_rel:.1e}")))
}

fn mu_asymptotics() -> Check {
    let mut excess = Vec::new();
    for l in SWEEP {
        excess.push(stream_context(l, 1.0)?.mu_excess());
    }
    let worst = excess.iter().map(|e| e.abs()).fold(0.0, f64::max);
    let list: Vec<String> = excess.iter().map(|e| format!("{e:.3}")).collect();
    Ok((worst <= 20.0, format!("log mu^2 - 2(N-1) log|log eps| = [{}]", list.join(", "))))
}

fn residual_scaling() -> Check {
    let t = Instant::now();
    let eps: Vec<f64> = SWEEP.iter().map(|l| (-l).exp()).collect();
    let rep = residual_scan(&StreamParams::new(eps[0], 1.0, 1.0, 3), &eps)?;
    let per_point = t.elapsed().as_secs_f64() / eps.len() as f64;
    let inner0 = rep.rows[0].inner_norm;
    let inner_max = rep.rows.iter().map(|r| r.inner_norm).fold(0.0, f64::max);
    let ok = (1.0..=2.0).contains(&rep.slope) && inner_max <= 3.0 * inner0 && per_point < 300.0;
    let inner: Vec<String> = rep.rows.iter().map(|r| format!("{:.3}", r.inner_norm)).collect();
    Ok((
        ok,
        format!(
            "outer slope {:.3}, inner [{}] (limit {:.3}), {per_point:.1} s per point",
            rep.slope,
            inner.join(", "),
            3.0 * inner0
        ),
    ))
}

type AlphaSweep = Vec<(f64, AlphaSolution)>;

/// `solve_alpha` at `(r, 1, 3)` over the sweep, cached per radius.
fn alpha_sweep(stationary: bool) -> Result<&'static AlphaSweep> {
    static MOVING: OnceLock<std::result::Result<AlphaSweep, String>> = OnceLock::new();
    static STATIONARY: OnceLock<std::result::Result<AlphaSweep, String>> = OnceLock::new();
    let (cell, r) = if stationary {
        (&STATIONARY, stationary_radius(1.0, 3)?)
    } else {
        (&MOVING, 1.0)
    };
    cell.get_or_init(|| {
        SWEEP
            .iter()
            .map(|&l| Ok((l, solve_alpha(&stream_context(l, r)?)?)))
            .collect::<Result<_>>()
            .map_err(|e: Error| e.to_string())
    })
    .as_ref()
    .map_err(|e| Error::InvalidState(e.clone()))
}

fn ratio_spread(sweep: &AlphaSweep) -> f64 {
    let r: Vec<f64> = sweep.iter().map(|(_, s)| s.correction_ratio.abs()).collect();
    let hi = r.iter().cloned().fold(0.0, f64::max);
    let lo = r.iter().cloned().fold(f64::INFINITY, f64::min);
    hi / lo
}

fn rotation_speed_asymptotics() -> Check {
    let moving = alpha_sweep(false)?;
    let stat = alpha_sweep(true)?;
    let (sm, ss) = (ratio_spread(moving), ratio_spread(stat));
    let leading_ok = moving.iter().all(|(_, s)| s.alpha_leading == -2.0) && stat.iter().all(|(_, s)| s.alpha_leading.abs() < 1e-12);
    let shrinking = stat.windows(2).all(|w| w[1].1.alpha.abs() < w[0].1.alpha.abs());
    let fmt = |s: &AlphaSweep| {
        s.iter()
            .map(|(_, a)| format!("{:.3}", a.alpha))
            .collect::<Vec<_>>()
            .join(", ")
    };
    let ok = sm <= 3.0 && ss <= 3.0 && leading_ok && shrinking;
    Ok((
        ok,
        format!(
            "r=1: alpha [{}], ratio spread {sm:.2}; r=sqrt2: alpha [{}], ratio spread {ss:.2}",
            fmt(moving),
            fmt(stat)
        ),
    ))
}

fn smooth_w(x: [f64; 2]) -> f64 {
    let q = (x[0] - 0.3).powi(2) + 2.0 * (x[1] + 0.1).powi(2);
    (1.0 - q).max(0.0).powi(4)
}

fn vorticity_lift() -> Check {
    let smooth = VectorField3::lifted(smooth_w, 1.0);
    let cube = SampleBox::cube(1.2, 9);
    let div = max_divergence(&smooth, &cube, 1e-3);
    let angles = [0.37, -1.9, 2.0 * PI];
    let mut symmetry = angles
        .iter()
        .map(|&rho| helical_symmetry_defect(&smooth, rho, 1.0, &cube))
        .fold(0.0, f64::max);
    let sweep = alpha_sweep(false)?;
    let phi = BumpField::generic();
    let mut gaps = Vec::new();
    let mut core = Vec::new();
    let mut mass_ratio = f64::NAN;
    for (l, sol) in sweep.iter().filter(|(l, _)| *l <= 40.0) {
        let ctx = stream_context(*l, 1.0)?.with_alpha(sol.alpha)?;
        let cores = CoreSamples::new(&ctx, 64)?;
        gaps.push(weak_convergence_gap_with(&ctx, &cores, &phi)?.gap);
        if *l == 40.0 {
            let p1 = ctx.frames[0].p;
            let bump = BumpField::axial([p1[0], p1[1], 0.0], 0.3);
            let r = weak_convergence_gap_with(&ctx, &cores, &bump)?;
            mass_ratio = r.volume / r.lines;
        }
        core.push(angles.iter().map(|&rho| core_symmetry_defect(&ctx, rho)).fold(0.0, f64::max));
    }
    // once εμ nears the spacing of floats at |x| ~ 1 the rotated point
    // moves by a visible fraction of the core, so only the widest core is held
    // to round-off
    symmetry = symmetry.max(core[0]);
    let monotone = gaps.windows(2).all(|w| w[1].abs() < w[0].abs());
    let ok = div <= 1e-5 && symmetry <= 1e-12 && monotone && (mass_ratio - 1.0).abs() <= 0.05;
    let g: Vec<String> = gaps.iter().map(|g| format!("{g:.3}")).collect();
    let c: Vec<String> = core.iter().map(|g| format!("{g:.1e}")).collect();
    Ok((
        ok,
        format!(
            "div {div:.1e}, symmetry {symmetry:.1e} (relative at cores [{}]), gaps [{}], mass ratio {mass_ratio:.4}",
            c.join(", "),
            g.join(", ")
        ),
    ))
}
