//! Subcommand implementations. Each returns the process exit code.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;
use std::time::Instant;

use magloop::dynamics::write_trajectory_csv;
use magloop::functional::scaled_length;
use magloop::{
    action_s, continuation_run, el_residual_se, family_minimax, fd_gradient, grad_action,
    init_sweep_family, integrate_flow, kinetic_energy, larmor_orbit, mountain_pass,
    resample_arclength, shooting_periodic, ActionParams64, ChartPoint64, Classification,
    ContinuationOutcome, CutoffSpec64, FlowState64, GeometrySpec64, Loop64, MinimaxResult64,
    ParameterShape,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{resolve_output_dir, ExperimentConfig};
use crate::error::CliError;

const VERSION: &str = env!("CARGO_PKG_VERSION");

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::io(&format!("cannot create {}", dir.display()), e))
}

fn write_json<V: Serialize>(path: &Path, value: &V) -> Result<(), CliError> {
    let file = File::create(path)
        .map_err(|e| CliError::io(&format!("cannot write {}", path.display()), e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| CliError::io(&path.display().to_string(), e))?;
    std::io::Write::write_all(&mut w, b"\n")
        .map_err(|e| CliError::io(&path.display().to_string(), e))
}

fn write_loop(path: &Path, gamma: &Loop64) -> Result<(), CliError> {
    let file = File::create(path)
        .map_err(|e| CliError::io(&format!("cannot write {}", path.display()), e))?;
    gamma
        .write_csv(BufWriter::new(file))
        .map_err(|e| CliError::io(&path.display().to_string(), e))
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let _ = std::io::Write::write_all(&mut std::io::stdout().lock(), text.as_bytes());
}

fn print_json<V: Serialize>(value: &V) {
    emit(&format!(
        "{}\n",
        serde_json::to_string_pretty(value).expect("serializable")
    ));
}

#[derive(Serialize)]
struct Timings {
    total_seconds: f64,
}

#[derive(Serialize)]
struct ResultBundle<'a> {
    version: &'static str,
    config: &'a ExperimentConfig,
    cutoff: &'a CutoffSpec64,
    bootstrap: &'a MinimaxResult64,
    records: &'a [magloop::ContinuationRecord64],
    minimax: &'a [MinimaxResult64],
    classification: &'a Classification<f64>,
    nu_trend_ok: bool,
    loop_files: Vec<String>,
    timings: Timings,
}

fn summary(cfg: &ExperimentConfig, out: &ContinuationOutcome<f64>, seconds: f64) -> String {
    let mut s = String::new();
    let g = &cfg.geometry;
    let _ = writeln!(s, "magloop {VERSION}");
    let _ = writeln!(
        s,
        "geometry {:?} (B={}, a={}, k={}, u_amp={}), E={}, w_shape={:?}",
        g.kind, g.b, g.a, g.k, g.u_amp, cfg.energy, cfg.w_shape
    );
    let _ = writeln!(s, "classification: {}", out.classification.case());
    match &out.classification {
        Classification::ConvergedExtremal { final_residual, .. } => {
            let _ = writeln!(s, "final S_E residual: {:.3e}", final_residual.max_res);
        }
        Classification::Inconclusive { reason } => {
            let _ = writeln!(s, "reason: {reason}");
        }
        Classification::DivergingLengths { .. } => {}
    }
    let _ = writeln!(
        s,
        "c_ref = {:.9}, beta = {:.6}",
        out.cutoff.c_ref, out.cutoff.beta
    );
    let _ = writeln!(s, "nu non-increasing over second half: {}", out.nu_trend_ok);
    let _ = writeln!(
        s,
        "{:>4} {:>10} {:>10} {:>12} {:>10} {:>10} {:>12} {:>12} {:>10} {:>9}",
        "step", "eps", "tau", "level", "l", "nu", "E_paper", "E_exact", "residual", "converged"
    );
    for (n, r) in out.records.iter().enumerate() {
        let _ = writeln!(
            s,
            "{:>4} {:>10.3e} {:>10.3e} {:>12.8} {:>10.6} {:>10.3e} {:>12.8} {:>12.8} {:>10.3e} {:>9}",
            n, r.eps, r.tau, r.level, r.l, r.nu, r.e_paper, r.e_exact, r.residual.max_res, r.converged
        );
    }
    let _ = writeln!(s, "wall clock: {seconds:.2} s");
    s
}

/// `run`: full continuation experiment.
pub fn run(config_path: &Path, out: Option<&Path>) -> Result<i32, CliError> {
    let cfg = ExperimentConfig::load(config_path)?;
    let stem = config_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("run");
    let dir = resolve_output_dir(out, cfg.output_dir.as_deref(), stem);
    create_dir(&dir)?;
    let start = Instant::now();
    let outcome = continuation_run(
        &cfg.geometry,
        cfg.energy,
        cfg.w_shape,
        &cfg.schedule()?,
        &cfg.settings(),
        &cfg.options(),
    )?;
    let seconds = start.elapsed().as_secs_f64();

    let mut loop_files = Vec::with_capacity(outcome.records.len());
    for (n, r) in outcome.records.iter().enumerate() {
        let name = format!("step_{n}.csv");
        write_loop(&dir.join(&name), &r.loop_)?;
        loop_files.push(name);
    }
    write_loop(&dir.join("bootstrap.csv"), &outcome.bootstrap.argmax_loop)?;
    let bundle = ResultBundle {
        version: VERSION,
        config: &cfg,
        cutoff: &outcome.cutoff,
        bootstrap: &outcome.bootstrap,
        records: &outcome.records,
        minimax: &outcome.minimax,
        classification: &outcome.classification,
        nu_trend_ok: outcome.nu_trend_ok,
        loop_files,
        timings: Timings {
            total_seconds: seconds,
        },
    };
    write_json(&dir.join("result.json"), &bundle)?;
    let text = summary(&cfg, &outcome, seconds);
    fs::write(dir.join("summary.txt"), &text)
        .map_err(|e| CliError::io("cannot write summary.txt", e))?;
    emit(&text);
    log::info!("results in {}", dir.display());
    Ok(match outcome.classification {
        Classification::Inconclusive { .. } => 3,
        _ => 0,
    })
}

#[derive(Serialize)]
struct MpassOutput<'a> {
    version: &'static str,
    eps: f64,
    tau: f64,
    #[serde(flatten)]
    result: &'a MinimaxResult64,
    argmax_radius_estimate: f64,
}

/// `mpass`: one cutoff-free minimax run at fixed `(ε, τ)`.
pub fn mpass(
    config_path: &Path,
    eps: Option<f64>,
    tau: Option<f64>,
    out: Option<&Path>,
) -> Result<i32, CliError> {
    let cfg = ExperimentConfig::load(config_path)?;
    let eps = eps.unwrap_or(cfg.action.eps0);
    let tau = tau.unwrap_or(cfg.action.tau0);
    let params = ActionParams64::new(cfg.energy, eps, tau)
        .and_then(|p| p.with_delta(cfg.action.delta))
        .map_err(CliError::config)?;
    let settings = cfg.settings();
    let d = &cfg.discretization;
    let family = init_sweep_family(
        &cfg.geometry,
        cfg.energy,
        cfg.w_shape,
        d.family_size,
        d.m_p,
        d.n_vertices,
        settings.rng_seed,
    )?;
    let res = match cfg.w_shape {
        ParameterShape::Path => mountain_pass(&cfg.geometry, &family, &params, None, &settings)?,
        ParameterShape::Cylinder => {
            family_minimax(&cfg.geometry, &family, &params, None, &settings)?
        }
    };
    if !res.converged {
        log::warn!(
            "argmax gradient norm {:.3e} above grad_tol",
            res.grad_norm_at_argmax
        );
    }
    let output = MpassOutput {
        version: VERSION,
        eps,
        tau,
        result: &res,
        argmax_radius_estimate: scaled_length(&cfg.geometry, &res.argmax_loop, 1.0)
            / std::f64::consts::TAU,
    };
    if let Some(dir) = out {
        create_dir(dir)?;
        write_json(&dir.join("mpass.json"), &output)?;
        write_loop(&dir.join("argmax.csv"), &res.argmax_loop)?;
    }
    print_json(&output);
    Ok(0)
}

/// Geometry given on the command line.
pub fn geometry_from_flags(
    kind: &str,
    b: f64,
    a: f64,
    k: u32,
    u_amp: f64,
) -> Result<GeometrySpec64, CliError> {
    let spec = match kind {
        "plane" => GeometrySpec64::plane(b),
        "flat-torus-sine" => GeometrySpec64::flat_torus_sine(a, k),
        "conformal-torus" => GeometrySpec64::conformal_torus(u_amp, a, k),
        other => return Err(CliError::Config(format!("unknown geometry kind {other:?}"))),
    };
    spec.validate().map_err(CliError::config)?;
    Ok(spec)
}

#[derive(Serialize)]
struct FlowOutput {
    steps: usize,
    t_end: f64,
    initial_energy: f64,
    final_energy: f64,
    max_relative_energy_drift: f64,
    closure_residual: f64,
}

/// `flow`: integrate one Lorentz trajectory.
pub fn flow(
    spec: &GeometrySpec64,
    s0: FlowState64,
    t_end: f64,
    steps: usize,
    out: Option<&Path>,
) -> Result<i32, CliError> {
    if !(t_end > 0.0 && t_end.is_finite()) || steps == 0 {
        return Err(CliError::Config("need T > 0 and steps ≥ 1".into()));
    }
    let traj = integrate_flow(spec, s0, t_end, steps);
    let e0 = kinetic_energy(spec, &s0);
    let end = traj.last().copied().unwrap_or(s0);
    let drift = traj
        .iter()
        .map(|s| (kinetic_energy(spec, s) - e0).abs())
        .fold(0.0, f64::max)
        / e0.max(f64::MIN_POSITIVE);
    let closure = ((end.p - s0.p).dot(end.p - s0.p) + (end.v - s0.v).dot(end.v - s0.v)).sqrt();
    if let Some(path) = out {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            create_dir(parent)?;
        }
        let file = File::create(path)
            .map_err(|e| CliError::io(&format!("cannot write {}", path.display()), e))?;
        write_trajectory_csv(spec, &traj, t_end / steps as f64, BufWriter::new(file))
            .map_err(|e| CliError::io(&path.display().to_string(), e))?;
    }
    print_json(&FlowOutput {
        steps,
        t_end,
        initial_energy: e0,
        final_energy: kinetic_energy(spec, &end),
        max_relative_energy_drift: drift,
        closure_residual: closure,
    });
    Ok(0)
}

/// A wobbly star-shaped test loop with irregular spacing.
fn random_loop(rng: &mut ChaCha8Rng, spec: &GeometrySpec64, n: usize) -> Loop64 {
    let scale = if spec.is_torus() { 0.2 } else { 1.5 };
    let center = ChartPoint64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let r0 = scale * rng.random_range(0.3..1.0);
    let modes: Vec<(f64, f64)> = (0..3)
        .map(|_| {
            (
                rng.random_range(-0.2..0.2),
                rng.random_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
    let mut thetas: Vec<f64> = (0..n)
        .map(|j| (j as f64 + rng.random_range(-0.4..0.4)) / n as f64 * std::f64::consts::TAU)
        .collect();
    thetas.sort_by(f64::total_cmp);
    let vertices = thetas
        .iter()
        .map(|&t| {
            let wobble: f64 = modes
                .iter()
                .enumerate()
                .map(|(k, (a, p))| a * ((k + 2) as f64 * t + p).cos())
                .sum();
            let r = r0 * (1.0 + wobble);
            center + ChartPoint64::new(r * (sign * t).cos(), r * (sign * t).sin())
        })
        .collect();
    let l = Loop64::new(vertices).expect("finite vertices");
    if spec.is_torus() {
        l.into_torus()
    } else {
        l
    }
}

#[derive(Serialize)]
struct GradcheckOutput {
    loops: usize,
    seed: u64,
    h: f64,
    max_relative_error: f64,
    worst_loop: usize,
    passed: bool,
}

/// `gradcheck`: analytic gradient against central differences on random loops.
pub fn gradcheck(seed: u64, loops: usize, h: f64, tol: f64) -> Result<i32, CliError> {
    if loops == 0 || !(h > 0.0) {
        return Err(CliError::Config("need loops ≥ 1 and h > 0".into()));
    }
    let kinds = [
        GeometrySpec64::plane(1.3),
        GeometrySpec64::flat_torus_sine(0.7, 2),
        GeometrySpec64::conformal_torus(0.3, 1.0, 1),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = (0.0f64, 0usize);
    for i in 0..loops {
        let spec = kinds[i % kinds.len()];
        let n = rng.random_range(5..40);
        let gamma = random_loop(&mut rng, &spec, n);
        let params = ActionParams64::new(
            rng.random_range(0.2..2.0),
            rng.random_range(0.0..0.3),
            rng.random_range(0.0..0.9),
        )
        .map_err(CliError::config)?;
        let exact = grad_action(&spec, &gamma, &params, None);
        let fd = fd_gradient(&spec, &gamma, &params, None, h);
        let num: f64 = exact
            .iter()
            .zip(&fd)
            .map(|(a, b)| (*a - *b).dot(*a - *b))
            .sum();
        let den: f64 = exact.iter().map(|a| a.dot(*a)).sum();
        let err = (num / den).sqrt();
        if err > worst.0 {
            worst = (err, i);
        }
    }
    let passed = worst.0 < tol;
    print_json(&GradcheckOutput {
        loops,
        seed,
        h,
        max_relative_error: worst.0,
        worst_loop: worst.1,
        passed,
    });
    Ok(if passed { 0 } else { 1 })
}

/// `oracle larmor`.
pub fn larmor(energy: f64, b: f64) -> Result<i32, CliError> {
    let (radius, level) = larmor_orbit(energy, b).map_err(CliError::config)?;
    print_json(&serde_json::json!({ "E": energy, "B": b, "radius": radius, "level": level }));
    Ok(0)
}

#[derive(Serialize)]
struct ShotOrbit {
    initial: FlowState64,
    period: f64,
    closure_residual: f64,
    energy: f64,
    /// `S_E` energy matching the orbit's curvature (`2E` mechanical).
    action_energy: f64,
    action: f64,
    se_residual: f64,
    loop_file: Option<String>,
}

pub struct ShootRequest {
    pub energy: f64,
    pub grid: usize,
    pub directions: usize,
    pub period_cap: f64,
    pub tol: f64,
    pub n_vertices: usize,
}

/// `oracle shoot`: periodic orbits by shooting, each checked as an `S_E` extremal.
pub fn shoot(
    spec: &GeometrySpec64,
    req: &ShootRequest,
    out: Option<&Path>,
) -> Result<i32, CliError> {
    if !(req.energy > 0.0) || req.grid == 0 || req.directions == 0 || req.n_vertices < 3 {
        return Err(CliError::Config(
            "need E > 0, grid ≥ 1, directions ≥ 1, n ≥ 3".into(),
        ));
    }
    let (lo, width) = if spec.is_torus() {
        (0.0, 1.0)
    } else {
        (-1.0, 2.0)
    };
    let mut seeds = Vec::with_capacity(req.grid * req.grid * req.directions);
    for i in 0..req.grid {
        for j in 0..req.grid {
            let p = ChartPoint64::new(
                lo + width * i as f64 / req.grid as f64,
                lo + width * j as f64 / req.grid as f64,
            );
            for d in 0..req.directions {
                let a = std::f64::consts::TAU * d as f64 / req.directions as f64;
                seeds.push(FlowState64::new(p, ChartPoint64::new(a.cos(), a.sin())));
            }
        }
    }
    let found = shooting_periodic(spec, req.energy, &seeds, req.period_cap, req.tol);
    if let Some(dir) = out {
        create_dir(dir)?;
    }
    let e_action = 2.0 * req.energy;
    let mut orbits = Vec::with_capacity(found.len());
    for (i, c) in found.iter().enumerate() {
        let gamma = resample_arclength(spec, &c.to_loop(spec, req.n_vertices)?, req.n_vertices)?;
        let loop_file = match out {
            Some(dir) => {
                let name = format!("orbit_{i}.csv");
                write_loop(&dir.join(&name), &gamma)?;
                Some(name)
            }
            None => None,
        };
        orbits.push(ShotOrbit {
            initial: c.initial,
            period: c.period,
            closure_residual: c.closure_residual,
            energy: c.energy,
            action_energy: e_action,
            action: action_s(spec, &gamma, e_action),
            se_residual: el_residual_se(spec, &gamma, e_action)?.max_res,
            loop_file,
        });
    }
    if let Some(dir) = out {
        write_json(&dir.join("orbits.json"), &orbits)?;
    }
    print_json(&orbits);
    Ok(0)
}
