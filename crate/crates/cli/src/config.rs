//! Experiment configuration files.

use std::path::{Path, PathBuf};

use magloop::continuation::ContinuationOptions;
use magloop::{DescentSettings64, GeometrySpec64, ParameterShape, Schedule64, ScheduleMode};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Environment variable naming the directory that relative output paths resolve against.
pub const OUTPUT_ROOT_ENV: &str = "MAGLOOP_OUTPUT_ROOT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Discretization {
    pub n_vertices: usize,
    pub family_size: usize,
    #[serde(default = "default_m_p")]
    pub m_p: usize,
}

fn default_m_p() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionConfig {
    pub eps0: f64,
    pub tau0: f64,
    pub rho: f64,
    pub n_steps: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_beta_frac")]
    pub beta_frac: f64,
    #[serde(default)]
    pub mode: ScheduleMode,
}

fn default_delta() -> f64 {
    1e-9
}

fn default_beta_frac() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub step0: f64,
    pub backtrack: f64,
    pub path_tol: f64,
    pub polish_iters: usize,
    /// `S_E` residual below which a limit loop counts as converged.
    pub residual_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = DescentSettings64::default();
        Self {
            max_iters: d.max_iters,
            grad_tol: d.grad_tol,
            step0: d.step0,
            backtrack: d.backtrack,
            path_tol: d.path_tol,
            polish_iters: d.polish_iters,
            residual_tol: ContinuationOptions::<f64>::default().residual_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub geometry: GeometrySpec64,
    #[serde(rename = "E")]
    pub energy: f64,
    pub w_shape: ParameterShape,
    pub discretization: Discretization,
    pub action: ActionConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    /// Reads and validates a config file.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}:{msg}", path.display())),
            other => other,
        })
    }

    /// Parses and validates config text; errors carry `line:column`.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text)
            .map_err(|e| CliError::Config(format!("{}:{}: {e}", e.line(), e.column())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        self.geometry.validate().map_err(CliError::config)?;
        if !(self.energy > 0.0 && self.energy.is_finite()) {
            return bad(format!("E must be positive, got {}", self.energy));
        }
        if self.w_shape == ParameterShape::Cylinder && !self.geometry.is_torus() {
            return bad("w_shape \"cylinder\" needs a torus geometry".into());
        }
        if self.discretization.n_vertices < 3 {
            return bad(format!(
                "n_vertices must be ≥ 3, got {}",
                self.discretization.n_vertices
            ));
        }
        let a = &self.action;
        if !(a.delta >= 0.0 && a.delta.is_finite()) {
            return bad(format!("delta must be ≥ 0, got {}", a.delta));
        }
        if !(a.beta_frac > 0.0 && a.beta_frac.is_finite()) {
            return bad(format!("beta_frac must be positive, got {}", a.beta_frac));
        }
        if !(self.solver.residual_tol > 0.0) {
            return bad(format!(
                "residual_tol must be positive, got {}",
                self.solver.residual_tol
            ));
        }
        self.schedule()?;
        self.settings().validate().map_err(CliError::config)?;
        Ok(())
    }

    pub fn schedule(&self) -> Result<Schedule64, CliError> {
        let a = &self.action;
        let s = Schedule64 {
            eps0: a.eps0,
            tau0: a.tau0,
            rho: a.rho,
            n_steps: a.n_steps,
            mode: a.mode,
        };
        s.validate().map_err(CliError::config)?;
        Ok(s)
    }

    pub fn settings(&self) -> DescentSettings64 {
        let s = &self.solver;
        DescentSettings64 {
            max_iters: s.max_iters,
            grad_tol: s.grad_tol,
            step0: s.step0,
            backtrack: s.backtrack,
            family_size: self.discretization.family_size,
            m_p: self.discretization.m_p,
            rng_seed: self.seed,
            path_tol: s.path_tol,
            polish_iters: s.polish_iters,
        }
    }

    pub fn options(&self) -> ContinuationOptions<f64> {
        ContinuationOptions {
            n_vertices: self.discretization.n_vertices,
            delta: self.action.delta,
            beta_frac: self.action.beta_frac,
            residual_tol: self.solver.residual_tol,
        }
    }
}

/// Where a command writes its files. An explicit `--out` path is used as
/// given; otherwise the config's `output_dir` (or `magloop-out/<default_name>`)
/// is taken relative to `MAGLOOP_OUTPUT_ROOT` when that is set.
pub fn resolve_output_dir(
    explicit: Option<&Path>,
    configured: Option<&Path>,
    default_name: &str,
) -> PathBuf {
    let root = std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from);
    let chosen = explicit
        .or(configured)
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("magloop-out").join(default_name));
    match root {
        Some(root) if chosen.is_relative() && explicit.is_none() => root.join(chosen),
        _ => chosen,
    }
}
