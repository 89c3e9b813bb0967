//! Driving the regularization `(ε, τ) → (0, 0)` with warm starts, and
//! classifying the sequence of extremals.

use serde::{Deserialize, Serialize};

use crate::dynamics::{el_residual_deq, el_residual_se, ResidualReport};
use crate::error::{Error, Result};
use crate::functional::{action_s_eps_tau, scaled_length, ActionParams, CutoffSpec};
use crate::geometry::GeometrySpec;
use crate::loopspace::{Loop, LoopFamily, ParameterShape};
use crate::minimax::{
    bootstrap_cutoff, family_minimax, init_sweep_family, mountain_pass, DescentSettings,
    MinimaxResult,
};
use crate::Scalar;

/// Order in which `ε` and `τ` are sent to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleMode {
    /// `ε_n = ε_0 ρⁿ`, `τ_n = τ_0 ρⁿ`.
    #[default]
    Joint,
    /// For each `ε_i = ε_0 ρ^i`, run `τ_j = τ_0 ρ^j` for all `j` before moving on.
    Nested,
}

/// Geometric decay of the regularization parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Schedule<T> {
    pub eps0: T,
    pub tau0: T,
    pub rho: T,
    pub n_steps: usize,
    #[serde(default)]
    pub mode: ScheduleMode,
}

impl<T: Scalar> Schedule<T> {
    pub fn new(eps0: T, tau0: T, rho: T, n_steps: usize) -> Result<Self> {
        let s = Self {
            eps0,
            tau0,
            rho,
            n_steps,
            mode: ScheduleMode::Joint,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps0 > T::zero() && self.eps0.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "eps0 must be positive, got {}",
                self.eps0
            )));
        }
        if !(self.tau0 > T::zero() && self.tau0 < T::one()) {
            return Err(Error::InvalidParams(format!(
                "tau must satisfy 0 ≤ τ < 1, got tau0 = {}",
                self.tau0
            )));
        }
        if !(self.rho > T::zero() && self.rho < T::one()) {
            return Err(Error::InvalidParams(format!(
                "rho must lie in (0, 1), got {}",
                self.rho
            )));
        }
        if self.n_steps < 1 {
            return Err(Error::InvalidParams("n_steps must be ≥ 1".into()));
        }
        Ok(())
    }

    /// The `(ε, τ)` pairs in run order.
    pub fn steps(&self) -> Vec<(T, T)> {
        let pow = |n: usize| self.rho.powi(n as i32);
        match self.mode {
            ScheduleMode::Joint => (0..self.n_steps)
                .map(|n| (self.eps0 * pow(n), self.tau0 * pow(n)))
                .collect(),
            ScheduleMode::Nested => (0..self.n_steps)
                .flat_map(|i| (0..self.n_steps).map(move |j| (i, j)))
                .map(|(i, j)| (self.eps0 * pow(i), self.tau0 * pow(j)))
                .collect(),
        }
    }
}

/// Run-level knobs that are not part of the schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuationOptions<T> {
    pub n_vertices: usize,
    pub delta: T,
    /// `β = beta_frac · c_ref`.
    pub beta_frac: T,
    /// `S_E` residual below which a limit loop counts as an extremal.
    pub residual_tol: T,
}

impl<T: Scalar> Default for ContinuationOptions<T> {
    fn default() -> Self {
        Self {
            n_vertices: 128,
            delta: T::lit(1e-9),
            beta_frac: T::lit(0.1),
            residual_tol: T::lit(1e-2),
        }
    }
}

/// One step of a continuation run.
#[derive(Debug, Clone, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct ContinuationRecord<T> {
    pub eps: T,
    pub tau: T,
    pub level: T,
    #[serde(skip)]
    pub loop_: Loop<T>,
    /// Length `√E·L` of the extremal.
    pub l: T,
    pub nu: T,
    #[serde(rename = "E_paper")]
    pub e_paper: T,
    #[serde(rename = "E_exact")]
    pub e_exact: T,
    /// `S_E` residual of the extremal.
    pub residual: ResidualReport<T>,
    /// Largest residual of the regularized equation at this step's `(ε, τ)`.
    pub deq_max_res: T,
    pub converged: bool,
    pub grad_norm: T,
    /// `S_{0,τ}` of the extremal (the cutoff argument).
    pub s0: T,
}

/// Energies `E(1+2ν)` and `E(1+2ν)²` attached to one record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct EnergyRung<T> {
    #[serde(rename = "E_paper")]
    pub e_paper: T,
    #[serde(rename = "E_exact")]
    pub e_exact: T,
    pub l: T,
}

/// Which of the two limit behaviours the records show.
#[derive(Debug, Clone, Serialize)]
#[serde(bound = "T: Scalar", tag = "case", rename_all = "snake_case")]
pub enum Classification<T> {
    #[serde(rename = "converged")]
    ConvergedExtremal {
        #[serde(skip)]
        limit_loop: Loop<T>,
        final_residual: ResidualReport<T>,
    },
    #[serde(rename = "diverging")]
    DivergingLengths {
        ladder: Vec<EnergyRung<T>>,
        #[serde(skip)]
        loops: Vec<Loop<T>>,
    },
    #[serde(rename = "inconclusive")]
    Inconclusive { reason: String },
}

impl<T> Classification<T> {
    pub fn case(&self) -> &'static str {
        match self {
            Self::ConvergedExtremal { .. } => "converged",
            Self::DivergingLengths { .. } => "diverging",
            Self::Inconclusive { .. } => "inconclusive",
        }
    }
}

/// Everything a continuation run produces.
#[derive(Debug, Clone, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct ContinuationOutcome<T> {
    pub cutoff: CutoffSpec<T>,
    pub bootstrap: MinimaxResult<T>,
    pub records: Vec<ContinuationRecord<T>>,
    /// Per-step minimax results, aligned with `records`.
    pub minimax: Vec<MinimaxResult<T>>,
    pub classification: Classification<T>,
    /// Whether `ν = ε·l` is non-increasing over the second half of the run.
    pub nu_trend_ok: bool,
}

/// `(E(1+2ν), E(1+2ν)²)`.
pub fn implied_energy<T: Scalar>(nu: T, energy: T) -> (T, T) {
    let f = T::one() + T::lit(2.0) * nu;
    (energy * f, energy * f * f)
}

/// [`classify_outcome_with`] at the default residual tolerance `1e-2`.
pub fn classify_outcome<T: Scalar>(records: &[ContinuationRecord<T>]) -> Classification<T> {
    classify_outcome_with(records, T::lit(1e-2))
}

/// Classifies the last three records.
///
/// Converged: lengths within 1% of each other and final `S_E` residual below
/// `residual_tol`. Diverging: lengths strictly increasing while `ν` strictly
/// decreases. Anything else, or fewer than three records, is inconclusive.
pub fn classify_outcome_with<T: Scalar>(
    records: &[ContinuationRecord<T>],
    residual_tol: T,
) -> Classification<T> {
    if records.len() < 3 {
        return Classification::Inconclusive {
            reason: format!("{} record(s); at least 3 are needed", records.len()),
        };
    }
    let tail = &records[records.len() - 3..];
    let lo = tail.iter().map(|r| r.l).fold(T::infinity(), T::min);
    let hi = tail.iter().map(|r| r.l).fold(T::neg_infinity(), T::max);
    let last = &tail[2];
    if hi - lo <= T::lit(0.01) * lo && last.residual.max_res < residual_tol {
        return Classification::ConvergedExtremal {
            limit_loop: last.loop_.clone(),
            final_residual: last.residual.clone(),
        };
    }
    let increasing = tail.windows(2).all(|w| w[1].l > w[0].l);
    let nu_falling = tail.windows(2).all(|w| w[1].nu < w[0].nu);
    if increasing && nu_falling {
        return Classification::DivergingLengths {
            ladder: records
                .iter()
                .map(|r| EnergyRung {
                    e_paper: r.e_paper,
                    e_exact: r.e_exact,
                    l: r.l,
                })
                .collect(),
            loops: records.iter().map(|r| r.loop_.clone()).collect(),
        };
    }
    Classification::Inconclusive {
        reason: format!(
            "last lengths span {:.3e}..{:.3e}, final residual {:.3e}",
            lo, hi, last.residual.max_res
        ),
    }
}

fn run_step<T: Scalar>(
    spec: &GeometrySpec<T>,
    family: &LoopFamily<T>,
    params: &ActionParams<T>,
    cut: Option<&CutoffSpec<T>>,
    settings: &DescentSettings<T>,
) -> Result<MinimaxResult<T>> {
    match family.shape {
        ParameterShape::Path => mountain_pass(spec, family, params, cut, settings),
        ParameterShape::Cylinder => family_minimax(spec, family, params, cut, settings),
    }
}

/// Runs the schedule: a cutoff-free bootstrap at the first `(ε, τ)` fixes
/// `c_ref`, then each step runs the cutoff minimax warm-started from the
/// previous step's final family.
pub fn continuation_run<T: Scalar>(
    spec: &GeometrySpec<T>,
    energy: T,
    w_shape: ParameterShape,
    schedule: &Schedule<T>,
    settings: &DescentSettings<T>,
    options: &ContinuationOptions<T>,
) -> Result<ContinuationOutcome<T>> {
    schedule.validate()?;
    settings.validate()?;
    let family = init_sweep_family(
        spec,
        energy,
        w_shape,
        settings.family_size,
        settings.m_p,
        options.n_vertices,
        settings.rng_seed,
    )?;
    let pairs = schedule.steps();
    let (eps0, tau0) = pairs[0];
    let p0 = ActionParams::new(energy, eps0, tau0)?.with_delta(options.delta)?;
    let (cut, bootstrap) = bootstrap_cutoff(spec, &family, &p0, options.beta_frac, settings)?;
    log::info!("bootstrap level c_ref = {}", cut.c_ref);

    let mut family = bootstrap.family.clone();
    let mut records = Vec::with_capacity(pairs.len());
    let mut minimax = Vec::with_capacity(pairs.len());
    for (n, &(eps, tau)) in pairs.iter().enumerate() {
        let params = ActionParams::new(energy, eps, tau)?.with_delta(options.delta)?;
        let res = run_step(spec, &family, &params, Some(&cut), settings)?;
        let gamma = res.argmax_loop.clone();
        let l = scaled_length(spec, &gamma, energy);
        let nu = eps * l;
        let (e_paper, e_exact) = implied_energy(nu, energy);
        let residual = el_residual_se(spec, &gamma, energy)?;
        let deq = el_residual_deq(spec, &gamma, &params)?;
        let s0 = action_s_eps_tau(spec, &gamma, &params.without_eps());
        log::info!(
            "step {n}: eps={eps:.3e} tau={tau:.3e} level={:.6} l={l:.5} residual={:.3e} converged={}",
            res.level,
            residual.max_res,
            res.converged
        );
        records.push(ContinuationRecord {
            eps,
            tau,
            level: res.level,
            loop_: gamma,
            l,
            nu,
            e_paper,
            e_exact,
            residual,
            deq_max_res: deq.max_res,
            converged: res.converged,
            grad_norm: res.grad_norm_at_argmax,
            s0,
        });
        family = res.family.clone();
        minimax.push(res);
    }
    let classification = classify_outcome_with(&records, options.residual_tol);
    let half = records.len() / 2;
    let nu_trend_ok = records[half..].windows(2).all(|w| w[1].nu <= w[0].nu);
    Ok(ContinuationOutcome {
        cutoff: cut,
        bootstrap,
        records,
        minimax,
        classification,
        nu_trend_ok,
    })
}
