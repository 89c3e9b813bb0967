//! Euler–Lagrange residuals for discrete loops and the Lorentz flow.
//!
//! Residuals are evaluated in arc-length form on an equal-chord resampling of
//! the loop. At vertex `j` the unit tangent `T_j` is the normalized central
//! chord and the covariant curvature vector is
//!
//! ```text
//! DT/ds ≈ (T_{j+1} − T_{j−1}) / (ℓ_{j−1} + ℓ_j) + Γ(T_j, T_j)
//! ```
//!
//! The residual is `c·DT/ds − g⁻¹F·T` measured in `g`, where `c = √E` for
//! `S_E` and `c = √E·(2ε·l + (1+τ)·l^τ)` for `S_{ε,τ}` with `l = √E·L`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::ActionParams;
use crate::geometry::{bilinear, ChartPoint, GeometrySpec, Tangent};
use crate::loopspace::{edge_lengths, resample_arclength, speed_cv, Loop};
use crate::Scalar;

/// Position and velocity of a charge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct FlowState<T> {
    pub p: ChartPoint<T>,
    pub v: Tangent<T>,
}

impl<T: Scalar> FlowState<T> {
    pub fn new(p: ChartPoint<T>, v: Tangent<T>) -> Self {
        Self { p, v }
    }
}

/// Pointwise Euler–Lagrange residual norms of a loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ResidualReport<T> {
    pub per_vertex: Vec<T>,
    pub max_res: T,
    pub mean_res: T,
    /// Speed variation of the loop as given (before resampling).
    pub speed_cv: T,
}

/// `½ g(v, v)`.
pub fn kinetic_energy<T: Scalar>(spec: &GeometrySpec<T>, s: &FlowState<T>) -> T {
    T::lit(0.5) * bilinear(&spec.metric(s.p), s.v, s.v)
}

fn residual_with<T: Scalar>(
    spec: &GeometrySpec<T>,
    gamma: &Loop<T>,
    coef: impl Fn(T) -> T,
) -> Result<ResidualReport<T>> {
    let total: T = edge_lengths(spec, gamma)
        .into_iter()
        .fold(T::zero(), |a, b| a + b);
    if gamma.is_point_curve() || !(total > T::zero()) {
        return Err(Error::DegenerateLoop);
    }
    let cv = speed_cv(spec, gamma);
    let q = resample_arclength(spec, gamma, gamma.len())?;
    let n = q.len();
    let c = coef(total);
    let lens = edge_lengths(spec, &q);
    let tangents: Vec<Tangent<T>> = (0..n)
        .map(|j| {
            let chord = q.displacement((j + n - 1) % n) + q.displacement(j);
            let norm = spec.norm_at(q.vertices()[j], chord);
            chord * (T::one() / norm)
        })
        .collect();
    let per_vertex: Vec<T> = (0..n)
        .map(|j| {
            let p = q.vertices()[j];
            let prev = (j + n - 1) % n;
            let next = (j + 1) % n;
            let t = tangents[j];
            let ds = lens[prev] + lens[j];
            let curvature = (tangents[next] - tangents[prev]) * (T::one() / ds)
                + spec.christoffel_contract(p, t);
            let r = curvature * c - spec.lorentz(p, t);
            spec.norm_at(p, r)
        })
        .collect();
    let max_res = per_vertex.iter().copied().fold(T::zero(), T::max);
    let mean_res =
        per_vertex.iter().copied().fold(T::zero(), |a, b| a + b) / T::from_usize_lossy(n);
    Ok(ResidualReport {
        per_vertex,
        max_res,
        mean_res,
        speed_cv: cv,
    })
}

/// Residual of the `S_E` extremal equation `√E·DT/ds = g⁻¹F·T`.
pub fn el_residual_se<T: Scalar>(
    spec: &GeometrySpec<T>,
    gamma: &Loop<T>,
    energy: T,
) -> Result<ResidualReport<T>> {
    let params = ActionParams {
        energy,
        eps: T::zero(),
        tau: T::zero(),
        delta: T::zero(),
    };
    el_residual_deq(spec, gamma, &params)
}

/// Residual of the `S_{ε,τ}` extremal equation on the arc-length representative.
pub fn el_residual_deq<T: Scalar>(
    spec: &GeometrySpec<T>,
    gamma: &Loop<T>,
    params: &ActionParams<T>,
) -> Result<ResidualReport<T>> {
    let root_e = params.energy.sqrt();
    let two = T::lit(2.0);
    residual_with(spec, gamma, |length| {
        let l = root_e * length;
        root_e * (two * params.eps * l + (T::one() + params.tau) * l.powf(params.tau))
    })
}

fn flow_rhs<T: Scalar>(spec: &GeometrySpec<T>, s: &FlowState<T>) -> FlowState<T> {
    FlowState::new(
        s.v,
        spec.lorentz(s.p, s.v) - spec.christoffel_contract(s.p, s.v),
    )
}

fn axpy<T: Scalar>(s: &FlowState<T>, k: &FlowState<T>, h: T) -> FlowState<T> {
    FlowState::new(s.p + k.p * h, s.v + k.v * h)
}

/// One classical fourth-order Runge–Kutta step of size `h`.
pub fn rk4_step<T: Scalar>(spec: &GeometrySpec<T>, s: &FlowState<T>, h: T) -> FlowState<T> {
    let half = h * T::lit(0.5);
    let k1 = flow_rhs(spec, s);
    let k2 = flow_rhs(spec, &axpy(s, &k1, half));
    let k3 = flow_rhs(spec, &axpy(s, &k2, half));
    let k4 = flow_rhs(spec, &axpy(s, &k3, h));
    let sixth = h / T::lit(6.0);
    let two = T::lit(2.0);
    FlowState::new(
        s.p + (k1.p + k2.p * two + k3.p * two + k4.p) * sixth,
        s.v + (k1.v + k2.v * two + k3.v * two + k4.v) * sixth,
    )
}

/// Integrates `v̇ + Γ(v,v) = g⁻¹F v` over `[0, t_end]` in `steps` equal steps.
///
/// Returns `steps + 1` states including the initial one. Positions are not
/// wrapped, so torus trajectories stay in the lift.
pub fn integrate_flow<T: Scalar>(
    spec: &GeometrySpec<T>,
    s0: FlowState<T>,
    t_end: T,
    steps: usize,
) -> Vec<FlowState<T>> {
    let steps = steps.max(1);
    let h = t_end / T::from_usize_lossy(steps);
    let mut out = Vec::with_capacity(steps + 1);
    out.push(s0);
    let mut s = s0;
    for _ in 0..steps {
        s = rk4_step(spec, &s, h);
        out.push(s);
    }
    out
}

/// Final state of [`integrate_flow`] without storing the trajectory.
pub fn flow_endpoint<T: Scalar>(
    spec: &GeometrySpec<T>,
    s0: FlowState<T>,
    t_end: T,
    steps: usize,
) -> FlowState<T> {
    let steps = steps.max(1);
    let h = t_end / T::from_usize_lossy(steps);
    let mut s = s0;
    for _ in 0..steps {
        s = rk4_step(spec, &s, h);
    }
    s
}

/// Writes a trajectory as CSV with header `t,x,y,vx,vy,energy`.
pub fn write_trajectory_csv<T: Scalar, W: Write>(
    spec: &GeometrySpec<T>,
    states: &[FlowState<T>],
    dt: T,
    out: W,
) -> Result<()> {
    let io = |e: csv::Error| Error::LoopFile(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "x", "y", "vx", "vy", "energy"])
        .map_err(io)?;
    for (i, s) in states.iter().enumerate() {
        let t = dt * T::from_usize_lossy(i);
        w.write_record([
            t.to_string(),
            s.p.x.to_string(),
            s.p.y.to_string(),
            s.v.x.to_string(),
            s.v.y.to_string(),
            kinetic_energy(spec, s).to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::LoopFile(e.to_string()))
}
