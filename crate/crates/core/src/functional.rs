//! Discrete action functionals and their exact gradients.
//!
//! With `N` vertices, edge `j` has displacement `d_j`, midpoint `m_j` and
//! energy-scaled speed `s_j = N·√E·|d_j|_{g(m_j)}`. The sums are
//!
//! ```text
//! S_E       = Σ_j √E·|d_j|_{g(m_j)} + A(m_j)·d_j
//! S_{ε,τ}   = Σ_j (ε s_j² + s_j^{1+τ}) / N + A(m_j)·d_j
//! F_{ε,τ}   = f(S_{0,τ}) · S_{ε,τ}
//! ```
//!
//! The general energy `E` enters only through the metric rescaling
//! `g → E·g`. Gradients are exact derivatives of these sums with respect to
//! the vertex coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{bilinear, mat_vec, ChartPoint, Covector, GeometrySpec};
use crate::loopspace::Loop;
use crate::Scalar;

/// Scalars of the regularized action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ActionParams<T> {
    /// Energy level `E > 0`.
    #[serde(rename = "E")]
    pub energy: T,
    /// Quadratic regularization `ε ≥ 0`.
    pub eps: T,
    /// Exponent perturbation `0 ≤ τ < 1`.
    pub tau: T,
    /// Speed floor used where `|ẋ|^{τ−1}` appears in the gradient.
    pub delta: T,
}

impl<T: Scalar> ActionParams<T> {
    pub fn new(energy: T, eps: T, tau: T) -> Result<Self> {
        let p = Self {
            energy,
            eps,
            tau,
            delta: T::lit(1e-9),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_delta(mut self, delta: T) -> Result<Self> {
        self.delta = delta;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.energy > T::zero() && self.energy.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "energy must be positive, got {}",
                self.energy
            )));
        }
        if !(self.eps >= T::zero() && self.eps.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "eps must satisfy eps ≥ 0, got {}",
                self.eps
            )));
        }
        if !(self.tau >= T::zero() && self.tau < T::one()) {
            return Err(Error::InvalidParams(format!(
                "tau must satisfy 0 ≤ τ < 1, got {}",
                self.tau
            )));
        }
        if !(self.delta >= T::zero() && self.delta.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "delta must be ≥ 0, got {}",
                self.delta
            )));
        }
        Ok(())
    }

    /// Same parameters with `ε = 0` (the argument of the cutoff).
    pub fn without_eps(&self) -> Self {
        Self {
            eps: T::zero(),
            ..*self
        }
    }
}

/// Ramp thresholds of the cutoff functional and the level margin `β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CutoffSpec<T> {
    /// Reference level `c`.
    pub c_ref: T,
    /// `c/20`.
    pub lo: T,
    /// `c/10`.
    pub hi: T,
    pub beta: T,
}

impl<T: Scalar> CutoffSpec<T> {
    pub fn new(c_ref: T, beta: T) -> Result<Self> {
        if !(c_ref > T::zero() && c_ref.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "reference level must be positive, got {c_ref}"
            )));
        }
        if !(beta > T::zero()) {
            return Err(Error::InvalidParams(format!(
                "beta must be positive, got {beta}"
            )));
        }
        Ok(Self {
            c_ref,
            lo: c_ref / T::lit(20.0),
            hi: c_ref / T::lit(10.0),
            beta,
        })
    }

    /// Cubic smoothstep ramp: 0 below `lo`, 1 above `hi`.
    pub fn f(&self, x: T) -> T {
        self.f_and_slope(x).0
    }

    /// Ramp value and derivative.
    pub fn f_and_slope(&self, x: T) -> (T, T) {
        if x <= self.lo {
            (T::zero(), T::zero())
        } else if x >= self.hi {
            (T::one(), T::zero())
        } else {
            let w = self.hi - self.lo;
            let t = (x - self.lo) / w;
            let three = T::lit(3.0);
            let two = T::lit(2.0);
            (
                t * t * (three - two * t),
                T::lit(6.0) * t * (T::one() - t) / w,
            )
        }
    }
}

/// Free function form of [`CutoffSpec::f`].
pub fn cutoff_f<T: Scalar>(x: T, cut: &CutoffSpec<T>) -> T {
    cut.f(x)
}

/// Per-edge geometric data shared by values and gradients.
struct Edge<T> {
    d: ChartPoint<T>,
    m: ChartPoint<T>,
    /// `d·g(m)·d`
    q: T,
}

fn edges<'a, T: Scalar>(
    spec: &'a GeometrySpec<T>,
    gamma: &'a Loop<T>,
) -> impl Iterator<Item = Edge<T>> + 'a {
    let spec = *spec;
    (0..gamma.len()).map(move |j| {
        let d = gamma.displacement(j);
        let m = gamma.midpoint(j);
        let q = bilinear(&spec.metric(m), d, d).max(T::zero());
        Edge { d, m, q }
    })
}

/// Circulation `∮A` (midpoint rule; exact signed area for the plane potential).
pub fn circulation<T: Scalar>(spec: &GeometrySpec<T>, gamma: &Loop<T>) -> T {
    edges(spec, gamma).fold(T::zero(), |acc, e| acc + spec.potential(e.m).dot(e.d))
}

/// `S_E(γ) = √E·L(γ) + ∮A`.
pub fn action_s<T: Scalar>(spec: &GeometrySpec<T>, gamma: &Loop<T>, energy: T) -> T {
    let root_e = energy.sqrt();
    edges(spec, gamma).fold(T::zero(), |acc, e| {
        acc + root_e * e.q.sqrt() + spec.potential(e.m).dot(e.d)
    })
}

/// Discretization of `∫|ẋ|^m dt` in the energy-scaled metric.
pub fn speed_power_integral<T: Scalar>(
    spec: &GeometrySpec<T>,
    gamma: &Loop<T>,
    energy: T,
    m: T,
) -> T {
    let n = T::from_usize_lossy(gamma.len());
    let scale = n * energy.sqrt();
    edges(spec, gamma).fold(T::zero(), |acc, e| acc + (scale * e.q.sqrt()).powf(m)) / n
}

/// Length in the energy-scaled metric, `√E·L(γ)`.
pub fn scaled_length<T: Scalar>(spec: &GeometrySpec<T>, gamma: &Loop<T>, energy: T) -> T {
    let root_e = energy.sqrt();
    edges(spec, gamma).fold(T::zero(), |acc, e| acc + root_e * e.q.sqrt())
}

/// `S_{ε,τ}(γ)`.
pub fn action_s_eps_tau<T: Scalar>(
    spec: &GeometrySpec<T>,
    gamma: &Loop<T>,
    params: &ActionParams<T>,
) -> T {
    // arithmetic mirrors `s_eps_tau_with_grad` so values agree bitwise
    let n = T::from_usize_lossy(gamma.len());
    let root_n2e = (n * n * params.energy).sqrt();
    let expo = T::one() + params.tau;
    edges(spec, gamma).fold(T::zero(), |acc, e| {
        let s = root_n2e * e.q.sqrt();
        let acc = acc + (params.eps * s * s + s.powf(expo)) / n;
        acc + spec.potential(e.m).dot(e.d)
    })
}

/// Cutoff functional `f(S_{0,τ}(γ))·S_{ε,τ}(γ)`.
pub fn action_f_cutoff<T: Scalar>(
    spec: &GeometrySpec<T>,
    gamma: &Loop<T>,
    params: &ActionParams<T>,
    cut: &CutoffSpec<T>,
) -> T {
    let s0 = action_s_eps_tau(spec, gamma, &params.without_eps());
    let f = cut.f(s0);
    if f == T::zero() {
        return T::zero();
    }
    f * action_s_eps_tau(spec, gamma, params)
}

/// The functional the solvers minimize: `F_{ε,τ}` with a cutoff, `S_{ε,τ}` without.
pub fn objective<T: Scalar>(
    spec: &GeometrySpec<T>,
    gamma: &Loop<T>,
    params: &ActionParams<T>,
    cut: Option<&CutoffSpec<T>>,
) -> T {
    match cut {
        Some(c) => action_f_cutoff(spec, gamma, params, c),
        None => action_s_eps_tau(spec, gamma, params),
    }
}

/// Value and gradient of `S_{ε,τ}` and, in the same pass, of `S_{0,τ}`.
fn s_eps_tau_with_grad<T: Scalar>(
    spec: &GeometrySpec<T>,
    gamma: &Loop<T>,
    params: &ActionParams<T>,
    want_s0: bool,
) -> (T, Vec<Covector<T>>, T, Vec<Covector<T>>) {
    let nv = gamma.len();
    let n = T::from_usize_lossy(nv);
    let n2e = n * n * params.energy;
    let ne = n * params.energy;
    let expo = T::one() + params.tau;
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let root_n2e = n2e.sqrt();
    let mut value = T::zero();
    let mut value0 = T::zero();
    let mut grad = vec![ChartPoint::zero(); nv];
    let mut grad0 = if want_s0 {
        vec![ChartPoint::zero(); nv]
    } else {
        Vec::new()
    };
    for (j, e) in edges(spec, gamma).enumerate() {
        let next = (j + 1) % nv;
        let s = root_n2e * e.q.sqrt();
        let power = s.powf(expo);
        let a = spec.potential(e.m);
        let circ = a.dot(e.d);
        value = value + (params.eps * s * s + power) / n;
        value = value + circ;

        // ∂q/∂v_{j+1} = 2 g d + ½ h,  ∂q/∂v_j = −2 g d + ½ h,  h_k = d·∂_k g·d
        let g = spec.metric(e.m);
        let gd = mat_vec(&g, e.d) * two;
        let dg = spec.metric_derivs(e.m);
        let h = ChartPoint::new(bilinear(&dg[0], e.d, e.d), bilinear(&dg[1], e.d, e.d)) * half;
        // ∂(A·d)/∂v_{j+1} = A + ½ J,  ∂(A·d)/∂v_j = −A + ½ J,  J_k = Σ_i ∂_k A_i d_i
        let ja = spec.potential_jacobian(e.m);
        let jd = ChartPoint::new(
            ja[0][0] * e.d.x + ja[0][1] * e.d.y,
            ja[1][0] * e.d.x + ja[1][1] * e.d.y,
        ) * half;

        let s_floor = s.max(params.delta);
        let power_slope = if s_floor > T::zero() {
            ne * half * expo * s_floor.powf(params.tau - T::one())
        } else {
            T::zero()
        };
        let dq = ne * params.eps + power_slope;
        grad[next] += (gd + h) * dq + a + jd;
        grad[j] += (h - gd) * dq - a + jd;

        if want_s0 {
            value0 = value0 + (T::zero() * s * s + power) / n;
            value0 = value0 + circ;
            grad0[next] += (gd + h) * power_slope + a + jd;
            grad0[j] += (h - gd) * power_slope - a + jd;
        }
    }
    (value, grad, value0, grad0)
}

/// Exact gradient of the discrete objective (one covector per vertex):
/// `S_{ε,τ}` when `cut` is `None`, the cutoff functional otherwise.
pub fn grad_action<T: Scalar>(
    spec: &GeometrySpec<T>,
    gamma: &Loop<T>,
    params: &ActionParams<T>,
    cut: Option<&CutoffSpec<T>>,
) -> Vec<Covector<T>> {
    value_and_grad(spec, gamma, params, cut).1
}

/// Objective value together with its gradient.
pub fn value_and_grad<T: Scalar>(
    spec: &GeometrySpec<T>,
    gamma: &Loop<T>,
    params: &ActionParams<T>,
    cut: Option<&CutoffSpec<T>>,
) -> (T, Vec<Covector<T>>) {
    match cut {
        None => {
            let (v, g, _, _) = s_eps_tau_with_grad(spec, gamma, params, false);
            (v, g)
        }
        Some(c) => {
            let (s, gs, s0, gs0) = s_eps_tau_with_grad(spec, gamma, params, true);
            let (f, df) = c.f_and_slope(s0);
            let grad = gs
                .iter()
                .zip(&gs0)
                .map(|(&a, &b)| a * f + b * (df * s))
                .collect();
            (f * s, grad)
        }
    }
}

/// Gradient of the circulation term `∮A` alone.
pub fn grad_circulation<T: Scalar>(spec: &GeometrySpec<T>, gamma: &Loop<T>) -> Vec<Covector<T>> {
    let nv = gamma.len();
    let half = T::lit(0.5);
    let mut grad = vec![ChartPoint::zero(); nv];
    for (j, e) in edges(spec, gamma).enumerate() {
        let a = spec.potential(e.m);
        let ja = spec.potential_jacobian(e.m);
        let jd = ChartPoint::new(
            ja[0][0] * e.d.x + ja[0][1] * e.d.y,
            ja[1][0] * e.d.x + ja[1][1] * e.d.y,
        ) * half;
        grad[(j + 1) % nv] += a + jd;
        grad[j] += jd - a;
    }
    grad
}

/// Euclidean norm of a covector list viewed as one flat vector.
pub fn grad_norm<T: Scalar>(grad: &[Covector<T>]) -> T {
    grad.iter().fold(T::zero(), |acc, g| acc + g.dot(*g)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loopspace::{concat, length, make_circle, make_point_loop, resample_arclength};
    use std::f64::consts::PI;

    fn origin() -> ChartPoint<f64> {
        ChartPoint::new(0.0, 0.0)
    }

    #[test]
    fn param_validation() {
        assert!(ActionParams::new(1.0, 0.0, 0.0).is_ok());
        assert!(ActionParams::new(0.0, 0.0, 0.0).is_err());
        assert!(ActionParams::new(1.0, -1e-3, 0.0).is_err());
        let err = ActionParams::new(1.0, 0.0, 1.5).unwrap_err();
        assert!(err.to_string().contains("0 ≤ τ < 1"));
        assert!(CutoffSpec::new(0.0, 0.1).is_err());
    }

    #[test]
    fn circulation_is_signed_area_on_plane() {
        let spec = GeometrySpec::plane(1.0);
        let c = make_circle(origin(), 1.0, -1, 256).unwrap();
        assert!((circulation(&spec, &c) + PI).abs() < 1e-3);
        let cw = make_circle(origin(), 1.0, 1, 256).unwrap();
        assert!((circulation(&spec, &cw) - PI).abs() < 1e-3);
    }

    #[test]
    fn action_s_examples() {
        let spec = GeometrySpec::plane(1.0);
        assert_eq!(
            action_s(
                &spec,
                &make_point_loop(ChartPoint::new(3.0, 1.0), 9).unwrap(),
                1.0
            ),
            0.0
        );
        let c = make_circle(origin(), 1.0, -1, 512).unwrap();
        assert!((action_s(&spec, &c, 1.0) - PI).abs() < 1e-2);
    }

    #[test]
    fn regularized_action_examples() {
        let spec = GeometrySpec::plane(1.0);
        let c = make_circle(origin(), 1.0, -1, 512).unwrap();
        let p0 = ActionParams::new(1.0, 0.0, 0.0).unwrap();
        let base = action_s_eps_tau(&spec, &c, &p0);
        assert!((base - action_s(&spec, &c, 1.0)).abs() < 1e-12);
        assert!((base - PI).abs() < 1e-2);
        let p1 = ActionParams::new(1.0, 0.1, 0.0).unwrap();
        let v = action_s_eps_tau(&spec, &c, &p1);
        assert!((v - (PI + 0.1 * (2.0 * PI).powi(2))).abs() < 1e-2);
    }

    #[test]
    fn cutoff_ramp_values() {
        let cut = CutoffSpec::<f64>::new(2.0, 0.2).unwrap();
        assert_eq!(cutoff_f(cut.lo, &cut), 0.0);
        assert_eq!(cutoff_f(cut.hi, &cut), 1.0);
        assert!((cutoff_f(0.5 * (cut.lo + cut.hi), &cut) - 0.5).abs() < 1e-15);
        assert_eq!(cut.f_and_slope(cut.lo).1, 0.0);
        assert_eq!(cut.f_and_slope(cut.hi).1, 0.0);
    }

    #[test]
    fn cutoff_functional_regions() {
        let spec = GeometrySpec::plane(1.0);
        let params = ActionParams::new(1.0, 1e-2, 1e-2).unwrap();
        let cut = CutoffSpec::new(1.0, 0.1).unwrap();
        let pt = make_point_loop(ChartPoint::new(1.0, 2.0), 16).unwrap();
        assert_eq!(action_f_cutoff(&spec, &pt, &params, &cut), 0.0);
        let c = make_circle(origin(), 1.0, -1, 64).unwrap();
        let s0 = action_s_eps_tau(&spec, &c, &params.without_eps());
        // reference level making S_{0,τ} = 2c and S_{0,τ} = c/20 respectively
        let above = CutoffSpec::new(s0 / 2.0, 0.1).unwrap();
        assert_eq!(
            action_f_cutoff(&spec, &c, &params, &above),
            action_s_eps_tau(&spec, &c, &params)
        );
        let at_lo = CutoffSpec::new(s0 * 20.0, 0.1).unwrap();
        assert_eq!(action_f_cutoff(&spec, &c, &params, &at_lo), 0.0);
    }

    #[test]
    fn holder_lower_bound() {
        let spec = GeometrySpec::conformal_torus(0.3, 1.0, 1);
        let c = make_circle(ChartPoint::new(0.3, 0.2), 0.2, 1, 40).unwrap();
        let verts: Vec<_> = c
            .vertices()
            .iter()
            .enumerate()
            .map(|(j, v)| *v + ChartPoint::new(0.01 * (j as f64).sin(), 0.0))
            .collect();
        let l = Loop::new(verts).unwrap();
        let params = ActionParams::new(2.0, 0.05, 0.3).unwrap();
        let len = scaled_length(&spec, &l, 2.0);
        let bound = params.eps * len * len + len.powf(1.3) + circulation(&spec, &l);
        assert!(action_s_eps_tau(&spec, &l, &params) >= bound - 1e-9);
        let r = resample_arclength(&spec, &l, 40).unwrap();
        let len = scaled_length(&spec, &r, 2.0);
        for m in [1.1, 1.5, 2.0] {
            let lhs = len.powf(m);
            let rhs = speed_power_integral(&spec, &r, 2.0, m);
            assert!((lhs - rhs).abs() <= 1e-9 * rhs);
        }
    }

    #[test]
    fn additivity_under_concat() {
        let spec = GeometrySpec::<f64>::plane(0.7);
        let c1 = make_circle(ChartPoint::new(1.0, 0.0), 1.0, -1, 16).unwrap();
        let c2 = make_circle(ChartPoint::new(-0.5, 0.0), 0.5, 1, 11).unwrap();
        let mut v2 = c2.vertices().to_vec();
        v2[3] = c1.vertices()[5];
        let c2 = Loop::new(v2).unwrap();
        let joined = concat(&c1, &c2).unwrap();
        let sum = action_s(&spec, &c1, 1.3) + action_s(&spec, &c2, 1.3);
        assert!((action_s(&spec, &joined, 1.3) - sum).abs() < 1e-13);
        assert!((length(&spec, &joined) - length(&spec, &c1) - length(&spec, &c2)).abs() < 1e-13);
    }

    #[test]
    fn translation_invariance_of_plane_gradient() {
        let spec = GeometrySpec::plane(1.0);
        let params = ActionParams::new(1.0, 1e-2, 0.2).unwrap();
        let c = make_circle(ChartPoint::new(0.4, -1.0), 0.8, -1, 33).unwrap();
        let verts: Vec<_> = c
            .vertices()
            .iter()
            .enumerate()
            .map(|(j, v)| {
                *v + ChartPoint::new(0.05 * (3.0 * j as f64).cos(), 0.03 * (j as f64).sin())
            })
            .collect();
        let l = Loop::new(verts).unwrap();
        let g = grad_action(&spec, &l, &params, None);
        let sum = g.iter().fold(ChartPoint::zero(), |a, b| a + *b);
        assert!(sum.norm() < 1e-9);
    }

    #[test]
    fn point_loop_gradient_vanishes() {
        let spec = GeometrySpec::plane(1.0);
        let params = ActionParams::new(1.0, 1e-2, 0.5).unwrap();
        let pt = make_point_loop(ChartPoint::new(1.0, 1.0), 8).unwrap();
        let g = grad_action(&spec, &pt, &params, None);
        assert!(grad_norm(&g) < 1e-15);
    }
}
