//! Independent reference computations used to check the solvers.
//!
//! Shooting works in the mechanical convention: a seed's velocity is rescaled
//! to `|v|_g = √(2E)`, so its orbits are extremals of `S_{2E}`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{flow_endpoint, integrate_flow, kinetic_energy, FlowState};
use crate::error::{Error, Result};
use crate::functional::{action_s, objective, ActionParams, CutoffSpec};
use crate::geometry::{ChartPoint, Covector, GeometryKind, GeometrySpec};
use crate::loopspace::{make_circle, resample_arclength, Loop};
use crate::Scalar;

/// Radius `√E/B` and mountain-pass level `πE/B` of the planar circle profile.
pub fn larmor_orbit<T: Scalar>(energy: T, b: T) -> Result<(T, T)> {
    if !(energy > T::zero() && energy.is_finite()) || !(b > T::zero() && b.is_finite()) {
        return Err(Error::InvalidOracleInput(format!(
            "need E > 0 and B > 0, got E={energy}, B={b}"
        )));
    }
    Ok((energy.sqrt() / b, T::PI() * energy / b))
}

/// Discrete `S_E` on flux-negative circles about the origin, one per radius.
pub fn circle_action_profile<T: Scalar>(
    spec: &GeometrySpec<T>,
    energy: T,
    r_grid: &[T],
    n: usize,
) -> Result<Vec<(T, T)>> {
    if spec.kind != GeometryKind::PlaneConstantB {
        return Err(Error::InvalidOracleInput(
            "circle profiles need the plane geometry".into(),
        ));
    }
    let orientation = if spec.b > T::zero() { -1 } else { 1 };
    r_grid
        .iter()
        .map(|&r| {
            let c = make_circle(ChartPoint::zero(), r, orientation, n)?;
            Ok((r, action_s(spec, &c, energy)))
        })
        .collect()
}

/// Central-difference gradient of the objective, one covector per vertex.
pub fn fd_gradient<T: Scalar>(
    spec: &GeometrySpec<T>,
    gamma: &Loop<T>,
    params: &ActionParams<T>,
    cut: Option<&CutoffSpec<T>>,
    h: T,
) -> Vec<Covector<T>> {
    let mut coords = gamma.coords();
    let mut out = vec![T::zero(); coords.len()];
    for k in 0..coords.len() {
        let x = coords[k];
        coords[k] = x + h;
        let plus = objective(spec, &gamma.with_coords(&coords), params, cut);
        coords[k] = x - h;
        let minus = objective(spec, &gamma.with_coords(&coords), params, cut);
        coords[k] = x;
        out[k] = (plus - minus) / (h + h);
    }
    out.chunks_exact(2)
        .map(|c| ChartPoint::new(c[0], c[1]))
        .collect()
}

/// A periodic orbit found by shooting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct OrbitCandidate<T> {
    pub initial: FlowState<T>,
    pub period: T,
    /// `|Φ_T(s) − s|` over position and velocity components.
    pub closure_residual: T,
    /// Mechanical energy `½ g(v, v)`.
    pub energy: T,
}

impl<T: Scalar> OrbitCandidate<T> {
    /// The orbit sampled at `n` equally spaced times, as a loop in the lift.
    pub fn to_loop(&self, spec: &GeometrySpec<T>, n: usize) -> Result<Loop<T>> {
        let h0 = fine_step(spec, self.initial.v).as_f64();
        let per = ((self.period.as_f64() / (n as f64 * h0)).ceil() as usize).max(1);
        let traj = integrate_flow(spec, self.initial, self.period, n * per);
        let vertices = traj.iter().step_by(per).take(n).map(|s| s.p).collect();
        let l = Loop::new(vertices)?;
        Ok(if spec.is_torus() { l.into_torus() } else { l })
    }
}

/// Largest field strength `|F_12|/det g` on a sample grid in `x`.
fn field_scale<T: Scalar>(spec: &GeometrySpec<T>) -> T {
    (0..64)
        .map(|i| {
            let p = ChartPoint::new(T::lit(i as f64 / 64.0), T::zero());
            spec.field_12(p).abs() / spec.metric(p)[0][0]
        })
        .fold(T::zero(), T::max)
}

/// Integration step resolving both gyration and transit at speed `|v|`.
fn fine_step<T: Scalar>(spec: &GeometrySpec<T>, v: ChartPoint<T>) -> T {
    let omega = field_scale(spec).max(T::lit(1e-3));
    let speed = v.norm().max(T::lit(1e-12));
    (T::lit(0.005) / omega).min(T::lit(0.005) / speed)
}

struct Shooter<'a> {
    spec: &'a GeometrySpec<f64>,
    speed: f64,
    omega: f64,
    steps: usize,
}

impl Shooter<'_> {
    fn state(&self, z: &[f64; 4]) -> FlowState<f64> {
        let p = ChartPoint::new(z[0], z[1]);
        let scale = self.speed / self.spec.metric(p)[0][0].sqrt();
        FlowState::new(p, ChartPoint::new(z[2].cos(), z[2].sin()) * scale)
    }

    /// Closure defect with velocity scaled to a length by `1/ω`.
    fn residual(&self, z: &[f64; 4]) -> [f64; 4] {
        let s = self.state(z);
        let e = flow_endpoint(self.spec, s, z[3], self.steps);
        [
            e.p.x - s.p.x,
            e.p.y - s.p.y,
            (e.v.x - s.v.x) / self.omega,
            (e.v.y - s.v.y) / self.omega,
        ]
    }

    fn closure(&self, z: &[f64; 4]) -> f64 {
        let s = self.state(z);
        let e = flow_endpoint(self.spec, s, z[3], self.steps);
        ((e.p - s.p).dot(e.p - s.p) + (e.v - s.v).dot(e.v - s.v)).sqrt()
    }

    /// Gauss–Newton with minimum-norm steps (the flow has degenerate
    /// directions: time shift, energy, and any continuous orbit family).
    fn refine(&self, mut z: [f64; 4], tol: f64) -> [f64; 4] {
        let norm = |r: &[f64; 4]| r.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut r = self.residual(&z);
        for _ in 0..40 {
            if self.closure(&z) < 0.01 * tol {
                break;
            }
            let mut jac = DMatrix::<f64>::zeros(4, 4);
            let hs = [
                1e-7 / self.omega.max(1.0),
                1e-7 / self.omega.max(1.0),
                1e-7,
                1e-7 * z[3].max(1.0),
            ];
            for (k, &h) in hs.iter().enumerate() {
                let mut zp = z;
                zp[k] += h;
                let mut zm = z;
                zm[k] -= h;
                let rp = self.residual(&zp);
                let rm = self.residual(&zm);
                for i in 0..4 {
                    jac[(i, k)] = (rp[i] - rm[i]) / (2.0 * h);
                }
            }
            let svd = jac.svd(true, true);
            let cutoff = 1e-9 * svd.singular_values.max();
            let rhs = DVector::from_column_slice(&r);
            let Ok(step) = svd.solve(&rhs, cutoff) else {
                break;
            };
            let mut lambda = 1.0;
            let base = norm(&r);
            let mut improved = false;
            for _ in 0..20 {
                let trial = [
                    z[0] - lambda * step[0],
                    z[1] - lambda * step[1],
                    z[2] - lambda * step[2],
                    z[3] - lambda * step[3],
                ];
                if trial[3] <= 0.0 {
                    lambda *= 0.5;
                    continue;
                }
                let rt = self.residual(&trial);
                if norm(&rt) < base {
                    z = trial;
                    r = rt;
                    improved = true;
                    break;
                }
                lambda *= 0.5;
            }
            if !improved {
                break;
            }
        }
        z
    }
}

/// Searches for contractible periodic orbits of the Lorentz flow at
/// mechanical energy `E`, one attempt per seed.
///
/// Each seed's velocity direction is kept and its speed set to `√(2E)`. The
/// orbit is followed up to `period_cap`; the first near return of the state
/// is refined by Gauss–Newton on (position, direction, period). Candidates
/// with closure below `tol` are kept, in seed order, after removing
/// duplicates (cyclic discrete Fréchet distance below `1e-3`).
pub fn shooting_periodic<T: Scalar>(
    spec: &GeometrySpec<T>,
    energy: T,
    seed_grid: &[FlowState<T>],
    period_cap: T,
    tol: T,
) -> Vec<OrbitCandidate<T>> {
    let spec64 = GeometrySpec {
        kind: spec.kind,
        b: spec.b.as_f64(),
        a: spec.a.as_f64(),
        k: spec.k,
        u_amp: spec.u_amp.as_f64(),
    };
    let energy = energy.as_f64();
    let cap = period_cap.as_f64();
    let tol = tol.as_f64();
    if !(energy > 0.0) || !(cap > 0.0) {
        return Vec::new();
    }
    let speed = (2.0 * energy).sqrt();
    let omega = field_scale(&spec64).max(1e-3);
    let found: Vec<Option<OrbitCandidate<f64>>> = seed_grid
        .par_iter()
        .map(|seed| {
            let p = ChartPoint::new(seed.p.x.as_f64(), seed.p.y.as_f64());
            let v = ChartPoint::new(seed.v.x.as_f64(), seed.v.y.as_f64());
            if v.norm() == 0.0 || !p.is_finite() || !v.is_finite() {
                return None;
            }
            shoot_one(&spec64, p, v.y.atan2(v.x), speed, omega, cap, tol)
        })
        .collect();

    let mut kept: Vec<(OrbitCandidate<f64>, Loop<f64>)> = Vec::new();
    for cand in found.into_iter().flatten() {
        let Ok(l) = cand
            .to_loop(&spec64, 64)
            .and_then(|l| resample_arclength(&spec64, &l, 64))
        else {
            continue;
        };
        let torus = spec64.is_torus();
        if kept
            .iter()
            .any(|(_, k)| cyclic_frechet(&l, k, torus) < 1e-3)
        {
            continue;
        }
        kept.push((cand, l));
    }
    kept.into_iter()
        .map(|(c, _)| OrbitCandidate {
            initial: FlowState::new(
                ChartPoint::new(T::lit(c.initial.p.x), T::lit(c.initial.p.y)),
                ChartPoint::new(T::lit(c.initial.v.x), T::lit(c.initial.v.y)),
            ),
            period: T::lit(c.period),
            closure_residual: T::lit(c.closure_residual),
            energy: T::lit(c.energy),
        })
        .collect()
}

fn shoot_one(
    spec: &GeometrySpec<f64>,
    p: ChartPoint<f64>,
    theta: f64,
    speed: f64,
    omega: f64,
    cap: f64,
    tol: f64,
) -> Option<OrbitCandidate<f64>> {
    let probe = Shooter {
        spec,
        speed,
        omega,
        steps: 1,
    };
    let s0 = probe.state(&[p.x, p.y, theta, 1.0]);
    let h = fine_step(spec, s0.v);
    let steps = (cap / h).ceil() as usize;
    let h = cap / steps as f64;
    let traj = integrate_flow(spec, s0, cap, steps);
    let r_l = speed / omega;
    let dist = |s: &FlowState<f64>| {
        let dp = s.p - s0.p;
        let dv = (s.v - s0.v) * (1.0 / omega);
        (dp.dot(dp) + dv.dot(dv)).sqrt()
    };
    let d: Vec<f64> = traj.iter().map(dist).collect();
    let near = 0.5 * r_l;
    // the orbit must first leave the neighbourhood of the seed
    let left = d.iter().position(|&x| x > 2.0 * near)?;
    let event =
        (left.max(1)..steps).find(|&i| d[i] < near && d[i] <= d[i - 1] && d[i] <= d[i + 1])?;
    let t_guess = event as f64 * h;
    let shooter = Shooter {
        spec,
        speed,
        omega,
        steps: ((t_guess / (0.25 * h)).ceil() as usize).max(16),
    };
    let z = shooter.refine([p.x, p.y, theta, t_guess], tol);
    let closure = shooter.closure(&z);
    if !(closure < tol) || !(z[3] > 0.0) || z[3] > cap {
        return None;
    }
    let initial = shooter.state(&z);
    Some(OrbitCandidate {
        initial,
        period: z[3],
        closure_residual: closure,
        energy: kinetic_energy(spec, &initial),
    })
}

/// Discrete Fréchet distance between closed curves, minimized over the
/// starting vertex of `b`. On torus charts distances are taken modulo the lattice.
fn cyclic_frechet(a: &Loop<f64>, b: &Loop<f64>, torus: bool) -> f64 {
    let pa = a.lift();
    let pb = b.lift();
    let dist = |p: ChartPoint<f64>, q: ChartPoint<f64>| {
        let d = p - q;
        if torus {
            ChartPoint::new(d.x - d.x.round(), d.y - d.y.round()).norm()
        } else {
            d.norm()
        }
    };
    // directed Hausdorff distance is a cheap lower bound
    let hausdorff = pa
        .iter()
        .map(|p| {
            pb.iter()
                .map(|q| dist(*p, *q))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    if hausdorff >= 1e-3 {
        return hausdorff;
    }
    let n = pa.len();
    let m = pb.len();
    let mut best = f64::INFINITY;
    let mut ca = vec![0.0f64; (n + 1) * (m + 1)];
    for shift in 0..m {
        let q = |j: usize| pb[(j + shift) % m];
        let p = |i: usize| pa[i % n];
        for i in 0..=n {
            for j in 0..=m {
                let d = dist(p(i), q(j));
                let v = if i == 0 && j == 0 {
                    d
                } else if i == 0 {
                    ca[j - 1].max(d)
                } else if j == 0 {
                    ca[(i - 1) * (m + 1)].max(d)
                } else {
                    let prev = ca[(i - 1) * (m + 1) + j]
                        .min(ca[(i - 1) * (m + 1) + j - 1])
                        .min(ca[i * (m + 1) + j - 1]);
                    prev.max(d)
                };
                ca[i * (m + 1) + j] = v;
            }
        }
        best = best.min(ca[(n + 1) * (m + 1) - 1]);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn larmor_values() {
        assert_eq!(larmor_orbit(1.0, 1.0).unwrap(), (1.0, PI));
        let (r, c) = larmor_orbit(4.0, 2.0).unwrap();
        assert_eq!(r, 1.0);
        assert!((c - TAU).abs() < 1e-15);
        assert!(matches!(
            larmor_orbit(0.0, 1.0),
            Err(Error::InvalidOracleInput(_))
        ));
        assert!(matches!(
            larmor_orbit(1.0, -1.0),
            Err(Error::InvalidOracleInput(_))
        ));
    }

    #[test]
    fn larmor_matches_brute_force_scan() {
        let (e, b) = (1.7f64, 0.6f64);
        let (r, c) = larmor_orbit(e, b).unwrap();
        let (best_r, best_s) = (0..200_001)
            .map(|i| {
                let r = i as f64 * 1e-4;
                (r, TAU * e.sqrt() * r - b * PI * r * r)
            })
            .fold((0.0, f64::MIN), |acc, x| if x.1 > acc.1 { x } else { acc });
        assert!((best_r - r).abs() < 1e-4);
        assert!((best_s - c).abs() < 1e-6);
    }

    #[test]
    fn profile_on_plane() {
        let spec = GeometrySpec::<f64>::plane(1.0);
        let grid: Vec<f64> = (0..=40).map(|i| 0.9 + i as f64 * 0.005).collect();
        let prof = circle_action_profile(&spec, 1.0, &grid, 512).unwrap();
        let max = prof.iter().map(|p| p.1).fold(f64::MIN, f64::max);
        assert!((max - PI).abs() < 1e-3);
        let zero = circle_action_profile(&spec, 1.0, &[0.0], 16).unwrap();
        assert_eq!(zero[0].1, 0.0);
        let torus = GeometrySpec::<f64>::flat_torus_sine(1.0, 1);
        assert!(circle_action_profile(&torus, 1.0, &[0.1], 16).is_err());
    }

    #[test]
    fn plane_shooting_finds_cyclotron_period() {
        let spec = GeometrySpec::<f64>::plane(1.0);
        let seeds = [
            FlowState::new(ChartPoint::new(0.0, 0.0), ChartPoint::new(1.0, 0.0)),
            FlowState::new(ChartPoint::new(3.0, -1.0), ChartPoint::new(0.2, 0.5)),
        ];
        let found = shooting_periodic(&spec, 0.5, &seeds, 10.0, 1e-8);
        assert_eq!(found.len(), 2);
        for c in &found {
            assert!((c.period - TAU).abs() < 1e-6, "{}", c.period);
            assert!((c.energy - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_field_torus_has_no_orbits() {
        let spec = GeometrySpec::<f64>::flat_torus_sine(0.0, 1);
        let seeds = [
            FlowState::new(ChartPoint::new(0.1, 0.3), ChartPoint::new(1.0, 0.3)),
            FlowState::new(ChartPoint::new(0.5, 0.5), ChartPoint::new(0.0, 1.0)),
        ];
        assert!(shooting_periodic(&spec, 0.5, &seeds, 10.0, 1e-8).is_empty());
    }
}
