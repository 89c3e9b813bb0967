//! Sweep families and numerical mountain-pass levels.
//!
//! A sweep family starts at one-point curves and ends at loops of negative
//! action. Its level is the largest objective value over the family. The
//! mountain-pass solver lowers that level by moving every interior loop along
//! the part of its gradient orthogonal to the sweep direction (with a
//! backtracking line search, so no loop's value ever increases), keeps the
//! sweep evenly spaced, and finally refines the highest loop onto the nearby
//! critical point with [`newton_polish`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::{
    action_s, action_s_eps_tau, grad_norm, objective, value_and_grad, ActionParams, CutoffSpec,
};
use crate::geometry::{ChartPoint, Covector, GeometrySpec};
use crate::loopspace::{
    make_circle_with_phase, refine_row, reinterpolate_row, Loop, LoopFamily, ParameterShape,
};
use crate::saddle::newton_polish;
use crate::Scalar;

/// Knobs of the descent and mountain-pass solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", default, deny_unknown_fields)]
pub struct DescentSettings<T> {
    pub max_iters: usize,
    /// Gradient norm at which a loop counts as critical.
    pub grad_tol: T,
    /// Initial line-search step.
    pub step0: T,
    /// Step shrink factor in `(0, 1)`.
    pub backtrack: T,
    /// Loops per sweep (`M`).
    pub family_size: usize,
    /// Base points of a cylinder family (`M_P`).
    pub m_p: usize,
    pub rng_seed: u64,
    /// Orthogonal-gradient norm at which the sweep deformation stops.
    pub path_tol: T,
    /// Newton steps spent on the highest loop.
    pub polish_iters: usize,
}

impl<T: Scalar> Default for DescentSettings<T> {
    fn default() -> Self {
        Self {
            max_iters: 300,
            grad_tol: T::lit(1e-8),
            step0: T::lit(1e-2),
            backtrack: T::lit(0.5),
            family_size: 33,
            m_p: 8,
            rng_seed: 0,
            path_tol: T::lit(1e-6),
            polish_iters: 25,
        }
    }
}

impl<T: Scalar> DescentSettings<T> {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::InvalidParams("max_iters must be ≥ 1".into()));
        }
        if !(self.backtrack > T::zero() && self.backtrack < T::one()) {
            return Err(Error::InvalidParams(format!(
                "backtrack must lie in (0, 1), got {}",
                self.backtrack
            )));
        }
        if !(self.grad_tol > T::zero()) {
            return Err(Error::InvalidParams(format!(
                "grad_tol must be positive, got {}",
                self.grad_tol
            )));
        }
        if !(self.step0 > T::zero() && self.step0.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "step0 must be positive, got {}",
                self.step0
            )));
        }
        if !(self.path_tol >= T::zero()) {
            return Err(Error::InvalidParams(format!(
                "path_tol must be ≥ 0, got {}",
                self.path_tol
            )));
        }
        if self.family_size < 3 {
            return Err(Error::InvalidParams("family_size must be ≥ 3".into()));
        }
        if self.m_p < 1 {
            return Err(Error::InvalidParams("m_p must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// Result of a mountain-pass run.
///
/// Serializes as `{"level", "converged", "grad_norm", "history"}`; the
/// loops are written separately.
#[derive(Debug, Clone, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct MinimaxResult<T> {
    /// Largest objective value over the final family.
    pub level: T,
    pub converged: bool,
    #[serde(rename = "grad_norm")]
    pub grad_norm_at_argmax: T,
    /// `(iteration, level)` after each deformation sweep.
    pub history: Vec<(usize, T)>,
    #[serde(skip)]
    pub argmax_loop: Loop<T>,
    /// `(row, position)` of the highest loop.
    #[serde(skip)]
    pub argmax_index: (usize, usize),
    /// Final family, usable as a warm start.
    #[serde(skip)]
    pub family: LoopFamily<T>,
}

/// Base points and orientation of the built-in sweeps.
struct SweepAnchor<T> {
    center: ChartPoint<T>,
    orientation: i32,
    cap: T,
}

fn sweep_anchor<T: Scalar>(spec: &GeometrySpec<T>, energy: T) -> Result<SweepAnchor<T>> {
    if !spec.is_torus() {
        if spec.b == T::zero() {
            return Err(Error::NoNegativeLoopFound(
                "zero field: S_E equals the length".into(),
            ));
        }
        return Ok(SweepAnchor {
            center: ChartPoint::zero(),
            orientation: if spec.b > T::zero() { -1 } else { 1 },
            cap: T::lit(100.0) * energy.sqrt() / spec.b.abs(),
        });
    }
    // strongest field measured in the metric, lowest x on ties
    let mut best = (T::zero(), ChartPoint::zero());
    for i in 0..64 {
        let p = ChartPoint::new(T::from_usize_lossy(i) / T::lit(64.0), T::zero());
        let strength = spec.field_12(p).abs() / spec.metric(p)[0][0];
        if strength > best.0 {
            best = (strength, p);
        }
    }
    if best.0 == T::zero() {
        return Err(Error::NoNegativeLoopFound(
            "zero field: S_E equals the length".into(),
        ));
    }
    let center = best.1;
    Ok(SweepAnchor {
        center,
        orientation: if spec.field_12(center) > T::zero() {
            -1
        } else {
            1
        },
        cap: T::lit(0.45),
    })
}

fn circle_on<T: Scalar>(
    spec: &GeometrySpec<T>,
    center: ChartPoint<T>,
    r: T,
    orientation: i32,
    n: usize,
    phase: T,
) -> Result<Loop<T>> {
    let c = make_circle_with_phase(center, r, orientation, n, phase)?;
    Ok(if spec.is_torus() { c.into_torus() } else { c })
}

/// Radius of a flux-negative circle about `anchor.center` with `S_E < 0`.
fn terminal_radius<T: Scalar>(
    spec: &GeometrySpec<T>,
    energy: T,
    anchor: &SweepAnchor<T>,
    n: usize,
) -> Result<T> {
    let s = |r: T| -> Result<T> {
        let c = circle_on(spec, anchor.center, r, anchor.orientation, n, T::zero())?;
        Ok(action_s(spec, &c, energy))
    };
    let steps = 200;
    let mut lo = T::zero();
    let mut hi = None;
    for k in 1..=steps {
        let r = anchor.cap * T::from_usize_lossy(k) / T::from_usize_lossy(steps);
        if s(r)? < T::zero() {
            hi = Some(r);
            break;
        }
        lo = r;
    }
    let Some(mut hi) = hi else {
        return Err(Error::NoNegativeLoopFound(format!(
            "no flux-negative circle up to radius {} has negative action",
            anchor.cap
        )));
    };
    let first_negative = hi;
    for _ in 0..60 {
        let mid = (lo + hi) * T::lit(0.5);
        if s(mid)? < T::zero() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let terminal = (hi * T::lit(1.5)).min(anchor.cap);
    Ok(if s(terminal)? < T::zero() {
        terminal
    } else {
        first_negative
    })
}

/// Builds the default sweep family at energy `E`.
///
/// Each sweep is a family of concentric flux-negative circles, from radius 0
/// to a terminal radius 1.5 times the smallest radius with `S_E < 0`. The
/// center is where the field (measured in the metric) is strongest. A
/// cylinder family, available on torus charts, repeats the sweep at `m_p`
/// base points along the vertical 1-cycle through that center.
pub fn init_sweep_family<T: Scalar>(
    spec: &GeometrySpec<T>,
    energy: T,
    shape: ParameterShape,
    m: usize,
    m_p: usize,
    n: usize,
    rng_seed: u64,
) -> Result<LoopFamily<T>> {
    spec.validate()?;
    if !(energy > T::zero()) {
        return Err(Error::InvalidParams(format!(
            "energy must be positive, got {energy}"
        )));
    }
    if m < 2 {
        return Err(Error::InvalidFamily(
            "a sweep needs at least two loops".into(),
        ));
    }
    if shape == ParameterShape::Cylinder && !spec.is_torus() {
        return Err(Error::InvalidFamily(
            "cylinder families need a torus chart".into(),
        ));
    }
    let anchor = sweep_anchor(spec, energy)?;
    let terminal = terminal_radius(spec, energy, &anchor, n)?;
    let base_points: Vec<ChartPoint<T>> = match shape {
        ParameterShape::Path => vec![anchor.center],
        ParameterShape::Cylinder => (0..m_p.max(1))
            .map(|i| {
                ChartPoint::new(
                    anchor.center.x,
                    T::from_usize_lossy(i) / T::from_usize_lossy(m_p.max(1)),
                )
            })
            .collect(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let nn = T::from_usize_lossy(n);
    let rows = base_points
        .iter()
        .map(|&c| {
            let phase = T::lit(rng.random::<f64>()) * T::TAU() / nn;
            (0..m)
                .map(|i| {
                    let r = terminal * T::from_usize_lossy(i) / T::from_usize_lossy(m - 1);
                    circle_on(spec, c, r, anchor.orientation, n, phase)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    LoopFamily::new(shape, rows, None)
}

/// Result of [`descend_loop_constrained`].
#[derive(Debug, Clone)]
pub struct Descent<T> {
    pub gamma: Loop<T>,
    /// Norm of the (projected) gradient at the returned loop.
    pub grad_norm: T,
    /// Objective value after each accepted step, starting with the initial value.
    pub values: Vec<T>,
}

fn flat_dot<T: Scalar>(a: &[Covector<T>], b: &[Covector<T>]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (x, y)| acc + x.dot(*y))
}

fn axpy_coords<T: Scalar>(gamma: &Loop<T>, dir: &[Covector<T>], alpha: T) -> Loop<T> {
    let coords: Vec<T> = gamma
        .vertices()
        .iter()
        .zip(dir)
        .flat_map(|(v, d)| [v.x - alpha * d.x, v.y - alpha * d.y])
        .collect();
    gamma.with_coords(&coords)
}

/// Backtracking gradient descent on the objective.
///
/// Returns the final loop and gradient norm. Stops once the gradient norm is
/// at most `grad_tol` or after `max_iters` steps.
pub fn descend_loop<T: Scalar>(
    spec: &GeometrySpec<T>,
    gamma: &Loop<T>,
    params: &ActionParams<T>,
    cut: Option<&CutoffSpec<T>>,
    settings: &DescentSettings<T>,
) -> (Loop<T>, T) {
    let d = descend_loop_constrained(spec, gamma, params, cut, settings, &[]);
    (d.gamma, d.grad_norm)
}

/// [`descend_loop`] with the gradient projected off the span of `frozen`
/// (each entry one covector per vertex), so the loop never moves along
/// those directions.
pub fn descend_loop_constrained<T: Scalar>(
    spec: &GeometrySpec<T>,
    gamma: &Loop<T>,
    params: &ActionParams<T>,
    cut: Option<&CutoffSpec<T>>,
    settings: &DescentSettings<T>,
    frozen: &[Vec<Covector<T>>],
) -> Descent<T> {
    // Gram–Schmidt on the frozen directions
    let mut basis: Vec<Vec<Covector<T>>> = Vec::new();
    for f in frozen {
        let mut u = f.clone();
        for b in &basis {
            let c = flat_dot(&u, b);
            for (x, y) in u.iter_mut().zip(b) {
                *x -= *y * c;
            }
        }
        let norm = grad_norm(&u);
        if norm > T::zero() {
            u.iter_mut().for_each(|x| *x = *x * (T::one() / norm));
            basis.push(u);
        }
    }
    let project = |mut g: Vec<Covector<T>>| {
        for b in &basis {
            let c = flat_dot(&g, b);
            for (x, y) in g.iter_mut().zip(b) {
                *x -= *y * c;
            }
        }
        g
    };

    let mut current = gamma.clone();
    let (mut value, g) = value_and_grad(spec, &current, params, cut);
    let mut g = project(g);
    let mut gn = grad_norm(&g);
    let mut values = vec![value];
    let mut alpha = settings.step0;
    let armijo = T::lit(1e-4);
    for _ in 0..settings.max_iters {
        if gn <= settings.grad_tol {
            break;
        }
        let mut accepted = false;
        for _ in 0..60 {
            let trial = axpy_coords(&current, &g, alpha);
            let v = objective(spec, &trial, params, cut);
            if v <= value - armijo * alpha * gn * gn {
                current = trial;
                value = v;
                accepted = true;
                break;
            }
            alpha = alpha * settings.backtrack;
        }
        if !accepted {
            break;
        }
        values.push(value);
        alpha = alpha / settings.backtrack;
        let (_, grad) = value_and_grad(spec, &current, params, cut);
        g = project(grad);
        gn = grad_norm(&g);
    }
    Descent {
        gamma: current,
        grad_norm: gn,
        values,
    }
}

/// Computes the mountain-pass level of a path family.
pub fn mountain_pass<T: Scalar>(
    spec: &GeometrySpec<T>,
    family: &LoopFamily<T>,
    params: &ActionParams<T>,
    cut: Option<&CutoffSpec<T>>,
    settings: &DescentSettings<T>,
) -> Result<MinimaxResult<T>> {
    if family.shape != ParameterShape::Path {
        return Err(Error::InvalidFamily(
            "mountain_pass expects a path family".into(),
        ));
    }
    run_minimax(spec, family, params, cut, settings)
}

/// Computes the minimax level of a cylinder family (maximum over the whole grid).
pub fn family_minimax<T: Scalar>(
    spec: &GeometrySpec<T>,
    family: &LoopFamily<T>,
    params: &ActionParams<T>,
    cut: Option<&CutoffSpec<T>>,
    settings: &DescentSettings<T>,
) -> Result<MinimaxResult<T>> {
    if family.shape != ParameterShape::Cylinder {
        return Err(Error::InvalidFamily(
            "family_minimax expects a cylinder family".into(),
        ));
    }
    if !spec.is_torus() {
        return Err(Error::InvalidFamily(
            "cylinder families need a torus chart".into(),
        ));
    }
    run_minimax(spec, family, params, cut, settings)
}

/// Level reference for the cutoff functional: one cutoff-free run on
/// `S_{ε,τ}`, with `β = beta_frac · c_ref`.
pub fn bootstrap_cutoff<T: Scalar>(
    spec: &GeometrySpec<T>,
    family: &LoopFamily<T>,
    params: &ActionParams<T>,
    beta_frac: T,
    settings: &DescentSettings<T>,
) -> Result<(CutoffSpec<T>, MinimaxResult<T>)> {
    let res = run_minimax(spec, family, params, None, settings)?;
    let cut = CutoffSpec::new(res.level, beta_frac * res.level)?;
    Ok((cut, res))
}

/// Lowest `(row, position)` among the largest values.
fn argmax<T: Scalar>(values: &[Vec<T>]) -> (usize, usize) {
    let mut best = (0, 0);
    let mut best_v = T::neg_infinity();
    for (r, row) in values.iter().enumerate() {
        for (s, &v) in row.iter().enumerate() {
            if v > best_v {
                best_v = v;
                best = (r, s);
            }
        }
    }
    best
}

fn family_max<T: Scalar>(values: &[Vec<T>]) -> T {
    values
        .iter()
        .flatten()
        .copied()
        .fold(T::neg_infinity(), T::max)
}

struct Update<T> {
    gamma: Loop<T>,
    value: T,
    step: T,
    perp_norm: T,
}

/// One projected line-search step for interior loop `s` of `row`.
#[allow(clippy::too_many_arguments)]
fn update_image<T: Scalar>(
    spec: &GeometrySpec<T>,
    row: &[Loop<T>],
    values: &[T],
    s: usize,
    step: T,
    params: &ActionParams<T>,
    cut: Option<&CutoffSpec<T>>,
    settings: &DescentSettings<T>,
) -> Update<T> {
    let cur = &row[s];
    let (vp, vc, vn) = (values[s - 1], values[s], values[s + 1]);
    let diff = |a: &Loop<T>, b: &Loop<T>| -> Vec<Covector<T>> {
        a.vertices()
            .iter()
            .zip(b.vertices())
            .map(|(p, q)| *p - *q)
            .collect()
    };
    let plus = diff(&row[s + 1], cur);
    let minus = diff(cur, &row[s - 1]);
    let tangent: Vec<Covector<T>> = if vn > vc && vc > vp {
        plus
    } else if vn < vc && vc < vp {
        minus
    } else {
        let big = (vn - vc).abs().max((vp - vc).abs());
        let small = (vn - vc).abs().min((vp - vc).abs());
        let (wp, wm) = if vn > vp { (big, small) } else { (small, big) };
        plus.iter()
            .zip(&minus)
            .map(|(a, b)| *a * wp + *b * wm)
            .collect()
    };
    let tn = grad_norm(&tangent);
    let (_, mut g) = value_and_grad(spec, cur, params, cut);
    if tn > T::zero() {
        let c = flat_dot(&g, &tangent) / (tn * tn);
        for (x, t) in g.iter_mut().zip(&tangent) {
            *x -= *t * c;
        }
    }
    let gn = grad_norm(&g);
    let unchanged = |step: T| Update {
        gamma: cur.clone(),
        value: vc,
        step,
        perp_norm: gn,
    };
    if !(gn > T::zero()) {
        return unchanged(step);
    }
    let armijo = T::lit(1e-4);
    let mut alpha = step;
    for _ in 0..40 {
        let trial = axpy_coords(cur, &g, alpha);
        let v = objective(spec, &trial, params, cut);
        if v <= vc - armijo * alpha * gn * gn {
            let grown = (alpha / settings.backtrack).min(settings.step0 * T::lit(1e3));
            return Update {
                gamma: trial,
                value: v,
                step: grown,
                perp_norm: gn,
            };
        }
        alpha = alpha * settings.backtrack;
    }
    unchanged(alpha)
}

fn row_values<T: Scalar>(
    spec: &GeometrySpec<T>,
    row: &[Loop<T>],
    params: &ActionParams<T>,
    cut: Option<&CutoffSpec<T>>,
) -> Vec<T> {
    row.par_iter()
        .map(|l| objective(spec, l, params, cut))
        .collect()
}

fn max_gap<T: Scalar>(row: &[Loop<T>]) -> T {
    row.windows(2)
        .map(|w| Loop::vertex_distance(&w[0], &w[1]))
        .fold(T::zero(), T::max)
}

fn run_minimax<T: Scalar>(
    spec: &GeometrySpec<T>,
    family: &LoopFamily<T>,
    params: &ActionParams<T>,
    cut: Option<&CutoffSpec<T>>,
    settings: &DescentSettings<T>,
) -> Result<MinimaxResult<T>> {
    params.validate()?;
    settings.validate()?;
    for row in &family.rows {
        let terminal = row.last().unwrap();
        if action_s_eps_tau(spec, terminal, params) >= T::zero() {
            return Err(Error::NoNegativeLoopFound(
                "terminal loop of the sweep does not have negative action".into(),
            ));
        }
    }
    let mut rows = family.rows.clone();
    let mut values: Vec<Vec<T>> = rows
        .iter()
        .map(|r| row_values(spec, r, params, cut))
        .collect();
    let mut steps: Vec<Vec<T>> = rows.iter().map(|r| vec![settings.step0; r.len()]).collect();
    let mut level = family_max(&values);
    let mut history = vec![(0, level)];
    let tiny = T::lit(1e-12) * level.abs().max(T::one());

    for iter in 1..=settings.max_iters {
        let tasks: Vec<(usize, usize)> = rows
            .iter()
            .enumerate()
            .flat_map(|(r, row)| (1..row.len() - 1).map(move |s| (r, s)))
            .collect();
        let updates: Vec<Update<T>> = tasks
            .par_iter()
            .map(|&(r, s)| {
                update_image(
                    spec,
                    &rows[r],
                    &values[r],
                    s,
                    steps[r][s],
                    params,
                    cut,
                    settings,
                )
            })
            .collect();
        let mut worst = T::zero();
        for (&(r, s), u) in tasks.iter().zip(updates) {
            worst = worst.max(u.perp_norm);
            rows[r][s] = u.gamma;
            values[r][s] = u.value;
            steps[r][s] = u.step;
        }

        for r in 0..rows.len() {
            if max_gap(&rows[r]) <= family.mesh_bound {
                continue;
            }
            let mut candidate = reinterpolate_row(&rows[r])?;
            if max_gap(&candidate) > family.mesh_bound {
                candidate = refine_row(&candidate, family.mesh_bound)?;
            }
            let cand_values = row_values(spec, &candidate, params, cut);
            let old_max = values[r].iter().copied().fold(T::neg_infinity(), T::max);
            let new_max = cand_values.iter().copied().fold(T::neg_infinity(), T::max);
            if new_max <= old_max + tiny {
                steps[r] = vec![settings.step0; candidate.len()];
                rows[r] = candidate;
                values[r] = cand_values;
            } else {
                log::debug!("row {r}: re-spacing would raise the level; kept as is");
            }
        }

        level = family_max(&values);
        history.push((iter, level));
        if worst <= settings.path_tol {
            break;
        }
    }

    // polish the highest loop; repeat if another loop takes over the maximum
    let mut idx = argmax(&values);
    let mut polished = None;
    for _ in 0..3 {
        let (r, s) = idx;
        let p = newton_polish(
            spec,
            &rows[r][s],
            params,
            cut,
            settings.grad_tol,
            settings.polish_iters,
        );
        rows[r][s] = p.gamma.clone();
        values[r][s] = p.value;
        polished = Some((idx, p));
        let next = argmax(&values);
        if next == idx {
            break;
        }
        idx = next;
    }
    let ((r, s), p) = polished.unwrap();
    let idx = argmax(&values);
    let (argmax_loop, grad_at) = if idx == (r, s) {
        (p.gamma, p.grad_norm)
    } else {
        let l = rows[idx.0][idx.1].clone();
        let g = grad_norm(&value_and_grad(spec, &l, params, cut).1);
        (l, g)
    };
    let level = family_max(&values);
    let family = LoopFamily {
        shape: family.shape,
        rows,
        mesh_bound: family.mesh_bound,
    };
    Ok(MinimaxResult {
        level,
        converged: grad_at <= settings.grad_tol,
        grad_norm_at_argmax: grad_at,
        history,
        argmax_loop,
        argmax_index: idx,
        family,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loopspace::length;
    use std::f64::consts::PI;

    #[test]
    fn plane_terminal_radius_is_three() {
        let spec = GeometrySpec::<f64>::plane(1.0);
        let fam = init_sweep_family(&spec, 1.0, ParameterShape::Path, 9, 1, 256, 0).unwrap();
        let terminal = fam.rows[0].last().unwrap();
        let r = length(&spec, terminal) / (2.0 * PI);
        assert!((r - 3.0).abs() < 1e-3, "{r}");
        assert!(action_s(&spec, terminal, 1.0) < 0.0);
        assert!(fam.rows[0][0].is_point_curve());
    }

    #[test]
    fn zero_field_has_no_sweep() {
        let torus = GeometrySpec::<f64>::flat_torus_sine(0.0, 1);
        let err = init_sweep_family(&torus, 1.0, ParameterShape::Path, 9, 1, 32, 0).unwrap_err();
        assert!(matches!(err, Error::NoNegativeLoopFound(_)));
        let plane = GeometrySpec::<f64>::plane(0.0);
        assert!(matches!(
            init_sweep_family(&plane, 1.0, ParameterShape::Path, 9, 1, 32, 0),
            Err(Error::NoNegativeLoopFound(_))
        ));
    }

    #[test]
    fn settings_validation() {
        let mut s = DescentSettings::<f64>::default();
        assert!(s.validate().is_ok());
        s.backtrack = 1.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn minimax_result_json_shape() {
        let spec = GeometrySpec::<f64>::plane(1.0);
        let fam = init_sweep_family(&spec, 1.0, ParameterShape::Path, 9, 1, 32, 0).unwrap();
        let params = ActionParams::new(1.0, 1e-2, 1e-2).unwrap();
        let res = mountain_pass(&spec, &fam, &params, None, &DescentSettings::default()).unwrap();
        let v: serde_json::Value = serde_json::to_value(&res).unwrap();
        let obj = v.as_object().unwrap();
        let mut keys: Vec<_> = obj.keys().cloned().collect();
        keys.sort();
        assert_eq!(keys, ["converged", "grad_norm", "history", "level"]);
        assert!(obj["history"][0].as_array().unwrap().len() == 2);
    }
}
