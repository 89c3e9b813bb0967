//! Newton refinement of a loop onto a nearby critical point of the objective.
//!
//! The Hessian is assembled by central differences of the exact gradient and
//! inverted on the span of its non-negligible eigenvalues, so symmetry
//! directions (translations, rotations of the vertex labels) are left alone
//! and saddles are reached as easily as minima. Steps are accepted only when
//! they reduce the gradient norm.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::functional::{grad_norm, value_and_grad, ActionParams, CutoffSpec};
use crate::geometry::GeometrySpec;
use crate::loopspace::{edge_lengths, Loop};
use crate::Scalar;

/// Outcome of [`newton_polish`].
#[derive(Debug, Clone)]
pub struct Polished<T> {
    pub gamma: Loop<T>,
    pub value: T,
    pub grad_norm: T,
}

fn flat<T: Scalar>(g: &[crate::geometry::Covector<T>]) -> DVector<f64> {
    DVector::from_iterator(
        2 * g.len(),
        g.iter().flat_map(|c| [c.x.as_f64(), c.y.as_f64()]),
    )
}

/// Runs at most `max_iters` safeguarded Newton steps from `gamma`.
pub fn newton_polish<T: Scalar>(
    spec: &GeometrySpec<T>,
    gamma: &Loop<T>,
    params: &ActionParams<T>,
    cut: Option<&CutoffSpec<T>>,
    grad_tol: T,
    max_iters: usize,
) -> Polished<T> {
    let (mut value, g) = value_and_grad(spec, gamma, params, cut);
    let mut gn = grad_norm(&g);
    let mut grad = flat(&g);
    let mut current = gamma.clone();
    for _ in 0..max_iters {
        if gn <= grad_tol {
            break;
        }
        let lens = edge_lengths(spec, &current);
        let mean_edge = lens.iter().map(|l| l.as_f64()).sum::<f64>() / lens.len() as f64;
        if !(mean_edge > 0.0) {
            break;
        }
        let chart_edge = (0..current.len())
            .map(|j| current.displacement(j).norm().as_f64())
            .sum::<f64>()
            / current.len() as f64;
        let h = 1e-4 * chart_edge;
        let coords = current.coords();
        let dim = coords.len();
        let mut hess = DMatrix::<f64>::zeros(dim, dim);
        let mut work = coords.clone();
        for k in 0..dim {
            let x = work[k];
            work[k] = x + T::lit(h);
            let gp = flat(&value_and_grad(spec, &current.with_coords(&work), params, cut).1);
            work[k] = x - T::lit(h);
            let gm = flat(&value_and_grad(spec, &current.with_coords(&work), params, cut).1);
            work[k] = x;
            hess.set_column(k, &((gp - gm) / (2.0 * h)));
        }
        let sym = (&hess + hess.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let scale = eig.eigenvalues.iter().fold(0.0f64, |a, l| a.max(l.abs()));
        let cutoff = 1e-8 * scale;
        let mut step = DVector::<f64>::zeros(dim);
        for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
            if lambda.abs() > cutoff {
                let v = eig.eigenvectors.column(i);
                step -= v * (v.dot(&grad) / lambda);
            }
        }
        // never move a vertex by more than half an edge in one step
        let max_move = step
            .as_slice()
            .chunks_exact(2)
            .map(|c| c[0].hypot(c[1]))
            .fold(0.0, f64::max);
        let limit = 0.5 * chart_edge;
        if max_move > limit {
            step *= limit / max_move;
        }
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<T> = coords
                .iter()
                .zip(step.iter())
                .map(|(&c, &s)| c + T::lit(lambda * s))
                .collect();
            let candidate = current.with_coords(&trial);
            let (v, g) = value_and_grad(spec, &candidate, params, cut);
            let n = grad_norm(&g);
            if n.is_finite() && n < gn {
                current = candidate;
                value = v;
                gn = n;
                grad = flat(&g);
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Polished {
        gamma: current,
        value,
        grad_norm: gn,
    }
}
