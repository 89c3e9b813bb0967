#![allow(dead_code)]

use magloop::{ChartPoint64, GeometrySpec64, Loop64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One spec per geometry kind.
pub fn all_kinds() -> Vec<GeometrySpec64> {
    vec![
        GeometrySpec64::plane(1.3),
        GeometrySpec64::flat_torus_sine(0.7, 2),
        GeometrySpec64::conformal_torus(0.3, 1.0, 1),
    ]
}

/// A wobbly star-shaped loop with irregular vertex spacing.
pub fn random_loop(rng: &mut ChaCha8Rng, spec: &GeometrySpec64, n: usize) -> Loop64 {
    let torus = spec.is_torus();
    let scale = if torus { 0.2 } else { 1.5 };
    let center = ChartPoint64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let r0 = scale * rng.random_range(0.3..1.0);
    let modes: Vec<(f64, f64)> = (0..3)
        .map(|_| (rng.random_range(-0.2..0.2), rng.random_range(0.0..TAU)))
        .collect();
    let orientation = if rng.random::<bool>() { 1.0 } else { -1.0 };
    let mut thetas: Vec<f64> = (0..n)
        .map(|j| (j as f64 + rng.random_range(-0.4..0.4)) / n as f64 * TAU)
        .collect();
    thetas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let vertices = thetas
        .iter()
        .map(|&t| {
            let r = r0
                * (1.0
                    + modes
                        .iter()
                        .enumerate()
                        .map(|(k, (a, p))| a * ((k + 2) as f64 * t + p).cos())
                        .sum::<f64>());
            let t = orientation * t;
            center + ChartPoint64::new(r * t.cos(), r * t.sin())
        })
        .collect();
    let l = Loop64::new(vertices).unwrap();
    if torus {
        l.into_torus()
    } else {
        l
    }
}

/// A torus loop winding once around the `x` direction.
pub fn random_winding_loop(rng: &mut ChaCha8Rng, n: usize) -> Loop64 {
    let y0 = rng.random_range(0.0..1.0);
    let amp = rng.random_range(0.0..0.1);
    let vertices = (0..n)
        .map(|j| {
            let x = j as f64 / n as f64;
            ChartPoint64::new(
                x,
                y0 + amp * (TAU * x).sin() + rng.random_range(-0.01..0.01),
            )
        })
        .collect();
    let mut winding = vec![[0, 0]; n];
    winding[n - 1] = [1, 0];
    Loop64::with_winding(vertices, winding).unwrap()
}

pub fn rel_l2(a: &[ChartPoint64], b: &[ChartPoint64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (*x - *y).dot(*x - *y)).sum();
    let den: f64 = b.iter().map(|y| y.dot(*y)).sum();
    (num / den).sqrt()
}
