mod common;

use common::{all_kinds, random_loop, rel_l2, rng};
use magloop::functional::grad_circulation;
use magloop::{
    action_s, circle_action_profile, el_residual_se, fd_gradient, grad_action, larmor_orbit,
    make_point_loop, resample_arclength, shooting_periodic, ActionParams64, ChartPoint64, Error,
    FlowState64, GeometrySpec64,
};
use std::f64::consts::PI;

#[test]
fn larmor_closed_form() {
    let (r, c) = larmor_orbit(1.0f64, 1.0).unwrap();
    assert_eq!((r, c), (1.0, PI));
    let (r, c) = larmor_orbit(4.0f64, 2.0).unwrap();
    assert_eq!(r, 1.0);
    assert!((c - 2.0 * PI).abs() < 1e-15);
    assert!(matches!(
        larmor_orbit(0.0f64, 1.0),
        Err(Error::InvalidOracleInput(_))
    ));
    assert!(matches!(
        larmor_orbit(1.0f64, -1.0),
        Err(Error::InvalidOracleInput(_))
    ));
    // brute-force scan of the continuum circle action
    let (best_r, best) = (0..=200_000)
        .map(|i| {
            let r = 3.0 * i as f64 / 200_000.0;
            (r, 2.0 * PI * r - PI * r * r)
        })
        .fold(
            (0.0, f64::NEG_INFINITY),
            |a, b| if b.1 > a.1 { b } else { a },
        );
    assert!((best_r - 1.0).abs() < 1e-4 && (best - PI).abs() < 1e-8);
}

#[test]
fn larmor_scaling_identity() {
    for &(e, b) in &[(1.0f64, 1.0), (0.5, 3.0), (2.0, 0.25)] {
        for c in [2.0f64, 4.0, 0.5] {
            let (r0, s0) = larmor_orbit(e, b).unwrap();
            let (r1, s1) = larmor_orbit(c * c * e, c * b).unwrap();
            assert_eq!(r1, r0);
            assert_eq!(s1, c * s0);
        }
    }
}

#[test]
fn circle_profile_maximum_and_shape() {
    let spec = GeometrySpec64::plane(1.0);
    let grid: Vec<f64> = (0..=400).map(|i| 0.9 + 0.2 * i as f64 / 400.0).collect();
    let prof = circle_action_profile(&spec, 1.0, &grid, 512).unwrap();
    let max = prof.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    assert!((max - PI).abs() < 1e-3);
    let coarse: Vec<f64> = (0..=40).map(|i| 2.0 * i as f64 / 40.0).collect();
    let prof = circle_action_profile(&spec, 1.0, &coarse, 512).unwrap();
    assert_eq!(prof[0], (0.0, 0.0));
    for w in prof.windows(3) {
        assert!(w[0].1 - 2.0 * w[1].1 + w[2].1 < 1e-12);
    }
    let torus = GeometrySpec64::flat_torus_sine(1.0, 1);
    assert!(matches!(
        circle_action_profile(&torus, 1.0, &coarse, 16),
        Err(Error::InvalidOracleInput(_))
    ));
}

#[test]
fn fd_gradient_oracle_properties() {
    let mut r = rng(77);
    for spec in all_kinds() {
        let gamma = random_loop(&mut r, &spec, 20);
        let params = ActionParams64::new(1.0, 0.1, 0.5).unwrap();
        let fd = fd_gradient(&spec, &gamma, &params, None, 1e-6);
        assert!(rel_l2(&fd, &grad_action(&spec, &gamma, &params, None)) < 1e-5);

        let mut free = spec;
        free.b = 0.0;
        free.a = 0.0;
        let diff: Vec<ChartPoint64> = fd
            .iter()
            .zip(fd_gradient(&free, &gamma, &params, None, 1e-6))
            .map(|(a, b)| *a - b)
            .collect();
        assert!(rel_l2(&diff, &grad_circulation(&spec, &gamma)) < 1e-5);
    }
    let h = 1e-6;
    let point = make_point_loop(ChartPoint64::new(0.4, -0.3), 12).unwrap();
    let params = ActionParams64::new(1.0, 0.0, 0.0).unwrap();
    let g = fd_gradient(&GeometrySpec64::plane(1.0), &point, &params, None, h);
    assert!(g.iter().all(|c| c.norm() <= 2.0 * h));
}

fn seeds(points: &[(f64, f64)], directions: usize) -> Vec<FlowState64> {
    points
        .iter()
        .flat_map(|&(x, y)| {
            (0..directions).map(move |k| {
                let a = 2.0 * PI * k as f64 / directions as f64;
                FlowState64::new(ChartPoint64::new(x, y), ChartPoint64::new(a.cos(), a.sin()))
            })
        })
        .collect()
}

#[test]
fn plane_seeds_all_close_after_one_cyclotron_period() {
    let spec = GeometrySpec64::plane(1.0);
    let grid = seeds(&[(0.0, 0.0), (1.5, -0.5)], 3);
    let found = shooting_periodic(&spec, 0.5, &grid, 8.0, 1e-8);
    assert!(!found.is_empty());
    for c in &found {
        assert!((c.period - 2.0 * PI).abs() < 1e-6);
        assert!((c.energy - 0.5).abs() < 1e-12);
        assert!(c.closure_residual < 1e-8);
    }
    let mut all = 0;
    for s in &grid {
        all += shooting_periodic(&spec, 0.5, std::slice::from_ref(s), 8.0, 1e-8).len();
    }
    assert_eq!(all, grid.len());
}

#[test]
fn flat_zero_field_has_no_orbits() {
    let spec = GeometrySpec64::flat_torus_sine(0.0, 1);
    let grid = seeds(&[(0.1, 0.2), (0.5, 0.5)], 5);
    assert!(shooting_periodic(&spec, 0.5, &grid, 3.0, 1e-8).is_empty());
}

#[test]
fn torus_orbits_are_action_extremals() {
    let spec = GeometrySpec64::flat_torus_sine(3.0, 1);
    let e = 0.02;
    let grid = seeds(&[(0.0, 0.0), (0.5, 0.5), (0.1, 0.0)], 4);
    let found = shooting_periodic(&spec, e / 2.0, &grid, 2.0, 1e-8);
    assert!(!found.is_empty());
    for c in &found {
        let l = c.to_loop(&spec, 256).unwrap();
        let arc = resample_arclength(&spec, &l, 256).unwrap();
        let res = el_residual_se(&spec, &arc, e).unwrap();
        assert!(res.max_res < 1e-2, "residual {:.3e}", res.max_res);
        assert!(action_s(&spec, &arc, e).is_finite());
    }
}
