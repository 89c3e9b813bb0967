mod common;

use common::{all_kinds, random_loop, random_winding_loop, rel_l2, rng};
use magloop::functional::{circulation, grad_circulation, scaled_length, speed_power_integral};
use magloop::{
    action_f_cutoff, action_s, action_s_eps_tau, concat, cutoff_f, fd_gradient, grad_action,
    length, make_circle, make_point_loop, resample_arclength, ActionParams64, ChartPoint64,
    CutoffSpec64, GeometrySpec64, Loop64,
};
use proptest::prelude::*;
use rand::Rng;
use std::f64::consts::PI;

fn plane() -> GeometrySpec64 {
    GeometrySpec64::plane(1.0)
}

fn unit_circle(n: usize) -> Loop64 {
    make_circle(ChartPoint64::zero(), 1.0, -1, n).unwrap()
}

#[test]
fn circle_action_values() {
    let c = unit_circle(512);
    assert!((action_s(&plane(), &c, 1.0) - PI).abs() < 1e-2);
    let p0 = ActionParams64::new(1.0, 0.0, 0.0).unwrap();
    let s0 = action_s_eps_tau(&plane(), &c, &p0);
    assert!((s0 - PI).abs() < 1e-2);
    let p1 = ActionParams64::new(1.0, 0.1, 0.0).unwrap();
    assert!((action_s_eps_tau(&plane(), &c, &p1) - (PI + 0.4 * PI * PI)).abs() < 1e-2);
    let point = make_point_loop(ChartPoint64::new(0.2, 0.1), 16).unwrap();
    assert_eq!(action_s(&plane(), &point, 1.0), 0.0);
    assert_eq!(action_s_eps_tau(&plane(), &point, &p1), 0.0);
}

#[test]
fn fd_gradient_matches_analytic_on_random_loops() {
    let mut r = rng(2024);
    let kinds = all_kinds();
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let spec = kinds[i % 3];
        let n = r.random_range(5..40);
        let gamma = if spec.is_torus() && i % 2 == 0 {
            random_winding_loop(&mut r, n)
        } else {
            random_loop(&mut r, &spec, n)
        };
        let params = ActionParams64::new(
            r.random_range(0.2..2.0),
            r.random_range(0.0..0.3),
            r.random_range(0.0..0.9),
        )
        .unwrap();
        let s0 = action_s_eps_tau(&spec, &gamma, &params.without_eps());
        let cut = (i % 4 == 3 && s0 > 0.0).then(|| CutoffSpec64::new(13.0 * s0, 1.0).unwrap());
        let exact = grad_action(&spec, &gamma, &params, cut.as_ref());
        let fd = fd_gradient(&spec, &gamma, &params, cut.as_ref(), 1e-6);
        let err = rel_l2(&fd, &exact);
        worst = worst.max(err);
        assert!(err < 1e-5, "loop {i}: relative error {err:.3e}");
    }
    assert!(worst > 0.0);
}

#[test]
fn cutoff_ramp_and_reduction() {
    let cut = CutoffSpec64::new(2.0, 0.2).unwrap();
    assert_eq!(cutoff_f(cut.lo, &cut), 0.0);
    assert_eq!(cutoff_f(cut.hi, &cut), 1.0);
    assert!((cutoff_f(0.5 * (cut.lo + cut.hi), &cut) - 0.5).abs() < 1e-15);
    let xs: Vec<f64> = (0..=400).map(|i| -0.1 + 0.4 * i as f64 / 400.0).collect();
    for w in xs.windows(2) {
        assert!(cutoff_f(w[1], &cut) >= cutoff_f(w[0], &cut));
    }
    // slopes match across both ramp ends
    let h = 1e-7;
    for x in [cut.lo, cut.hi] {
        let left = (cutoff_f(x, &cut) - cutoff_f(x - h, &cut)) / h;
        let right = (cutoff_f(x + h, &cut) - cutoff_f(x, &cut)) / h;
        assert!((left - right).abs() < 1e-4);
    }
    assert!(CutoffSpec64::new(0.0, 1.0).is_err());
    assert!(CutoffSpec64::new(1.0, 0.0).is_err());

    let spec = plane();
    let params = ActionParams64::new(1.0, 0.01, 0.05).unwrap();
    let gamma = make_circle(ChartPoint64::zero(), 0.2, -1, 64).unwrap();
    let s0 = action_s_eps_tau(&spec, &gamma, &params.without_eps());
    assert!(s0 > 0.0);
    let high = CutoffSpec64::new(0.5 * s0, 1.0).unwrap();
    assert_eq!(
        action_f_cutoff(&spec, &gamma, &params, &high),
        action_s_eps_tau(&spec, &gamma, &params)
    );
    let low = CutoffSpec64::new(20.0 * s0, 1.0).unwrap();
    assert_eq!(action_f_cutoff(&spec, &gamma, &params, &low), 0.0);
    let point = make_point_loop(ChartPoint64::zero(), 64).unwrap();
    assert_eq!(action_f_cutoff(&spec, &point, &params, &high), 0.0);
}

#[test]
fn concat_is_additive() {
    let spec = plane();
    let a = make_circle(ChartPoint64::new(1.0, 0.0), 1.0, 1, 32).unwrap();
    let b = make_circle(ChartPoint64::new(-1.0, 0.0), 1.0, -1, 32).unwrap();
    let ab = concat(&a, &b).unwrap();
    let total = action_s(&spec, &a, 2.0) + action_s(&spec, &b, 2.0);
    assert!((action_s(&spec, &ab, 2.0) - total).abs() < 1e-12);
}

#[test]
fn reparameterization_changes_action_little() {
    let spec = plane();
    let mut r = rng(3);
    for _ in 0..5 {
        let n = 4096;
        let (warp, bump) = (r.random_range(0.0..0.05), r.random_range(0.0..0.1));
        let vertices = (0..n)
            .map(|j| {
                let s = j as f64 / n as f64;
                let theta = -2.0 * PI * (s + warp * (2.0 * PI * s).sin());
                let rad = 1.0 + bump * (3.0 * theta).cos();
                ChartPoint64::new(rad * theta.cos(), rad * theta.sin())
            })
            .collect();
        let gamma = Loop64::new(vertices).unwrap();
        let base = action_s(&spec, &gamma, 1.0);
        let shifted = gamma.cyclic_shift(r.random_range(0..n));
        assert!((action_s(&spec, &shifted, 1.0) - base).abs() < 1e-12);
        let resampled = resample_arclength(&spec, &gamma, n).unwrap();
        assert!((action_s(&spec, &resampled, 1.0) - base).abs() < 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn plane_gradient_sums_to_zero(seed in any::<u64>(), n in 3usize..50, eps in 0.0..0.5f64, tau in 0.0..0.9f64) {
        let spec = GeometrySpec64::plane(1.7);
        let gamma = random_loop(&mut rng(seed), &spec, n);
        let params = ActionParams64::new(1.3, eps, tau).unwrap();
        let g = grad_action(&spec, &gamma, &params, None);
        let sum = g.iter().fold(ChartPoint64::zero(), |a, &b| a + b);
        prop_assert!(sum.norm() < 1e-9);
    }

    #[test]
    fn gradient_splits_into_kinetic_and_circulation(seed in any::<u64>(), kind in 0usize..3, n in 3usize..50) {
        let spec = all_kinds()[kind];
        let mut free = spec;
        free.b = 0.0;
        free.a = 0.0;
        let gamma = random_loop(&mut rng(seed), &spec, n);
        let params = ActionParams64::new(0.7, 0.1, 0.3).unwrap();
        let with = grad_action(&spec, &gamma, &params, None);
        let without = grad_action(&free, &gamma, &params, None);
        let circ = grad_circulation(&spec, &gamma);
        for j in 0..n {
            prop_assert!((with[j] - without[j] - circ[j]).norm() < 1e-10);
        }
        let value = action_s_eps_tau(&spec, &gamma, &params) - action_s_eps_tau(&free, &gamma, &params);
        prop_assert!((value - circulation(&spec, &gamma)).abs() < 1e-10);
    }

    #[test]
    fn reduced_parameters_reproduce_s_e(seed in any::<u64>(), kind in 0usize..3, n in 8usize..64) {
        let spec = all_kinds()[kind];
        let gamma = random_loop(&mut rng(seed), &spec, n);
        let arc = resample_arclength(&spec, &gamma, n).unwrap();
        let p = ActionParams64::new(1.0, 0.0, 0.0).unwrap();
        prop_assert!((action_s_eps_tau(&spec, &arc, &p) - action_s(&spec, &arc, 1.0)).abs() < 1e-12);
    }

    #[test]
    fn holder_bounds(seed in any::<u64>(), kind in 0usize..3, n in 8usize..64, e in 0.3..3.0f64) {
        let spec = all_kinds()[kind];
        let gamma = random_loop(&mut rng(seed), &spec, n);
        let l = scaled_length(&spec, &gamma, e);
        prop_assert!((l - e.sqrt() * length(&spec, &gamma)).abs() < 1e-12);
        let arc = resample_arclength(&spec, &gamma, n).unwrap();
        let la = scaled_length(&spec, &arc, e);
        for m in [1.1, 1.5, 2.0] {
            prop_assert!(l.powf(m) <= speed_power_integral(&spec, &gamma, e, m) * (1.0 + 1e-12));
            let eq = speed_power_integral(&spec, &arc, e, m);
            prop_assert!((la.powf(m) - eq).abs() <= 1e-9 * eq.max(1.0));
        }
        let params = ActionParams64::new(e, 0.2, 0.4).unwrap();
        let lower = 0.2 * l * l + l.powf(1.4) + circulation(&spec, &gamma);
        prop_assert!(action_s_eps_tau(&spec, &gamma, &params) >= lower - 1e-9);
    }

    #[test]
    fn monotone_in_eps_and_tau_for_long_loops(seed in any::<u64>(), kind in 0usize..3, n in 8usize..64,
                                              e1 in 0.0..0.5f64, e2 in 0.0..0.5f64, t1 in 0.0..0.95f64, t2 in 0.0..0.95f64) {
        let spec = all_kinds()[kind];
        let gamma = random_loop(&mut rng(seed), &spec, n);
        let arc = resample_arclength(&spec, &gamma, n).unwrap();
        let energy = 4.0 / length(&spec, &arc).powi(2).min(4.0);
        prop_assume!(scaled_length(&spec, &arc, energy) >= 1.0);
        let (elo, ehi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let (tlo, thi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let s = |eps, tau| action_s_eps_tau(&spec, &arc, &ActionParams64::new(energy, eps, tau).unwrap());
        prop_assert!(s(ehi, tlo) >= s(elo, tlo) - 1e-12);
        prop_assert!(s(elo, thi) >= s(elo, tlo) - 1e-12);
    }
}
