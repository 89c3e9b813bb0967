mod common;

use common::{all_kinds, random_loop, rng};
use magloop::dynamics::{flow_endpoint, write_trajectory_csv};
use magloop::{
    el_residual_deq, el_residual_se, integrate_flow, kinetic_energy, make_circle, make_point_loop,
    resample_arclength, ActionParams64, ChartPoint64, Error, FlowState64, GeometrySpec64,
};
use proptest::prelude::*;
use std::f64::consts::PI;

fn plane() -> GeometrySpec64 {
    GeometrySpec64::plane(1.0)
}

#[test]
fn larmor_circle_is_an_extremal() {
    let c = make_circle(ChartPoint64::zero(), 1.0, -1, 256).unwrap();
    let rep = el_residual_se(&plane(), &c, 1.0).unwrap();
    assert!(rep.max_res < 1e-3);
    assert!(rep.max_res >= rep.mean_res && rep.mean_res >= 0.0);
    assert_eq!(rep.per_vertex.len(), 256);
}

#[test]
fn curvature_mismatch_shows_in_residual() {
    let c = make_circle(ChartPoint64::zero(), 2.0, -1, 256).unwrap();
    let rep = el_residual_se(&plane(), &c, 1.0).unwrap();
    assert!((rep.mean_res - 0.5).abs() < 0.05);
}

#[test]
fn residual_rejects_point_curves() {
    let p = make_point_loop(ChartPoint64::zero(), 32).unwrap();
    assert_eq!(
        el_residual_se(&plane(), &p, 1.0).unwrap_err(),
        Error::DegenerateLoop
    );
    let params = ActionParams64::new(1.0, 0.1, 0.1).unwrap();
    assert_eq!(
        el_residual_deq(&plane(), &p, &params).unwrap_err(),
        Error::DegenerateLoop
    );
}

#[test]
fn regularized_circle_extremal() {
    let eps = 0.01;
    let rho = 1.0 / (1.0 - 4.0 * PI * eps);
    let c = make_circle(ChartPoint64::zero(), rho, -1, 512).unwrap();
    let params = ActionParams64::new(1.0, eps, 0.0).unwrap();
    assert!(el_residual_deq(&plane(), &c, &params).unwrap().max_res < 1e-2);
    // the unregularized equation does not hold there
    assert!(el_residual_se(&plane(), &c, 1.0).unwrap().max_res > 0.1);
}

#[test]
fn residual_converges_at_second_order() {
    let res: Vec<f64> = [64usize, 128, 256, 512]
        .iter()
        .map(|&n| {
            let c = make_circle(ChartPoint64::zero(), 1.0, -1, n).unwrap();
            el_residual_se(&plane(), &c, 1.0).unwrap().max_res
        })
        .collect();
    for w in res.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((1.7..=2.3).contains(&order), "observed order {order}");
    }
}

#[test]
fn kinetic_energy_values() {
    let v = FlowState64::new(ChartPoint64::zero(), ChartPoint64::new(0.6, 0.8));
    assert!((kinetic_energy(&plane(), &v) - 0.5).abs() < 1e-15);
    let rest = FlowState64::new(ChartPoint64::new(0.3, 0.2), ChartPoint64::zero());
    assert_eq!(kinetic_energy(&plane(), &rest), 0.0);
    let conf = GeometrySpec64::conformal_torus(0.3, 1.0, 1);
    let s = FlowState64::new(ChartPoint64::zero(), ChartPoint64::new(1.0, 0.0));
    assert!((kinetic_energy(&conf, &s) - 0.5 * 0.6f64.exp()).abs() < 1e-14);
}

#[test]
fn cyclotron_period_is_speed_independent() {
    for speed in [0.5, 1.0, 3.0] {
        let s0 = FlowState64::new(ChartPoint64::new(0.2, -0.4), ChartPoint64::new(speed, 0.0));
        let end = flow_endpoint(&plane(), s0, 2.0 * PI, 20_000);
        assert!((end.p - s0.p).norm() < 1e-6);
        assert!((end.v - s0.v).norm() < 1e-6 * speed);
    }
}

#[test]
fn zero_field_torus_flow_is_straight() {
    let spec = GeometrySpec64::flat_torus_sine(0.0, 1);
    let s0 = FlowState64::new(ChartPoint64::new(0.1, 0.2), ChartPoint64::new(0.3, -0.7));
    let traj = integrate_flow(&spec, s0, 2.0, 200);
    assert_eq!(traj.len(), 201);
    for (i, s) in traj.iter().enumerate() {
        let t = 2.0 * i as f64 / 200.0;
        assert!((s.v - s0.v).norm() < 1e-12);
        assert!((s.p - (s0.p + s0.v * t)).norm() < 1e-12);
    }
}

#[test]
fn trajectory_csv_layout() {
    let s0 = FlowState64::new(ChartPoint64::zero(), ChartPoint64::new(1.0, 0.0));
    let traj = integrate_flow(&plane(), s0, 1.0, 4);
    let mut buf = Vec::new();
    write_trajectory_csv(&plane(), &traj, 0.25, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,x,y,vx,vy,energy");
    assert_eq!(lines.len(), 6);
    assert!(lines[5].starts_with("1,"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn energy_is_conserved(kind in 0usize..3, x in 0.0..1.0f64, y in 0.0..1.0f64,
                           speed in 0.1..1.5f64, angle in 0.0..std::f64::consts::TAU) {
        let spec = all_kinds()[kind];
        let s0 = FlowState64::new(ChartPoint64::new(x, y), ChartPoint64::new(speed * angle.cos(), speed * angle.sin()));
        let e0 = kinetic_energy(&spec, &s0);
        let traj = integrate_flow(&spec, s0, 10.0, 10_000);
        let drift = traj.iter().map(|s| (kinetic_energy(&spec, s) - e0).abs()).fold(0.0, f64::max) / e0;
        prop_assert!(drift < 1e-8, "drift {:.3e}", drift);
    }

    #[test]
    fn reduced_deq_residual_matches_se(seed in any::<u64>(), kind in 0usize..3, n in 16usize..96) {
        let spec = all_kinds()[kind];
        let gamma = resample_arclength(&spec, &random_loop(&mut rng(seed), &spec, n), n).unwrap();
        let a = el_residual_se(&spec, &gamma, 1.0).unwrap();
        let b = el_residual_deq(&spec, &gamma, &ActionParams64::new(1.0, 0.0, 0.0).unwrap()).unwrap();
        for (x, y) in a.per_vertex.iter().zip(&b.per_vertex) {
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }
}
