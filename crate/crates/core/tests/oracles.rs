//! Full Liouville-space propagation against the reduced-ODE and closed-form
//! routes.

use std::f64::consts::PI;

use dtc_core::analytics::{
    analytic_mx_pre, integrate_reduced, ObservableGroup, ReducedState4, SpinLockParams,
};
use dtc_core::liouville::{secular_liouvillian, matrix_exponential};
use dtc_core::protocol::{run_protocol, run_protocol_dense, ProtocolConfig, SamplePoint};
use dtc_core::spinops::{initial_state_plus_x, state_from_observables, DensityMatrix, ObservableSet};

const TWO_PI: f64 = 2.0 * PI;

fn full_block(rho0: &DensityMatrix, p: &SpinLockParams, t: f64, g: ObservableGroup) -> [f64; 4] {
    let l = secular_liouvillian(p.omega_1, p.omega_d0, p.tau_c).unwrap();
    let out = matrix_exponential(&l, t).unwrap().apply(rho0.matrix());
    let obs = DensityMatrix::new(out).unwrap().observables();
    ReducedState4::from_observables(&obs, g).values
}

fn check_equivalence(rho0: &DensityMatrix, p: &SpinLockParams, g: ObservableGroup, t_end: f64) -> f64 {
    let start = ReducedState4::from_observables(&rho0.observables(), g);
    let dt = p.max_step() / 4.0;
    let mut worst: f64 = 0.0;
    for i in 1..=20 {
        let t = t_end * i as f64 / 20.0;
        let reduced = integrate_reduced(&start, p, t, dt).unwrap().values;
        let full = full_block(rho0, p, t, g);
        for k in 0..4 {
            worst = worst.max((reduced[k] - full[k]).abs());
        }
    }
    worst
}

#[test]
fn group1_block_matches_full_propagation() {
    let p = SpinLockParams::new(TWO_PI * 40.0, TWO_PI * 10.0, 1e-4);
    let worst = check_equivalence(&initial_state_plus_x(), &p, ObservableGroup::One, 20.0 / p.kappa1());
    assert!(worst < 1e-8, "{worst:e}");
}

#[test]
fn group1_block_from_mixed_start() {
    let p = SpinLockParams::new(TWO_PI * 20.0, TWO_PI * 5.0, 1e-3);
    let obs = ObservableSet { m_x: 0.3, m_zz: 0.05, m_yy: -0.02, m_yz: 0.04, ..Default::default() };
    let rho0 = state_from_observables(&obs).unwrap();
    let worst = check_equivalence(&rho0, &p, ObservableGroup::One, 30.0 / p.kappa1());
    assert!(worst < 1e-8, "{worst:e}");
}

#[test]
fn group2_block_matches_full_propagation() {
    let p = SpinLockParams::new(TWO_PI * 40.0, TWO_PI * 4.0, 1e-4);
    let obs = ObservableSet { m_z: -0.2, ..Default::default() };
    let rho0 = state_from_observables(&obs).unwrap();
    let worst = check_equivalence(&rho0, &p, ObservableGroup::Two, 20.0 / p.kappa1());
    assert!(worst < 1e-8, "{worst:e}");

    let obs = ObservableSet { m_z: 0.1, m_y: -0.05, m_xz: 0.03, m_xy: 0.02, ..Default::default() };
    let rho0 = state_from_observables(&obs).unwrap();
    let worst = check_equivalence(&rho0, &p, ObservableGroup::Two, 20.0 / p.kappa1());
    assert!(worst < 1e-8, "{worst:e}");
}

#[test]
fn group2_observables_vanish_at_fixed_point() {
    let p = SpinLockParams::new(TWO_PI * 40.0, TWO_PI * 4.0, 1e-4);
    let obs = ObservableSet { m_z: 0.1, m_y: -0.05, m_xz: 0.03, m_xy: 0.02, ..Default::default() };
    let rho0 = state_from_observables(&obs).unwrap();
    // 1 / (w1^2 tau_c) is about 0.016 ms
    let t = 50.0 / (p.omega_1 * p.omega_1 * p.tau_c);
    let v = full_block(&rho0, &p, t, ObservableGroup::Two);
    assert!(v.iter().all(|x| x.abs() < 1e-12), "{v:?}");
}

#[test]
fn conserved_quantities_along_spinlock() {
    let (w1, wd, tc) = (TWO_PI * 40.0, TWO_PI * 10.0, 1e-4);
    let l = secular_liouvillian(w1, wd, tc).unwrap();
    let rho0 = initial_state_plus_x();
    let o0 = rho0.observables();
    for t in [1e-4, 3e-3, 0.05, 0.4] {
        let o = DensityMatrix::new(matrix_exponential(&l, t).unwrap().apply(rho0.matrix()))
            .unwrap()
            .observables();
        let c1 = |o: &ObservableSet| 3.0 * wd * o.m_zz + w1 * o.m_x;
        assert!((c1(&o) - c1(&o0)).abs() <= 1e-10);
        assert!(((o.m_yy + o.m_zz) - (o0.m_yy + o0.m_zz)).abs() <= 1e-10);
        assert!((o.m_xx - o0.m_xx).abs() <= 1e-10);
    }
}

#[test]
fn dense_spinlock_reproduces_closed_form() {
    // theta = 0 and one long spin-lock window, w1 = 4 wd
    let (w1, wd, tc) = (TWO_PI * 40.0, TWO_PI * 10.0, 1e-4);
    let k2 = 4.0 * w1 * w1 + 2.25 * wd * wd;
    let cfg = ProtocolConfig {
        omega_1: w1,
        omega_2: TWO_PI * 100.0,
        omega_d0: wd,
        tau_c: tc,
        tau_1: 5.0 / (k2 * tc),
        tau_2: 0.0,
        n_cycles: 1,
    };
    let ts = run_protocol_dense(&cfg, &initial_state_plus_x(), 400).unwrap();
    let mut checked = 0;
    for s in ts.samples.iter().filter(|s| s.point != SamplePoint::AfterRotation) {
        let closed = analytic_mx_pre(1.0, s.time, w1, wd, tc);
        assert!((s.observables.m_x - closed).abs() <= 0.01 * closed.abs(), "t = {}", s.time);
        let c = 3.0 * wd * s.observables.m_zz + w1 * s.observables.m_x;
        assert!((c - w1).abs() <= 1e-10);
        checked += 1;
    }
    assert_eq!(checked, 400);
}

#[test]
fn perfect_pi_pulses_reverse_sign_and_keep_mz_zero() {
    let w1 = TWO_PI * 50.0;
    let cfg = ProtocolConfig::from_pulse_areas(w1, TWO_PI * 100.0, TWO_PI * 2.0, 1e-3, TWO_PI * 0.02, PI, 200)
        .unwrap();
    let ts = run_protocol(&cfg, &initial_state_plus_x()).unwrap();
    let mx = ts.mx();
    for k in 0..mx.len() - 1 {
        assert!(mx[k] * mx[k + 1] <= 0.0);
    }
    assert!(ts.samples.iter().all(|s| s.observables.m_z.abs() <= 1e-10));
}
