//! Invariant checks run on one configuration and reported with measured values.

use anyhow::Result;
use num_complex::Complex64;
use serde::Serialize;

use dtc_core::analytics::{integrate_reduced, ObservableGroup, ReducedState4, SpinLockParams};
use dtc_core::liouville::{cycle_propagator, matrix_exponential, secular_liouvillian, spinlock_hamiltonian};
use dtc_core::protocol::{run_protocol_dense, CycleStates, SamplePoint};
use dtc_core::spinops::{hermiticity_defect, initial_state_plus_x, DensityMatrix, ObservableSet, HERMITIAN_TOL, TRACE_TOL};
use dtc_core::ProtocolConfig;

use crate::config::RunSpec;

pub const CONSERVED_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = -1e-10;
pub const ORACLE_TOL: f64 = 1e-8;
pub const PURITY_TOL: f64 = 1e-10;
/// Samples per spin-lock window in the conserved-quantity run.
const DENSE_SUBSTEPS: usize = 16;
const ORACLE_POINTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Comparison {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub threshold: f64,
    pub comparison: Comparison,
    pub pass: bool,
}

impl Check {
    fn at_most(name: &str, measured: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            measured,
            threshold,
            comparison: Comparison::AtMost,
            pass: measured <= threshold,
        }
    }

    fn at_least(name: &str, measured: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            measured,
            threshold,
            comparison: Comparison::AtLeast,
            pass: measured >= threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub config: crate::config::ConfigEcho,
    pub checks: Vec<Check>,
    pub pass: bool,
}

/// Spin-lock Hamiltonian with an optional non-Hermitian `eps |0><1|` term.
fn hamiltonian(cfg: &ProtocolConfig, corrupt: Option<f64>) -> dtc_core::spinops::Op4 {
    let mut h = spinlock_hamiltonian(cfg.omega_1, cfg.omega_d0);
    if let Some(eps) = corrupt {
        h[(0, 1)] += Complex64::new(eps, 0.0);
    }
    h
}

fn conserved(o: &ObservableSet, cfg: &ProtocolConfig) -> [f64; 3] {
    [
        3.0 * cfg.omega_d0 * o.m_zz + cfg.omega_1 * o.m_x,
        o.m_yy + o.m_zz,
        o.m_xx,
    ]
}

fn conserved_drift(cfg: &ProtocolConfig) -> Result<[f64; 3]> {
    let ts = run_protocol_dense(cfg, &initial_state_plus_x(), DENSE_SUBSTEPS)?;
    let mut worst = [0.0f64; 3];
    let mut start = conserved(&ts.samples[0].observables, cfg);
    for s in &ts.samples[1..] {
        let now = conserved(&s.observables, cfg);
        if s.point == SamplePoint::AfterRotation {
            start = now;
            continue;
        }
        for k in 0..3 {
            worst[k] = worst[k].max((now[k] - start[k]).abs());
        }
    }
    Ok(worst)
}

/// Largest deviation between the reduced equations and the full propagation
/// over one spin-lock window, starting from the state after the first cycle.
fn oracle_gap(cfg: &ProtocolConfig) -> Result<f64> {
    if cfg.tau_1 == 0.0 {
        return Ok(0.0);
    }
    let prop = cycle_propagator(cfg)?;
    let rho0 = prop.apply(&initial_state_plus_x());
    let l = secular_liouvillian(cfg.omega_1, cfg.omega_d0, cfg.tau_c)?;
    let p = SpinLockParams::new(cfg.omega_1, cfg.omega_d0, cfg.tau_c);
    let dt = (0.25 * p.max_step()).min(cfg.tau_1);
    let obs0 = rho0.observables();
    let mut worst: f64 = 0.0;
    for i in 1..=ORACLE_POINTS {
        let t = cfg.tau_1 * i as f64 / ORACLE_POINTS as f64;
        let full = DensityMatrix::new(matrix_exponential(&l, t)?.apply(rho0.matrix()))?.observables();
        for g in [ObservableGroup::One, ObservableGroup::Two] {
            let reduced = integrate_reduced(&ReducedState4::from_observables(&obs0, g), &p, t, dt)?;
            let exact = ReducedState4::from_observables(&full, g);
            for k in 0..4 {
                worst = worst.max((reduced.values[k] - exact.values[k]).abs());
            }
        }
    }
    Ok(worst)
}

pub fn run_invariants(spec: &RunSpec) -> Result<Report> {
    let cfg = spec.config;
    let mut checks = Vec::new();

    let h = hamiltonian(&cfg, spec.corrupt_hamiltonian);
    checks.push(Check::at_most("hamiltonian_hermiticity", hermiticity_defect(&h), HERMITIAN_TOL));

    let prop = cycle_propagator(&cfg)?;
    let rho0 = initial_state_plus_x();
    let p0 = rho0.purity();
    let (mut trace, mut herm, mut min_eig) = (0.0f64, 0.0f64, f64::INFINITY);
    let (mut purity_rise, mut purity_change) = (0.0f64, 0.0f64);
    let mut last_purity = p0;
    for step in CycleStates::new(&prop, &rho0, cfg.n_cycles) {
        let step = step?;
        for s in [step.after_spinlock, step.after_rotation] {
            let d = s.defects();
            trace = trace.max(d.trace_error);
            herm = herm.max(d.hermiticity);
            min_eig = min_eig.min(d.min_eigenvalue);
            let p = s.purity();
            purity_rise = purity_rise.max(p - last_purity);
            purity_change = purity_change.max((p - p0).abs());
            last_purity = p;
        }
    }
    checks.push(Check::at_most("cptp_trace_error", trace, TRACE_TOL));
    checks.push(Check::at_most("cptp_hermiticity", herm, HERMITIAN_TOL));
    checks.push(Check::at_least("cptp_min_eigenvalue", min_eig, POSITIVITY_TOL));

    let drift = conserved_drift(&cfg)?;
    checks.push(Check::at_most("conserved_3wd_mzz_plus_w1_mx", drift[0], CONSERVED_TOL));
    checks.push(Check::at_most("conserved_myy_plus_mzz", drift[1], CONSERVED_TOL));
    checks.push(Check::at_most("conserved_mxx", drift[2], CONSERVED_TOL));

    checks.push(Check::at_most("oracle_equivalence", oracle_gap(&cfg)?, ORACLE_TOL));

    checks.push(Check::at_most("purity_non_increasing", purity_rise.max(0.0), HERMITIAN_TOL));
    if cfg.tau_c == 0.0 {
        checks.push(Check::at_most("purity_conserved", purity_change, PURITY_TOL));
    }

    let pass = checks.iter().all(|c| c.pass);
    Ok(Report {
        config: crate::config::echo_pairs(spec),
        checks,
        pass,
    })
}
