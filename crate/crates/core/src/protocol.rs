//! Two-pulse Floquet protocol: spin-lock along x for `tau_1`, rotation about y
//! for `tau_2`, repeated `n_cycles` times.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::liouville::{cycle_propagator, matrix_exponential, secular_liouvillian, vec, unvec, CyclePropagator, Vec16};
use crate::spinops::{DensityMatrix, ObservableSet};

/// Physical and pulse parameters. Angular frequencies in rad/ms, times in ms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolConfig {
    pub omega_1: f64,
    pub omega_2: f64,
    pub omega_d0: f64,
    pub tau_c: f64,
    pub tau_1: f64,
    pub tau_2: f64,
    pub n_cycles: usize,
}

impl ProtocolConfig {
    /// Builds a config from the pulse areas `omega_1 tau_1` and `omega_2 tau_2`.
    pub fn from_pulse_areas(
        omega_1: f64,
        omega_2: f64,
        omega_d0: f64,
        tau_c: f64,
        spinlock_area: f64,
        theta: f64,
        n_cycles: usize,
    ) -> Result<Self> {
        let cfg = ProtocolConfig {
            omega_1,
            omega_2,
            omega_d0,
            tau_c,
            tau_1: duration_for_area(spinlock_area, omega_1, "omega_1 tau_1")?,
            tau_2: duration_for_area(theta, omega_2, "omega_2 tau_2")?,
            n_cycles,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Rotation angle `omega_2 tau_2`.
    pub fn theta(&self) -> f64 {
        self.omega_2 * self.tau_2
    }

    /// Offset of the rotation angle from a perfect pi pulse.
    pub fn delta(&self) -> f64 {
        self.theta() - PI
    }

    pub fn spinlock_area(&self) -> f64 {
        self.omega_1 * self.tau_1
    }

    /// Floquet period `tau_1 + tau_2`.
    pub fn period(&self) -> f64 {
        self.tau_1 + self.tau_2
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("omega_1", self.omega_1),
            ("omega_2", self.omega_2),
            ("omega_d0", self.omega_d0),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidConfig(format!("{name} must be finite, got {v}")));
            }
        }
        for (name, v) in [("tau_c", self.tau_c), ("tau_1", self.tau_1), ("tau_2", self.tau_2)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::NegativeParameter { name, value: v });
            }
        }
        if self.n_cycles == 0 {
            return Err(Error::InvalidConfig("n_cycles must be at least 1".into()));
        }
        Ok(())
    }
}

fn duration_for_area(area: f64, omega: f64, what: &str) -> Result<f64> {
    if area == 0.0 {
        return Ok(0.0);
    }
    if omega == 0.0 {
        return Err(Error::InvalidConfig(format!(
            "{what} = {area} needs a nonzero drive frequency"
        )));
    }
    Ok(area / omega)
}

/// Where inside a cycle a sample was taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SamplePoint {
    /// End of the spin-lock window.
    AfterSpinlock,
    /// End of the rotation pulse, i.e. the end of a full cycle.
    AfterRotation,
    /// Interior of the spin-lock window (dense runs only).
    DuringSpinlock,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub cycle: usize,
    /// Elapsed time in ms.
    pub time: f64,
    pub point: SamplePoint,
    pub observables: ObservableSet,
}

/// Observables recorded along a protocol run.
///
/// Entry 0 is the initial state (cycle 0). A stroboscopic run holds
/// `n_cycles + 1` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub sample_point: SamplePoint,
    pub samples: Vec<Sample>,
    pub final_state: DensityMatrix,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn cycle_indices(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.cycle).collect()
    }

    pub fn observables(&self) -> Vec<ObservableSet> {
        self.samples.iter().map(|s| s.observables).collect()
    }

    /// `M_x` of every sample, including the initial point.
    pub fn mx(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.observables.m_x).collect()
    }

    /// `M_x` for cycles `1..=n`, the spectrum input.
    pub fn mx_cycles(&self) -> Vec<f64> {
        self.samples
            .iter()
            .filter(|s| s.cycle > 0 && s.point == self.sample_point)
            .map(|s| s.observables.m_x)
            .collect()
    }

    /// Samples taken at a given point of the cycle.
    pub fn at(&self, point: SamplePoint) -> impl Iterator<Item = &Sample> {
        self.samples.iter().filter(move |s| s.point == point)
    }
}

/// States after each half of every cycle, in order.
pub struct CycleStates<'a> {
    prop: &'a CyclePropagator,
    state: Vec16,
    cycle: usize,
    n_cycles: usize,
}

/// One cycle's worth of states.
#[derive(Debug, Clone, Copy)]
pub struct CycleStep {
    pub cycle: usize,
    pub after_spinlock: DensityMatrix,
    pub after_rotation: DensityMatrix,
}

impl<'a> CycleStates<'a> {
    pub fn new(prop: &'a CyclePropagator, rho0: &DensityMatrix, n_cycles: usize) -> Self {
        CycleStates {
            prop,
            state: vec(rho0.matrix()),
            cycle: 0,
            n_cycles,
        }
    }
}

fn finite(v: &Vec16) -> bool {
    v.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

impl Iterator for CycleStates<'_> {
    type Item = Result<CycleStep>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.cycle >= self.n_cycles {
            return None;
        }
        self.cycle += 1;
        let mid = self.prop.spinlock().apply_vec(&self.state);
        let end = self.prop.rotation().apply_vec(&mid);
        if !finite(&end) {
            self.cycle = self.n_cycles;
            return Some(Err(Error::AtCycle {
                cycle: self.cycle,
                source: Box::new(Error::Numerical("state became non-finite".into())),
            }));
        }
        self.state = end;
        Some(Ok(CycleStep {
            cycle: self.cycle,
            after_spinlock: DensityMatrix::from_propagated(unvec(&mid)),
            after_rotation: DensityMatrix::from_propagated(unvec(&end)),
        }))
    }
}

/// Runs the protocol sampling after each rotation pulse.
pub fn run_protocol(cfg: &ProtocolConfig, rho0: &DensityMatrix) -> Result<TimeSeries> {
    run_protocol_at(cfg, rho0, SamplePoint::AfterRotation)
}

pub fn run_protocol_at(
    cfg: &ProtocolConfig,
    rho0: &DensityMatrix,
    point: SamplePoint,
) -> Result<TimeSeries> {
    let prop = cycle_propagator(cfg)?;
    run_with_propagator(&prop, cfg.n_cycles, rho0, point)
}

/// Same as [`run_protocol_at`] with a prebuilt propagator.
pub fn run_with_propagator(
    prop: &CyclePropagator,
    n_cycles: usize,
    rho0: &DensityMatrix,
    point: SamplePoint,
) -> Result<TimeSeries> {
    if point == SamplePoint::DuringSpinlock {
        return Err(Error::InvalidConfig(
            "stroboscopic runs sample after the spin-lock or after the rotation".into(),
        ));
    }
    let period = prop.tau_1 + prop.tau_2;
    let mut samples = Vec::with_capacity(n_cycles + 1);
    samples.push(Sample {
        cycle: 0,
        time: 0.0,
        point,
        observables: rho0.observables(),
    });
    let mut final_state = *rho0;
    for step in CycleStates::new(prop, rho0, n_cycles) {
        let step = step?;
        let (state, time) = match point {
            SamplePoint::AfterSpinlock => {
                (step.after_spinlock, (step.cycle - 1) as f64 * period + prop.tau_1)
            }
            _ => (step.after_rotation, step.cycle as f64 * period),
        };
        samples.push(Sample {
            cycle: step.cycle,
            time,
            point,
            observables: state.observables(),
        });
        final_state = step.after_rotation;
    }
    Ok(TimeSeries {
        sample_point: point,
        samples,
        final_state,
    })
}

/// Runs the protocol with `substeps` evenly spaced samples inside each spin-lock
/// window (the last one at its end) and one sample at the end of each rotation.
pub fn run_protocol_dense(
    cfg: &ProtocolConfig,
    rho0: &DensityMatrix,
    substeps: usize,
) -> Result<TimeSeries> {
    if substeps == 0 {
        return Err(Error::InvalidConfig("substeps must be at least 1".into()));
    }
    let prop = cycle_propagator(cfg)?;
    let sub = if substeps == 1 {
        *prop.spinlock()
    } else {
        let l = secular_liouvillian(cfg.omega_1, cfg.omega_d0, cfg.tau_c)?;
        matrix_exponential(&l, cfg.tau_1 / substeps as f64)?
    };
    let dt = cfg.tau_1 / substeps as f64;
    let period = cfg.period();

    let mut samples = Vec::with_capacity(1 + cfg.n_cycles * (substeps + 1));
    samples.push(Sample {
        cycle: 0,
        time: 0.0,
        point: SamplePoint::AfterRotation,
        observables: rho0.observables(),
    });
    let mut state = vec(rho0.matrix());
    for cycle in 1..=cfg.n_cycles {
        let start = (cycle - 1) as f64 * period;
        for j in 1..=substeps {
            state = sub.apply_vec(&state);
            if !finite(&state) {
                return Err(Error::AtCycle {
                    cycle,
                    source: Box::new(Error::Numerical("state became non-finite".into())),
                });
            }
            let point = if j == substeps {
                SamplePoint::AfterSpinlock
            } else {
                SamplePoint::DuringSpinlock
            };
            let time = if j == substeps { start + cfg.tau_1 } else { start + j as f64 * dt };
            samples.push(Sample {
                cycle,
                time,
                point,
                observables: DensityMatrix::from_propagated(unvec(&state)).observables(),
            });
        }
        state = prop.rotation().apply_vec(&state);
        samples.push(Sample {
            cycle,
            time: cycle as f64 * period,
            point: SamplePoint::AfterRotation,
            observables: DensityMatrix::from_propagated(unvec(&state)).observables(),
        });
    }
    Ok(TimeSeries {
        sample_point: SamplePoint::DuringSpinlock,
        samples,
        final_state: DensityMatrix::from_propagated(unvec(&state)),
    })
}
