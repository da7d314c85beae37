//! Grid execution: per-cell runs on a rayon pool, collected in grid order.
//!
//! Spin-lock and rotation propagators are computed once per distinct parameter
//! set and shared across cells.

use std::collections::HashMap;

use anyhow::{anyhow, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use dtc_core::liouville::{
    rotation_propagator, spinlock_propagator, CyclePropagator, SpinLockKey, Superoperator,
};
use dtc_core::protocol::run_with_propagator;
use dtc_core::spinops::initial_state_plus_x;
use dtc_core::{spectrum, ProtocolConfig, SamplePoint, SpectrumResult};

use crate::config::{AxisParam, Mode, RunSpec, SweepValue};

/// Stroboscopic `M_x` for cycles `1..=n` from a prebuilt propagator.
pub fn mx_series_with(prop: &CyclePropagator, cfg: &ProtocolConfig, point: SamplePoint) -> Result<Vec<f64>> {
    let ts = run_with_propagator(prop, cfg.n_cycles, &initial_state_plus_x(), point)?;
    Ok(ts.mx_cycles())
}

pub fn mx_series(cfg: &ProtocolConfig, point: SamplePoint) -> Result<Vec<f64>> {
    let prop = dtc_core::liouville::cycle_propagator(cfg)?;
    mx_series_with(&prop, cfg, point)
}

/// Spectrum of the stroboscopic `M_x` series of a single run.
pub fn run_spectrum(cfg: &ProtocolConfig, point: SamplePoint) -> Result<SpectrumResult> {
    Ok(spectrum(&mx_series(cfg, point)?)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct RotationKey([u64; 2]);

impl RotationKey {
    fn of(cfg: &ProtocolConfig) -> Self {
        RotationKey([cfg.omega_2.to_bits(), cfg.tau_2.to_bits()])
    }
}

/// Propagator pieces for a set of cell configurations.
#[derive(Default)]
pub struct PropagatorCache {
    spinlock: HashMap<SpinLockKey, Superoperator>,
    rotation: HashMap<RotationKey, Superoperator>,
}

impl PropagatorCache {
    pub fn build(configs: &[ProtocolConfig]) -> Result<Self> {
        let mut sl: Vec<(SpinLockKey, ProtocolConfig)> = Vec::new();
        let mut rot: Vec<(RotationKey, ProtocolConfig)> = Vec::new();
        let mut seen_sl = std::collections::HashSet::new();
        let mut seen_rot = std::collections::HashSet::new();
        for c in configs {
            c.validate()?;
            if seen_sl.insert(SpinLockKey::of(c)) {
                sl.push((SpinLockKey::of(c), *c));
            }
            if seen_rot.insert(RotationKey::of(c)) {
                rot.push((RotationKey::of(c), *c));
            }
        }
        let spinlock = sl
            .par_iter()
            .map(|(k, c)| Ok((*k, spinlock_propagator(c.omega_1, c.omega_d0, c.tau_c, c.tau_1)?)))
            .collect::<Result<HashMap<_, _>>>()?;
        let rotation = rot
            .par_iter()
            .map(|(k, c)| Ok((*k, rotation_propagator(c.omega_2, c.tau_2)?)))
            .collect::<Result<HashMap<_, _>>>()?;
        Ok(PropagatorCache { spinlock, rotation })
    }

    pub fn len(&self) -> usize {
        self.spinlock.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spinlock.is_empty()
    }

    pub fn propagator(&self, cfg: &ProtocolConfig) -> Result<CyclePropagator> {
        let sl = self
            .spinlock
            .get(&SpinLockKey::of(cfg))
            .ok_or_else(|| anyhow!("no cached spin-lock propagator for this cell"))?;
        let rot = self
            .rotation
            .get(&RotationKey::of(cfg))
            .ok_or_else(|| anyhow!("no cached rotation propagator for this cell"))?;
        Ok(CyclePropagator::from_parts(*sl, *rot, cfg.tau_1, cfg.tau_2))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridResult {
    pub axis1_name: String,
    pub axis2_name: String,
    pub value_name: String,
    pub axis1: Vec<f64>,
    pub axis2: Vec<f64>,
    /// Row-major over `axis1`: cell `(i, j)` is `values[i * axis2.len() + j]`.
    pub values: Vec<f64>,
    pub config: crate::config::ConfigEcho,
}

impl GridResult {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.axis2.len() + j]
    }
}

/// Configuration for one axis point, axis 1 applied before axis 2.
pub fn cell_config(spec: &RunSpec, coords: &[f64]) -> ProtocolConfig {
    let mut cfg = spec.config;
    for (axis, v) in spec.axes.iter().zip(coords) {
        axis.param.apply(&mut cfg, *v);
    }
    cfg
}

pub fn sweep2d(spec: &RunSpec) -> Result<GridResult> {
    if spec.mode != Mode::Sweep2d || spec.axes.len() != 2 {
        return Err(anyhow!("sweep2d needs a sweep2d spec with two axes"));
    }
    let a1 = &spec.axes[0];
    let a2 = &spec.axes[1];
    let v1 = a1.values();
    let echo = crate::config::echo_pairs(spec);

    if spec.sweep_value == SweepValue::Mx {
        debug_assert_eq!(a2.param, AxisParam::Cycle);
        let n = spec.config.n_cycles;
        let configs: Vec<ProtocolConfig> = v1.iter().map(|x| cell_config(spec, &[*x])).collect();
        let cache = PropagatorCache::build(&configs)?;
        let rows = configs
            .par_iter()
            .enumerate()
            .map(|(i, cfg)| {
                let prop = cache.propagator(cfg)?;
                mx_series_with(&prop, cfg, spec.sample_point)
                    .with_context(|| format!("cell {i}: {} = {}", a1.param.name(), v1[i]))
            })
            .collect::<Result<Vec<_>>>()?;
        return Ok(GridResult {
            axis1_name: a1.param.name().into(),
            axis2_name: "cycle".into(),
            value_name: "mx".into(),
            axis1: v1,
            axis2: (1..=n).map(|k| k as f64).collect(),
            values: rows.into_iter().flatten().collect(),
            config: echo,
        });
    }

    let v2 = a2.values();
    let coords: Vec<(usize, usize)> = (0..v1.len()).flat_map(|i| (0..v2.len()).map(move |j| (i, j))).collect();
    let configs: Vec<ProtocolConfig> = coords.iter().map(|&(i, j)| cell_config(spec, &[v1[i], v2[j]])).collect();
    let cache = PropagatorCache::build(&configs).context("building sweep propagators")?;
    let values = coords
        .par_iter()
        .zip(configs.par_iter())
        .map(|(&(i, j), cfg)| {
            let run = || -> Result<f64> {
                let prop = cache.propagator(cfg)?;
                let series = mx_series_with(&prop, cfg, spec.sample_point)?;
                Ok(spectrum(&series)?.crystalline_fraction)
            };
            run().with_context(|| {
                format!(
                    "cell ({i}, {j}): {} = {}, {} = {}",
                    a1.param.name(),
                    v1[i],
                    a2.param.name(),
                    v2[j]
                )
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    if let Some(k) = values.iter().position(|v| !v.is_finite()) {
        return Err(anyhow!("cell {:?} produced a non-finite value", coords[k]));
    }
    Ok(GridResult {
        axis1_name: a1.param.name().into(),
        axis2_name: a2.param.name().into(),
        value_name: "fraction".into(),
        axis1: v1,
        axis2: v2,
        values,
        config: echo,
    })
}

/// Spectrum for each `tau_c` on the axis, in axis order.
pub fn tauc_sweep(spec: &RunSpec) -> Result<Vec<(f64, SpectrumResult)>> {
    let axis = spec
        .axes
        .first()
        .filter(|a| a.param == AxisParam::TauCMs)
        .ok_or_else(|| anyhow!("tauc-sweep needs axis1 = tau_c_ms"))?;
    let taus = axis.values();
    taus.par_iter()
        .map(|&tc| {
            let cfg = cell_config(spec, &[tc]);
            run_spectrum(&cfg, spec.sample_point)
                .map(|s| (tc, s))
                .with_context(|| format!("tau_c_ms = {tc}"))
        })
        .collect()
}
