//! Subcommand bodies. Each renders its full output as a string so that the
//! same bytes go to a file, stdout or a test.

use anyhow::{anyhow, Result};
use serde::Serialize;

use dtc_core::protocol::run_protocol_at;
use dtc_core::spinops::{initial_state_plus_x, ObservableSet};
use dtc_core::SpectrumResult;

use crate::config::{echo_pairs, Format, Mode, RunSpec};
use crate::invariants::{run_invariants, Report};
use crate::output::{csv_numbers, csv_row, fmt_g, to_json};
use crate::sweep::{run_spectrum, sweep2d, tauc_sweep};

pub const TIMESERIES_HEADER: [&str; 10] = ["cycle", "Mx", "My", "Mz", "Mxx", "Myy", "Mzz", "Mxy", "Myz", "Mxz"];

fn require_mode(spec: &RunSpec, mode: Mode) -> Result<()> {
    if spec.mode != mode {
        return Err(anyhow!("spec is for {} mode, not {}", spec.mode.name(), mode.name()));
    }
    Ok(())
}

#[derive(Serialize)]
struct TableJson<'a> {
    config: &'a crate::config::ConfigEcho,
    columns: Vec<&'a str>,
    rows: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    crystalline_fraction: Option<f64>,
}

pub fn cmd_timeseries(spec: &RunSpec) -> Result<String> {
    require_mode(spec, Mode::Timeseries)?;
    let ts = run_protocol_at(&spec.config, &initial_state_plus_x(), spec.sample_point)?;
    let rows: Vec<Vec<f64>> = ts
        .samples
        .iter()
        .filter(|s| s.cycle >= 1)
        .map(|s| {
            let mut r = vec![s.cycle as f64];
            r.extend(s.observables.to_array());
            r
        })
        .collect();
    debug_assert_eq!(ObservableSet::NAMES.len() + 1, TIMESERIES_HEADER.len());
    match spec.format {
        Format::Csv => {
            let mut out = csv_row(TIMESERIES_HEADER);
            for r in &rows {
                let mut fields = vec![(r[0] as usize).to_string()];
                fields.extend(r[1..].iter().map(|v| fmt_g(*v)));
                out.push_str(&csv_row(fields));
            }
            Ok(out)
        }
        Format::Json => to_json(&TableJson {
            config: &echo_pairs(spec),
            columns: TIMESERIES_HEADER.to_vec(),
            rows,
            crystalline_fraction: None,
        }),
    }
}

fn spectrum_rows(s: &SpectrumResult) -> Vec<[f64; 3]> {
    s.frequencies
        .iter()
        .zip(s.omega_rad())
        .zip(&s.power)
        .map(|((nu, w), p)| [*nu, w, *p])
        .collect()
}

pub fn cmd_spectrum(spec: &RunSpec) -> Result<String> {
    require_mode(spec, Mode::Spectrum)?;
    let s = run_spectrum(&spec.config, spec.sample_point)?;
    match spec.format {
        Format::Csv => {
            let mut out = csv_row(["nu", "omega_rad", "power"]);
            for r in spectrum_rows(&s) {
                out.push_str(&csv_numbers(&r));
            }
            out.push_str(&format!("# crystalline_fraction,{}\n", fmt_g(s.crystalline_fraction)));
            Ok(out)
        }
        Format::Json => to_json(&TableJson {
            config: &echo_pairs(spec),
            columns: vec!["nu", "omega_rad", "power"],
            rows: spectrum_rows(&s).into_iter().map(|r| r.to_vec()).collect(),
            crystalline_fraction: Some(s.crystalline_fraction),
        }),
    }
}

pub fn cmd_sweep2d(spec: &RunSpec) -> Result<String> {
    require_mode(spec, Mode::Sweep2d)?;
    let grid = sweep2d(spec)?;
    match spec.format {
        Format::Csv => {
            let mut out = csv_row(["axis1", "axis2", "value"]);
            for (i, a) in grid.axis1.iter().enumerate() {
                for (j, b) in grid.axis2.iter().enumerate() {
                    out.push_str(&csv_numbers(&[*a, *b, grid.get(i, j)]));
                }
            }
            Ok(out)
        }
        Format::Json => to_json(&grid),
    }
}

#[derive(Serialize)]
struct TaucJson<'a> {
    config: &'a crate::config::ConfigEcho,
    runs: Vec<TaucRun>,
}

#[derive(Serialize)]
struct TaucRun {
    tau_c: f64,
    crystalline_fraction: f64,
    nu: Vec<f64>,
    power: Vec<f64>,
}

pub fn cmd_tauc_sweep(spec: &RunSpec) -> Result<String> {
    require_mode(spec, Mode::TaucSweep)?;
    let runs = tauc_sweep(spec)?;
    match spec.format {
        Format::Csv => {
            let mut out = csv_row(["tau_c", "nu", "power"]);
            for (tc, s) in &runs {
                for (nu, p) in s.frequencies.iter().zip(&s.power) {
                    out.push_str(&csv_numbers(&[*tc, *nu, *p]));
                }
            }
            out.push_str("# tau_c,f\n");
            for (tc, s) in &runs {
                out.push_str(&format!("# {},{}\n", fmt_g(*tc), fmt_g(s.crystalline_fraction)));
            }
            Ok(out)
        }
        Format::Json => to_json(&TaucJson {
            config: &echo_pairs(spec),
            runs: runs
                .into_iter()
                .map(|(tau_c, s)| TaucRun {
                    tau_c,
                    crystalline_fraction: s.crystalline_fraction,
                    nu: s.frequencies,
                    power: s.power,
                })
                .collect(),
        }),
    }
}

/// Rendered report and the overall pass flag.
pub fn cmd_invariants(spec: &RunSpec) -> Result<(String, bool)> {
    require_mode(spec, Mode::Invariants)?;
    let report: Report = run_invariants(spec)?;
    let text = match spec.format {
        Format::Json => to_json(&report)?,
        Format::Csv => {
            let mut out = csv_row(["name", "measured", "threshold", "pass"]);
            for c in &report.checks {
                out.push_str(&csv_row([c.name.clone(), fmt_g(c.measured), fmt_g(c.threshold), c.pass.to_string()]));
            }
            out
        }
    };
    Ok((text, report.pass))
}
