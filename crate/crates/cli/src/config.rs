//! Flat `key = value` run configuration.
//!
//! Frequencies are given in kHz and converted to rad/ms (`x 2 pi`), times in ms.
//! Angle keys accept a `pi` suffix: `omega_2_tau_2 = 1.04pi`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;

use dtc_core::{ProtocolConfig, SamplePoint};

use crate::output::fmt_g;

const TWO_PI: f64 = 2.0 * PI;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ConfigError {
    /// 1-based line number, when the problem belongs to one line.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(n) => write!(f, "line {n}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

fn err_at(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line: Some(line),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Timeseries,
    Spectrum,
    Sweep2d,
    TaucSweep,
    Invariants,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Timeseries => "timeseries",
            Mode::Spectrum => "spectrum",
            Mode::Sweep2d => "sweep2d",
            Mode::TaucSweep => "tauc_sweep",
            Mode::Invariants => "invariants",
        }
    }

    fn parse(s: &str) -> Option<Mode> {
        Some(match s {
            "timeseries" => Mode::Timeseries,
            "spectrum" => Mode::Spectrum,
            "sweep2d" => Mode::Sweep2d,
            "tauc_sweep" | "tauc-sweep" => Mode::TaucSweep,
            "invariants" => Mode::Invariants,
            _ => return None,
        })
    }

    /// Modes whose output is built from stroboscopic spectra.
    fn needs_even_cycles(self, value: SweepValue) -> bool {
        match self {
            Mode::Spectrum | Mode::TaucSweep => true,
            Mode::Sweep2d => value == SweepValue::Fraction,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Quantity stored in each sweep2d cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepValue {
    /// Crystalline fraction of the stroboscopic `M_x` series.
    Fraction,
    /// Stroboscopic `M_x` at each cycle; the second axis is the cycle index.
    Mx,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

/// Parameter an axis scans, in config-file units.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisParam {
    Omega1Khz,
    Omega2Khz,
    OmegaD0Khz,
    TauCMs,
    Tau1Ms,
    Tau2Ms,
    /// Spin-lock area `omega_1 tau_1`, rad; sets `tau_1` at fixed `omega_1`.
    Omega1Tau1,
    /// Rotation angle `omega_2 tau_2`, rad; sets `tau_2` at fixed `|omega_2|`,
    /// negative angles reverse the sign of `omega_2`.
    Omega2Tau2,
    /// Cycle index `1..=n_cycles` (sweep2d `mx` maps only).
    Cycle,
}

impl AxisParam {
    pub fn name(self) -> &'static str {
        match self {
            AxisParam::Omega1Khz => "omega_1_khz",
            AxisParam::Omega2Khz => "omega_2_khz",
            AxisParam::OmegaD0Khz => "omega_d0_khz",
            AxisParam::TauCMs => "tau_c_ms",
            AxisParam::Tau1Ms => "tau_1_ms",
            AxisParam::Tau2Ms => "tau_2_ms",
            AxisParam::Omega1Tau1 => "omega_1_tau_1",
            AxisParam::Omega2Tau2 => "omega_2_tau_2",
            AxisParam::Cycle => "cycle",
        }
    }

    fn parse(s: &str) -> Option<AxisParam> {
        Some(match s {
            "omega_1_khz" => AxisParam::Omega1Khz,
            "omega_2_khz" => AxisParam::Omega2Khz,
            "omega_d0_khz" => AxisParam::OmegaD0Khz,
            "tau_c_ms" => AxisParam::TauCMs,
            "tau_1_ms" => AxisParam::Tau1Ms,
            "tau_2_ms" => AxisParam::Tau2Ms,
            "omega_1_tau_1" => AxisParam::Omega1Tau1,
            "omega_2_tau_2" => AxisParam::Omega2Tau2,
            "cycle" => AxisParam::Cycle,
            _ => return None,
        })
    }

    fn is_angle(self) -> bool {
        matches!(self, AxisParam::Omega1Tau1 | AxisParam::Omega2Tau2)
    }

    /// Sets this parameter on `cfg` from a value in config units.
    pub fn apply(self, cfg: &mut ProtocolConfig, value: f64) {
        match self {
            AxisParam::Omega1Khz => cfg.omega_1 = TWO_PI * value,
            AxisParam::Omega2Khz => cfg.omega_2 = TWO_PI * value,
            AxisParam::OmegaD0Khz => cfg.omega_d0 = TWO_PI * value,
            AxisParam::TauCMs => cfg.tau_c = value,
            AxisParam::Tau1Ms => cfg.tau_1 = value,
            AxisParam::Tau2Ms => cfg.tau_2 = value,
            AxisParam::Omega1Tau1 => cfg.tau_1 = area_duration(value, cfg.omega_1),
            AxisParam::Omega2Tau2 => {
                let (omega, tau) = signed_rotation(value, cfg.omega_2);
                cfg.omega_2 = omega;
                cfg.tau_2 = tau;
            }
            AxisParam::Cycle => {}
        }
    }
}

/// A negative rotation angle is a rotation of `|theta|` with `omega_2` reversed,
/// keeping `tau_2` non-negative.
fn signed_rotation(theta: f64, omega_2: f64) -> (f64, f64) {
    let omega = if theta < 0.0 { -omega_2.abs() } else { omega_2.abs() };
    (omega, area_duration(theta.abs(), omega_2.abs()))
}

fn area_duration(area: f64, omega: f64) -> f64 {
    if area == 0.0 {
        0.0
    } else {
        area / omega
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub param: AxisParam,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
    pub scale: Scale,
}

impl Axis {
    /// Grid points from `min` to `max` inclusive; both endpoints are exact.
    /// Empty for the cycle axis, whose points come from `n_cycles`.
    pub fn values(&self) -> Vec<f64> {
        if self.param == AxisParam::Cycle {
            return Vec::new();
        }
        let last = self.steps - 1;
        (0..self.steps)
            .map(|i| {
                if i == 0 {
                    self.min
                } else if i == last {
                    self.max
                } else {
                    let s = i as f64 / last as f64;
                    match self.scale {
                        Scale::Linear => self.min + s * (self.max - self.min),
                        Scale::Log => self.min * (self.max / self.min).powf(s),
                    }
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub config: ProtocolConfig,
    pub mode: Mode,
    pub axes: Vec<Axis>,
    pub sweep_value: SweepValue,
    pub sample_point: SamplePoint,
    /// Magnitude of an anti-Hermitian term added to the spin-lock Hamiltonian
    /// by the invariants report. Negative-control hook.
    pub corrupt_hamiltonian: Option<f64>,
    pub output: Option<PathBuf>,
    pub format: Format,
}

const REQUIRED: [&str; 5] = ["omega_1_khz", "omega_2_khz", "omega_d0_khz", "tau_c_ms", "n_cycles"];

fn known_key(key: &str) -> bool {
    if REQUIRED.contains(&key) {
        return true;
    }
    if matches!(
        key,
        "tau_1_ms"
            | "omega_1_tau_1"
            | "tau_2_ms"
            | "omega_2_tau_2"
            | "mode"
            | "sample_point"
            | "sweep_value"
            | "debug_corrupt_hamiltonian"
    ) {
        return true;
    }
    axis_key(key).is_some()
}

/// Splits `axis2_min` into `(2, "min")`, `axis1` into `(1, "")`.
fn axis_key(key: &str) -> Option<(usize, &str)> {
    let rest = key.strip_prefix("axis")?;
    let (idx, field) = match rest.split_once('_') {
        Some((i, f)) => (i, f),
        None => (rest, ""),
    };
    let idx = match idx {
        "1" => 1,
        "2" => 2,
        _ => return None,
    };
    matches!(field, "" | "min" | "max" | "steps" | "scale").then_some((idx, field))
}

struct Entry {
    line: usize,
    value: String,
}

fn parse_number(e: &Entry, key: &str, allow_pi: bool) -> Result<f64, ConfigError> {
    let v = e.value.trim();
    let parsed = match v.strip_suffix("pi") {
        Some(coef) if allow_pi => {
            let coef = coef.trim();
            match coef {
                "" | "+" => Some(1.0),
                "-" => Some(-1.0),
                c => c.trim_end_matches('*').trim().parse::<f64>().ok(),
            }
            .map(|c| c * PI)
        }
        _ => v.parse::<f64>().ok(),
    };
    match parsed {
        Some(x) if x.is_finite() => Ok(x),
        _ => Err(err_at(e.line, format!("{key}: cannot parse `{v}` as a number"))),
    }
}

/// Parses a config whose mode comes from its `mode` key (default `timeseries`).
pub fn parse_config(text: &str) -> Result<RunSpec, ConfigError> {
    parse_config_for(text, None)
}

/// Parses a config for a given subcommand. A `mode` key in the file must agree
/// with `mode` when both are present.
pub fn parse_config_for(text: &str, mode: Option<Mode>) -> Result<RunSpec, ConfigError> {
    let mut entries: BTreeMap<String, Entry> = BTreeMap::new();
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        last_line = line;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((k, v)) = content.split_once('=') else {
            return Err(err_at(line, format!("expected `key = value`, got `{content}`")));
        };
        let key = k.trim();
        let value = v.trim();
        if !known_key(key) {
            return Err(err_at(line, format!("unknown key `{key}`")));
        }
        if value.is_empty() {
            return Err(err_at(line, format!("{key}: missing value")));
        }
        if let Some(prev) = entries.get(key) {
            return Err(err_at(line, format!("duplicate key `{key}` (first set on line {})", prev.line)));
        }
        entries.insert(key.to_string(), Entry { line, value: value.to_string() });
    }

    let mut missing: Vec<&str> = REQUIRED.iter().copied().filter(|k| !entries.contains_key(*k)).collect();
    for (a, b) in [("tau_1_ms", "omega_1_tau_1"), ("tau_2_ms", "omega_2_tau_2")] {
        match (entries.get(a), entries.get(b)) {
            (None, None) => missing.push(if a == "tau_1_ms" { "tau_1_ms | omega_1_tau_1" } else { "tau_2_ms | omega_2_tau_2" }),
            (Some(_), Some(e)) => {
                return Err(err_at(e.line, format!("{b} conflicts with {a}; give only one")));
            }
            _ => {}
        }
    }
    if !missing.is_empty() {
        return Err(ConfigError {
            line: None,
            message: format!("missing required keys: {}", missing.join(", ")),
        });
    }

    let num = |key: &str| parse_number(&entries[key], key, false);
    let omega_1 = TWO_PI * num("omega_1_khz")?;
    let omega_2 = TWO_PI * num("omega_2_khz")?;
    let omega_d0 = TWO_PI * num("omega_d0_khz")?;
    let tau_c = num("tau_c_ms")?;
    if tau_c < 0.0 {
        return Err(err_at(entries["tau_c_ms"].line, "tau_c_ms must be non-negative"));
    }

    let duration = |time_key: &str, area_key: &str, omega: f64| -> Result<f64, ConfigError> {
        if let Some(e) = entries.get(time_key) {
            let t = parse_number(e, time_key, false)?;
            if t < 0.0 {
                return Err(err_at(e.line, format!("{time_key} must be non-negative")));
            }
            return Ok(t);
        }
        let e = &entries[area_key];
        let area = parse_number(e, area_key, true)?;
        if area != 0.0 && omega == 0.0 {
            return Err(err_at(e.line, format!("{area_key} needs a nonzero drive frequency")));
        }
        let t = area_duration(area, omega);
        if t < 0.0 {
            return Err(err_at(e.line, format!("{area_key} gives a negative duration")));
        }
        Ok(t)
    };
    let tau_1 = duration("tau_1_ms", "omega_1_tau_1", omega_1)?;
    let (omega_2, tau_2) = match entries.get("omega_2_tau_2") {
        Some(e) => {
            let theta = parse_number(e, "omega_2_tau_2", true)?;
            if theta != 0.0 && omega_2 == 0.0 {
                return Err(err_at(e.line, "omega_2_tau_2 needs a nonzero drive frequency"));
            }
            signed_rotation(theta, omega_2)
        }
        None => (omega_2, duration("tau_2_ms", "omega_2_tau_2", omega_2)?),
    };

    let n_entry = &entries["n_cycles"];
    let n: i64 = n_entry
        .value
        .parse()
        .map_err(|_| err_at(n_entry.line, format!("n_cycles: `{}` is not an integer", n_entry.value)))?;
    if n <= 0 {
        return Err(err_at(n_entry.line, format!("n_cycles must be positive, got {n}")));
    }

    let file_mode = match entries.get("mode") {
        Some(e) => Some(
            Mode::parse(&e.value).ok_or_else(|| err_at(e.line, format!("unknown mode `{}`", e.value)))?,
        ),
        None => None,
    };
    let mode = match (mode, file_mode) {
        (Some(m), Some(f)) if m != f => {
            return Err(err_at(
                entries["mode"].line,
                format!("config mode `{}` does not match subcommand `{}`", f.name(), m.name()),
            ));
        }
        (Some(m), _) | (None, Some(m)) => m,
        (None, None) => Mode::Timeseries,
    };

    let sample_point = match entries.get("sample_point") {
        None => SamplePoint::AfterRotation,
        Some(e) => match e.value.as_str() {
            "after_rotation" => SamplePoint::AfterRotation,
            "after_spinlock" => SamplePoint::AfterSpinlock,
            v => return Err(err_at(e.line, format!("sample_point must be after_rotation or after_spinlock, got `{v}`"))),
        },
    };

    let corrupt_hamiltonian = match entries.get("debug_corrupt_hamiltonian") {
        Some(e) => Some(parse_number(e, "debug_corrupt_hamiltonian", false)?),
        None => None,
    };

    let axes = parse_axes(&entries, mode)?;
    let sweep_value = match entries.get("sweep_value") {
        Some(e) => {
            if mode != Mode::Sweep2d {
                return Err(err_at(e.line, "sweep_value is only used in sweep2d mode"));
            }
            match e.value.as_str() {
                "fraction" => SweepValue::Fraction,
                "mx" => SweepValue::Mx,
                v => return Err(err_at(e.line, format!("sweep_value must be fraction or mx, got `{v}`"))),
            }
        }
        None if axes.iter().any(|a| a.param == AxisParam::Cycle) => SweepValue::Mx,
        None => SweepValue::Fraction,
    };
    if mode == Mode::Sweep2d {
        let cycle_axis = axes.get(1).map(|a| a.param) == Some(AxisParam::Cycle);
        if cycle_axis != (sweep_value == SweepValue::Mx) {
            let line = entries.get("sweep_value").or(entries.get("axis2")).map_or(last_line, |e| e.line);
            return Err(err_at(line, "sweep_value = mx goes with axis2 = cycle and vice versa"));
        }
    }

    if mode.needs_even_cycles(sweep_value) && n % 2 != 0 {
        return Err(err_at(
            n_entry.line,
            format!("n_cycles = {n} is odd; {} mode needs an even count so that nu = 0.5 is a DFT bin", mode.name()),
        ));
    }

    let config = ProtocolConfig {
        omega_1,
        omega_2,
        omega_d0,
        tau_c,
        tau_1,
        tau_2,
        n_cycles: n as usize,
    };
    config.validate().map_err(|e| ConfigError { line: None, message: e.to_string() })?;

    Ok(RunSpec {
        config,
        mode,
        axes,
        sweep_value,
        sample_point,
        corrupt_hamiltonian,
        output: None,
        format: Format::Csv,
    })
}

fn parse_axes(entries: &BTreeMap<String, Entry>, mode: Mode) -> Result<Vec<Axis>, ConfigError> {
    let wanted = match mode {
        Mode::Sweep2d => 2,
        Mode::TaucSweep => 1,
        _ => 0,
    };
    for (key, e) in entries {
        if let Some((idx, _)) = axis_key(key) {
            if idx > wanted {
                return Err(err_at(e.line, format!("{key} is not used in {} mode", mode.name())));
            }
        }
    }
    let mut axes = Vec::with_capacity(wanted);
    for idx in 1..=wanted {
        let name_key = format!("axis{idx}");
        let Some(name_entry) = entries.get(&name_key) else {
            let expected: Vec<String> = if idx == 1 && mode == Mode::TaucSweep {
                vec!["axis1 = tau_c_ms".into()]
            } else {
                vec![name_key.clone()]
            };
            return Err(ConfigError {
                line: None,
                message: format!("{} mode: missing required keys: {}", mode.name(), expected.join(", ")),
            });
        };
        let param = AxisParam::parse(&name_entry.value)
            .ok_or_else(|| err_at(name_entry.line, format!("{name_key}: unknown parameter `{}`", name_entry.value)))?;
        if mode == Mode::TaucSweep && param != AxisParam::TauCMs {
            return Err(err_at(name_entry.line, "tauc_sweep mode sweeps axis1 = tau_c_ms"));
        }
        if param == AxisParam::Cycle {
            if idx != 2 {
                return Err(err_at(name_entry.line, "the cycle axis can only be axis2"));
            }
            for f in ["min", "max", "steps", "scale"] {
                if let Some(e) = entries.get(&format!("axis2_{f}")) {
                    return Err(err_at(e.line, format!("axis2_{f} does not apply to the cycle axis")));
                }
            }
            axes.push(Axis {
                param,
                min: 1.0,
                max: 0.0,
                steps: 0,
                scale: Scale::Linear,
            });
            continue;
        }
        if axes.iter().any(|a: &Axis| a.param == param) {
            return Err(err_at(name_entry.line, format!("{name_key}: `{}` is already swept", param.name())));
        }
        let field = |f: &str| -> Result<&Entry, ConfigError> {
            entries.get(&format!("{name_key}_{f}")).ok_or_else(|| ConfigError {
                line: Some(name_entry.line),
                message: format!("{name_key} = {}: missing {name_key}_{f}", param.name()),
            })
        };
        let min_e = field("min")?;
        let max_e = field("max")?;
        let steps_e = field("steps")?;
        let min = parse_number(min_e, &format!("{name_key}_min"), param.is_angle())?;
        let max = parse_number(max_e, &format!("{name_key}_max"), param.is_angle())?;
        let steps: usize = steps_e
            .value
            .parse()
            .map_err(|_| err_at(steps_e.line, format!("{name_key}_steps: `{}` is not a count", steps_e.value)))?;
        if steps < 2 {
            return Err(err_at(steps_e.line, format!("{name_key}_steps must be at least 2, got {steps}")));
        }
        let default_scale = if param == AxisParam::TauCMs { Scale::Log } else { Scale::Linear };
        let scale = match entries.get(&format!("{name_key}_scale")) {
            None => default_scale,
            Some(e) => match e.value.as_str() {
                "linear" => Scale::Linear,
                "log" => Scale::Log,
                v => return Err(err_at(e.line, format!("{name_key}_scale must be linear or log, got `{v}`"))),
            },
        };
        if scale == Scale::Log && !(min > 0.0 && max > 0.0) {
            return Err(err_at(
                min_e.line.max(max_e.line),
                format!("{name_key}: log spacing needs positive endpoints; use {name_key}_scale = linear to include 0"),
            ));
        }
        let negative_ok = matches!(
            param,
            AxisParam::Omega1Khz | AxisParam::Omega2Khz | AxisParam::OmegaD0Khz | AxisParam::Omega2Tau2
        );
        if !negative_ok && (min < 0.0 || max < 0.0) {
            return Err(err_at(min_e.line.max(max_e.line), format!("{name_key}: {} must be non-negative", param.name())));
        }
        axes.push(Axis {
            param,
            min,
            max,
            steps,
            scale,
        });
    }
    Ok(axes)
}

/// Config-file text reproducing `spec`, values at 12 significant digits.
/// Durations are always written as `tau_1_ms` / `tau_2_ms`.
pub fn echo_config(spec: &RunSpec) -> String {
    echo_pairs(spec)
        .0
        .into_iter()
        .map(|(k, v)| format!("{k} = {v}\n"))
        .collect()
}

/// Config echo as ordered `(key, value)` pairs; serializes as a JSON object.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigEcho(pub Vec<(String, String)>);

impl serde::Serialize for ConfigEcho {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            m.serialize_entry(k, v)?;
        }
        m.end()
    }
}

/// `(key, value)` pairs in the order written by [`echo_config`].
pub fn echo_pairs(spec: &RunSpec) -> ConfigEcho {
    let c = &spec.config;
    let mut out: Vec<(String, String)> = vec![
        ("mode".into(), spec.mode.name().into()),
        ("omega_1_khz".into(), fmt_g(c.omega_1 / TWO_PI)),
        ("omega_2_khz".into(), fmt_g(c.omega_2 / TWO_PI)),
        ("omega_d0_khz".into(), fmt_g(c.omega_d0 / TWO_PI)),
        ("tau_c_ms".into(), fmt_g(c.tau_c)),
        ("tau_1_ms".into(), fmt_g(c.tau_1)),
        ("tau_2_ms".into(), fmt_g(c.tau_2)),
        ("n_cycles".into(), c.n_cycles.to_string()),
    ];
    if spec.sample_point != SamplePoint::AfterRotation {
        out.push(("sample_point".into(), "after_spinlock".into()));
    }
    if spec.mode == Mode::Sweep2d {
        let v = match spec.sweep_value {
            SweepValue::Fraction => "fraction",
            SweepValue::Mx => "mx",
        };
        out.push(("sweep_value".into(), v.into()));
    }
    for (i, a) in spec.axes.iter().enumerate() {
        let k = format!("axis{}", i + 1);
        out.push((k.clone(), a.param.name().into()));
        if a.param == AxisParam::Cycle {
            continue;
        }
        out.push((format!("{k}_min"), fmt_g(a.min)));
        out.push((format!("{k}_max"), fmt_g(a.max)));
        out.push((format!("{k}_steps"), a.steps.to_string()));
        let s = match a.scale {
            Scale::Linear => "linear",
            Scale::Log => "log",
        };
        out.push((format!("{k}_scale"), s.into()));
    }
    if let Some(eps) = spec.corrupt_hamiltonian {
        out.push(("debug_corrupt_hamiltonian".into(), fmt_g(eps)));
    }
    ConfigEcho(out)
}
