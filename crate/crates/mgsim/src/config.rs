//! Scenario configuration: JSON schema, defaults, validation.
//!
//! Time quantities accept either a plain number of seconds or a string with
//! a unit suffix (`ns`, `us`, `ms`, `s`); suffixed values are parsed as
//! exact rationals before float conversion, so `"50us"` is bit-exact.

use std::path::{Path, PathBuf};

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::{DcMicrogridParams, StepProfile};
use crate::eln::EmtCircuitParams;
use crate::power::{GridSourceParams, LineParams, SnubberParams};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid value for `{field}`: {reason}")]
    Validation { field: String, reason: String },
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Validation { field: field.into(), reason: reason.into() }
}

/// Seconds, given as a number or a suffixed string.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum DurationSpec {
    Seconds(f64),
    Text(String),
}

impl DurationSpec {
    pub fn seconds(&self) -> Result<f64, String> {
        match self {
            DurationSpec::Seconds(s) => Ok(*s),
            DurationSpec::Text(text) => parse_duration(text),
        }
    }
}

/// Parse `"50us"`, `"1.5ms"`, `"20ns"`, `"2s"` (or a bare number of seconds)
/// into seconds via an exact rational.
pub fn parse_duration(text: &str) -> Result<f64, String> {
    let trimmed = text.trim();
    let split = trimmed
        .char_indices()
        .find(|(_, c)| c.is_ascii_alphabetic())
        .map(|(i, _)| i)
        .unwrap_or(trimmed.len());
    let (num_part, unit) = trimmed.split_at(split);
    let num_part = num_part.trim();
    if num_part.is_empty() {
        return Err(format!("no numeric part in `{trimmed}`"));
    }
    // Decimal literal -> exact rational with a power-of-ten denominator.
    let negative = num_part.starts_with('-');
    let digits = num_part.trim_start_matches(['-', '+']);
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.chars().chain(frac_part.chars()).any(|c| !c.is_ascii_digit())
        || (int_part.is_empty() && frac_part.is_empty())
    {
        return Err(format!("`{num_part}` is not a decimal number"));
    }
    let mut numerator: i128 = 0;
    for c in int_part.chars().chain(frac_part.chars()) {
        numerator = numerator
            .checked_mul(10)
            .and_then(|n| n.checked_add((c as u8 - b'0') as i128))
            .ok_or_else(|| format!("`{num_part}` overflows"))?;
    }
    if negative {
        numerator = -numerator;
    }
    let denominator = 10i128
        .checked_pow(frac_part.len() as u32)
        .ok_or_else(|| format!("`{num_part}` has too many fraction digits"))?;
    let unit_den: i128 = match unit.trim() {
        "" | "s" => 1,
        "ms" => 1_000,
        "us" => 1_000_000,
        "ns" => 1_000_000_000,
        other => return Err(format!("unknown unit `{other}` (expected ns, us, ms or s)")),
    };
    let ratio = Ratio::new(numerator, denominator * unit_den);
    Ok(*ratio.numer() as f64 / *ratio.denom() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    Emt,
    Gfl,
    Dc,
}

impl std::fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ScenarioKind::Emt => "emt",
            ScenarioKind::Gfl => "gfl",
            ScenarioKind::Dc => "dc",
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct EmtOverrides {
    pub r: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub l: Option<f64>,
    pub stimulus_amplitude: Option<f64>,
    pub stimulus_frequency: Option<f64>,
    /// Stimulus phase at t = 0, rad. The default pi/2 gives a cosine, i.e. a
    /// hard turn-on edge that excites the natural response.
    pub stimulus_phase: Option<f64>,
    pub backward_euler: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct GflOverrides {
    pub vll_rms: Option<f64>,
    pub frequency: Option<f64>,
    pub line_r_series: Option<f64>,
    pub line_l_series: Option<f64>,
    pub line_r_shunt: Option<f64>,
    pub line_c_shunt: Option<f64>,
    /// Per-phase wye load resistance.
    pub load_r: Option<f64>,
    pub snubber_r_parasitic: Option<f64>,
    pub snubber_c_snubber: Option<f64>,
    pub controller_rate_hz: Option<f64>,
    pub pll_kp: Option<f64>,
    pub pll_ki: Option<f64>,
    pub power_kp: Option<f64>,
    pub power_ki: Option<f64>,
    /// (time, watts) pairs, piecewise constant.
    pub p_ref: Option<Vec<(f64, f64)>>,
    pub q_ref: Option<Vec<(f64, f64)>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct DcOverrides {
    pub l: Option<f64>,
    pub c: Option<f64>,
    pub r_load: Option<f64>,
    pub k: Option<f64>,
    pub ks: Option<f64>,
    pub vn: Option<f64>,
    pub secondary_enabled: Option<bool>,
    pub secondary_start_delay: Option<DurationSpec>,
    pub secondary_period: Option<DurationSpec>,
}

/// On-disk configuration document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub scenario: ScenarioKind,
    pub dt: Option<DurationSpec>,
    pub duration: Option<DurationSpec>,
    pub out: Option<PathBuf>,
    pub emt: Option<EmtOverrides>,
    pub gfl: Option<GflOverrides>,
    pub dc: Option<DcOverrides>,
}

/// GFL scenario parameters after defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GflParams {
    pub grid: GridSourceParams,
    pub line: LineParams,
    pub load_r: f64,
    pub snubber: SnubberParams,
    pub controller_rate_hz: f64,
    pub pll_kp: f64,
    pub pll_ki: f64,
    pub power_kp: f64,
    pub power_ki: f64,
    pub p_ref: StepProfile,
    pub q_ref: StepProfile,
}

impl Default for GflParams {
    fn default() -> Self {
        Self {
            grid: GridSourceParams::default(),
            line: LineParams::default(),
            load_r: 1000.0,
            snubber: SnubberParams::default(),
            controller_rate_hz: 1000.0,
            pll_kp: 50.0,
            pll_ki: 900.0,
            power_kp: 1e-4,
            power_ki: 5e-2,
            // P steps every 3 s from t = 1 s; Q steps offset by 1.5 s.
            p_ref: StepProfile {
                steps: vec![(0.0, 0.0), (1.0, 1.0e6), (4.0, 5.0e5), (7.0, 1.2e6)],
            },
            q_ref: StepProfile {
                steps: vec![(0.0, 0.0), (2.5, 2.0e5), (5.5, -1.0e5), (8.5, 1.0e5)],
            },
        }
    }
}

/// EMT scenario parameters after defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmtParams {
    pub circuit: EmtCircuitParams,
    pub stimulus_amplitude: f64,
    pub stimulus_frequency: f64,
    pub stimulus_phase: f64,
    pub backward_euler: bool,
}

impl Default for EmtParams {
    fn default() -> Self {
        Self {
            circuit: EmtCircuitParams::default(),
            stimulus_amplitude: 391.92,
            stimulus_frequency: 60.0,
            stimulus_phase: std::f64::consts::FRAC_PI_2,
            backward_euler: false,
        }
    }
}

/// DC scenario parameters after defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DcParams {
    pub plant: DcMicrogridParams,
    pub secondary_enabled: bool,
    pub secondary_start_delay: f64,
    pub secondary_period: f64,
}

impl Default for DcParams {
    fn default() -> Self {
        Self {
            plant: DcMicrogridParams::default(),
            secondary_enabled: true,
            secondary_start_delay: 0.0,
            secondary_period: 0.1,
        }
    }
}

/// Fully validated scenario configuration with all defaults applied.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    pub dt: f64,
    pub duration: f64,
    pub out: PathBuf,
    pub emt: EmtParams,
    pub gfl: GflParams,
    pub dc: DcParams,
}

impl ScenarioConfig {
    pub fn defaults(scenario: ScenarioKind) -> Self {
        let (dt, duration) = match scenario {
            ScenarioKind::Emt => (50e-6, 0.5),
            ScenarioKind::Gfl => (50e-6, 10.0),
            ScenarioKind::Dc => (1e-3, 10.0),
        };
        Self {
            scenario,
            dt,
            duration,
            out: PathBuf::from("out"),
            emt: EmtParams::default(),
            gfl: GflParams::default(),
            dc: DcParams::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let pos = |field: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(field, format!("must be positive, got {v}")))
            }
        };
        pos("dt", self.dt)?;
        pos("duration", self.duration)?;
        if self.duration < self.dt {
            return Err(invalid("duration", "must be at least one step"));
        }
        pos("emt.r", self.emt.circuit.r)?;
        pos("emt.c1", self.emt.circuit.c1)?;
        pos("emt.c2", self.emt.circuit.c2)?;
        pos("emt.l", self.emt.circuit.l)?;
        pos("gfl.vll_rms", self.gfl.grid.vll_rms)?;
        pos("gfl.frequency", self.gfl.grid.frequency)?;
        pos("gfl.line_r_series", self.gfl.line.r_series)?;
        pos("gfl.line_l_series", self.gfl.line.l_series)?;
        pos("gfl.line_r_shunt", self.gfl.line.r_shunt)?;
        pos("gfl.line_c_shunt", self.gfl.line.c_shunt)?;
        pos("gfl.load_r", self.gfl.load_r)?;
        pos("gfl.snubber_r_parasitic", self.gfl.snubber.r_parasitic)?;
        pos("gfl.snubber_c_snubber", self.gfl.snubber.c_snubber)?;
        pos("gfl.controller_rate_hz", self.gfl.controller_rate_hz)?;
        self.gfl
            .p_ref
            .validate()
            .map_err(|e| invalid("gfl.p_ref", e))?;
        self.gfl
            .q_ref
            .validate()
            .map_err(|e| invalid("gfl.q_ref", e))?;
        pos("dc.l", self.dc.plant.l)?;
        pos("dc.c", self.dc.plant.c)?;
        pos("dc.r_load", self.dc.plant.r_load)?;
        pos("dc.vn", self.dc.plant.vn)?;
        pos("dc.secondary_period", self.dc.secondary_period)?;
        if self.dc.secondary_start_delay < 0.0 {
            return Err(invalid("dc.secondary_start_delay", "must be non-negative"));
        }
        Ok(())
    }
}

fn seconds_field(spec: &DurationSpec, field: &str) -> Result<f64, ConfigError> {
    spec.seconds().map_err(|e| invalid(field, e))
}

/// Apply a raw document on top of the per-scenario defaults and validate.
pub fn resolve(raw: &RawConfig) -> Result<ScenarioConfig, ConfigError> {
    let mut cfg = ScenarioConfig::defaults(raw.scenario);
    if let Some(dt) = &raw.dt {
        cfg.dt = seconds_field(dt, "dt")?;
    }
    if let Some(d) = &raw.duration {
        cfg.duration = seconds_field(d, "duration")?;
    }
    if let Some(out) = &raw.out {
        cfg.out = out.clone();
    }
    if let Some(e) = &raw.emt {
        let c = &mut cfg.emt;
        if let Some(v) = e.r {
            c.circuit.r = v;
        }
        if let Some(v) = e.c1 {
            c.circuit.c1 = v;
        }
        if let Some(v) = e.c2 {
            c.circuit.c2 = v;
        }
        if let Some(v) = e.l {
            c.circuit.l = v;
        }
        if let Some(v) = e.stimulus_amplitude {
            c.stimulus_amplitude = v;
        }
        if let Some(v) = e.stimulus_frequency {
            c.stimulus_frequency = v;
        }
        if let Some(v) = e.stimulus_phase {
            c.stimulus_phase = v;
        }
        if let Some(v) = e.backward_euler {
            c.backward_euler = v;
        }
    }
    if let Some(g) = &raw.gfl {
        let c = &mut cfg.gfl;
        if let Some(v) = g.vll_rms {
            c.grid.vll_rms = v;
        }
        if let Some(v) = g.frequency {
            c.grid.frequency = v;
        }
        if let Some(v) = g.line_r_series {
            c.line.r_series = v;
        }
        if let Some(v) = g.line_l_series {
            c.line.l_series = v;
        }
        if let Some(v) = g.line_r_shunt {
            c.line.r_shunt = v;
        }
        if let Some(v) = g.line_c_shunt {
            c.line.c_shunt = v;
        }
        if let Some(v) = g.load_r {
            c.load_r = v;
        }
        if let Some(v) = g.snubber_r_parasitic {
            c.snubber.r_parasitic = v;
        }
        if let Some(v) = g.snubber_c_snubber {
            c.snubber.c_snubber = v;
        }
        if let Some(v) = g.controller_rate_hz {
            c.controller_rate_hz = v;
        }
        if let Some(v) = g.pll_kp {
            c.pll_kp = v;
        }
        if let Some(v) = g.pll_ki {
            c.pll_ki = v;
        }
        if let Some(v) = g.power_kp {
            c.power_kp = v;
        }
        if let Some(v) = g.power_ki {
            c.power_ki = v;
        }
        if let Some(v) = &g.p_ref {
            c.p_ref = StepProfile { steps: v.clone() };
        }
        if let Some(v) = &g.q_ref {
            c.q_ref = StepProfile { steps: v.clone() };
        }
    }
    if let Some(d) = &raw.dc {
        let c = &mut cfg.dc;
        if let Some(v) = d.l {
            c.plant.l = v;
        }
        if let Some(v) = d.c {
            c.plant.c = v;
        }
        if let Some(v) = d.r_load {
            c.plant.r_load = v;
        }
        if let Some(v) = d.k {
            c.plant.k = v;
        }
        if let Some(v) = d.ks {
            c.plant.ks = v;
        }
        if let Some(v) = d.vn {
            c.plant.vn = v;
        }
        if let Some(v) = d.secondary_enabled {
            c.secondary_enabled = v;
        }
        if let Some(v) = &d.secondary_start_delay {
            c.secondary_start_delay = seconds_field(v, "dc.secondary_start_delay")?;
        }
        if let Some(v) = &d.secondary_period {
            c.secondary_period = seconds_field(v, "dc.secondary_period")?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Read, parse and validate a configuration file.
pub fn parse_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| ConfigError::Io(path.to_path_buf(), e))?;
    let raw: RawConfig = serde_json::from_str(&text)?;
    resolve(&raw)
}
