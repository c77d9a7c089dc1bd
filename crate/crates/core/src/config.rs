//! Strict JSON scenario configuration.
//!
//! Every block rejects unknown keys, and every validation error names the
//! offending key path (for example `scenario.dt` or `design.t_p2`). Units
//! are SI throughout: seconds, watts, vars, volts, ohms, rad/s.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "scenario": {
//!     "mode": "gc",
//!     "strategy": "udc",
//!     "controllers": { "udc": { "kp_droop": 2.618e-4, "tau": 0.0318, ... } },
//!     "plant": { "x_line": 0.9425, "e0": 380, "v0": 380, "omega0": 314.159 },
//!     "events": [ { "time": 1.0, "kind": "reference_step", "value": 12000 } ],
//!     "t_end": 10.0,
//!     "dt": 1e-4
//!   },
//!   "output": { "trace_path": "trace.csv", "metrics_path": "metrics.json" }
//! }
//! ```

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::{DesignParams, MetricOptions, DEFAULT_ROCOF_LIMIT, DEFAULT_ROCOF_WINDOW};
use crate::controllers::{ControllerParams, DroopParams, Strategy, UdcParams, VsgParams};
use crate::plant::{Mode, PlantParams};
use crate::sim::{ComparisonOptions, Event, ParallelScenario, ParallelUnit, Scenario};
use crate::Error;

pub const SCHEMA_VERSION: u32 = 1;

/// Bundled presets as `(file name, JSON text)`.
pub const PRESETS: &[(&str, &str)] = &[
    ("gc_compare.json", include_str!("../presets/gc_compare.json")),
    ("gc_udc.json", include_str!("../presets/gc_udc.json")),
    ("is_compare.json", include_str!("../presets/is_compare.json")),
    ("is_vsg_rocof.json", include_str!("../presets/is_vsg_rocof.json")),
    ("is_parallel.json", include_str!("../presets/is_parallel.json")),
];

/// Looks up a bundled preset by file name, with or without `.json`.
pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name || n.strip_suffix(".json") == Some(name))
        .map(|(_, text)| *text)
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    /// The file could not be read.
    Io { path: String, message: String },
    /// Malformed JSON or a schema mismatch at `key`.
    Parse { key: String, message: String },
    /// A value violates an invariant.
    Invalid { key: String, message: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io { path, message } => write!(f, "cannot read `{path}`: {message}"),
            ConfigError::Parse { key, message } if key.is_empty() || key == "." => {
                write!(f, "parse error: {message}")
            }
            ConfigError::Parse { key, message } => write!(f, "parse error at `{key}`: {message}"),
            ConfigError::Invalid { key, message } => write!(f, "invalid `{key}`: {message}"),
        }
    }
}

impl std::error::Error for ConfigError {}

impl ConfigError {
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::Io { .. } => None,
            ConfigError::Parse { key, .. } | ConfigError::Invalid { key, .. } => Some(key),
        }
    }

    fn invalid(key: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Invalid {
            key: key.into(),
            message: message.into(),
        }
    }
}

/// Converts a core validation error into a config error under `prefix`.
fn at(prefix: &str, e: Error) -> ConfigError {
    match e {
        Error::InvalidParameter { field, reason } | Error::InvalidDesign { field, reason } => {
            ConfigError::invalid(format!("{prefix}{field}"), reason)
        }
        other => ConfigError::invalid(prefix.trim_end_matches('.'), other.to_string()),
    }
}

/// Nameplate ratings. Informational except `reference_power_w`, which sets
/// the rated power for small-signal checks. `dc_voltage_v` is not used by
/// the phasor model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Ratings {
    pub dc_voltage_v: f64,
    pub rated_voltage_v: f64,
    pub nominal_voltage_v: f64,
    pub filter_inductance_h: f64,
    pub filter_capacitance_f: f64,
    pub rated_capacity_va: f64,
    pub passive_damping_ohm: f64,
    pub reference_power_w: f64,
    pub switching_frequency_hz: f64,
    pub load_power_w: f64,
    pub virtual_inertia_kg_m2: f64,
    pub damping_coefficient: f64,
}

impl Default for Ratings {
    fn default() -> Self {
        Self {
            dc_voltage_v: 1500.0,
            rated_voltage_v: 380.0,
            nominal_voltage_v: 6000.0,
            filter_inductance_h: 3e-3,
            filter_capacitance_f: 35e-6,
            rated_capacity_va: 800e3,
            passive_damping_ohm: 0.5,
            reference_power_w: 12_000.0,
            switching_frequency_hz: 20e3,
            load_power_w: 1000.0,
            virtual_inertia_kg_m2: 3.36,
            damping_coefficient: 100.0,
        }
    }
}

/// Parameter blocks for each control law; only the ones a command needs
/// must be present.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllersConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub droop: Option<DroopParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vsg: Option<VsgParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub udc: Option<UdcParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub mode: Mode,
    pub strategy: Strategy,
    pub controllers: ControllersConfig,
    pub plant: PlantParams,
    #[serde(default)]
    pub events: Vec<Event>,
    /// s
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    /// s
    #[serde(default = "default_dt")]
    pub dt: f64,
}

fn default_t_end() -> f64 {
    10.0
}

fn default_dt() -> f64 {
    1e-4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParallelUnitConfig {
    /// One of `{"droop": {...}}`, `{"vsg": {...}}`, `{"udc": {...}}`.
    pub controller: ControllerParams,
    /// ohm
    pub x_line: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParallelConfig {
    pub units: [ParallelUnitConfig; 2],
    pub plant: PlantParams,
    #[serde(default)]
    pub events: Vec<Event>,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Also run with `m = n = 0` and report both angle spreads.
    #[serde(default)]
    pub compare_compensation: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default = "default_window")]
    pub rocof_window_s: f64,
    #[serde(default = "default_limit")]
    pub rocof_limit_hz_s: f64,
    #[serde(default = "default_rise_low")]
    pub rise_low: f64,
    #[serde(default = "default_rise_high")]
    pub rise_high: f64,
    #[serde(default = "default_band")]
    pub settling_band: f64,
    /// Upper end of the sampled response file, rad/s.
    #[serde(default = "default_w_max")]
    pub response_w_max: f64,
}

fn default_window() -> f64 {
    DEFAULT_ROCOF_WINDOW
}
fn default_limit() -> f64 {
    DEFAULT_ROCOF_LIMIT
}
fn default_rise_low() -> f64 {
    0.1
}
fn default_rise_high() -> f64 {
    0.9
}
fn default_band() -> f64 {
    0.02
}
fn default_w_max() -> f64 {
    1e4
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            rocof_window_s: default_window(),
            rocof_limit_hz_s: default_limit(),
            rise_low: default_rise_low(),
            rise_high: default_rise_high(),
            settling_band: default_band(),
            response_w_max: default_w_max(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_trace")]
    pub trace_path: String,
    #[serde(default = "default_metrics")]
    pub metrics_path: String,
    /// Significant digits in trace files.
    #[serde(default = "default_precision")]
    pub precision: usize,
    #[serde(default = "default_response")]
    pub response_path: String,
}

fn default_trace() -> String {
    "trace.csv".into()
}
fn default_metrics() -> String {
    "metrics.json".into()
}
fn default_precision() -> usize {
    9
}
fn default_response() -> String {
    "response.dat".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            trace_path: default_trace(),
            metrics_path: default_metrics(),
            precision: default_precision(),
            response_path: default_response(),
        }
    }
}

/// Top-level configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
    #[serde(default)]
    pub ratings: Ratings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parallel: Option<ParallelConfig>,
    /// Three-pole/one-zero design; also used by the `udc` block when it
    /// carries no design of its own.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design: Option<DesignParams>,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl Config {
    /// Parses and validates.
    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Config = serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Parse {
            key: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json_str(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::invalid(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, found {}", self.schema_version),
            ));
        }
        if self.scenario.is_none() && self.parallel.is_none() {
            return Err(ConfigError::invalid("scenario", "a `scenario` or `parallel` block is required"));
        }
        if let Some(d) = &self.design {
            d.validate().map_err(|e| at("design.", e))?;
        }
        self.metric_options().validate().map_err(|e| at("analysis.", e))?;
        let a = &self.analysis;
        if !(a.rocof_window_s > 0.0 && a.rocof_window_s.is_finite()) {
            return Err(ConfigError::invalid("analysis.rocof_window_s", "must be finite and > 0"));
        }
        if !(a.rocof_limit_hz_s > 0.0 && a.rocof_limit_hz_s.is_finite()) {
            return Err(ConfigError::invalid("analysis.rocof_limit_hz_s", "must be finite and > 0"));
        }
        if !(a.response_w_max > 0.0 && a.response_w_max.is_finite()) {
            return Err(ConfigError::invalid("analysis.response_w_max", "must be finite and > 0"));
        }
        if !(1..=17).contains(&self.output.precision) {
            return Err(ConfigError::invalid("output.precision", "must lie in 1..=17"));
        }
        if !(self.ratings.reference_power_w > 0.0 && self.ratings.reference_power_w.is_finite()) {
            return Err(ConfigError::invalid("ratings.reference_power_w", "must be finite and > 0"));
        }
        if let Some(sc) = &self.scenario {
            let present: Vec<Strategy> = Strategy::ALL
                .into_iter()
                .filter(|s| self.controller_block(*s).is_some())
                .collect();
            if !present.contains(&sc.strategy) {
                return Err(ConfigError::invalid(
                    format!("scenario.controllers.{}", sc.strategy),
                    "block for the selected strategy is missing",
                ));
            }
            for s in present {
                self.scenario_for(s)?;
            }
        }
        if self.parallel.is_some() {
            self.parallel_scenario()?;
        }
        Ok(())
    }

    fn controller_block(&self, s: Strategy) -> Option<ControllerParams> {
        let c = &self.scenario.as_ref()?.controllers;
        match s {
            Strategy::Droop => c.droop.map(ControllerParams::Droop),
            Strategy::Vsg => c.vsg.map(ControllerParams::Vsg),
            Strategy::Udc => c.udc.map(|mut p| {
                if p.design.is_none() {
                    p.design = self.design.map(|d| DesignParams { gain: None, ..d });
                }
                ControllerParams::Udc(p)
            }),
        }
    }

    /// Scenario for the configured strategy.
    pub fn scenario(&self) -> Result<Scenario, ConfigError> {
        let sc = self
            .scenario
            .as_ref()
            .ok_or_else(|| ConfigError::invalid("scenario", "block is missing"))?;
        self.scenario_for(sc.strategy)
    }

    /// Scenario with the control law replaced by `strategy`.
    pub fn scenario_for(&self, strategy: Strategy) -> Result<Scenario, ConfigError> {
        let sc = self
            .scenario
            .as_ref()
            .ok_or_else(|| ConfigError::invalid("scenario", "block is missing"))?;
        let key = format!("scenario.controllers.{strategy}");
        let controller = self
            .controller_block(strategy)
            .ok_or_else(|| ConfigError::invalid(&key, "block is missing"))?;
        controller.validate().map_err(|e| at(&format!("{key}."), e))?;
        sc.plant.validate().map_err(|e| at("scenario.plant.", e))?;
        let scenario = Scenario {
            mode: sc.mode,
            controller,
            plant: sc.plant,
            events: sc.events.clone(),
            t_end: sc.t_end,
            dt: sc.dt,
        };
        scenario.validate().map_err(|e| at("scenario.", e))?;
        Ok(scenario)
    }

    /// Strategies with a parameter block, in `droop, vsg, udc` order.
    pub fn available_strategies(&self) -> Vec<Strategy> {
        Strategy::ALL
            .into_iter()
            .filter(|s| self.controller_block(*s).is_some())
            .collect()
    }

    pub fn parallel_scenario(&self) -> Result<ParallelScenario, ConfigError> {
        let pc = self
            .parallel
            .as_ref()
            .ok_or_else(|| ConfigError::invalid("parallel", "block is missing"))?;
        let ps = ParallelScenario {
            units: [0, 1].map(|i| ParallelUnit {
                controller: pc.units[i].controller.clone(),
                x_line: pc.units[i].x_line,
            }),
            plant: pc.plant,
            events: pc.events.clone(),
            t_end: pc.t_end,
            dt: pc.dt,
        };
        for (i, u) in ps.units.iter().enumerate() {
            u.controller
                .validate()
                .map_err(|e| at(&format!("parallel.units[{i}].controller.{}.", u.controller.strategy()), e))?;
        }
        ps.plant.validate().map_err(|e| at("parallel.plant.", e))?;
        ps.validate().map_err(|e| at("parallel.", e))?;
        Ok(ps)
    }

    pub fn metric_options(&self) -> MetricOptions {
        MetricOptions {
            rise_low: self.analysis.rise_low,
            rise_high: self.analysis.rise_high,
            settling_band: self.analysis.settling_band,
        }
    }

    pub fn comparison_options(&self) -> ComparisonOptions {
        ComparisonOptions {
            rocof_window: self.analysis.rocof_window_s,
            rocof_limit: self.analysis.rocof_limit_hz_s,
            metrics: self.metric_options(),
        }
    }

    /// Design used by `analyze`: the top-level block, else the one inside
    /// the `udc` controller, with the loop gain taken from `kp_droop`.
    pub fn effective_design(&self) -> Option<DesignParams> {
        let udc = self.scenario.as_ref().and_then(|s| s.controllers.udc);
        match (self.design, udc) {
            (Some(d), Some(u)) if d.gain.is_none() => Some(DesignParams {
                gain: Some(u.kp_droop),
                ..d
            }),
            (Some(d), _) => Some(d),
            (None, Some(u)) => u.design_model(),
            (None, None) => None,
        }
    }
}
