use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{RoomPlant, SimError, SyntheticOccupant};
use crate::control::ControllerConfig;
use crate::gateway::DEFAULT_DROPOUT_TIMEOUT;
use crate::node::NodeId;
use crate::predictor::{DEFAULT_RIDGE_STRENGTH, DEFAULT_WINDOW_SECS};
use crate::profile::DEFAULT_GRID_STEP;

/// Room conditions other than air temperature, reported by the environment node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Environment {
    /// Mean radiant temperature minus air temperature, °C.
    pub radiant_offset: f64,
    pub rel_humidity: f64,
    pub air_velocity: f64,
}

impl Default for Environment {
    fn default() -> Self {
        Environment {
            radiant_offset: 0.0,
            rel_humidity: 50.0,
            air_velocity: 0.1,
        }
    }
}

/// Air-temperature sweep used to label training data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Calibration {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
    pub samples_per_step: usize,
}

impl Default for Calibration {
    fn default() -> Self {
        Calibration {
            lo: 16.0,
            hi: 30.0,
            step: 0.5,
            samples_per_step: 10,
        }
    }
}

impl Calibration {
    pub fn temperatures(&self) -> Vec<f64> {
        let n = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|k| self.lo + k as f64 * self.step).collect()
    }
}

/// A wearable that goes silent over `[from, to)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dropout {
    pub node: NodeId,
    pub from: f64,
    pub to: f64,
}

fn default_duration() -> f64 {
    7200.0
}
fn default_dt() -> f64 {
    10.0
}
fn default_rate() -> f64 {
    1.0
}
fn default_initial() -> f64 {
    28.0
}
fn default_ridge() -> f64 {
    DEFAULT_RIDGE_STRENGTH
}
fn default_grid() -> f64 {
    DEFAULT_GRID_STEP
}
fn default_window() -> f64 {
    DEFAULT_WINDOW_SECS
}
fn default_dropout() -> f64 {
    DEFAULT_DROPOUT_TIMEOUT
}
fn default_token() -> String {
    "sim".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub occupants: Vec<SyntheticOccupant<f64>>,
    #[serde(default)]
    pub plant: RoomPlant<f64>,
    /// Simulated closed-loop time, seconds.
    #[serde(default = "default_duration")]
    pub duration: f64,
    /// Plant integration step, seconds.
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Telemetry rate of every node, Hz.
    #[serde(default = "default_rate")]
    pub node_rate: f64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_initial")]
    pub initial_air_temp: f64,
    #[serde(default)]
    pub environment: Environment,
    #[serde(default)]
    pub controller: ControllerConfig<f64>,
    #[serde(default)]
    pub calibration: Calibration,
    #[serde(default = "default_ridge")]
    pub ridge_strength: f64,
    #[serde(default = "default_grid")]
    pub grid_step: f64,
    /// Feature window for live predictions, seconds.
    #[serde(default = "default_window")]
    pub feature_window: f64,
    #[serde(default = "default_dropout")]
    pub dropout_timeout: f64,
    #[serde(default)]
    pub dropouts: Vec<Dropout>,
    #[serde(default = "default_token")]
    pub token: String,
}

impl ScenarioConfig {
    pub fn new(occupants: Vec<SyntheticOccupant<f64>>) -> Self {
        ScenarioConfig {
            occupants,
            plant: RoomPlant::default(),
            duration: default_duration(),
            dt: default_dt(),
            node_rate: default_rate(),
            master_seed: 0,
            initial_air_temp: default_initial(),
            environment: Environment::default(),
            controller: ControllerConfig::default(),
            calibration: Calibration::default(),
            ridge_strength: default_ridge(),
            grid_step: default_grid(),
            feature_window: default_window(),
            dropout_timeout: default_dropout(),
            dropouts: Vec::new(),
            token: default_token(),
        }
    }

    /// Reads TOML when the extension is `.toml`, JSON otherwise.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, SimError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        let cfg: ScenarioConfig = if path.extension().is_some_and(|e| e == "toml") {
            toml::from_str(&text).map_err(|e| SimError::Parse(e.to_string()))?
        } else {
            serde_json::from_str(&text).map_err(|e| SimError::Parse(e.to_string()))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        if self.occupants.is_empty() {
            return bad("at least one occupant is required".into());
        }
        let mut ids = BTreeSet::new();
        for o in &self.occupants {
            o.validate().map_err(SimError::InvalidConfig)?;
            if !ids.insert(&o.occupant_id) {
                return bad(format!("occupant {} listed twice", o.occupant_id));
            }
            if o.occupant_id.as_str() == ENV_NODE {
                return bad(format!("occupant id {ENV_NODE} is reserved for the environment node"));
            }
        }
        self.plant.validate().map_err(SimError::InvalidConfig)?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be > 0".into());
        }
        let bound = self.plant.stability_bound();
        if self.dt > bound {
            return bad(format!(
                "dt = {} s exceeds the plant stability bound C/(K_p + UA) = {bound:.1} s",
                self.dt
            ));
        }
        if !(self.duration >= self.dt) {
            return bad("duration must be >= dt".into());
        }
        if !(self.node_rate > 0.0 && self.node_rate.is_finite()) {
            return bad("node_rate must be > 0".into());
        }
        if !self.initial_air_temp.is_finite() {
            return bad("initial_air_temp must be finite".into());
        }
        let c = &self.calibration;
        if !(c.lo < c.hi && c.step > 0.0 && c.samples_per_step >= 2) {
            return bad("calibration requires lo < hi, step > 0, samples_per_step >= 2".into());
        }
        let e = &self.environment;
        if !(0.0..=100.0).contains(&e.rel_humidity) || !(0.0..=5.0).contains(&e.air_velocity) {
            return bad("environment humidity or air velocity out of range".into());
        }
        if !(self.ridge_strength >= 0.0) {
            return bad("ridge_strength must be >= 0".into());
        }
        if !(self.grid_step > 0.0) {
            return bad("grid_step must be > 0".into());
        }
        if !(self.feature_window > 0.0) {
            return bad("feature_window must be > 0".into());
        }
        if !(self.dropout_timeout > 0.0) {
            return bad("dropout_timeout must be > 0".into());
        }
        if !(self.controller.eval_interval > 0.0
            && self.controller.tci_tolerance >= 0.0
            && self.controller.temp_tolerance >= 0.0)
        {
            return bad("controller tolerances must be >= 0 and eval_interval > 0".into());
        }
        for d in &self.dropouts {
            if !ids.contains(&d.node) {
                return bad(format!("dropout names unknown occupant {}", d.node));
            }
            if !(d.from < d.to) {
                return bad(format!("dropout for {} needs from < to", d.node));
            }
        }
        Ok(())
    }
}

/// Node id of the room's environment sensor.
pub const ENV_NODE: &str = "env-room";
