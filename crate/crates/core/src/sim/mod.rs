//! Deterministic world model: the room, synthetic occupants and the closed-loop scenario runner.

mod config;
mod occupant;
mod plant;
mod replay;
mod runner;

pub use config::{Calibration, Dropout, Environment, ScenarioConfig, ENV_NODE};
pub use occupant::{sample_occupant, true_tci, NoiseSd, SyntheticOccupant, GSR_MIN, HR_CLAMP};
pub use plant::{
    plant_step, RoomPlant, DEFAULT_GAIN, DEFAULT_HVAC_MAX_POWER, DEFAULT_LOSS_COEFFICIENT, DEFAULT_OUTDOOR_TEMP,
    DEFAULT_THERMAL_CAPACITANCE,
};
pub use replay::{diff_commands, replay, ReplayReport};
pub use runner::{
    read_trace_csv, run_scenario, write_trace_csv, GroupChange, NodeEvent, ScenarioSummary, ScenarioTrace, TraceRow,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidConfig(String),
    #[error("cannot parse scenario: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{module}::{op} failed at t = {time} s: {source}")]
    Step {
        module: &'static str,
        op: &'static str,
        time: f64,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync>,
    },
    #[error("trace: {0}")]
    Trace(String),
}
