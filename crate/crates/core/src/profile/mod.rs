//! Occupant neutral temperatures, group statistics, and setpoint selection.
//!
//! The group's admissible setpoints are the band `t̄ ± σ`, where `t̄` is the
//! mean of the occupants' neutral temperatures and `σ` their population
//! standard deviation. Within that band the setpoint minimising the summed
//! squared predicted TCI is chosen on a grid.

mod group;
mod neutral;

pub use group::{
    build_group_profile, select_setpoint, CandidateScore, GroupThermalProfile, SetpointSelection,
    DEFAULT_GRID_STEP,
};
pub use neutral::{estimate_neutral_temp, NeutralPoint, Sweep, BISECTION_MIN_WIDTH, NEUTRAL_TCI_TOLERANCE, SENSITIVITY_STEP};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::node::NodeId;
use crate::predictor::PredictorError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: crate::Scalar")]
pub struct OccupantProfile<T> {
    pub occupant_id: NodeId,
    /// Air temperature, °C, at which the predicted TCI is zero.
    pub neutral_temp: T,
    /// TCI units per °C at the neutral temperature.
    pub sensitivity: T,
}

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("predicted TCI never crosses zero in [{lo}, {hi}]")]
    NoNeutralPoint { lo: f64, hi: f64 },
    #[error("predicted TCI crosses zero {crossings} times; neutral temperature is ambiguous")]
    NonMonotone { crossings: usize },
    #[error("predicted TCI decreases with temperature at the neutral point (slope {0})")]
    NonPositiveSensitivity(f64),
    #[error("group has no members")]
    EmptyGroup,
    #[error("occupant {0} appears twice in the group")]
    DuplicateMember(NodeId),
    #[error("no feature source for occupant {0}")]
    MissingFeatures(NodeId),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error(transparent)]
    Predictor(#[from] PredictorError),
}
