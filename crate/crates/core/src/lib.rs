//! Physiology-driven thermostat for shared spaces.
//!
//! Wearable and room sensor nodes stream telemetry to a [`gateway::Hub`].
//! A ridge model ([`predictor`]) maps each occupant's heart rate, skin
//! conductance, clothing, activity and room state to a thermal comfort
//! index (TCI, -3..=+3). Per-occupant neutral temperatures feed a group
//! profile whose mean ± population standard deviation bounds the admissible
//! setpoints ([`profile`]); the setpoint inside that band minimising the
//! summed squared predicted TCI is handed to the [`control`] state machine,
//! which drives a simulated room ([`sim`]) until the air temperature settles.
//!
//! The numerical modules are generic over [`Scalar`] (`f32` or `f64`).
//! The aliases below fix the scalar to `f64`; [`single`] carries the `f32` set.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

pub mod comfort;
pub mod control;
pub mod gateway;
pub mod node;
pub mod predictor;
pub mod profile;
mod scalar;
pub mod sim;

pub use node::NodeId;
pub use scalar::Scalar;

pub type PmvInputs = comfort::PmvInputs<f64>;
pub type Tci = comfort::Tci<f64>;
pub type PhysioSample = predictor::PhysioSample<f64>;
pub type EnvSample = predictor::EnvSample<f64>;
pub type FeatureVector = predictor::FeatureVector<f64>;
pub type TciModel = predictor::TciModel<f64>;
pub type OccupantProfile = profile::OccupantProfile<f64>;
pub type GroupThermalProfile = profile::GroupThermalProfile<f64>;
pub type ControllerState = control::ControllerState<f64>;
pub type SetpointCommand = control::SetpointCommand<f64>;
pub type RoomPlant = sim::RoomPlant<f64>;
pub type SyntheticOccupant = sim::SyntheticOccupant<f64>;

/// Single-precision aliases.
pub mod single {
    pub type PmvInputs = crate::comfort::PmvInputs<f32>;
    pub type Tci = crate::comfort::Tci<f32>;
    pub type PhysioSample = crate::predictor::PhysioSample<f32>;
    pub type EnvSample = crate::predictor::EnvSample<f32>;
    pub type FeatureVector = crate::predictor::FeatureVector<f32>;
    pub type TciModel = crate::predictor::TciModel<f32>;
    pub type OccupantProfile = crate::profile::OccupantProfile<f32>;
    pub type GroupThermalProfile = crate::profile::GroupThermalProfile<f32>;
    pub type ControllerState = crate::control::ControllerState<f32>;
    pub type SetpointCommand = crate::control::SetpointCommand<f32>;
    pub type RoomPlant = crate::sim::RoomPlant<f32>;
    pub type SyntheticOccupant = crate::sim::SyntheticOccupant<f32>;
}
