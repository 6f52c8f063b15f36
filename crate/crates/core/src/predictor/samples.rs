use serde::{Deserialize, Serialize};

use crate::comfort::{ComfortError, PmvInputs};
use crate::node::NodeId;
use crate::scalar::Scalar;

/// One reading from a wearable band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysioSample<T> {
    pub occupant_id: NodeId,
    /// Seconds, strictly increasing per occupant.
    pub timestamp: f64,
    /// Beats per minute.
    pub heart_rate: T,
    /// Skin conductance, µS.
    pub gsr: T,
    pub clothing_insulation: T,
    pub metabolic_rate: T,
}

/// One reading from the room's environment node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvSample<T> {
    pub timestamp: f64,
    pub air_temp: T,
    pub mean_radiant_temp: T,
    pub rel_humidity: T,
    pub air_velocity: T,
}

fn open_range<T: Scalar>(field: &'static str, v: T, lo: f64, hi: f64) -> Result<(), ComfortError> {
    let x = v.as_f64();
    if !x.is_finite() {
        return Err(ComfortError::NotFinite);
    }
    if x <= lo || x >= hi {
        return Err(ComfortError::OutOfRange {
            field,
            value: x,
            min: lo,
            max: hi,
        });
    }
    Ok(())
}

impl<T: Scalar> PhysioSample<T> {
    pub fn validate(&self) -> Result<(), ComfortError> {
        if !self.timestamp.is_finite() {
            return Err(ComfortError::NotFinite);
        }
        open_range("heart_rate", self.heart_rate, 25.0, 250.0)?;
        open_range("gsr", self.gsr, 0.0, f64::INFINITY)?;
        crate::comfort::check_range("clothing_insulation", self.clothing_insulation, 0.0, 2.0)?;
        crate::comfort::check_range("metabolic_rate", self.metabolic_rate, 0.7, 4.0)?;
        Ok(())
    }
}

impl<T: Scalar> EnvSample<T> {
    pub fn validate(&self) -> Result<(), ComfortError> {
        if !self.timestamp.is_finite() {
            return Err(ComfortError::NotFinite);
        }
        use crate::comfort::check_range;
        check_range("air_temp", self.air_temp, -10.0, 50.0)?;
        check_range("mean_radiant_temp", self.mean_radiant_temp, -10.0, 50.0)?;
        check_range("rel_humidity", self.rel_humidity, 0.0, 100.0)?;
        check_range("air_velocity", self.air_velocity, 0.0, 5.0)?;
        Ok(())
    }

    /// PMV inputs for this room state and a given occupant's clothing and activity.
    pub fn pmv_inputs(&self, metabolic_rate: T, clothing_insulation: T) -> PmvInputs<T> {
        PmvInputs {
            air_temp: self.air_temp,
            mean_radiant_temp: self.mean_radiant_temp,
            air_velocity: self.air_velocity,
            rel_humidity: self.rel_humidity,
            metabolic_rate,
            clothing_insulation,
        }
    }
}
