use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

pub const DEFAULT_THERMAL_CAPACITANCE: f64 = 2.0e6;
pub const DEFAULT_LOSS_COEFFICIENT: f64 = 80.0;
pub const DEFAULT_GAIN: f64 = 1500.0;
pub const DEFAULT_HVAC_MAX_POWER: f64 = 5000.0;
pub const DEFAULT_OUTDOOR_TEMP: f64 = 30.0;

/// Single-zone room with an HVAC unit.
///
/// The actuator delivers `K_p·(s − T) + UA·(s − T_out)`, clamped to
/// `±hvac_max_power`: proportional action plus the envelope load at the
/// setpoint, so an unsaturated unit holds the room exactly at `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", default)]
pub struct RoomPlant<T> {
    /// J/°C.
    pub thermal_capacitance: T,
    /// Envelope UA, W/°C.
    pub loss_coefficient: T,
    pub outdoor_temp: T,
    /// Symmetric heating/cooling limit, W.
    pub hvac_max_power: T,
    /// Proportional gain K_p, W/°C.
    pub gain: T,
    pub air_temp: T,
}

impl<T: Scalar> Default for RoomPlant<T> {
    fn default() -> Self {
        RoomPlant {
            thermal_capacitance: T::of(DEFAULT_THERMAL_CAPACITANCE),
            loss_coefficient: T::of(DEFAULT_LOSS_COEFFICIENT),
            outdoor_temp: T::of(DEFAULT_OUTDOOR_TEMP),
            hvac_max_power: T::of(DEFAULT_HVAC_MAX_POWER),
            gain: T::of(DEFAULT_GAIN),
            air_temp: T::of(DEFAULT_OUTDOOR_TEMP),
        }
    }
}

impl<T: Scalar> RoomPlant<T> {
    pub fn validate(&self) -> Result<(), String> {
        let all = [
            self.thermal_capacitance,
            self.loss_coefficient,
            self.outdoor_temp,
            self.hvac_max_power,
            self.gain,
            self.air_temp,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err("plant parameters must be finite".into());
        }
        if self.thermal_capacitance <= T::zero() {
            return Err("thermal_capacitance must be > 0".into());
        }
        if self.loss_coefficient < T::zero() {
            return Err("loss_coefficient must be >= 0".into());
        }
        if self.hvac_max_power <= T::zero() {
            return Err("hvac_max_power must be > 0".into());
        }
        if self.gain < T::zero() {
            return Err("gain must be >= 0".into());
        }
        Ok(())
    }

    /// Largest step, seconds, for which explicit Euler never overshoots: `C / (K_p + UA)`.
    pub fn stability_bound(&self) -> T {
        let k = self.gain + self.loss_coefficient;
        if k > T::zero() {
            self.thermal_capacitance / k
        } else {
            T::infinity()
        }
    }

    pub fn hvac_power(&self, setpoint: Option<T>) -> T {
        match setpoint {
            None => T::zero(),
            Some(s) => {
                let raw = self.gain * (s - self.air_temp) + self.loss_coefficient * (s - self.outdoor_temp);
                raw.max(-self.hvac_max_power).min(self.hvac_max_power)
            }
        }
    }

    /// Advances `air_temp` by one explicit-Euler step of `dt` seconds.
    pub fn step(&mut self, setpoint: Option<T>, dt: T) {
        let p = self.hvac_power(setpoint);
        let loss = self.loss_coefficient * (self.air_temp - self.outdoor_temp);
        self.air_temp = self.air_temp + dt / self.thermal_capacitance * (p - loss);
    }

    /// Temperature the room settles at under a fixed setpoint, if one exists.
    pub fn equilibrium(&self, setpoint: Option<T>) -> Option<T> {
        let ua = self.loss_coefficient;
        match setpoint {
            None if ua > T::zero() => Some(self.outdoor_temp),
            None => None,
            Some(s) => {
                let load = ua * (s - self.outdoor_temp);
                if load.abs() <= self.hvac_max_power {
                    Some(s)
                } else if ua > T::zero() {
                    Some(self.outdoor_temp + self.hvac_max_power.copysign(load) / ua)
                } else {
                    None
                }
            }
        }
    }
}

/// Functional form of [`RoomPlant::step`].
pub fn plant_step<T: Scalar>(plant: &RoomPlant<T>, setpoint: Option<T>, dt: T) -> RoomPlant<T> {
    let mut next = *plant;
    next.step(setpoint, dt);
    next
}
