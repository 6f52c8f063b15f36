use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::comfort::{clamp_tci, Tci};
use crate::node::NodeId;
use crate::predictor::PhysioSample;
use crate::scalar::Scalar;

/// Synthetic outputs are kept inside the wearable sample's valid ranges.
pub const HR_CLAMP: (f64, f64) = (30.0, 220.0);
pub const GSR_MIN: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", default)]
pub struct NoiseSd<T> {
    /// bpm
    pub hr: T,
    /// µS
    pub gsr: T,
}

/// An occupant with a known comfort law, used to generate telemetry and labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SyntheticOccupant<T> {
    pub occupant_id: NodeId,
    pub true_neutral_temp: T,
    /// TCI per °C.
    #[serde(default = "defaults::sensitivity")]
    pub true_sensitivity: T,
    #[serde(default = "defaults::hr_base")]
    pub hr_base: T,
    /// bpm per °C above neutral.
    #[serde(default = "defaults::hr_slope")]
    pub hr_slope: T,
    #[serde(default = "defaults::gsr_base")]
    pub gsr_base: T,
    /// µS per °C above neutral; no response below neutral.
    #[serde(default = "defaults::gsr_slope")]
    pub gsr_slope: T,
    #[serde(default = "defaults::clo")]
    pub clothing_insulation: T,
    #[serde(default = "defaults::met")]
    pub metabolic_rate: T,
    #[serde(default)]
    pub noise_sd: NoiseSd<T>,
    #[serde(default)]
    pub rng_seed: u64,
}

mod defaults {
    use crate::scalar::Scalar;

    pub fn sensitivity<T: Scalar>() -> T {
        T::of(0.5)
    }
    pub fn hr_base<T: Scalar>() -> T {
        T::of(70.0)
    }
    pub fn hr_slope<T: Scalar>() -> T {
        T::of(2.0)
    }
    pub fn gsr_base<T: Scalar>() -> T {
        T::of(2.0)
    }
    pub fn gsr_slope<T: Scalar>() -> T {
        T::of(0.5)
    }
    pub fn clo<T: Scalar>() -> T {
        T::of(0.5)
    }
    pub fn met<T: Scalar>() -> T {
        T::of(1.2)
    }
}

impl<T: Scalar> SyntheticOccupant<T> {
    /// Occupant with default physiology.
    pub fn new(occupant_id: NodeId, true_neutral_temp: T) -> Self {
        SyntheticOccupant {
            occupant_id,
            true_neutral_temp,
            true_sensitivity: defaults::sensitivity(),
            hr_base: defaults::hr_base(),
            hr_slope: defaults::hr_slope(),
            gsr_base: defaults::gsr_base(),
            gsr_slope: defaults::gsr_slope(),
            clothing_insulation: defaults::clo(),
            metabolic_rate: defaults::met(),
            noise_sd: NoiseSd::default(),
            rng_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let id = &self.occupant_id;
        let finite = [
            self.true_neutral_temp,
            self.true_sensitivity,
            self.hr_base,
            self.hr_slope,
            self.gsr_base,
            self.gsr_slope,
            self.noise_sd.hr,
            self.noise_sd.gsr,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(format!("occupant {id}: parameters must be finite"));
        }
        if self.true_sensitivity <= T::zero() {
            return Err(format!("occupant {id}: true_sensitivity must be > 0"));
        }
        let hr = self.hr_base.as_f64();
        if !(hr > 40.0 && hr < 100.0) {
            return Err(format!("occupant {id}: hr_base {hr} outside (40, 100)"));
        }
        if self.gsr_base <= T::zero() {
            return Err(format!("occupant {id}: gsr_base must be > 0"));
        }
        if self.noise_sd.hr < T::zero() || self.noise_sd.gsr < T::zero() {
            return Err(format!("occupant {id}: noise_sd must be >= 0"));
        }
        let clo = self.clothing_insulation.as_f64();
        let met = self.metabolic_rate.as_f64();
        if !(0.0..=2.0).contains(&clo) || !(0.7..=4.0).contains(&met) {
            return Err(format!("occupant {id}: clothing or metabolic rate out of range"));
        }
        Ok(())
    }
}

/// One wearable reading at air temperature `air_temp` and time `t`.
///
/// Noise comes from a ChaCha stream keyed by the occupant's seed and selecting
/// the stream by the bit pattern of `t`, so a given (seed, t) always yields
/// the same sample regardless of call order.
pub fn sample_occupant<T: Scalar>(occ: &SyntheticOccupant<T>, air_temp: T, t: f64) -> PhysioSample<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(occ.rng_seed);
    rng.set_stream(t.to_bits());
    let mut noise = |sd: T| -> T {
        let z: f64 = StandardNormal.sample(&mut rng);
        if sd == T::zero() {
            T::zero()
        } else {
            sd * T::of(z)
        }
    };
    let hr_noise = noise(occ.noise_sd.hr);
    let gsr_noise = noise(occ.noise_sd.gsr);

    let above = air_temp - occ.true_neutral_temp;
    let hr = occ.hr_base + occ.hr_slope * above + hr_noise;
    let gsr = occ.gsr_base + occ.gsr_slope * above.max(T::zero()) + gsr_noise;

    PhysioSample {
        occupant_id: occ.occupant_id.clone(),
        timestamp: t,
        heart_rate: hr.max(T::of(HR_CLAMP.0)).min(T::of(HR_CLAMP.1)),
        gsr: gsr.max(T::of(GSR_MIN)),
        clothing_insulation: occ.clothing_insulation,
        metabolic_rate: occ.metabolic_rate,
    }
}

/// Ground-truth comfort: `clamp(sensitivity · (air_temp − neutral))`.
pub fn true_tci<T: Scalar>(occ: &SyntheticOccupant<T>, air_temp: T) -> Tci<T> {
    let raw = occ.true_sensitivity * (air_temp - occ.true_neutral_temp);
    clamp_tci(raw).unwrap_or_else(|_| Tci::neutral())
}
