use std::ops::Index;

use serde::{Deserialize, Serialize};

use super::{EnvSample, PhysioSample, PredictorError};
use crate::scalar::Scalar;

pub const FEATURE_COUNT: usize = 9;

pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "hr_mean",
    "hr_sd",
    "gsr_mean",
    "gsr_sd",
    "clo",
    "met",
    "air_temp",
    "air_velocity",
    "rel_humidity",
];

/// Window aggregate in fixed order: heart-rate mean and SD, GSR mean and SD,
/// latest clothing, latest metabolic rate, then window means of air
/// temperature, air velocity and relative humidity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector<T>(pub [T; FEATURE_COUNT]);

impl<T: Scalar> FeatureVector<T> {
    pub const HR_MEAN: usize = 0;
    pub const HR_SD: usize = 1;
    pub const GSR_MEAN: usize = 2;
    pub const GSR_SD: usize = 3;
    pub const CLO: usize = 4;
    pub const MET: usize = 5;
    pub const AIR_TEMP: usize = 6;
    pub const AIR_VELOCITY: usize = 7;
    pub const REL_HUMIDITY: usize = 8;

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    /// Linear interpolation between two feature vectors, `w` in [0, 1].
    pub fn lerp(&self, other: &Self, w: T) -> Self {
        let mut out = self.0;
        for (o, (a, b)) in out.iter_mut().zip(self.0.iter().zip(other.0.iter())) {
            *o = *a + (*b - *a) * w;
        }
        FeatureVector(out)
    }
}

impl<T> Index<usize> for FeatureVector<T> {
    type Output = T;

    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

/// Mean and population standard deviation.
fn mean_sd<T: Scalar>(xs: impl Iterator<Item = T> + Clone) -> (T, T) {
    let (sum, n) = xs.clone().fold((T::zero(), 0usize), |(s, n), x| (s + x, n + 1));
    let n = T::from_usize(n).unwrap();
    let mean = sum / n;
    let var = xs.fold(T::zero(), |acc, x| acc + (x - mean) * (x - mean)) / n;
    (mean, var.sqrt())
}

pub(crate) fn aggregate<T: Scalar>(
    physio: &[&PhysioSample<T>],
    env: &[&EnvSample<T>],
) -> Result<FeatureVector<T>, PredictorError> {
    if physio.is_empty() || env.is_empty() {
        return Err(PredictorError::EmptyWindow);
    }
    let first = &physio[0].occupant_id;
    if let Some(other) = physio.iter().find(|p| &p.occupant_id != first) {
        return Err(PredictorError::MixedOccupants(
            first.to_string(),
            other.occupant_id.to_string(),
        ));
    }

    let (hr_mean, hr_sd) = mean_sd(physio.iter().map(|p| p.heart_rate));
    let (gsr_mean, gsr_sd) = mean_sd(physio.iter().map(|p| p.gsr));
    // latest by timestamp; ties resolve to the later entry
    let latest = physio
        .iter()
        .fold(physio[0], |best, p| if p.timestamp >= best.timestamp { p } else { best });
    let (ta, _) = mean_sd(env.iter().map(|e| e.air_temp));
    let (vel, _) = mean_sd(env.iter().map(|e| e.air_velocity));
    let (rh, _) = mean_sd(env.iter().map(|e| e.rel_humidity));

    let fv = FeatureVector([
        hr_mean,
        hr_sd,
        gsr_mean,
        gsr_sd,
        latest.clothing_insulation,
        latest.metabolic_rate,
        ta,
        vel,
        rh,
    ]);
    if !fv.is_finite() {
        return Err(PredictorError::NotFinite);
    }
    Ok(fv)
}

/// Aggregates the samples with `end - window < timestamp <= end`.
pub fn extract_features_ending<T: Scalar>(
    physio: &[PhysioSample<T>],
    env: &[EnvSample<T>],
    end: f64,
    window: f64,
) -> Result<FeatureVector<T>, PredictorError> {
    if !(window > 0.0) || !end.is_finite() {
        return Err(PredictorError::InvalidParameter("window must be positive"));
    }
    let start = end - window;
    let inside = |t: f64| t > start && t <= end;
    let p: Vec<_> = physio.iter().filter(|s| inside(s.timestamp)).collect();
    let e: Vec<_> = env.iter().filter(|s| inside(s.timestamp)).collect();
    aggregate(&p, &e)
}

/// Aggregates the trailing `window` seconds ending at the newest sample in either list.
pub fn extract_features<T: Scalar>(
    physio: &[PhysioSample<T>],
    env: &[EnvSample<T>],
    window: f64,
) -> Result<FeatureVector<T>, PredictorError> {
    let end = physio
        .iter()
        .map(|p| p.timestamp)
        .chain(env.iter().map(|e| e.timestamp))
        .fold(None, |m: Option<f64>, t| Some(m.map_or(t, |m| m.max(t))))
        .ok_or(PredictorError::EmptyWindow)?;
    extract_features_ending(physio, env, end, window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::node::NodeId;

    fn physio(id: &str, t: f64, hr: f64, gsr: f64) -> PhysioSample<f64> {
        PhysioSample {
            occupant_id: NodeId::new(id).unwrap(),
            timestamp: t,
            heart_rate: hr,
            gsr,
            clothing_insulation: 0.5,
            metabolic_rate: 1.2,
        }
    }

    fn env(t: f64, ta: f64) -> EnvSample<f64> {
        EnvSample {
            timestamp: t,
            air_temp: ta,
            mean_radiant_temp: ta,
            rel_humidity: 50.0,
            air_velocity: 0.1,
        }
    }

    #[test]
    fn single_sample_window() {
        let fv = extract_features(&[physio("w", 5.0, 70.0, 2.0)], &[env(5.0, 23.0)], 60.0).unwrap();
        assert_eq!(fv.0, [70.0, 0.0, 2.0, 0.0, 0.5, 1.2, 23.0, 0.1, 50.0]);
    }

    #[test]
    fn population_sd_of_two() {
        let p = [physio("w", 1.0, 60.0, 2.0), physio("w", 2.0, 80.0, 2.0)];
        let fv = extract_features(&p, &[env(2.0, 23.0)], 60.0).unwrap();
        assert_eq!(fv[FeatureVector::<f64>::HR_MEAN], 70.0);
        assert_eq!(fv[FeatureVector::<f64>::HR_SD], 10.0);
    }

    #[test]
    fn empty_env_is_empty_window() {
        let r = extract_features(&[physio("w", 1.0, 70.0, 2.0)], &[], 60.0);
        assert!(matches!(r, Err(PredictorError::EmptyWindow)));
    }

    #[test]
    fn stale_env_falls_outside_window() {
        let r = extract_features(&[physio("w", 100.0, 70.0, 2.0)], &[env(10.0, 23.0)], 60.0);
        assert!(matches!(r, Err(PredictorError::EmptyWindow)));
    }

    #[test]
    fn mixed_occupants_rejected() {
        let p = [physio("a", 1.0, 60.0, 2.0), physio("b", 2.0, 80.0, 2.0)];
        assert!(matches!(
            extract_features(&p, &[env(2.0, 23.0)], 60.0),
            Err(PredictorError::MixedOccupants(..))
        ));
    }

    #[test]
    fn window_is_half_open() {
        let p: Vec<_> = (0..=60).map(|t| physio("w", t as f64, 70.0 + t as f64, 2.0)).collect();
        let e: Vec<_> = (0..=60).map(|t| env(t as f64, 23.0)).collect();
        let fv = extract_features_ending(&p, &e, 60.0, 60.0).unwrap();
        // samples 1..=60
        assert_eq!(fv[FeatureVector::<f64>::HR_MEAN], 70.0 + 30.5);
    }

    #[test]
    fn latest_clothing_wins() {
        let mut a = physio("w", 1.0, 70.0, 2.0);
        let mut b = physio("w", 2.0, 70.0, 2.0);
        a.clothing_insulation = 1.0;
        b.clothing_insulation = 0.3;
        let fv = extract_features(&[b, a], &[env(2.0, 23.0)], 60.0).unwrap();
        assert_eq!(fv[FeatureVector::<f64>::CLO], 0.3);
    }
}
