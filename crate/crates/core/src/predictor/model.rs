use serde::{Deserialize, Serialize};

use super::linalg::SquareMatrix;
use super::{FeatureVector, PredictorError, FEATURE_COUNT, FEATURE_NAMES, MIN_TRAINING_ROWS};
use crate::comfort::{clamp_tci, Tci};
use crate::scalar::Scalar;

pub const DEFAULT_RIDGE_STRENGTH: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub seed: u64,
    pub sample_count: usize,
    pub ridge_strength: f64,
}

/// Ridge regression on z-scored features.
///
/// `predict = intercept + Σ coef[k] · (x[k] - mean[k]) / scale[k]`, clamped to the TCI scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TciModel<T> {
    coefficients: Vec<T>,
    intercept: T,
    feature_mean: Vec<T>,
    feature_scale: Vec<T>,
    metadata: TrainingMetadata,
}

impl<T: Scalar> TciModel<T> {
    pub fn from_parts(
        coefficients: Vec<T>,
        intercept: T,
        feature_mean: Vec<T>,
        feature_scale: Vec<T>,
        metadata: TrainingMetadata,
    ) -> Result<Self, PredictorError> {
        let model = TciModel {
            coefficients,
            intercept,
            feature_mean,
            feature_scale,
            metadata,
        };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<(), PredictorError> {
        let dims = [
            self.coefficients.len(),
            self.feature_mean.len(),
            self.feature_scale.len(),
        ];
        if dims.iter().any(|&d| d != FEATURE_COUNT) {
            return Err(PredictorError::Model(format!(
                "expected {FEATURE_COUNT} entries per vector, got {dims:?}"
            )));
        }
        let finite = |v: &[T]| v.iter().all(|x| x.is_finite());
        if !finite(&self.coefficients) || !finite(&self.feature_mean) || !self.intercept.is_finite() {
            return Err(PredictorError::Model("non-finite parameter".into()));
        }
        if self.feature_scale.iter().any(|s| !(s.is_finite() && *s > T::zero())) {
            return Err(PredictorError::Model("feature scale must be positive".into()));
        }
        Ok(())
    }

    pub fn coefficients(&self) -> &[T] {
        &self.coefficients
    }

    pub fn intercept(&self) -> T {
        self.intercept
    }

    pub fn feature_mean(&self) -> &[T] {
        &self.feature_mean
    }

    pub fn feature_scale(&self) -> &[T] {
        &self.feature_scale
    }

    pub fn metadata(&self) -> &TrainingMetadata {
        &self.metadata
    }

    /// Coefficients and intercept in the original (unstandardized) feature units.
    pub fn raw_coefficients(&self) -> (Vec<T>, T) {
        let coef: Vec<T> = self
            .coefficients
            .iter()
            .zip(&self.feature_scale)
            .map(|(w, s)| *w / *s)
            .collect();
        let shift = coef
            .iter()
            .zip(&self.feature_mean)
            .fold(T::zero(), |acc, (c, m)| acc + *c * *m);
        (coef, self.intercept - shift)
    }

    /// Standardized feature vector.
    pub fn standardize(&self, features: &FeatureVector<T>) -> [T; FEATURE_COUNT] {
        let mut z = [T::zero(); FEATURE_COUNT];
        for k in 0..FEATURE_COUNT {
            z[k] = (features[k] - self.feature_mean[k]) / self.feature_scale[k];
        }
        z
    }

    /// Affine output before clamping.
    pub fn predict_raw(&self, features: &FeatureVector<T>) -> Result<T, PredictorError> {
        if !features.is_finite() {
            return Err(PredictorError::NotFinite);
        }
        let z = self.standardize(features);
        let y = z
            .iter()
            .zip(&self.coefficients)
            .fold(self.intercept, |acc, (z, w)| acc + *z * *w);
        if !y.is_finite() {
            return Err(PredictorError::NotFinite);
        }
        Ok(y)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, PredictorError> {
        let model: TciModel<T> =
            serde_json::from_str(s).map_err(|e| PredictorError::Model(e.to_string()))?;
        model.validate()?;
        Ok(model)
    }
}

/// Fits the model by solving `(ZᵀZ + λI) w = Zᵀ(y - ȳ)` on z-scored features `Z`.
///
/// The intercept is the label mean, since the standardized columns are centred.
/// `seed` is recorded in the metadata; the solve itself draws no random numbers.
pub fn train_tci_model<T: Scalar>(
    dataset: &[(FeatureVector<T>, Tci<T>)],
    ridge_strength: T,
    seed: u64,
) -> Result<TciModel<T>, PredictorError> {
    if dataset.len() < MIN_TRAINING_ROWS {
        return Err(PredictorError::TooFewSamples(dataset.len()));
    }
    if !ridge_strength.is_finite() || ridge_strength < T::zero() {
        return Err(PredictorError::InvalidParameter("ridge_strength must be >= 0"));
    }
    if dataset.iter().any(|(x, _)| !x.is_finite()) {
        return Err(PredictorError::NotFinite);
    }

    let n = T::from_usize(dataset.len()).unwrap();
    let mut mean = vec![T::zero(); FEATURE_COUNT];
    let mut scale = vec![T::one(); FEATURE_COUNT];
    for k in 0..FEATURE_COUNT {
        let m = dataset.iter().fold(T::zero(), |a, (x, _)| a + x[k]) / n;
        let var = dataset
            .iter()
            .fold(T::zero(), |a, (x, _)| a + (x[k] - m) * (x[k] - m))
            / n;
        let sd = var.sqrt();
        mean[k] = m;
        // constant column up to rounding: leave unscaled so it standardizes to ~0
        let negligible = T::of(64.0) * T::epsilon() * m.abs().max(T::one());
        if sd > negligible {
            scale[k] = sd;
        } else if ridge_strength == T::zero() {
            return Err(PredictorError::DegenerateDesign(FEATURE_NAMES[k]));
        }
    }

    let y_mean = dataset.iter().fold(T::zero(), |a, (_, y)| a + y.value()) / n;

    let mut gram = SquareMatrix::zeros(FEATURE_COUNT);
    let mut rhs = vec![T::zero(); FEATURE_COUNT];
    for (x, y) in dataset {
        let mut z = [T::zero(); FEATURE_COUNT];
        for k in 0..FEATURE_COUNT {
            z[k] = (x[k] - mean[k]) / scale[k];
        }
        let yc = y.value() - y_mean;
        for i in 0..FEATURE_COUNT {
            rhs[i] = rhs[i] + z[i] * yc;
            for j in 0..FEATURE_COUNT {
                gram.add(i, j, z[i] * z[j]);
            }
        }
    }
    for i in 0..FEATURE_COUNT {
        gram.add(i, i, ridge_strength);
    }

    let coefficients = gram
        .cholesky_solve(&rhs)
        .map_err(|k| PredictorError::DegenerateDesign(FEATURE_NAMES[k]))?;

    TciModel::from_parts(
        coefficients,
        y_mean,
        mean,
        scale,
        TrainingMetadata {
            seed,
            sample_count: dataset.len(),
            ridge_strength: ridge_strength.as_f64(),
        },
    )
}

pub fn predict_tci<T: Scalar>(
    model: &TciModel<T>,
    features: &FeatureVector<T>,
) -> Result<Tci<T>, PredictorError> {
    let raw = model.predict_raw(features)?;
    Ok(clamp_tci(raw)?)
}
