use serde::{Deserialize, Serialize};

use super::ComfortError;
use crate::scalar::Scalar;

/// Magnitude bound of the comfort scale.
pub const TCI_LIMIT: f64 = 3.0;

/// Thermal comfort index on the -3 (cold) ..= +3 (hot) scale; 0 is neutral.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Tci<T>(T);

impl<T: Scalar> Tci<T> {
    pub fn neutral() -> Self {
        Tci(T::zero())
    }

    #[inline]
    pub fn value(self) -> T {
        self.0
    }

    /// True when the magnitude exceeds `tolerance`.
    pub fn exceeds(self, tolerance: T) -> bool {
        self.0.abs() > tolerance
    }
}

/// Clamps a raw comfort value onto the TCI scale.
pub fn clamp_tci<T: Scalar>(raw: T) -> Result<Tci<T>, ComfortError> {
    if !raw.is_finite() {
        return Err(ComfortError::NotFinite);
    }
    let limit = T::of(TCI_LIMIT);
    Ok(Tci(raw.max(-limit).min(limit)))
}
