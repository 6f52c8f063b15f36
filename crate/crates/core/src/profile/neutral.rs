use serde::{Deserialize, Serialize};

use super::ProfileError;
use crate::predictor::{predict_tci, FeatureVector, TciModel};
use crate::scalar::Scalar;

/// Bisection stops once |TCI| falls below this.
pub const NEUTRAL_TCI_TOLERANCE: f64 = 1e-4;
/// ... or once the bracket is narrower than this, °C.
pub const BISECTION_MIN_WIDTH: f64 = 0.01;
/// Half-width of the central difference used for sensitivity, °C.
pub const SENSITIVITY_STEP: f64 = 0.1;

/// Inclusive temperature grid `lo, lo + step, ..., hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sweep<T> {
    pub lo: T,
    pub hi: T,
    pub step: T,
}

impl<T: Scalar> Sweep<T> {
    pub fn new(lo: T, hi: T, step: T) -> Result<Self, ProfileError> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(ProfileError::InvalidParameter("sweep requires lo < hi"));
        }
        if !(step.is_finite() && step > T::zero()) {
            return Err(ProfileError::InvalidParameter("sweep step must be positive"));
        }
        Ok(Sweep { lo, hi, step })
    }

    /// Grid points; `hi` is always the last point.
    pub fn points(&self) -> Vec<T> {
        grid(self.lo, self.hi, self.step)
    }
}

pub(crate) fn grid<T: Scalar>(lo: T, hi: T, step: T) -> Vec<T> {
    let span = ((hi - lo) / step + T::of(1e-9)).floor();
    let count = span.to_usize().unwrap_or(0);
    let mut pts: Vec<T> = (0..=count)
        .map(|k| (lo + T::from_usize(k).unwrap() * step).min(hi))
        .collect();
    if *pts.last().unwrap() < hi {
        pts.push(hi);
    }
    pts
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeutralPoint<T> {
    pub neutral_temp: T,
    pub sensitivity: T,
}

/// Finds the air temperature at which predicted TCI crosses zero.
///
/// The sweep grid is scanned for sign changes; exactly one is required. The
/// bracketing interval is then bisected.
pub fn estimate_neutral_temp<T, F>(
    model: &TciModel<T>,
    features_at: F,
    sweep: Sweep<T>,
) -> Result<NeutralPoint<T>, ProfileError>
where
    T: Scalar,
    F: Fn(T) -> FeatureVector<T>,
{
    let sweep = Sweep::new(sweep.lo, sweep.hi, sweep.step)?;
    let tci = |t: T| -> Result<T, ProfileError> { Ok(predict_tci(model, &features_at(t))?.value()) };

    let pts = sweep.points();
    let vals = pts.iter().map(|&t| tci(t)).collect::<Result<Vec<_>, _>>()?;

    let zero = T::zero();
    let mut exact: Option<T> = None;
    let mut bracket: Option<(T, T, T)> = None;
    let mut crossings = 0usize;
    for i in 0..vals.len() {
        if vals[i] == zero {
            // a run of zeros counts once
            if i == 0 || vals[i - 1] != zero {
                crossings += 1;
                exact = Some(pts[i]);
            }
        } else if i + 1 < vals.len() && vals[i] * vals[i + 1] < zero {
            crossings += 1;
            bracket = Some((pts[i], pts[i + 1], vals[i]));
        }
    }
    match crossings {
        0 => {
            return Err(ProfileError::NoNeutralPoint {
                lo: sweep.lo.as_f64(),
                hi: sweep.hi.as_f64(),
            })
        }
        1 => {}
        n => return Err(ProfileError::NonMonotone { crossings: n }),
    }

    let root = match (exact, bracket) {
        (Some(t), _) => t,
        (None, Some((mut a, mut b, fa))) => {
            let tol = T::of(NEUTRAL_TCI_TOLERANCE);
            let width = T::of(BISECTION_MIN_WIDTH);
            let a_negative = fa < zero;
            loop {
                let mid = (a + b) / T::of(2.0);
                let fm = tci(mid)?;
                if fm.abs() < tol || b - a < width {
                    break mid;
                }
                if (fm < zero) == a_negative {
                    a = mid;
                } else {
                    b = mid;
                }
            }
        }
        (None, None) => unreachable!("one crossing implies a root or a bracket"),
    };

    let h = T::of(SENSITIVITY_STEP);
    let sensitivity = (tci(root + h)? - tci(root - h)?) / (T::of(2.0) * h);
    if !(sensitivity > zero) {
        return Err(ProfileError::NonPositiveSensitivity(sensitivity.as_f64()));
    }
    Ok(NeutralPoint {
        neutral_temp: root,
        sensitivity,
    })
}
